#pragma once

#include "monoflow/config.hpp"
#include "monoflow/evolve.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace monoflow {

enum class Variant { Deterministic, Wiener, Poisson, Multiplicative };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct InitialSpec {
    // "sine": Σ_j coeffs[j] sin((j+1)πx) (tensor product in 2D)
    // "random": iid uniform on [−amplitude, amplitude], fixed seed
    // "zero"
    std::string kind = "sine";
    std::vector<double> coeffs{1.0};
    double amplitude = 1.0;
    std::uint64_t seed = 1;
    double norm = 0.0;  // > 0 rescales to this H-norm

    bool operator==(const InitialSpec&) const = default;
};

/// Multiplicative coefficient B(x) = β(x) Σ σλ_k^{-ρ} e_k ⊗ e_k on the first `modes` modes.
struct CoefficientSpec {
    double sigma = 0.0;
    double rho = 2.0;
    int modes = 8;
    Modulation modulation = Modulation::Saturating;
    double a = 1.0;
    double slope = 0.0;
    double clip = 1.0;

    bool operator==(const CoefficientSpec&) const = default;
};

struct ExperimentPreset {
    std::string name;
    Variant variant = Variant::Deterministic;
    std::uint64_t seed = 20240917;

    // spectral_space
    int dim = 1;
    int n = 64;
    Boundary boundary = Boundary::Dirichlet;

    // monotone_graphs
    GraphKind graph = GraphKind::Power;
    double p = 2.0;
    double delta = 0.0;

    // drift_ops
    DriftForm form = DriftForm::Divergence;
    double newton_tol = 1e-10;
    int newton_max_iter = 100;

    // noise
    NoiseSpec noise;
    bool claims_s_regular = false;
    CoefficientSpec coefficient;

    // evolve
    SolverConfig solver;

    InitialSpec initial;
    std::vector<std::string> diagnostics;

    // ergodics
    int paths = 16;
    std::vector<double> horizons{1.0};
    double dictionary_scale = 1.0;
    double partner_scale = 0.0;  // second start y = partner_scale · x₀
    std::vector<double> radii;   // concentration ladder (empty: derived from Θ(x₀))

    // decay fit window
    double fit_t0 = 1.0;
    double fit_t1 = 10.0;

    TripleMode mode() const { return form == DriftForm::Divergence ? TripleMode::H1OverL2 : TripleMode::L2OverHm1; }
    std::string full_name() const { return name + "." + variant_name(variant); }

    /// Throws ConfigError listing every violated constraint.
    void validate() const;

    bool operator==(const ExperimentPreset&) const = default;
};

/// Base names; each accepts a ".variant" suffix (deterministic, wiener, poisson, multiplicative).
std::vector<std::string> preset_names();
std::vector<Variant> preset_variants(const std::string& base);
ExperimentPreset make_preset(const std::string& name);

Config to_config(const ExperimentPreset& preset);
/// Starts from [harness] preset (if given) and applies every other key on top.
ExperimentPreset preset_from_config(const Config& cfg);

std::shared_ptr<const SpectralSpace> build_space(const ExperimentPreset& preset);
DriftOperator build_operator(const ExperimentPreset& preset, std::shared_ptr<const SpectralSpace> space);
Vec initial_state(const ExperimentPreset& preset, const SpectralSpace& space);
DiffusionCoefficient build_coefficient(const ExperimentPreset& preset, const SpectralSpace& space);

}  // namespace monoflow
