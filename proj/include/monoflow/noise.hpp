#pragma once

#include "monoflow/spectral_space.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace monoflow {

enum class NoiseKind { Zero, TraceClassWiener, CompoundPoisson };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::Zero;
    // Wiener: mode k has amplitude σ λ_k^{-ρ}.
    double sigma = 0.0;
    double rho = 0.0;
    // Compound Poisson: Poisson(rate·Δt) jumps per step, each N(0,1)·jump_scale
    // along a mode drawn uniformly from jump_modes.
    double rate = 0.0;
    std::vector<int> jump_modes;
    double jump_scale = 0.0;
    // Galerkin truncation: only the first `modes` eigenmodes are driven (0 = all).
    int modes = 0;

    static NoiseSpec zero() { return {}; }
    static NoiseSpec wiener(double sigma, double rho, int modes = 0);
    static NoiseSpec compound_poisson(double rate, std::vector<int> jump_modes, double jump_scale);

    void validate(const SpectralSpace& space) const;
    std::string kind_name() const;

    bool operator==(const NoiseSpec&) const = default;
};

NoiseKind parse_noise_kind(const std::string& name);

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);
/// Counter-based child seed: the same (master, index) always gives the same stream.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

/// Engine seeded through splitmix64 so that nearby seeds give unrelated streams.
std::mt19937_64 make_engine(std::uint64_t seed);

/// Pre-materialized noise increments ΔN_k on [kΔt, (k+1)Δt].
class NoisePath {
public:
    NoisePath() = default;

    const NoiseSpec& spec() const { return spec_; }
    NoiseKind kind() const { return spec_.kind; }
    double dt() const { return dt_; }
    int steps() const { return static_cast<int>(modal_.rows()); }
    int driven_modes() const { return static_cast<int>(modal_.cols()); }
    std::uint64_t seed() const { return seed_; }

    /// Modal coefficients of ΔN_k (row k, first driven_modes() modes).
    const Eigen::MatrixXd& modal() const { return modal_; }
    /// Standard Wiener increments ΔW_k = √Δt ξ_k (Wiener only; zero otherwise).
    Eigen::VectorXd wiener_increment(int k) const;
    /// Grid increment ΔN_k.
    const Vec& increment(int k) const { return grid_.at(static_cast<std::size_t>(k)); }
    /// N_{t_k} = Σ_{j<k} ΔN_j.
    Vec cumulative(int k) const;
    /// Number of jumps in step k (compound Poisson only).
    int jumps(int k) const;

    /// Sums blocks of `factor` consecutive increments: the same ω on a coarser time grid.
    NoisePath coarsen(const SpectralSpace& space, int factor) const;

    /// Path restricted to steps [first, first + count).
    NoisePath slice(int first, int count) const;

    void write_csv(std::ostream& os) const;
    static NoisePath read_csv(std::istream& is, const SpectralSpace& space);

private:
    friend NoisePath sample_path(const SpectralSpace&, const NoiseSpec&, std::uint64_t, double, int);
    void materialize(const SpectralSpace& space);

    NoiseSpec spec_;
    double dt_ = 0.0;
    std::uint64_t seed_ = 0;
    Eigen::MatrixXd modal_;     // steps × driven modes
    Eigen::MatrixXd unit_;      // Wiener: ΔW per step, same shape as modal_
    std::vector<int> jumps_;    // per-step jump counts
    std::vector<Vec> grid_;
};

NoisePath sample_path(const SpectralSpace& space, const NoiseSpec& spec, std::uint64_t seed, double dt,
                      int n_steps);

/// Amplitudes σλ_k^{-ρ} of the first m modes.
Vec wiener_amplitudes(const SpectralSpace& space, double sigma, double rho, int m);

/// Modal synthesis Σ_k a_k w_k e_k shared by additive and multiplicative noise.
Vec modal_increment(const SpectralSpace& space, const Vec& amplitudes, const Vec& dw, double scale = 1.0);

enum class Modulation { Constant, Saturating, AffineClipped };

/// B(x) = β(x) Σ_k b_k e_k ⊗ e_k.
struct DiffusionCoefficient {
    Vec b;
    Modulation modulation = Modulation::Constant;
    // AffineClipped: β(x) = clamp(a + slope·‖x‖_H, −clip, clip)
    double a = 1.0;
    double slope = 0.0;
    double clip = 1.0;

    double beta(const SpectralSpace& space, const Vec& x) const;
    double lipschitz_beta() const;
    double sup_beta() const;
    double sum_b2() const { return b.squaredNorm(); }

    // Declared constants of the growth/Lipschitz hypotheses, with
    // ‖B(x)‖ measured as Hilbert-Schmidt norms into H and S.
    double growth_h(const SpectralSpace& space) const;
    double lipschitz_h(const SpectralSpace& space) const;
    double growth_s(const SpectralSpace& space) const;
};

Modulation parse_modulation(const std::string& name);
std::string modulation_name(Modulation m);

Vec multiplicative_increment(const SpectralSpace& space, const DiffusionCoefficient& coeff, const Vec& x,
                             const Vec& dw);

struct CoefficientAudit {
    double growth_h = 0.0;       // max ‖B(x)‖_{HS(H)}
    double lipschitz_h = 0.0;    // max ‖B(x)−B(y)‖_{HS(H)}/‖x−y‖_H
    double growth_s = 0.0;       // max ‖B(x)‖_{HS(S)}
    bool within_declared = true;
};

CoefficientAudit audit_coefficient(const SpectralSpace& space, const DiffusionCoefficient& coeff,
                                   const std::vector<Vec>& samples);

struct RegularityReport {
    double l2_T32_norm = 0.0;   // (Δt Σ_k ‖N_{t_k}‖²_{T^{3/2}})^{1/2}
    double tail_fraction = 0.0; // share of the upper half of the modes
    bool certifies_hyp_g = true;
};

/// Certified when the upper half of the spectrum carries at most 5% of the
/// T^{3/2} energy, i.e. the truncated series has visibly converged.
RegularityReport regularity_report(const SpectralSpace& space, const NoisePath& path);

}  // namespace monoflow
