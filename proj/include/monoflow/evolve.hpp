#pragma once

#include "monoflow/drift_ops.hpp"
#include "monoflow/noise.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace monoflow {

struct PicardOptions {
    double window = 0.0;  // 0 selects min(0.1, 1/(4 L_β² Σb_k²))
    double tol = 1e-8;
    int max_sweeps = 50;

    bool operator==(const PicardOptions&) const = default;
};

struct SolverConfig {
    double dt = 1e-2;
    double horizon = 1.0;
    double epsilon = 0.0;
    int galerkin_modes = 0;  // 0 keeps every driven mode
    PicardOptions picard;
    double extinction_threshold = 1e-10;
    bool record_states = true;
    bool record_selections = false;

    int steps() const;
    void validate() const;

    bool operator==(const SolverConfig&) const = default;
};

struct StepDiagnostics {
    double norm_h = 0.0;
    double norm_s = 0.0;
    double energy = 0.0;
    double theta = 0.0;
    int newton_iters = 0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;           // empty unless record_states
    std::vector<Vec> selections;       // η_k for step k -> k+1
    std::vector<StepDiagnostics> diagnostics;
    std::optional<double> extinction_time;
    Vec final_state;

    int size() const { return static_cast<int>(times.size()); }
};

class StepFailure : public NonConvergence {
public:
    StepFailure(int step, const NonConvergence& cause);
    int step() const { return step_; }

private:
    int step_;
};

class PicardStall : public std::runtime_error {
public:
    PicardStall(int window, int sweeps, double gap);
    int window() const { return window_; }
    int sweeps() const { return sweeps_; }
    double gap() const { return gap_; }

private:
    int window_;
    int sweeps_;
    double gap_;
};

Vec step_implicit(const DriftOperator& op, const Vec& x, const Vec& dn, double dt, SolveStats* stats = nullptr);
Vec step_viscous(const DriftOperator& op, const Vec& x, const Vec& g, const Vec& dn, double dt, double epsilon,
                 SolveStats* stats = nullptr);

/// Called after every accepted step with (k, t_k, X_k); k = 0 is the initial state.
using StepObserver = std::function<void(int, double, const Vec&)>;

/// Lie splitting X_{k+1} = (I + Δt A_δ + Δt ε T(· − N_{t_{k+1}}))^{-1}(X_k + ΔN_k).
/// Runs min(cfg.steps(), path.steps()) steps.
Trajectory solve_additive(const DriftOperator& op, const Vec& x0, const NoisePath& path, const SolverConfig& cfg,
                          const StepObserver& observer = {});

/// Deterministic flow with cfg.steps() steps.
Trajectory solve_deterministic(const DriftOperator& op, const Vec& x0, const SolverConfig& cfg,
                               const StepObserver& observer = {});

struct SweepRecord {
    int window = 0;
    int sweep = 0;
    double gap = 0.0;
    double ratio = 0.0;  // gap / previous gap (0 on the first sweep)
};

struct PicardLog {
    double window_length = 0.0;
    std::vector<SweepRecord> sweeps;
    int max_sweeps_used = 0;
};

double default_picard_window(const DiffusionCoefficient& coeff, double dt);

/// Freeze-the-noise iteration on consecutive windows.
Trajectory solve_multiplicative(const DriftOperator& op, const Vec& x0, const DiffusionCoefficient& coeff,
                                std::uint64_t seed, const SolverConfig& cfg, PicardLog* log = nullptr);

struct LimitLevel {
    double epsilon = 0.0;
    double delta = 0.0;
    int modes = 0;         // Galerkin truncation of the noise (0 = all)
    double smoothing = 0;  // x₀ is replaced by J_n x₀ with n = smoothing (0 = none)
};

struct LimitResult {
    Trajectory finest;
    std::vector<double> gaps;  // sup_t ‖X^{(i+1)} − X^{(i)}‖_H
};

LimitResult limit_solution(const DriftOperator& op, const Vec& x0, const SolverConfig& cfg,
                           const std::vector<LimitLevel>& ladder, const NoisePath* path = nullptr);

/// ‖u(t+s)x₀ − u(t)(u(s)x₀)‖_H with s, t multiples of Δt; restart reuses the shifted increments.
double semiflow_check(const DriftOperator& op, const Vec& x0, double s, double t, const SolverConfig& cfg,
                      const NoisePath* path = nullptr);

struct SBoundReport {
    double sup_s2 = 0.0;         // sup_k ‖X_k‖_S²
    double initial_s2 = 0.0;
    double path_integral = 0.0;  // Δt Σ ‖N_{t_k}‖²_{T^{3/2}}
    double constant = 0.0;       // smallest C with ‖X_k‖_S² ≤ e^{Ct_k}(‖x₀‖_S² + C I_k)
    bool finite = true;
};

SBoundReport s_bound(const SpectralSpace& space, const Trajectory& traj, const NoisePath* path = nullptr);

/// Sums blocks of `factor` consecutive increments (common-noise coarsening).
NoisePath coarsen_path(const SpectralSpace& space, const NoisePath& fine, int factor);

struct RefinementReport {
    std::vector<double> dts;
    std::vector<double> gaps;     // sup over coarse times ‖X^{Δt} − X^{Δt/2}‖_H
    std::vector<double> factors;  // gaps[i] / gaps[i+1]
};

/// Runs Δt, Δt/2, ..., Δt/2^halvings on one fine noise path.
RefinementReport dt_refinement(const DriftOperator& op, const Vec& x0, const NoiseSpec& noise, std::uint64_t seed,
                               const SolverConfig& cfg, int halvings = 3);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_states_binary(std::ostream& os, const Trajectory& traj, const GridDomain& grid);
std::vector<Vec> read_states_binary(std::istream& is, int* dim = nullptr, int* n = nullptr);

}  // namespace monoflow
