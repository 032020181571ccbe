#pragma once

#include "monoflow/evolve.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace monoflow {

enum class FunctionalKind { ModeTanh, ClippedNorm, BallIndicator };

/// Bounded Lipschitz test functional on H.
///   ModeTanh       x ↦ tanh((x, ê_k)_H), ê_k = e_k/‖e_k‖_H          Lip 1, sup 1
///   ClippedNorm    x ↦ min(‖x‖_H, M)                                 Lip 1, sup M
///   BallIndicator  x ↦ clamp((R + w − ‖x‖_H)/w, 0, 1)                Lip 1/w, sup 1
struct TestFunctional {
    FunctionalKind kind = FunctionalKind::ModeTanh;
    int mode = 0;
    double level = 1.0;  // M or R
    double width = 1.0;  // w

    static TestFunctional mode_tanh(int k);
    static TestFunctional clipped_norm(double m);
    static TestFunctional ball(double radius, double width);

    double operator()(const SpectralSpace& space, const Vec& x) const;
    double lipschitz() const;
    double sup() const;
    std::string id() const;
};

/// Eight functionals: four low-mode coordinates, two clipped norms, two balls.
std::vector<TestFunctional> default_dictionary(double scale = 1.0);

/// Runs task(i) for i in [0, count); implementations may run tasks concurrently.
using PathExecutor = std::function<void(int count, const std::function<void(int)>& task)>;
PathExecutor serial_executor();

struct MeanWithError {
    double mean = 0.0;
    double se = 0.0;
};

/// Batch-means estimate: the samples are split into `batches` contiguous groups.
MeanWithError batch_means(const std::vector<double>& samples, int batches = 8);

struct OccupationEstimate {
    double horizon = 0.0;
    int n_paths = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> ids;
    std::vector<double> estimate;
    std::vector<double> se;
};

struct ErgodicSetup {
    const DriftOperator* op = nullptr;
    NoiseSpec noise;
    SolverConfig cfg;
    PathExecutor executor = serial_executor();
};

/// Q̂^T F(x) = (1/T) Σ_{k=1}^{T/Δt} Δt F(X_k), averaged over paths, for every
/// horizon in `horizons` (each a multiple of Δt, the largest sets the run
/// length). Path i uses seed split_seed(seed, first_path + i); with fewer than
/// 8 paths the standard error comes from 8 time batches per path instead.
std::vector<OccupationEstimate> occupation_average(const ErgodicSetup& setup, const Vec& x0,
                                                   const std::vector<TestFunctional>& functionals,
                                                   const std::vector<double>& horizons, int n_paths,
                                                   std::uint64_t seed, int first_path = 0);

struct OccupationGap {
    std::vector<double> gap;          // |Q̂F(x) − Q̂F(y)|
    std::vector<double> combined_se;  // √(SE_x² + SE_y²)
};

OccupationGap compare_occupation(const OccupationEstimate& x, const OccupationEstimate& y);

void write_occupation_csv(std::ostream& os, const std::vector<OccupationEstimate>& estimates);

struct EPropertyResult {
    double t = 0.0;
    double lhs = 0.0;    // |P̂_t F(x) − P̂_t F(y)|
    double se = 0.0;
    double bound = 0.0;  // Lip ‖x − y‖_H
    bool holds = true;   // lhs ≤ bound + 3 SE
};

/// Common random numbers: both starts see the same increments on each path.
EPropertyResult eproperty_check(const ErgodicSetup& setup, const TestFunctional& f, const Vec& x, const Vec& y,
                                double t, int n_paths, std::uint64_t seed);

struct ExtinctionReport {
    double time = 0.0;      // +∞ when no extinction within the horizon
    double c_hat = 0.0;     // min_k 2<η_k, X_{k+1}>/‖X_{k+1}‖_H^α
    double t_bound = 0.0;   // ‖x₀‖_H^{2−α}·2/(ĉ(2−α))
    bool extinct = false;
    bool within_bound = false;  // time ≤ 1.05 T̂_B
};

/// Needs recorded states and selections.
ExtinctionReport extinction_time(const SpectralSpace& space, const Trajectory& traj, double alpha,
                                 double threshold = 1e-10);

/// Least-squares slope of log y against log t over [t0, t1].
double decay_rate_fit(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1);
double decay_rate_fit(const Trajectory& traj, double t0, double t1);

/// Median of ‖X_T − u(T)x‖_H² over a pilot batch; a natural ε_ball.
double pilot_ball(const ErgodicSetup& setup, const Vec& x, double horizon, int n_paths, std::uint64_t seed);

/// Fraction of paths with ‖X_T − u(T)x‖_H² ≤ ε_ball.
double stochastic_stability(const ErgodicSetup& setup, const Vec& x, double horizon, double eps_ball, int n_paths,
                            std::uint64_t seed);

struct ConcentrationRow {
    double radius = 0.0;
    double fraction = 0.0;  // Q̂^T(x, {Θ ≤ R})
    double se = 0.0;
    double markov_floor = 0.0;  // 1 − Ĉ(‖x‖²+1)/R − 3 SE
    bool consistent = true;
};

struct ConcentrationReport {
    double c_hat = 0.0;  // (1/T)∫Θ(X) / (‖x‖_H² + 1), path mean
    std::vector<ConcentrationRow> rows;
};

ConcentrationReport concentration_check(const ErgodicSetup& setup, const Vec& x, const std::vector<double>& radii,
                                        double horizon, int n_paths, std::uint64_t seed);

struct SviPoint {
    double t = 0.0;
    double margin = 0.0;  // E[RHS − LHS]
    double se = 0.0;
    double slack = 0.0;   // 3 SE + 10 (Δt + δ)
    bool holds = true;
};

/// Test pair (G, Z): Z solves the flow of `z_op` from z0 under the same
/// increments and G is its recorded selection. Additive noise makes the
/// Itô correction vanish.
std::vector<SviPoint> svi_check(const ErgodicSetup& setup, const Vec& x0, const DriftOperator& z_op, const Vec& z0,
                                const std::vector<double>& checkpoints, int n_paths, std::uint64_t seed);

}  // namespace monoflow
