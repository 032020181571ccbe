#pragma once

#include "monoflow/monotone_graphs.hpp"
#include "monoflow/spectral_space.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace monoflow {

// DivergenceForm: A(u) = −div_h Φ(∇_h u), paired with the H1OverL2 triple.
// DiffusionForm:  A(u) = −Δ_h Φ(u),       paired with the L2OverHm1 triple.
enum class DriftForm { Divergence, Diffusion };

struct NewtonOptions {
    double tol = 1e-10;       // on the H-norm of the residual
    int max_iter = 100;       // per smoothing level
    int max_refinements = 8;  // extra δ levels inserted after a failed level
    std::vector<double> ladder = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
};

class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
    double final_delta = 0.0;
};

struct HypothesisAudit {
    double linear_growth = 0.0;       // max ‖η‖_{S*} / (1 + ‖u‖_S)
    double weak_coercivity = 0.0;     // min_n <η, T_n u>
    double coercivity_surplus = 0.0;  // min 2<η,u> − ‖η‖_{S*}  (c = 1)
    double coercivity_offset = 0.0;   // smallest C ≥ 0 making the surplus + C nonnegative
    bool weak_coercivity_ok = true;
};

/// Grid realization of A = ∂φ and its resolvent (I + λA_δ)^{-1} in the
/// H geometry. Immutable; resolvent calls allocate their own workspaces.
class DriftOperator {
public:
    DriftOperator(std::shared_ptr<const SpectralSpace> space, ScalarGraph graph, DriftForm form,
                  NewtonOptions newton = {});

    const SpectralSpace& space() const { return *space_; }
    std::shared_ptr<const SpectralSpace> space_ptr() const { return space_; }
    const ScalarGraph& graph() const { return graph_; }
    DriftForm form() const { return form_; }
    const NewtonOptions& newton() const { return newton_; }

    /// Same discretization with a different graph (e.g. another δ).
    DriftOperator with_graph(ScalarGraph graph) const;

    /// True when solves walk the δ ladder to emulate the unsmoothed graph.
    bool uses_continuation() const { return graph_.needs_smoothing() && graph_.delta() == 0.0; }
    /// Smoothing actually present in converged resolvents.
    double effective_delta() const;

    double energy_phi(const Vec& u) const { return energy_phi(u, graph_.delta()); }
    double energy_phi(const Vec& u, double delta) const;
    double lyapunov_theta(const Vec& u) const;

    /// η = A_δ(u) in H coordinates, minimal section where the gradient vanishes.
    Vec apply_selection(const Vec& u) const;

    Vec resolvent(double lambda, const Vec& f, SolveStats* stats = nullptr) const;

    /// Solves u + λA_δ(u) + λε T(u − g) = f.
    Vec viscous_resolvent(double lambda, double epsilon, const Vec& g, const Vec& f,
                          SolveStats* stats = nullptr) const;

    HypothesisAudit hypothesis_audit(std::span<const Vec> samples) const;

    // Assembled operators, shared by the Newton workspaces.
    const Eigen::SparseMatrix<double>& gradient_matrix() const { return gradient_; }
    const Eigen::SparseMatrix<double>& laplacian_matrix() const { return laplacian_; }

private:
    std::shared_ptr<const SpectralSpace> space_;
    ScalarGraph graph_;
    DriftForm form_;
    NewtonOptions newton_;
    Eigen::SparseMatrix<double> gradient_;   // (cells·dim) × N, rows cell-major
    Eigen::SparseMatrix<double> laplacian_;  // N × N
};

}  // namespace monoflow
