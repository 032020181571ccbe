#pragma once

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace monoflow {

using Vec = Eigen::VectorXd;

enum class Boundary { Dirichlet, NeumannMeanZero };

// Which Hilbert space plays the pivot role H of the triple S ⊂ H ⊂ S*.
//   H1OverL2:  S = H^1_0 (grid), H = L^2_h,  S* = H^{-1}
//   L2OverHm1: S = L^2_h,        H = H^{-1}, S* = T^{-2}-weighted
enum class TripleMode { H1OverL2, L2OverHm1 };

/// Uniform grid on the unit interval/square with n interior nodes per axis
/// and spacing h = 1/(n+1). Nodes are stored with the x-index fastest.
class GridDomain {
public:
    GridDomain(int dim, int n, Boundary bc);

    int dim() const { return dim_; }
    int n() const { return n_; }
    double h() const { return h_; }
    Boundary bc() const { return bc_; }

    int size() const { return dim_ == 1 ? n_ : n_ * n_; }
    double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

    /// Discrete L^2 inner product (u, v)_h = h^dim Σ u_j v_j.
    double inner(const Vec& u, const Vec& v) const;
    double norm(const Vec& u) const;

    /// Number of gradient cells. Dirichlet grids carry one extra layer of
    /// cells touching the zero ghost nodes.
    int cells() const;

    /// Forward-difference gradient, one row per cell, one column per axis.
    Eigen::MatrixXd gradient(const Vec& u) const;

    /// Exact transpose of gradient(): (D^T q, u)_h = h^dim Σ_cells <q, Du>.
    Vec gradient_adjoint(const Eigen::MatrixXd& q) const;

    /// Five-point (three-point in 1D) stencil of −Δ_h; equals D^T D.
    Vec apply_laplacian(const Vec& u) const;

    /// Σ_cells h^dim |Du|_cell (discrete total variation).
    double total_variation(const Vec& u) const;

    void check_size(const Vec& v) const;

private:
    int dim_;
    int n_;
    double h_;
    Boundary bc_;
};

struct TripleNorms {
    double s = 0.0;
    double h = 0.0;
    double s_star = 0.0;
};

/// Discrete Gelfand triple built on the eigen-decomposition of T = −Δ_h.
///
/// Eigenpairs come from closed-form sine (Dirichlet) and cosine (Neumann)
/// formulas on tensor grids. The constant Neumann mode is removed, so every
/// retained eigenvalue is positive and vectors are understood modulo
/// constants (mean-zero subspace).
///
/// All S*-elements are stored as grid vectors in the coordinates of H, so the
/// duality pairing <η, w> is the H inner product.
class SpectralSpace {
public:
    SpectralSpace(GridDomain grid, TripleMode mode);

    const GridDomain& grid() const { return grid_; }
    TripleMode mode() const { return mode_; }

    /// Number of retained modes K.
    int modes() const { return static_cast<int>(eigenvalues_.size()); }
    /// Eigenvalues λ_k in ascending order (k is 0-based here).
    std::span<const double> eigenvalues() const { return eigenvalues_; }
    double eigenvalue(int k) const { return eigenvalues_.at(static_cast<std::size_t>(k)); }
    double lambda_min() const { return eigenvalues_.front(); }
    double lambda_max() const { return eigenvalues_.back(); }

    /// e_k, orthonormal in (·,·)_h.
    Vec eigenvector(int k) const;

    /// Spectral coefficients c_k = (v, e_k)_h.
    Vec analyze(const Vec& v) const;
    /// Σ_k c_k e_k.
    Vec synthesize(const Vec& c) const;

    /// Squared norms via spectral weights.
    TripleNorms norms(const Vec& v) const;
    double norm_s(const Vec& v) const;
    double norm_h(const Vec& v) const;
    double norm_s_star(const Vec& v) const;
    double inner_h(const Vec& u, const Vec& v) const;

    /// <η, w>_{S*,S}; S* elements live in H coordinates.
    double pairing(const Vec& eta, const Vec& w) const { return inner_h(eta, w); }

    /// Weight w_k with ‖v‖_H^2 = Σ w_k c_k^2.
    double h_weight(int k) const;
    /// Weight with ‖v‖_S^2 = Σ w_k c_k^2.
    double s_weight(int k) const;

    /// J_n v = (I + T/n)^{-1} v.
    Vec resolvent_J(double n, const Vec& v) const;
    /// T_n v = n (v − J_n v).
    Vec yosida_T(double n, const Vec& v) const;
    /// ‖v‖_n = (v, T_n v)_H^{1/2}.
    double approx_norm(double n, const Vec& v) const;

    /// Orthogonal projection onto the span of the first m modes.
    Vec project_P(int m, const Vec& v) const;

    /// Riesz map of S expressed in H coordinates (T v, computed by stencil).
    Vec riesz_iS(const Vec& v) const;
    Vec apply_T(const Vec& v) const { return grid_.apply_laplacian(v); }
    /// T^{-1} v on the retained modes.
    Vec solve_T(const Vec& v) const;

    /// Graph norm of T^{3/2}: (Σ (1 + λ_k^3) c_k^2)^{1/2}.
    double fractional_norm(const Vec& v) const;

    /// Mean-zero projection for Neumann grids, identity otherwise.
    Vec admissible(const Vec& v) const;

private:
    template <class Multiplier>
    Vec apply_multiplier(const Vec& v, Multiplier&& mult) const;

    GridDomain grid_;
    TripleMode mode_;
    Eigen::MatrixXd basis1d_;          // n × n1, columns orthonormal in h·Σ
    std::vector<double> lambda1d_;     // 1D eigenvalues (all n1 of them)
    std::vector<std::pair<int, int>> order_;  // sorted mode -> (kx, ky)
    std::vector<double> eigenvalues_;
};

}  // namespace monoflow
