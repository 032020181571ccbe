#include "monoflow/drift_ops.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

namespace monoflow {

namespace {

Eigen::SparseMatrix<double> probe_matrix(int rows, int cols,
                                         const std::function<Vec(const Vec&)>& apply) {
    std::vector<Eigen::Triplet<double>> trips;
    Vec unit = Vec::Zero(cols);
    for (int j = 0; j < cols; ++j) {
        unit[j] = 1.0;
        const Vec col = apply(unit);
        for (int i = 0; i < rows; ++i) {
            if (col[i] != 0.0) trips.emplace_back(i, j, col[i]);
        }
        unit[j] = 0.0;
    }
    Eigen::SparseMatrix<double> m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

// Thomas algorithm for a general tridiagonal system; sub[0] and sup[n-1] unused.
// The Jacobians here are column diagonally dominant, so no pivoting is needed.
void solve_tridiagonal(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                       Vec& rhs) {
    const int n = static_cast<int>(diag.size());
    for (int i = 1; i < n; ++i) {
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// Newton solve of u + λA_δ(u) + λε T(u − g) = f at a fixed smoothing level.
//
// A unit is a gradient cell (divergence form, d = dim) or a node (diffusion
// form, d = 1); q is the field the graph acts on and "lift" maps unit fluxes
// back to nodes (D^T or T). Smooth graphs use primal Newton with an Armijo
// search on the convex energy. Smoothed power graphs with p < 2 carry the
// flux w as an extra unknown, which keeps Newton quadratic as δ → 0.
class NewtonProblem {
public:
    NewtonProblem(const DriftOperator& op, const ScalarGraph& graph, double lambda, double epsilon,
                  const Vec& g, const Vec& f)
        : op_(op),
          space_(op.space()),
          grid_(op.space().grid()),
          graph_(graph),
          lambda_(lambda),
          epsilon_(epsilon),
          g_(g),
          f_(f),
          divergence_(op.form() == DriftForm::Divergence),
          d_(divergence_ ? grid_.dim() : 1) {}

    struct Eval {
        Vec residual;
        double energy = 0.0;
        double residual_norm = 0.0;
    };

    bool primal_dual() const {
        return graph_.kind() == GraphKind::Power && graph_.p() < 2.0 && graph_.delta() > 0.0;
    }

    Eigen::MatrixXd fields(const Vec& u) const {
        if (divergence_) return grid_.gradient(u);
        return u;
    }

    Vec lift(const Eigen::MatrixXd& flux) const {
        if (divergence_) return grid_.gradient_adjoint(flux);
        return space_.apply_T(flux.col(0));
    }

    Eigen::MatrixXd primal_flux(const Eigen::MatrixXd& q) const {
        Eigen::MatrixXd flux(q.rows(), q.cols());
        for (int c = 0; c < q.rows(); ++c) flux.row(c) = graph_.slope_ratio(q.row(c).norm()) * q.row(c);
        return flux;
    }

    Eval evaluate(const Vec& u) const {
        Eval e;
        const double vol = grid_.cell_volume();
        const Eigen::MatrixXd q = fields(u);
        double phi = 0.0;
        for (int c = 0; c < q.rows(); ++c) phi += graph_.potential(q.row(c).norm());
        const Vec diff = u - f_;
        const Vec w = u - g_;
        e.residual = diff + lambda_ * lift(primal_flux(q));
        if (epsilon_ > 0.0) e.residual += lambda_ * epsilon_ * space_.apply_T(w);
        if (divergence_) {
            e.energy = 0.5 * vol * diff.squaredNorm() + lambda_ * vol * phi;
            if (epsilon_ > 0.0) e.energy += 0.5 * lambda_ * epsilon_ * vol * space_.apply_T(w).dot(w);
        } else {
            e.energy = 0.5 * space_.inner_h(diff, diff) + lambda_ * vol * phi;
            if (epsilon_ > 0.0) e.energy += 0.5 * lambda_ * epsilon_ * vol * w.squaredNorm();
        }
        e.residual_norm = space_.norm_h(e.residual);
        return e;
    }

    double norm_h(const Vec& v) const { return space_.norm_h(v); }

    // Derivative of the energy along du; the residual is the H-gradient.
    double slope(const Eval& e, const Vec& du) const {
        if (divergence_) return grid_.cell_volume() * e.residual.dot(du);
        return space_.inner_h(e.residual, du);
    }

    // Exact primal Jacobian blocks W_c = s I + (Φ̃' − s) q̂ q̂^T.
    Eigen::MatrixXd primal_weights(const Eigen::MatrixXd& q) const {
        Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(q.rows(), d_ * d_);
        for (int c = 0; c < q.rows(); ++c) {
            const double rho = q.row(c).norm();
            const double s = graph_.slope_ratio(rho);
            const double gp = graph_.derivative(rho);
            for (int a = 0; a < d_; ++a) {
                for (int b = 0; b < d_; ++b) {
                    double w = a == b ? s : 0.0;
                    if (rho > 0.0) w += (gp - s) * q(c, a) * q(c, b) / (rho * rho);
                    weights(c, a * d_ + b) = w;
                }
            }
        }
        return weights;
    }

    Vec primal_direction(const Vec& u, const Vec& residual) {
        return solve(primal_weights(fields(u)), -residual);
    }

    // Lagged-diffusivity step: the isotropic weight Φ̃(ρ)/ρ gives a quadratic
    // majorant of the energy whenever Φ̃(ρ)/ρ is nonincreasing, so the full
    // step never raises the energy.
    Vec lagged_direction(const Vec& u, const Vec& residual) {
        const Eigen::MatrixXd q = fields(u);
        Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(q.rows(), d_ * d_);
        for (int c = 0; c < q.rows(); ++c) {
            const double s = graph_.slope_ratio(q.row(c).norm());
            for (int a = 0; a < d_; ++a) weights(c, a * d_ + a) = s;
        }
        return solve(weights, -residual);
    }

    // One primal-dual Newton step on (u, w) with w·m(|q|) = q, m = (|q|² + δ²)^{(2−p)/2}.
    // Returns the H-norm of the primal update.
    double primal_dual_step(Vec& u, Eigen::MatrixXd& w) {
        const double p = graph_.p();
        const double delta2 = graph_.delta() * graph_.delta();
        const Eigen::MatrixXd q = fields(u);
        const int units = static_cast<int>(q.rows());
        Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(units, d_ * d_);
        Eigen::MatrixXd excess(units, d_);
        std::vector<double> m(units), r2(units);
        for (int c = 0; c < units; ++c) {
            const double rho = q.row(c).norm();
            r2[c] = rho * rho + delta2;
            m[c] = p == 1.0 ? std::sqrt(r2[c]) : std::pow(r2[c], 0.5 * (2.0 - p));
            excess.row(c) = (w.row(c) * m[c] - q.row(c)) / m[c];
            // symmetrized linearization; falls back to the primal block where
            // an infeasible w makes it indefinite
            const double k = 0.5 * (2.0 - p) / r2[c];
            for (int a = 0; a < d_; ++a) {
                for (int b = 0; b < d_; ++b) {
                    weights(c, a * d_ + b) =
                        (a == b ? 1.0 / m[c] : 0.0) - k * (w(c, a) * q(c, b) + q(c, a) * w(c, b));
                }
            }
            double min_eig = weights(c, 0);
            if (d_ == 2) {
                const double tr = weights(c, 0) + weights(c, 3);
                const double det = weights(c, 0) * weights(c, 3) - weights(c, 1) * weights(c, 2);
                min_eig = 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
            }
            if (!(min_eig > 0.0)) weights.row(c) = primal_weights(q.row(c));
        }
        Vec rhs = f_ - u - lambda_ * lift(w) + lambda_ * lift(excess);
        if (epsilon_ > 0.0) rhs -= lambda_ * epsilon_ * space_.apply_T(u - g_);
        const Vec du = solve(weights, rhs);
        const Eigen::MatrixXd dq = fields(du);
        Eigen::MatrixXd dw(units, d_);
        for (int c = 0; c < units; ++c) {
            const double proj = q.row(c).dot(dq.row(c));
            dw.row(c) = (q.row(c) - w.row(c) * m[c] + dq.row(c) -
                         w.row(c) * ((2.0 - p) * m[c] * proj / r2[c])) /
                        m[c];
        }
        w += dw;
        if (p == 1.0) {
            // project back onto |w| ≤ 1, cell by cell
            for (int c = 0; c < units; ++c) {
                const double wn = w.row(c).norm();
                if (wn > 1.0) w.row(c) /= wn;
            }
        }
        u += du;
        return space_.norm_h(du);
    }

private:
    // Solves (I + λ L W F + λε T) x = rhs with unit weights W (ε folded in).
    Vec solve(Eigen::MatrixXd weights, Vec rhs) {
        for (int c = 0; c < weights.rows(); ++c)
            for (int a = 0; a < d_; ++a) weights(c, a * d_ + a) += epsilon_;
        if (grid_.dim() == 1) return solve_1d(weights, std::move(rhs));
        return solve_sparse(weights, rhs);
    }

    Vec solve_1d(const Eigen::MatrixXd& weights, Vec rhs) const {
        const int n = grid_.n();
        const double inv_h2 = 1.0 / (grid_.h() * grid_.h());
        std::vector<double> sub(n, 0.0), diag(n, 1.0), sup(n, 0.0);
        const bool dirichlet = grid_.bc() == Boundary::Dirichlet;
        if (divergence_) {
            for (int c = 0; c < weights.rows(); ++c) {
                // nodes joined by cell c; −1 and n are ghosts
                const int left = dirichlet ? c - 1 : c;
                const int right = left + 1;
                if (!dirichlet && right >= n) continue;
                const double w = lambda_ * weights(c, 0) * inv_h2;
                if (left >= 0) diag[left] += w;
                if (right < n) diag[right] += w;
                if (left >= 0 && right < n) {
                    sup[left] -= w;
                    sub[right] -= w;
                }
            }
        } else {
            for (int j = 0; j < n; ++j) {
                const int neighbours = (j > 0 || dirichlet ? 1 : 0) + (j + 1 < n || dirichlet ? 1 : 0);
                diag[j] += lambda_ * neighbours * inv_h2 * weights(j, 0);
                if (j > 0) sub[j] = -lambda_ * inv_h2 * weights(j - 1, 0);
                if (j + 1 < n) sup[j] = -lambda_ * inv_h2 * weights(j + 1, 0);
            }
        }
        solve_tridiagonal(sub, diag, sup, rhs);
        return rhs;
    }

    Vec solve_sparse(const Eigen::MatrixXd& weights, const Vec& rhs) {
        const int size = grid_.size();
        Eigen::SparseMatrix<double> identity(size, size);
        identity.setIdentity();
        if (divergence_) {
            std::vector<Eigen::Triplet<double>> trips;
            trips.reserve(static_cast<std::size_t>(weights.size()));
            for (int c = 0; c < weights.rows(); ++c)
                for (int a = 0; a < d_; ++a)
                    for (int b = 0; b < d_; ++b) trips.emplace_back(c * d_ + a, c * d_ + b, weights(c, a * d_ + b));
            const int rows = static_cast<int>(weights.rows()) * d_;
            Eigen::SparseMatrix<double> block(rows, rows);
            block.setFromTriplets(trips.begin(), trips.end());
            const auto& grad = op_.gradient_matrix();
            const Eigen::SparseMatrix<double> jac =
                identity + lambda_ * Eigen::SparseMatrix<double>(grad.transpose() * block * grad);
            // the symbolic analysis is reused only while the pattern is unchanged
            if (!ldlt_ || jac.nonZeros() != pattern_nnz_) {
                ldlt_.emplace();
                ldlt_->analyzePattern(jac);
                pattern_nnz_ = jac.nonZeros();
            }
            ldlt_->factorize(jac);
            if (ldlt_->info() != Eigen::Success) throw NonConvergence("Newton Jacobian factorization failed", 0.0, 0);
            return ldlt_->solve(rhs);
        }
        Eigen::SparseMatrix<double> jac =
            identity + lambda_ * Eigen::SparseMatrix<double>(op_.laplacian_matrix() * weights.col(0).asDiagonal());
        jac.makeCompressed();
        if (!lu_ || jac.nonZeros() != pattern_nnz_) {
            lu_.emplace();
            lu_->analyzePattern(jac);
            pattern_nnz_ = jac.nonZeros();
        }
        lu_->factorize(jac);
        if (lu_->info() != Eigen::Success) throw NonConvergence("Newton Jacobian factorization failed", 0.0, 0);
        return lu_->solve(rhs);
    }

    const DriftOperator& op_;
    const SpectralSpace& space_;
    const GridDomain& grid_;
    ScalarGraph graph_;
    double lambda_;
    double epsilon_;
    const Vec& g_;
    const Vec& f_;
    bool divergence_;
    int d_;
    std::optional<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
    std::optional<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
    Eigen::Index pattern_nnz_ = 0;
};

struct LevelResult {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

// Accepts a residual at the tolerance, or one at the rounding floor once the
// Newton updates themselves have dropped below the tolerance.
struct Tolerance {
    double abs = 0.0;
    double floor = 0.0;
    bool met(double residual, double last_update) const {
        return residual <= abs || (residual <= floor && last_update <= abs);
    }
};

LevelResult primal_dual_level(NewtonProblem& problem, Vec& u, const Tolerance& tol, int max_iter) {
    LevelResult out;
    Eigen::MatrixXd w = problem.primal_flux(problem.fields(u));
    double update = std::numeric_limits<double>::infinity();
    for (int it = 0;; ++it) {
        out.residual = problem.evaluate(u).residual_norm;
        if (!std::isfinite(out.residual)) return out;
        if (tol.met(out.residual, update)) {
            out.converged = true;
            return out;
        }
        if (it == max_iter) return out;
        update = problem.primal_dual_step(u, w);
        ++out.iterations;
    }
}

// Damped Newton with Armijo backtracking on the strictly convex resolvent energy.
LevelResult newton_level(NewtonProblem& problem, Vec& u, const Tolerance& tol, int max_iter) {
    if (problem.primal_dual()) return primal_dual_level(problem, u, tol, max_iter);
    LevelResult out;
    auto eval = problem.evaluate(u);
    double update = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        out.residual = eval.residual_norm;
        if (!std::isfinite(eval.residual_norm)) return out;
        if (tol.met(eval.residual_norm, update)) {
            out.converged = true;
            return out;
        }
        Vec du = problem.primal_direction(u, eval.residual);
        double slope = problem.slope(eval, du);
        if (!(slope < 0.0) || !du.allFinite()) {
            du = -eval.residual;
            slope = problem.slope(eval, du);
        }
        // Near convergence the energy decrease drops below rounding; a smaller
        // residual is then the reliable acceptance signal.
        const double noise_floor = 1e3 * std::numeric_limits<double>::epsilon() * std::abs(eval.energy);
        auto acceptable = [&](const NewtonProblem::Eval& trial, double step) {
            if (!std::isfinite(trial.energy)) return false;
            if (trial.energy <= eval.energy + 1e-4 * step * slope) return true;
            return std::abs(step * slope) <= noise_floor && trial.residual_norm < eval.residual_norm;
        };
        auto full = problem.evaluate(u + du);
        std::optional<NewtonProblem::Eval> lagged;
        Vec dl;
        if (!acceptable(full, 1.0)) {
            // Newton overshoots where the graph flattens; the majorant step cannot
            // raise the energy, so it competes with the backtracked Newton step
            dl = problem.lagged_direction(u, eval.residual);
            auto trial = problem.evaluate(u + dl);
            if (std::isfinite(trial.energy) && trial.energy < eval.energy) lagged = std::move(trial);
        }
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            auto trial = ls == 0 ? std::move(full) : problem.evaluate(u + step * du);
            if (acceptable(trial, step)) {
                accepted = true;
                if (lagged && lagged->energy < trial.energy) break;
                update = step * problem.norm_h(du);
                u += step * du;
                eval = std::move(trial);
                lagged.reset();
                break;
            }
            step *= 0.5;
        }
        if (lagged) {
            update = problem.norm_h(dl);
            u += dl;
            eval = std::move(*lagged);
            accepted = true;
        }
        ++out.iterations;
        if (!accepted) break;
    }
    out.residual = eval.residual_norm;
    out.converged = tol.met(eval.residual_norm, update);
    return out;
}

}  // namespace

DriftOperator::DriftOperator(std::shared_ptr<const SpectralSpace> space, ScalarGraph graph,
                             DriftForm form, NewtonOptions newton)
    : space_(std::move(space)), graph_(graph), form_(form), newton_(std::move(newton)) {
    if (!space_) throw std::invalid_argument("drift operator needs a spectral space");
    const bool div = form_ == DriftForm::Divergence;
    if (div != (space_->mode() == TripleMode::H1OverL2)) {
        throw std::invalid_argument(
            "divergence form requires the H1OverL2 triple and diffusion form the L2OverHm1 triple");
    }
    if (!div && space_->grid().bc() != Boundary::Dirichlet) {
        throw std::invalid_argument("diffusion form is only provided on Dirichlet grids");
    }
    if (!(newton_.tol > 0.0) || newton_.max_iter < 1) {
        throw std::invalid_argument("Newton options need tol > 0 and max_iter >= 1");
    }
    const GridDomain& grid = space_->grid();
    const int size = grid.size();
    const int d = grid.dim();
    gradient_ = probe_matrix(grid.cells() * d, size, [&](const Vec& e) {
        const Eigen::MatrixXd q = grid.gradient(e);
        Vec flat(q.rows() * d);
        for (int c = 0; c < q.rows(); ++c)
            for (int a = 0; a < d; ++a) flat[c * d + a] = q(c, a);
        return flat;
    });
    laplacian_ = probe_matrix(size, size, [&](const Vec& e) { return grid.apply_laplacian(e); });
}

DriftOperator DriftOperator::with_graph(ScalarGraph graph) const {
    DriftOperator copy = *this;
    copy.graph_ = graph;
    return copy;
}

double DriftOperator::effective_delta() const {
    if (uses_continuation()) return newton_.ladder.empty() ? 0.0 : newton_.ladder.back();
    return graph_.delta();
}

double DriftOperator::energy_phi(const Vec& u, double delta) const {
    const GridDomain& grid = space_->grid();
    grid.check_size(u);
    const ScalarGraph g = graph_.with_delta(delta);
    double acc = 0.0;
    if (form_ == DriftForm::Divergence) {
        const Eigen::MatrixXd q = grid.gradient(u);
        for (int c = 0; c < q.rows(); ++c) acc += g.potential(q.row(c).norm());
    } else {
        for (int j = 0; j < u.size(); ++j) acc += g.potential(u[j]);
    }
    return grid.cell_volume() * acc;
}

double DriftOperator::lyapunov_theta(const Vec& u) const {
    if (graph_.kind() == GraphKind::LogPlasma && form_ == DriftForm::Diffusion) {
        space_->grid().check_size(u);
        double acc = 0.0;
        for (int j = 0; j < u.size(); ++j) acc += plasma_theta(u[j]);
        return space_->grid().cell_volume() * acc;
    }
    return energy_phi(u) - energy_phi(Vec::Zero(u.size()));
}

Vec DriftOperator::apply_selection(const Vec& u) const {
    const GridDomain& grid = space_->grid();
    grid.check_size(u);
    if (form_ == DriftForm::Divergence) {
        Eigen::MatrixXd q = grid.gradient(u);
        for (int c = 0; c < q.rows(); ++c) {
            const double rho = q.row(c).norm();
            q.row(c) *= rho > 0.0 ? graph_.branch(rho) / rho : 0.0;
        }
        return grid.gradient_adjoint(q);
    }
    Vec flux(u.size());
    for (int j = 0; j < u.size(); ++j) flux[j] = graph_.branch(u[j]);
    return space_->apply_T(flux);
}

Vec DriftOperator::resolvent(double lambda, const Vec& f, SolveStats* stats) const {
    return viscous_resolvent(lambda, 0.0, Vec::Zero(f.size()), f, stats);
}

Vec DriftOperator::viscous_resolvent(double lambda, double epsilon, const Vec& g, const Vec& f,
                                     SolveStats* stats) const {
    space_->grid().check_size(f);
    space_->grid().check_size(g);
    if (!(lambda >= 0.0)) throw std::invalid_argument("resolvent step must be >= 0");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("viscosity must be >= 0");
    SolveStats local;
    local.final_delta = effective_delta();
    if (lambda == 0.0) {
        if (stats) *stats = local;
        return f;
    }
    // Constants lie in the kernel of the Neumann operators and pass through unchanged.
    const double shift = space_->grid().bc() == Boundary::NeumannMeanZero ? f.mean() : 0.0;
    const Vec f0 = f.array() - shift;

    std::vector<double> levels;
    if (uses_continuation()) {
        levels = newton_.ladder;
    } else {
        levels = {graph_.delta()};
    }

    // Tolerance is absolute for O(1) data and relative below that, so that
    // decaying states keep full accuracy.
    double scale = 1.0;
    {
        NewtonProblem probe(*this, graph_.with_delta(levels.front()), lambda, epsilon, g, f0);
        const double r0 = probe.evaluate(f0).residual_norm;
        scale = std::min(1.0, std::max(space_->norm_h(f0), r0));
        if (scale == 0.0) {
            if (stats) *stats = local;
            return f;
        }
    }
    // Residuals cannot be resolved below the rounding of the Jacobian action.
    const GridDomain& grid = space_->grid();
    const double lip = graph_.with_delta(levels.back()).lipschitz();
    const double jac_norm = 1.0 + lambda * (lip + epsilon) * 4.0 * grid.dim() / (grid.h() * grid.h());
    const double floor =
        32.0 * std::numeric_limits<double>::epsilon() * jac_norm * std::max(1.0, space_->norm_h(f0));
    const Tolerance tol{newton_.tol * scale, std::max(newton_.tol * scale, floor)};

    Vec u = f0;
    std::optional<double> solved_delta;
    int refinements = 0;
    std::size_t level = 0;
    double target = levels.front();
    while (true) {
        NewtonProblem problem(*this, graph_.with_delta(target), lambda, epsilon, g, f0);
        Vec trial = u;
        const LevelResult res = newton_level(problem, trial, tol, newton_.max_iter);
        local.iterations += res.iterations;
        local.residual = res.residual;
        if (res.converged) {
            u = std::move(trial);
            solved_delta = target;
            if (target == levels[level]) {
                if (++level == levels.size()) break;
            }
            target = levels[level];
            continue;
        }
        if (refinements >= newton_.max_refinements) {
            std::ostringstream os;
            os << "Newton resolvent did not converge at delta=" << target << " (residual "
               << res.residual << " after " << local.iterations << " iterations)";
            throw NonConvergence(os.str(), res.residual, local.iterations);
        }
        ++refinements;
        // insert the geometric midpoint between the last solved level and the failing one
        const double from = solved_delta ? *solved_delta : 10.0 * target;
        target = std::sqrt(from * target);
    }
    local.final_delta = levels.back();
    if (stats) *stats = local;
    return u.array() + shift;
}

HypothesisAudit DriftOperator::hypothesis_audit(std::span<const Vec> samples) const {
    HypothesisAudit audit;
    audit.weak_coercivity = std::numeric_limits<double>::infinity();
    audit.coercivity_surplus = std::numeric_limits<double>::infinity();
    if (samples.empty()) {
        audit.weak_coercivity = 0.0;
        audit.coercivity_surplus = 0.0;
        return audit;
    }
    for (const Vec& u : samples) {
        const Vec eta = apply_selection(u);
        const double eta_dual = space_->norm_s_star(eta);
        audit.linear_growth = std::max(audit.linear_growth, eta_dual / (1.0 + space_->norm_s(u)));
        for (double n : {1.0, 10.0, 100.0, 1000.0}) {
            audit.weak_coercivity =
                std::min(audit.weak_coercivity, space_->pairing(eta, space_->yosida_T(n, u)));
        }
        const double surplus = 2.0 * space_->pairing(eta, u) - eta_dual;
        audit.coercivity_surplus = std::min(audit.coercivity_surplus, surplus);
    }
    audit.coercivity_offset = std::max(0.0, -audit.coercivity_surplus);
    audit.weak_coercivity_ok = audit.weak_coercivity >= -1e-8;
    return audit;
}

}  // namespace monoflow
