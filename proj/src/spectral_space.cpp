#include "monoflow/spectral_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace monoflow {

GridDomain::GridDomain(int dim, int n, Boundary bc) : dim_(dim), n_(n), h_(0.0), bc_(bc) {
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("grid dim must be 1 or 2, got " + std::to_string(dim));
    }
    if (n < 2) {
        throw std::invalid_argument("grid needs at least 2 interior nodes per axis, got " +
                                    std::to_string(n));
    }
    h_ = 1.0 / static_cast<double>(n + 1);
}

void GridDomain::check_size(const Vec& v) const {
    if (v.size() != size()) {
        throw std::invalid_argument("grid vector has length " + std::to_string(v.size()) +
                                    ", expected " + std::to_string(size()));
    }
}

double GridDomain::inner(const Vec& u, const Vec& v) const {
    check_size(u);
    check_size(v);
    return cell_volume() * u.dot(v);
}

double GridDomain::norm(const Vec& u) const { return std::sqrt(inner(u, u)); }

int GridDomain::cells() const {
    const int per_axis = bc_ == Boundary::Dirichlet ? n_ + 1 : n_;
    return dim_ == 1 ? per_axis : per_axis * per_axis;
}

namespace {

// Node value with zero ghosts; I, J are ghost-padded indices in [0, n+1].
inline double padded(const Vec& u, int n, int I, int J) {
    if (I < 1 || I > n || J < 1 || J > n) return 0.0;
    return u[(J - 1) * n + (I - 1)];
}

}  // namespace

Eigen::MatrixXd GridDomain::gradient(const Vec& u) const {
    check_size(u);
    const double inv_h = 1.0 / h_;
    Eigen::MatrixXd q(cells(), dim_);
    if (dim_ == 1) {
        if (bc_ == Boundary::Dirichlet) {
            for (int c = 0; c <= n_; ++c) {
                const double right = c < n_ ? u[c] : 0.0;
                const double left = c > 0 ? u[c - 1] : 0.0;
                q(c, 0) = (right - left) * inv_h;
            }
        } else {
            for (int c = 0; c < n_; ++c) {
                q(c, 0) = c + 1 < n_ ? (u[c + 1] - u[c]) * inv_h : 0.0;
            }
        }
        return q;
    }
    if (bc_ == Boundary::Dirichlet) {
        const int m = n_ + 1;
        for (int b = 0; b <= n_; ++b) {
            for (int a = 0; a <= n_; ++a) {
                const double here = padded(u, n_, a, b);
                q(b * m + a, 0) = (padded(u, n_, a + 1, b) - here) * inv_h;
                q(b * m + a, 1) = (padded(u, n_, a, b + 1) - here) * inv_h;
            }
        }
    } else {
        for (int b = 0; b < n_; ++b) {
            for (int a = 0; a < n_; ++a) {
                const double here = u[b * n_ + a];
                q(b * n_ + a, 0) = a + 1 < n_ ? (u[b * n_ + a + 1] - here) * inv_h : 0.0;
                q(b * n_ + a, 1) = b + 1 < n_ ? (u[(b + 1) * n_ + a] - here) * inv_h : 0.0;
            }
        }
    }
    return q;
}

Vec GridDomain::gradient_adjoint(const Eigen::MatrixXd& q) const {
    if (q.rows() != cells() || q.cols() != dim_) {
        throw std::invalid_argument("gradient field has wrong shape");
    }
    const double inv_h = 1.0 / h_;
    Vec out = Vec::Zero(size());
    if (dim_ == 1) {
        if (bc_ == Boundary::Dirichlet) {
            for (int c = 0; c <= n_; ++c) {
                if (c < n_) out[c] += q(c, 0) * inv_h;
                if (c > 0) out[c - 1] -= q(c, 0) * inv_h;
            }
        } else {
            for (int c = 0; c + 1 < n_; ++c) {
                out[c + 1] += q(c, 0) * inv_h;
                out[c] -= q(c, 0) * inv_h;
            }
        }
        return out;
    }
    auto add = [&](int I, int J, double val) {
        if (I < 1 || I > n_ || J < 1 || J > n_) return;
        out[(J - 1) * n_ + (I - 1)] += val;
    };
    if (bc_ == Boundary::Dirichlet) {
        const int m = n_ + 1;
        for (int b = 0; b <= n_; ++b) {
            for (int a = 0; a <= n_; ++a) {
                const double qx = q(b * m + a, 0) * inv_h;
                const double qy = q(b * m + a, 1) * inv_h;
                add(a + 1, b, qx);
                add(a, b, -qx - qy);
                add(a, b + 1, qy);
            }
        }
    } else {
        for (int b = 0; b < n_; ++b) {
            for (int a = 0; a < n_; ++a) {
                const double qx = q(b * n_ + a, 0) * inv_h;
                const double qy = q(b * n_ + a, 1) * inv_h;
                if (a + 1 < n_) {
                    out[b * n_ + a + 1] += qx;
                    out[b * n_ + a] -= qx;
                }
                if (b + 1 < n_) {
                    out[(b + 1) * n_ + a] += qy;
                    out[b * n_ + a] -= qy;
                }
            }
        }
    }
    return out;
}

Vec GridDomain::apply_laplacian(const Vec& u) const {
    check_size(u);
    const double inv_h2 = 1.0 / (h_ * h_);
    const bool dir = bc_ == Boundary::Dirichlet;
    Vec out(size());
    auto axis_term = [&](int pos, int stride, int idx) {
        double acc = 0.0;
        if (pos > 0) {
            acc += u[idx] - u[idx - stride];
        } else if (dir) {
            acc += u[idx];
        }
        if (pos + 1 < n_) {
            acc += u[idx] - u[idx + stride];
        } else if (dir) {
            acc += u[idx];
        }
        return acc;
    };
    if (dim_ == 1) {
        for (int j = 0; j < n_; ++j) out[j] = axis_term(j, 1, j) * inv_h2;
        return out;
    }
    for (int b = 0; b < n_; ++b) {
        for (int a = 0; a < n_; ++a) {
            const int idx = b * n_ + a;
            out[idx] = (axis_term(a, 1, idx) + axis_term(b, n_, idx)) * inv_h2;
        }
    }
    return out;
}

double GridDomain::total_variation(const Vec& u) const {
    const Eigen::MatrixXd q = gradient(u);
    return cell_volume() * q.rowwise().norm().sum();
}

SpectralSpace::SpectralSpace(GridDomain grid, TripleMode mode) : grid_(grid), mode_(mode) {
    const int n = grid_.n();
    const double h = grid_.h();
    const double pi = std::numbers::pi;
    basis1d_.resize(n, n);
    lambda1d_.resize(static_cast<std::size_t>(n));
    if (grid_.bc() == Boundary::Dirichlet) {
        for (int k = 0; k < n; ++k) {
            const double kk = k + 1;
            lambda1d_[k] = 2.0 / (h * h) * (1.0 - std::cos(kk * pi * h));
            for (int j = 0; j < n; ++j) {
                basis1d_(j, k) = std::numbers::sqrt2 * std::sin(kk * pi * (j + 1) * h);
            }
        }
    } else {
        const double hn = h * n;
        for (int k = 0; k < n; ++k) {
            lambda1d_[k] = 2.0 / (h * h) * (1.0 - std::cos(k * pi / n));
            const double scale = k == 0 ? 1.0 / std::sqrt(hn) : std::sqrt(2.0 / hn);
            for (int j = 0; j < n; ++j) {
                basis1d_(j, k) = scale * std::cos(k * pi * (j + 0.5) / n);
            }
        }
    }
    const int first = grid_.bc() == Boundary::Dirichlet ? 0 : 1;
    if (grid_.dim() == 1) {
        for (int k = first; k < n; ++k) order_.emplace_back(k, 0);
    } else {
        for (int ky = 0; ky < n; ++ky) {
            for (int kx = 0; kx < n; ++kx) {
                if (first == 1 && kx == 0 && ky == 0) continue;
                order_.emplace_back(kx, ky);
            }
        }
        std::stable_sort(order_.begin(), order_.end(), [&](auto a, auto b) {
            return lambda1d_[a.first] + lambda1d_[a.second] <
                   lambda1d_[b.first] + lambda1d_[b.second];
        });
    }
    eigenvalues_.reserve(order_.size());
    for (auto [kx, ky] : order_) {
        eigenvalues_.push_back(grid_.dim() == 1 ? lambda1d_[kx] : lambda1d_[kx] + lambda1d_[ky]);
    }
}

Vec SpectralSpace::eigenvector(int k) const {
    if (k < 0 || k >= modes()) throw std::out_of_range("mode index out of range");
    Vec c = Vec::Zero(modes());
    c[k] = 1.0;
    return synthesize(c);
}

Vec SpectralSpace::analyze(const Vec& v) const {
    grid_.check_size(v);
    const int n = grid_.n();
    Vec c(modes());
    if (grid_.dim() == 1) {
        const Vec full = grid_.h() * (basis1d_.transpose() * v);
        for (int k = 0; k < modes(); ++k) c[k] = full[order_[k].first];
        return c;
    }
    Eigen::Map<const Eigen::MatrixXd> grid2(v.data(), n, n);
    const Eigen::MatrixXd full =
        grid_.cell_volume() * (basis1d_.transpose() * grid2 * basis1d_);
    for (int k = 0; k < modes(); ++k) c[k] = full(order_[k].first, order_[k].second);
    return c;
}

Vec SpectralSpace::synthesize(const Vec& c) const {
    if (c.size() != modes()) {
        throw std::invalid_argument("coefficient vector has length " + std::to_string(c.size()) +
                                    ", expected " + std::to_string(modes()));
    }
    const int n = grid_.n();
    if (grid_.dim() == 1) {
        Vec full = Vec::Zero(n);
        for (int k = 0; k < modes(); ++k) full[order_[k].first] = c[k];
        return basis1d_ * full;
    }
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < modes(); ++k) full(order_[k].first, order_[k].second) = c[k];
    const Eigen::MatrixXd grid2 = basis1d_ * full * basis1d_.transpose();
    return Eigen::Map<const Vec>(grid2.data(), n * n);
}

template <class Multiplier>
Vec SpectralSpace::apply_multiplier(const Vec& v, Multiplier&& mult) const {
    Vec c = analyze(v);
    for (int k = 0; k < modes(); ++k) c[k] *= mult(eigenvalues_[k]);
    return synthesize(c);
}

double SpectralSpace::h_weight(int k) const {
    return mode_ == TripleMode::H1OverL2 ? 1.0 : 1.0 / eigenvalues_[k];
}

double SpectralSpace::s_weight(int k) const {
    return mode_ == TripleMode::H1OverL2 ? eigenvalues_[k] : 1.0;
}

TripleNorms SpectralSpace::norms(const Vec& v) const {
    const Vec c = analyze(v);
    double s = 0.0, hh = 0.0, ss = 0.0;
    for (int k = 0; k < modes(); ++k) {
        const double lam = eigenvalues_[k];
        const double c2 = c[k] * c[k];
        if (mode_ == TripleMode::H1OverL2) {
            s += lam * c2;
            hh += c2;
            ss += c2 / lam;
        } else {
            s += c2;
            hh += c2 / lam;
            ss += c2 / (lam * lam);
        }
    }
    return {std::sqrt(s), std::sqrt(hh), std::sqrt(ss)};
}

double SpectralSpace::norm_s(const Vec& v) const {
    if (mode_ == TripleMode::H1OverL2) return std::sqrt(std::max(0.0, grid_.inner(apply_T(v), v)));
    return norms(v).s;
}

double SpectralSpace::norm_h(const Vec& v) const { return std::sqrt(std::max(0.0, inner_h(v, v))); }

double SpectralSpace::norm_s_star(const Vec& v) const { return norms(v).s_star; }

double SpectralSpace::inner_h(const Vec& u, const Vec& v) const {
    if (mode_ == TripleMode::H1OverL2) {
        if (grid_.bc() == Boundary::Dirichlet) return grid_.inner(u, v);
        return grid_.inner(u, v) - grid_.cell_volume() * u.sum() * v.sum() / grid_.size();
    }
    const Vec cu = analyze(u);
    const Vec cv = analyze(v);
    double acc = 0.0;
    for (int k = 0; k < modes(); ++k) acc += cu[k] * cv[k] / eigenvalues_[k];
    return acc;
}

Vec SpectralSpace::resolvent_J(double n, const Vec& v) const {
    if (!(n >= 1.0)) throw std::invalid_argument("resolvent index must be >= 1");
    return apply_multiplier(v, [n](double lam) { return n / (n + lam); });
}

Vec SpectralSpace::yosida_T(double n, const Vec& v) const {
    if (!(n >= 1.0)) throw std::invalid_argument("Yosida index must be >= 1");
    return apply_multiplier(v, [n](double lam) { return n * lam / (n + lam); });
}

double SpectralSpace::approx_norm(double n, const Vec& v) const {
    if (!(n >= 1.0)) throw std::invalid_argument("Yosida index must be >= 1");
    const Vec c = analyze(v);
    double acc = 0.0;
    for (int k = 0; k < modes(); ++k) {
        const double lam = eigenvalues_[k];
        acc += h_weight(k) * n * lam / (n + lam) * c[k] * c[k];
    }
    return std::sqrt(acc);
}

Vec SpectralSpace::project_P(int m, const Vec& v) const {
    if (m < 1 || m > modes()) {
        throw std::out_of_range("projection rank " + std::to_string(m) + " outside [1, " +
                                std::to_string(modes()) + "]");
    }
    Vec c = analyze(v);
    c.tail(modes() - m).setZero();
    return synthesize(c);
}

Vec SpectralSpace::riesz_iS(const Vec& v) const { return apply_T(v); }

Vec SpectralSpace::solve_T(const Vec& v) const {
    return apply_multiplier(v, [](double lam) { return 1.0 / lam; });
}

double SpectralSpace::fractional_norm(const Vec& v) const {
    const Vec c = analyze(v);
    double acc = 0.0;
    for (int k = 0; k < modes(); ++k) {
        const double lam = eigenvalues_[k];
        acc += (1.0 + lam * lam * lam) * c[k] * c[k];
    }
    return std::sqrt(acc);
}

Vec SpectralSpace::admissible(const Vec& v) const {
    grid_.check_size(v);
    if (grid_.bc() == Boundary::Dirichlet) return v;
    return v.array() - v.mean();
}

}  // namespace monoflow
