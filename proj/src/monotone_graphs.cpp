#include "monoflow/monotone_graphs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace monoflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sgn(double r) { return (r > 0.0) - (r < 0.0); }

}  // namespace

ScalarGraph ScalarGraph::power(double p, double delta) {
    if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("power graph needs p in [1, 2]");
    if (!(delta >= 0.0)) throw std::invalid_argument("smoothing delta must be >= 0");
    return {GraphKind::Power, p, delta};
}
ScalarGraph ScalarGraph::log_plasma() { return {GraphKind::LogPlasma, 0.0, 0.0}; }
ScalarGraph ScalarGraph::arctan() { return {GraphKind::Arctan, 0.0, 0.0}; }
ScalarGraph ScalarGraph::minimal_surface() { return {GraphKind::MinimalSurface, 0.0, 0.0}; }
ScalarGraph ScalarGraph::plastic_shear() { return {GraphKind::PlasticShear, 0.0, 0.0}; }

ScalarGraph ScalarGraph::with_delta(double delta) const {
    if (!(delta >= 0.0)) throw std::invalid_argument("smoothing delta must be >= 0");
    ScalarGraph g = *this;
    g.delta_ = kind_ == GraphKind::Power ? delta : 0.0;
    return g;
}

double ScalarGraph::potential(double r) const {
    const double a = std::abs(r);
    switch (kind_) {
        case GraphKind::Power:
            if (p_ == 2.0) return 0.5 * a * a;
            if (delta_ > 0.0) {
                if (p_ == 1.0) {
                    // √(r²+δ²) − δ without cancellation
                    return a * a / (std::hypot(a, delta_) + delta_);
                }
                const double t = a / delta_;
                return std::pow(delta_, p_) * std::expm1(0.5 * p_ * std::log1p(t * t)) / p_;
            }
            return std::pow(a, p_) / p_;
        case GraphKind::LogPlasma:
            // Σ_{k≥2} (−a)^k / (k(k−1)) near zero, where the closed form cancels
            if (a < 0.1) {
                double acc = 0.0, pw = -a;
                for (int k = 2; k <= 16; ++k) {
                    pw *= -a;
                    acc += pw / (k * (k - 1.0));
                }
                return acc;
            }
            return (a + 1.0) * std::log1p(a) - a;
        case GraphKind::Arctan:
            // Σ_{k≥1} (−1)^{k+1} a^{2k} / (2k(2k−1))
            if (a < 0.1) {
                double acc = 0.0, pw = -1.0;
                for (int k = 1; k <= 9; ++k) {
                    pw *= -a * a;
                    acc += pw / (2.0 * k * (2.0 * k - 1.0));
                }
                return acc;
            }
            return a * std::atan(a) - 0.5 * std::log1p(a * a);
        case GraphKind::MinimalSurface:
            return a * a / (std::sqrt(1.0 + a * a) + 1.0);
        case GraphKind::PlasticShear:
            return a <= 1.0 ? 0.5 * a * a : a - 0.5;
    }
    return 0.0;
}

double ScalarGraph::branch(double r) const {
    switch (kind_) {
        case GraphKind::Power:
            if (p_ == 2.0) return r;
            if (delta_ > 0.0) return std::pow(r * r + delta_ * delta_, 0.5 * (p_ - 2.0)) * r;
            if (r == 0.0) return 0.0;
            return p_ == 1.0 ? sgn(r) : std::pow(std::abs(r), p_ - 1.0) * sgn(r);
        case GraphKind::LogPlasma:
            return std::log1p(std::abs(r)) * sgn(r);
        case GraphKind::Arctan:
            return std::atan(r);
        case GraphKind::MinimalSurface:
            return r / std::sqrt(1.0 + r * r);
        case GraphKind::PlasticShear:
            return std::clamp(r, -1.0, 1.0);
    }
    return 0.0;
}

double ScalarGraph::derivative(double r) const {
    const double a = std::abs(r);
    switch (kind_) {
        case GraphKind::Power: {
            if (p_ == 2.0) return 1.0;
            if (delta_ > 0.0) {
                const double s = a * a + delta_ * delta_;
                return std::pow(s, 0.5 * (p_ - 4.0)) * ((p_ - 1.0) * a * a + delta_ * delta_);
            }
            if (a == 0.0) return kInf;
            return p_ == 1.0 ? 0.0 : (p_ - 1.0) * std::pow(a, p_ - 2.0);
        }
        case GraphKind::LogPlasma:
            return 1.0 / (a + 1.0);
        case GraphKind::Arctan:
            return 1.0 / (1.0 + a * a);
        case GraphKind::MinimalSurface: {
            const double s = std::sqrt(1.0 + a * a);
            return 1.0 / (s * s * s);
        }
        case GraphKind::PlasticShear:
            return a <= 1.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

double ScalarGraph::slope_ratio(double rho) const {
    const double a = std::abs(rho);
    switch (kind_) {
        case GraphKind::Power:
            if (p_ == 2.0) return 1.0;
            if (delta_ > 0.0) return std::pow(a * a + delta_ * delta_, 0.5 * (p_ - 2.0));
            return a == 0.0 ? kInf : std::pow(a, p_ - 2.0);
        case GraphKind::LogPlasma:
            return a < 1e-8 ? 1.0 - 0.5 * a : std::log1p(a) / a;
        case GraphKind::Arctan:
            return a < 1e-8 ? 1.0 : std::atan(a) / a;
        case GraphKind::MinimalSurface:
            return 1.0 / std::sqrt(1.0 + a * a);
        case GraphKind::PlasticShear:
            return a <= 1.0 ? 1.0 : 1.0 / a;
    }
    return 1.0;
}

double ScalarGraph::lipschitz() const {
    if (kind_ == GraphKind::Power && p_ < 2.0) {
        return delta_ > 0.0 ? std::max(1.0, std::pow(delta_, p_ - 2.0)) : kInf;
    }
    return 1.0;
}

double ScalarGraph::resolvent(double lambda, double f) const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("resolvent parameter must be >= 0");
    if (lambda == 0.0 || f == 0.0) return f;
    if (kind_ == GraphKind::Power && p_ == 2.0) return f / (1.0 + lambda);
    if (multivalued_at_zero()) {
        // soft threshold
        const double a = std::abs(f) - lambda;
        return a > 0.0 ? a * sgn(f) : 0.0;
    }
    if (kind_ == GraphKind::PlasticShear) {
        if (std::abs(f) <= 1.0 + lambda) return f / (1.0 + lambda);
        return f - lambda * sgn(f);
    }
    // Safeguarded Newton on the increasing map g(r) = r + λΦ̃(r) − |f| over [0, |f|].
    const double target = std::abs(f);
    double lo = 0.0, hi = target;
    double r = target / (1.0 + lambda * std::min(1.0, lipschitz()));
    for (int it = 0; it < 200; ++it) {
        const double g = r + lambda * branch(r) - target;
        if (g > 0.0) {
            hi = r;
        } else {
            lo = r;
        }
        if (hi - lo <= 1e-15 * std::max(1.0, target) || g == 0.0) break;
        const double dg = 1.0 + lambda * derivative(r);
        double next = std::isfinite(dg) ? r - g / dg : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - r) <= 1e-16 * std::max(1.0, target)) {
            r = next;
            break;
        }
        r = next;
    }
    return r * sgn(f);
}

std::string ScalarGraph::name() const {
    std::ostringstream os;
    switch (kind_) {
        case GraphKind::Power:
            os << "power(p=" << p_ << ")";
            break;
        case GraphKind::LogPlasma:
            os << "log_plasma";
            break;
        case GraphKind::Arctan:
            os << "arctan";
            break;
        case GraphKind::MinimalSurface:
            os << "minimal_surface";
            break;
        case GraphKind::PlasticShear:
            os << "plastic_shear";
            break;
    }
    if (delta_ > 0.0) os << "[delta=" << delta_ << "]";
    return os.str();
}

double plasma_theta(double r) {
    const double a = std::abs(r);
    return a * std::log1p(a);
}

Delta2Report delta2_check(std::span<const double> samples) {
    Delta2Report report;
    for (double r : samples) {
        const double rhs = 4.0 * plasma_theta(r);
        // slack of a few ulps; both sides agree to leading order as r -> 0
        if (plasma_theta(2.0 * r) > rhs * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())) {
            report.holds = false;
            report.first_violation = r;
            break;
        }
    }
    return report;
}

}  // namespace monoflow
