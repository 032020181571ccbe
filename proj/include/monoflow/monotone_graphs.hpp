#pragma once

#include <optional>
#include <span>
#include <string>

namespace monoflow {

enum class GraphKind { Power, LogPlasma, Arctan, MinimalSurface, PlasticShear };

/// Odd, nondecreasing scalar graph Φ̃ = ∂Ψ̃ with an even convex potential.
///
/// Kinds and their potentials (Ψ̃(0) = 0 throughout):
///   Power(p)        |r|^p / p, p ∈ [1, 2]; Φ̃ = |r|^{p-1} sgn r, set-valued at 0 for p = 1
///   LogPlasma       (|r|+1) log(|r|+1) − |r|;  Φ̃ = log(|r|+1) sgn r
///   Arctan          r arctan r − ½ log(1 + r²); Φ̃ = arctan r
///   MinimalSurface  √(1+r²) − 1;                Φ̃ = r / √(1+r²)
///   PlasticShear    ½r² on |r| ≤ 1, |r| − ½ outside; Φ̃ = clamp(r, −1, 1)
///
/// Only Power(p < 2) reacts to the smoothing parameter δ:
///   Φ̃_δ(r) = (r² + δ²)^{(p−2)/2} r,  Ψ̃_δ(r) = ((r² + δ²)^{p/2} − δ^p) / p,
/// which is Lipschitz with constant δ^{p−2}. The other kinds are 1-Lipschitz
/// and ignore δ.
class ScalarGraph {
public:
    static ScalarGraph power(double p, double delta = 0.0);
    static ScalarGraph log_plasma();
    static ScalarGraph arctan();
    static ScalarGraph minimal_surface();
    static ScalarGraph plastic_shear();

    GraphKind kind() const { return kind_; }
    double p() const { return p_; }
    double delta() const { return delta_; }
    ScalarGraph with_delta(double delta) const;

    /// True when the graph is unbounded-slope or set-valued at δ = 0 and
    /// therefore needs δ-continuation inside Newton solves.
    bool needs_smoothing() const { return kind_ == GraphKind::Power && p_ < 2.0; }
    bool multivalued_at_zero() const {
        return kind_ == GraphKind::Power && p_ == 1.0 && delta_ == 0.0;
    }

    double potential(double r) const;
    /// Single-valued branch; the minimal section when set-valued.
    double branch(double r) const;
    /// dΦ̃_δ/dr. Infinite at r = 0 for unsmoothed Power(p < 2).
    double derivative(double r) const;
    /// Φ̃(ρ)/ρ for ρ ≥ 0, continuously extended to ρ = 0 where finite.
    double slope_ratio(double rho) const;
    /// Lipschitz constant of the branch (infinity when unbounded).
    double lipschitz() const;

    /// Unique r with r + λΦ̃_δ(r) ∋ f.
    double resolvent(double lambda, double f) const;

    std::string name() const;

private:
    ScalarGraph(GraphKind kind, double p, double delta) : kind_(kind), p_(p), delta_(delta) {}

    GraphKind kind_;
    double p_;
    double delta_;
};

// θ(r) = |r| log(|r| + 1), the plasma Lyapunov integrand.
double plasma_theta(double r);

struct Delta2Report {
    bool holds = true;
    std::optional<double> first_violation;
};

/// Checks θ(2r) ≤ 4θ(r) on every sample.
Delta2Report delta2_check(std::span<const double> samples);

}  // namespace monoflow
