#include "monoflow/monotone_graphs.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

using namespace monoflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<ScalarGraph> all_graphs() {
    return {ScalarGraph::power(1.0),      ScalarGraph::power(1.0, 0.1), ScalarGraph::power(1.5),
            ScalarGraph::power(1.5, 0.01), ScalarGraph::power(2.0),     ScalarGraph::log_plasma(),
            ScalarGraph::arctan(),         ScalarGraph::minimal_surface(), ScalarGraph::plastic_shear()};
}

}  // namespace

TEST_CASE("branch values of the closed forms") {
    CHECK_THAT(ScalarGraph::power(1.5).branch(4.0), WithinRel(2.0, 1e-14));
    CHECK_THAT(ScalarGraph::power(1.5).branch(-4.0), WithinRel(-2.0, 1e-14));
    CHECK(ScalarGraph::power(1.0).branch(0.0) == 0.0);
    CHECK(ScalarGraph::power(1.0).branch(-3.0) == -1.0);
    CHECK_THAT(ScalarGraph::log_plasma().branch(std::exp(1.0) - 1.0), WithinRel(1.0, 1e-14));
    CHECK_THAT(ScalarGraph::arctan().branch(1.0), WithinRel(std::atan(1.0), 1e-14));
    CHECK_THAT(ScalarGraph::minimal_surface().branch(3.0), WithinRel(3.0 / std::sqrt(10.0), 1e-14));
    CHECK(ScalarGraph::plastic_shear().branch(0.3) == 0.3);
    CHECK(ScalarGraph::plastic_shear().branch(7.0) == 1.0);
    CHECK_THAT(ScalarGraph::power(1.5, 0.5).branch(1.0), WithinRel(std::pow(1.25, -0.25), 1e-14));
}

TEST_CASE("branch is the derivative of the potential") {
    for (const auto& g : all_graphs()) {
        CHECK(g.potential(0.0) == 0.0);
        for (double r : {-3.0, -0.7, 0.2, 1.3, 5.0}) {
            const double eps = 1e-6;
            const double fd = (g.potential(r + eps) - g.potential(r - eps)) / (2 * eps);
            INFO(g.name() << " at r = " << r);
            CHECK_THAT(g.branch(r), WithinAbs(fd, 1e-7));
            const double fd2 = (g.branch(r + eps) - g.branch(r - eps)) / (2 * eps);
            CHECK_THAT(g.derivative(r), WithinAbs(fd2, 1e-5));
        }
    }
}

TEST_CASE("graphs are odd and nondecreasing") {
    for (const auto& g : all_graphs()) {
        double prev = -std::numeric_limits<double>::infinity();
        for (double r = -6.0; r <= 6.0; r += 0.01) {
            const double b = g.branch(r);
            CHECK(b >= prev);
            CHECK(g.branch(-r) == -b);
            CHECK(g.potential(-r) == g.potential(r));
            prev = b;
        }
    }
}

TEST_CASE("resolvent solves the scalar inclusion") {
    for (const auto& g : all_graphs()) {
        for (double lam : {1e-3, 0.5, 20.0}) {
            for (double f = -9.5; f <= 9.5; f += 0.37) {
                const double r = g.resolvent(lam, f);
                INFO(g.name() << " lambda " << lam << " f " << f);
                if (g.multivalued_at_zero() && r == 0.0) {
                    CHECK(std::abs(f) <= lam);
                } else {
                    CHECK_THAT(r + lam * g.branch(r), WithinAbs(f, 1e-11 * (1 + std::abs(f))));
                }
            }
        }
        CHECK(g.resolvent(0.0, 2.5) == 2.5);
    }
}

TEST_CASE("soft threshold for the set-valued sign graph") {
    const ScalarGraph tv = ScalarGraph::power(1.0);
    CHECK(tv.multivalued_at_zero());
    CHECK(tv.resolvent(1.0, 0.5) == 0.0);
    CHECK(tv.resolvent(1.0, -1.0) == 0.0);
    CHECK(tv.resolvent(1.0, 3.0) == 2.0);
    CHECK(tv.resolvent(1.0, -3.0) == -2.0);
}

TEST_CASE("Lipschitz constants and smoothing") {
    CHECK(ScalarGraph::power(1.5).lipschitz() == std::numeric_limits<double>::infinity());
    CHECK_THAT(ScalarGraph::power(1.5, 0.01).lipschitz(), WithinRel(std::pow(0.01, -0.5), 1e-12));
    CHECK(ScalarGraph::arctan().lipschitz() == 1.0);
    CHECK(ScalarGraph::power(1.5).needs_smoothing());
    CHECK_FALSE(ScalarGraph::power(2.0).needs_smoothing());
    CHECK_FALSE(ScalarGraph::log_plasma().needs_smoothing());
    CHECK(ScalarGraph::power(1.5).with_delta(0.1).delta() == 0.1);
    for (double r : {0.01, 0.3, 2.0}) {
        const ScalarGraph g = ScalarGraph::power(1.5, 0.2);
        CHECK(g.derivative(r) <= g.lipschitz() * (1 + 1e-12));
    }
}

TEST_CASE("slope ratio equals branch over argument") {
    for (const auto& g : all_graphs())
        for (double rho : {0.1, 1.0, 4.0}) CHECK_THAT(g.slope_ratio(rho), WithinRel(g.branch(rho) / rho, 1e-12));
    CHECK_THAT(ScalarGraph::arctan().slope_ratio(0.0), WithinAbs(1.0, 1e-12));
}

TEST_CASE("plasma theta and the doubling condition") {
    CHECK_THAT(plasma_theta(2.0), WithinRel(2.0 * std::log(3.0), 1e-14));
    CHECK(plasma_theta(-2.0) == plasma_theta(2.0));
    std::vector<double> r;
    for (int i = -60; i <= 60; ++i) r.push_back(std::pow(10.0, i / 10.0));
    CHECK(delta2_check(r).holds);
    for (double v : r) CHECK(plasma_theta(2 * v) <= 4 * plasma_theta(v) * (1 + 1e-12));
}

TEST_CASE("potentials keep full relative precision near zero") {
    for (double r : {1e-30, 1e-17, 1e-9, 1e-4}) {
        for (const auto& g : {ScalarGraph::log_plasma(), ScalarGraph::arctan(), ScalarGraph::minimal_surface(),
                              ScalarGraph::plastic_shear(), ScalarGraph::power(2.0)}) {
            INFO(g.name() << " at " << r);
            CHECK_THAT(g.potential(r), WithinRel(0.5 * r * r, r + 1e-14));
        }
        const ScalarGraph smooth = ScalarGraph::power(1.5, 0.1);
        CHECK_THAT(smooth.potential(r), WithinRel(0.5 * std::pow(0.1, -0.5) * r * r, r + 1e-14));
    }
}
