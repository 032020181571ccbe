#include "monoflow/evolve.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

using namespace monoflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::shared_ptr<const SpectralSpace> line(int n) {
    return std::make_shared<const SpectralSpace>(GridDomain(1, n, Boundary::Dirichlet), TripleMode::H1OverL2);
}

Vec sine(const SpectralSpace& s, int k) {
    Vec x(s.grid().size());
    for (int i = 0; i < x.size(); ++i) x[i] = std::sin(k * M_PI * (i + 1) * s.grid().h());
    return x;
}

}  // namespace

TEST_CASE("backward Euler heat flow damps each mode by 1/(1 + dt lambda)") {
    const auto s = line(32);
    const DriftOperator op(s, ScalarGraph::power(2.0), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 0.1;
    const Vec x0 = sine(*s, 1) + 0.3 * sine(*s, 3);
    const Trajectory tr = solve_deterministic(op, x0, cfg);
    REQUIRE(tr.size() == 11);
    REQUIRE(tr.states.size() == 11);
    CHECK(tr.times.back() == Catch::Approx(0.1));
    const Vec c0 = s->analyze(x0);
    const Vec cT = s->analyze(tr.final_state);
    for (int k = 0; k < c0.size(); ++k)
        CHECK_THAT(cT[k], WithinAbs(c0[k] * std::pow(1.0 + cfg.dt * s->eigenvalue(k), -10), 1e-10));
}

TEST_CASE("additive linear scheme follows the modal recursion") {
    const auto s = line(16);
    const DriftOperator op(s, ScalarGraph::power(2.0), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.horizon = 0.2;
    const NoisePath path = sample_path(*s, NoiseSpec::wiener(1.0, 1.0), 5, cfg.dt, cfg.steps());
    const Vec x0 = sine(*s, 2);
    const Trajectory tr = solve_additive(op, x0, path, cfg);
    Vec c = s->analyze(x0);
    for (int k = 0; k < cfg.steps(); ++k) {
        const Vec dn = s->analyze(path.increment(k));
        for (int j = 0; j < c.size(); ++j) c[j] = (c[j] + dn[j]) / (1.0 + cfg.dt * s->eigenvalue(j));
        CHECK((s->analyze(tr.states[k + 1]) - c).norm() < 1e-10);
    }
}

TEST_CASE("TV flow of a piecewise constant profile reaches zero in finite time") {
    const auto s = line(64);
    const DriftOperator op(s, ScalarGraph::power(1.0), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 0.5;
    const Trajectory tr = solve_deterministic(op, 0.2 * sine(*s, 1), cfg);
    REQUIRE(tr.extinction_time.has_value());
    CHECK(*tr.extinction_time < 0.5);
    for (std::size_t k = 1; k < tr.diagnostics.size(); ++k)
        CHECK(tr.diagnostics[k].norm_h <= tr.diagnostics[k - 1].norm_h * (1 + 1e-10));
}

TEST_CASE("observer sees every accepted step") {
    const auto s = line(16);
    const DriftOperator op(s, ScalarGraph::arctan(), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 0.05;
    cfg.horizon = 0.5;
    cfg.record_states = false;
    int calls = 0;
    const Trajectory tr = solve_deterministic(op, sine(*s, 1), cfg, [&](int k, double t, const Vec&) {
        CHECK(k == calls);
        CHECK_THAT(t, WithinAbs(k * cfg.dt, 1e-12));
        ++calls;
    });
    CHECK(calls == 11);
    CHECK(tr.states.empty());
}

TEST_CASE("semiflow property on the same increments") {
    const auto s = line(32);
    const DriftOperator op(s, ScalarGraph::power(1.5), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 0.2;
    const NoisePath path = sample_path(*s, NoiseSpec::wiener(1.0, 2.0), 8, cfg.dt, cfg.steps());
    CHECK(semiflow_check(op, sine(*s, 1), 0.05, 0.1, cfg, &path) < 1e-10);
    CHECK_THROWS_AS(semiflow_check(op, sine(*s, 1), 0.005, 0.1, cfg), std::invalid_argument);
}

TEST_CASE("halving the step shrinks the discrepancy") {
    const auto s = line(32);
    const DriftOperator op(s, ScalarGraph::arctan(), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 0.02;
    cfg.horizon = 0.2;
    const RefinementReport r = dt_refinement(op, sine(*s, 1), NoiseSpec::zero(), 1, cfg, 3);
    REQUIRE(r.gaps.size() == 3);
    for (double f : r.factors) CHECK(f > 1.5);
}

TEST_CASE("viscosity ladder converges for smooth data") {
    const auto s = line(64);
    const DriftOperator op(s, ScalarGraph::power(1.0), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 0.05;
    const std::vector<LimitLevel> ladder = {{1e-3, 1e-2, 0, 1e3}, {1e-4, 1e-3, 0, 1e4}, {1e-5, 1e-4, 0, 1e5}};
    const LimitResult r = limit_solution(op, sine(*s, 1), cfg, ladder);
    REQUIRE(r.gaps.size() == 2);
    CHECK(r.gaps[1] < r.gaps[0]);

    // a second ladder with a different path to the limit lands in the same place
    const std::vector<LimitLevel> other = {{1e-2, 1e-1, 0, 1e2}, {1e-4, 1e-4, 0, 1e5}};
    const LimitResult q = limit_solution(op, sine(*s, 1), cfg, other);
    CHECK(s->norm_h(q.finest.final_state - r.finest.final_state) <= r.gaps[0]);
}

TEST_CASE("Picard sweeps contract for a saturating coefficient") {
    const auto s = line(32);
    const DriftOperator op(s, ScalarGraph::power(1.0), DriftForm::Divergence);
    DiffusionCoefficient c;
    c.b = wiener_amplitudes(*s, 10.0, 2.0, 8);
    c.modulation = Modulation::Saturating;
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 0.3;
    PicardLog log;
    const Trajectory tr = solve_multiplicative(op, sine(*s, 1), c, 4, cfg, &log);
    CHECK(tr.size() == 31);
    CHECK(log.window_length == Catch::Approx(default_picard_window(c, cfg.dt)));
    for (const auto& sw : log.sweeps) CHECK(sw.ratio < 1.0);
    CHECK(log.max_sweeps_used <= cfg.picard.max_sweeps);
}

TEST_CASE("config validation lists every problem") {
    SolverConfig cfg;
    cfg.dt = -1;
    cfg.picard.max_sweeps = 0;
    try {
        cfg.validate();
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        const std::string what = e.what();
        CHECK(what.find("dt") != std::string::npos);
        CHECK(what.find("max_sweeps") != std::string::npos);
    }
}

TEST_CASE("state dump and trajectory CSV") {
    const auto s = line(8);
    const DriftOperator op(s, ScalarGraph::power(2.0), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 0.1;
    cfg.horizon = 0.3;
    const Trajectory tr = solve_deterministic(op, sine(*s, 1), cfg);
    std::stringstream bin;
    write_states_binary(bin, tr, s->grid());
    int dim = 0, n = 0;
    const auto states = read_states_binary(bin, &dim, &n);
    CHECK(dim == 1);
    CHECK(n == 8);
    REQUIRE(states.size() == tr.states.size());
    for (std::size_t k = 0; k < states.size(); ++k) CHECK(states[k] == tr.states[k]);

    std::ostringstream csv;
    write_trajectory_csv(csv, tr);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == tr.size() + 1);

    std::stringstream junk("nope");
    CHECK_THROWS(read_states_binary(junk));
}

TEST_CASE("S-norm bound along a noisy TV trajectory is finite") {
    const auto s = line(32);
    const DriftOperator op(s, ScalarGraph::power(1.0), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 0.2;
    const NoisePath path = sample_path(*s, NoiseSpec::wiener(1.0, 2.0), 2, cfg.dt, cfg.steps());
    const Trajectory tr = solve_additive(op, sine(*s, 1), path, cfg);
    const SBoundReport r = s_bound(*s, tr, &path);
    CHECK(r.finite);
    CHECK(r.sup_s2 >= r.initial_s2);
    CHECK(r.path_integral > 0.0);
}
