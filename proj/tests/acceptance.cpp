// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include "monoflow/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace monoflow;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Root of r + λΦ(r) = f by plain bisection; independent of the library solver.
double bisection_resolvent(const ScalarGraph& g, double lambda, double f) {
    if (lambda == 0.0) return f;
    auto F = [&](double r) {
        if (r == 0.0) return 0.0;  // minimal section for set-valued graphs
        return r + lambda * g.branch(r);
    };
    if (g.multivalued_at_zero() && std::abs(f) <= lambda) return 0.0;
    double lo = -std::abs(f) - 1.0, hi = std::abs(f) + 1.0;
    for (int i = 0; i < 300 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (F(mid) < f) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

Vec random_smooth(int n, std::mt19937_64& rng, int modes = 8) {
    std::normal_distribution<double> nd;
    Vec x = Vec::Zero(n);
    const double h = 1.0 / (n + 1);
    for (int j = 1; j <= modes; ++j) {
        const double a = nd(rng) / j;
        for (int i = 0; i < n; ++i) x[i] += a * std::sin(M_PI * j * (i + 1) * h);
    }
    return x;
}

ExperimentPreset ergodic_preset() {
    ExperimentPreset p = make_preset("tvflow_1d.wiener");
    p.n = 64;
    p.solver.dt = 0.05;
    return p;
}

// ---------------------------------------------------------------------------

Outcome resolvent_correctness() {
    std::vector<ScalarGraph> graphs;
    for (double p : {1.0, 1.25, 1.5, 1.75, 2.0}) {
        graphs.push_back(ScalarGraph::power(p));
        if (p < 2.0) graphs.push_back(ScalarGraph::power(p, 1e-3));
    }
    graphs.push_back(ScalarGraph::log_plasma());
    graphs.push_back(ScalarGraph::arctan());
    graphs.push_back(ScalarGraph::minimal_surface());
    graphs.push_back(ScalarGraph::plastic_shear());

    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uf(-10.0, 10.0);
    std::vector<double> fs(1000);
    for (double& f : fs) f = uf(rng);

    double worst = 0.0;
    for (const auto& g : graphs)
        for (double lam : {0.0, 1e-3, 1.0, 1e3})
            for (double f : fs) worst = std::max(worst, std::abs(g.resolvent(lam, f) - bisection_resolvent(g, lam, f)));

    int soft_mismatch = 0;
    const ScalarGraph tv = ScalarGraph::power(1.0);
    for (double lam : {0.0, 1e-3, 1.0, 1e3})
        for (double f : fs) {
            const double expect = std::abs(f) > lam ? (f > 0 ? f - lam : f + lam) : 0.0;
            if (tv.resolvent(lam, f) != expect) ++soft_mismatch;
        }
    return {worst <= 1e-10 && soft_mismatch == 0,
            "max |r - r_bisect| = " + fmt(worst) + ", soft-threshold mismatches = " + std::to_string(soft_mismatch)};
}

Outcome non_expansiveness() {
    double worst = 0.0;
    double bound = 0.0;
    int pairs = 0;
    for (const char* name : {"tvflow_1d.wiener", "fastdiff_1d.wiener"}) {
        ExperimentPreset p = make_preset(name);
        p.solver.horizon = 0.1;
        const auto space = build_space(p);
        const DriftOperator op = build_operator(p, space);
        bound = 1.0 + 10.0 * op.newton().tol;
        std::mt19937_64 rng(7);
        for (int i = 0; i < 200; ++i, ++pairs) {
            const NoisePath path = sample_path(*space, p.noise, split_seed(77, i), p.solver.dt, p.solver.steps());
            const Vec x = random_smooth(p.n, rng);
            const Vec y = random_smooth(p.n, rng);
            const double d0 = space->norm_h(x - y);
            const Trajectory a = solve_additive(op, x, path, p.solver);
            const Trajectory b = solve_additive(op, y, path, p.solver);
            for (std::size_t k = 0; k < a.states.size(); ++k)
                worst = std::max(worst, space->norm_h(a.states[k] - b.states[k]) / d0);
        }
    }
    return {worst <= bound, std::to_string(pairs) + " pairs, sup ratio = 1 + " + fmt(worst - 1.0)};
}

Outcome limit_convergence() {
    ExperimentPreset p = make_preset("tvflow_1d");
    const auto space = build_space(p);
    const DriftOperator op = build_operator(p, space);
    const Vec x0 = initial_state(p, *space);
    const std::vector<LimitLevel> ladder = {
        {1e-4, 1e-3, 0, 1e4}, {1e-5, 1e-4, 0, 1e5}, {1e-6, 1e-5, 0, 1e6}, {1e-7, 1e-6, 0, 1e7}};
    const LimitResult r = limit_solution(op, x0, p.solver, ladder);
    bool monotone = true;
    for (std::size_t i = 1; i < r.gaps.size(); ++i) monotone = monotone && r.gaps[i] < r.gaps[i - 1];
    const double limit = 1e-4 * space->norm_h(x0);
    std::string gaps;
    for (double g : r.gaps) gaps += fmt(g) + " ";
    return {monotone && r.gaps.back() < limit, "gaps " + gaps + "(finest must be < " + fmt(limit) + ")"};
}

Outcome finite_extinction() {
    ExperimentPreset p = make_preset("fastdiff_1d");
    p.solver.record_selections = true;
    const auto space = build_space(p);
    const Vec x0 = initial_state(p, *space);
    const DriftOperator fast = build_operator(p, space);
    const Trajectory tr = solve_deterministic(fast, x0, p.solver);
    const ExtinctionReport r = extinction_time(*space, tr, p.p, p.solver.extinction_threshold);

    ExperimentPreset q = p;
    q.p = 2.0;
    const DriftOperator heat = build_operator(q, space);
    const Trajectory control = solve_deterministic(heat, x0, q.solver);
    const bool control_alive = !control.extinction_time.has_value();
    return {r.extinct && r.within_bound && r.time <= 1.05 * r.t_bound && control_alive,
            "T_ext = " + fmt(r.time) + ", T_B = " + fmt(r.t_bound) + " (c = " + fmt(r.c_hat) +
                "), p=2 control " + (control_alive ? "alive" : "extinct")};
}

std::vector<Trajectory> plasma_runs() {
    static std::vector<Trajectory> runs;
    if (!runs.empty()) return runs;
    ExperimentPreset p = make_preset("plasma_2d");
    const auto space = build_space(p);
    const DriftOperator op = build_operator(p, space);
    for (std::uint64_t s = 1; s <= 5; ++s) {
        p.initial.seed = s;
        runs.push_back(solve_deterministic(op, initial_state(p, *space), p.solver));
    }
    return runs;
}

Outcome plasma_decay() {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& tr : plasma_runs()) worst = std::max(worst, decay_rate_fit(tr, 1.0, 10.0));
    std::vector<double> t, y;
    for (int k = 1; k <= 200; ++k) {
        t.push_back(0.05 * k);
        y.push_back(3.0 / std::sqrt(0.05 * k));
    }
    const double synthetic = decay_rate_fit(t, y, 1.0, 10.0);
    return {worst <= -0.4 && std::abs(synthetic + 0.5) <= 1e-6,
            "worst slope " + fmt(worst) + ", synthetic " + std::to_string(synthetic)};
}

Outcome lyapunov() {
    const double tol = 10.0 * NewtonOptions{}.tol;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& tr : plasma_runs())
        for (std::size_t k = 1; k < tr.diagnostics.size(); ++k)
            worst = std::max(worst, tr.diagnostics[k].theta - tr.diagnostics[k - 1].theta);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    std::vector<double> r(10000);
    for (double& v : r) v = std::pow(10.0, u(rng));
    int violations = 0;
    for (double v : r) {
        auto theta = [](double s) { return s * std::log1p(s); };
        if (theta(2.0 * v) > 4.0 * theta(v) * (1.0 + 1e-12)) ++violations;
    }
    const bool lib = delta2_check(r).holds;
    return {worst <= tol && violations == 0 && lib,
            "max Theta increase " + fmt(worst) + ", delta2 violations " + std::to_string(violations)};
}

double tv_bruteforce(const Vec& u) {
    // Dirichlet ghosts on both ends
    double acc = std::abs(u[0]) + std::abs(u[u.size() - 1]);
    for (int i = 1; i < u.size(); ++i) acc += std::abs(u[i] - u[i - 1]);
    return acc;
}

Outcome brezis() {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    const SpectralSpace s1(GridDomain(1, 128, Boundary::Dirichlet), TripleMode::H1OverL2);
    double excess1 = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < 100; ++t) {
        Vec u(128);
        for (auto& v : u) v = nd(rng);
        for (double n : {1.0, 10.0, 100.0})
            excess1 = std::max(excess1, tv_bruteforce(s1.resolvent_J(n, u)) - tv_bruteforce(u));
    }
    const SpectralSpace s2(GridDomain(2, 24, Boundary::Dirichlet), TripleMode::H1OverL2);
    double rel2 = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < 20; ++t) {
        Vec u(24 * 24);
        for (auto& v : u) v = nd(rng);
        for (double n : {1.0, 10.0, 100.0}) {
            const double a = s2.grid().total_variation(s2.resolvent_J(n, u));
            const double b = s2.grid().total_variation(u);
            rel2 = std::max(rel2, (a - b) / b);
        }
    }
    // Orlicz contraction for every kind in both forms (1D) and diffusion form in 2D
    double orlicz = -std::numeric_limits<double>::infinity();
    const std::vector<ScalarGraph> kinds = {ScalarGraph::power(1.0), ScalarGraph::power(1.5), ScalarGraph::power(2.0),
                                            ScalarGraph::log_plasma(), ScalarGraph::arctan(),
                                            ScalarGraph::minimal_surface(), ScalarGraph::plastic_shear()};
    auto div1 = std::make_shared<const SpectralSpace>(GridDomain(1, 64, Boundary::Dirichlet), TripleMode::H1OverL2);
    auto dif1 = std::make_shared<const SpectralSpace>(GridDomain(1, 64, Boundary::Dirichlet), TripleMode::L2OverHm1);
    auto dif2 = std::make_shared<const SpectralSpace>(GridDomain(2, 16, Boundary::Dirichlet), TripleMode::L2OverHm1);
    for (const auto& g : kinds) {
        const std::vector<DriftOperator> ops = {DriftOperator(div1, g, DriftForm::Divergence),
                                                DriftOperator(dif1, g, DriftForm::Diffusion),
                                                DriftOperator(dif2, g, DriftForm::Diffusion)};
        for (const auto& op : ops)
            for (int t = 0; t < 10; ++t) {
                Vec u(op.space().grid().size());
                for (auto& v : u) v = 3.0 * nd(rng);
                for (double n : {1.0, 10.0, 100.0})
                    orlicz = std::max(orlicz, op.energy_phi(op.space().resolvent_J(n, u)) - op.energy_phi(u));
            }
    }
    return {excess1 <= 1e-10 && rel2 <= 1e-6 && orlicz <= 1e-8,
            "1D excess " + fmt(excess1) + ", 2D rel excess " + fmt(rel2) + ", Orlicz excess " + fmt(orlicz)};
}

Outcome picard() {
    ExperimentPreset p = make_preset("tvflow_1d.multiplicative");
    const auto space = build_space(p);
    const DriftOperator op = build_operator(p, space);
    const Vec x0 = initial_state(p, *space);
    const DiffusionCoefficient coeff = build_coefficient(p, *space);
    PicardLog log;
    const std::uint64_t seed = split_seed(p.seed, 0);
    solve_multiplicative(op, x0, coeff, seed, p.solver, &log);
    double worst = 0.0;
    for (const auto& s : log.sweeps) worst = std::max(worst, s.ratio);

    DiffusionCoefficient constant = coeff;
    constant.modulation = Modulation::Constant;
    const Trajectory mult = solve_multiplicative(op, x0, constant, seed, p.solver);
    const NoiseSpec additive = NoiseSpec::wiener(p.coefficient.sigma, p.coefficient.rho, p.coefficient.modes);
    const NoisePath path = sample_path(*space, additive, seed, p.solver.dt, p.solver.steps());
    const Trajectory add = solve_additive(op, x0, path, p.solver);
    bool identical = mult.states.size() == add.states.size();
    for (std::size_t k = 0; identical && k < add.states.size(); ++k)
        identical = std::memcmp(mult.states[k].data(), add.states[k].data(), sizeof(double) * add.states[k].size()) == 0;
    return {worst < 1.0 && log.max_sweeps_used <= 50 && identical,
            "window " + fmt(log.window_length) + ", worst ratio " + fmt(worst) + ", max sweeps " +
                std::to_string(log.max_sweeps_used) + ", constant-beta " + (identical ? "bit-identical" : "differs")};
}

Outcome weak_ergodicity() {
    const ExperimentPreset p = ergodic_preset();
    const auto space = build_space(p);
    const DriftOperator op = build_operator(p, space);
    ErgodicSetup setup;
    setup.op = &op;
    setup.noise = p.noise;
    setup.cfg = p.solver;
    const Vec y = Vec::Zero(p.n);
    ExperimentPreset q = p;
    q.initial.norm = 1.0;
    const Vec x = initial_state(q, *space);
    const auto dict = default_dictionary(p.dictionary_scale);
    const auto ex = occupation_average(setup, x, dict, {20.0, 200.0}, 64, p.seed);
    const auto ey = occupation_average(setup, y, dict, {20.0, 200.0}, 64, p.seed);
    const OccupationGap early = compare_occupation(ex[0], ey[0]);
    const OccupationGap late = compare_occupation(ex[1], ey[1]);
    int within = 0, shrinking = 0;
    double worst = 0.0;
    for (std::size_t f = 0; f < dict.size(); ++f) {
        within += late.gap[f] <= 3.0 * late.combined_se[f];
        shrinking += late.gap[f] < early.gap[f];
        worst = std::max(worst, late.gap[f] / late.combined_se[f]);
    }
    return {within == 8 && shrinking >= 6,
            "|x-y|_H = " + fmt(space->norm_h(x - y)) + ", within 3 SE: " + std::to_string(within) +
                "/8 (worst gap/SE " + fmt(worst) + "), shrinking 20->200: " + std::to_string(shrinking) + "/8"};
}

Outcome eproperty_and_stability() {
    const ExperimentPreset p = ergodic_preset();
    const auto space = build_space(p);
    const DriftOperator op = build_operator(p, space);
    ErgodicSetup setup;
    setup.op = &op;
    setup.noise = p.noise;
    setup.cfg = p.solver;
    ExperimentPreset q = p;
    q.initial.norm = 1.0;
    const Vec x = initial_state(q, *space);
    const Vec y = Vec::Zero(p.n);
    const auto dict = default_dictionary(p.dictionary_scale);
    int held = 0, total = 0;
    for (double t : {0.1, 1.0, 5.0})
        for (const auto& f : dict) {
            ++total;
            held += eproperty_check(setup, f, x, y, t, 64, p.seed).holds;
        }
    const double eps_ball = pilot_ball(setup, x, 1.0, 16, p.seed + 1);
    const double frac = stochastic_stability(setup, x, 1.0, eps_ball, 64, p.seed);
    return {held == total && frac > 0.0, "e-property " + std::to_string(held) + "/" + std::to_string(total) +
                                             ", stability fraction " + fmt(frac) + " at eps_ball " + fmt(eps_ball)};
}

Outcome svi() {
    ExperimentPreset p = make_preset("tvflow_1d.wiener");
    const auto space = build_space(p);
    const DriftOperator op = build_operator(p, space);
    ErgodicSetup setup;
    setup.op = &op;
    setup.noise = p.noise;
    setup.cfg = p.solver;
    const Vec x0 = initial_state(p, *space);
    const DriftOperator heat = op.with_graph(ScalarGraph::power(2.0));
    const Vec z0 = Vec::Zero(p.n);
    const double T = p.solver.horizon;
    const auto pts = svi_check(setup, x0, heat, z0, {T / 4, T / 2, T}, 64, p.seed);
    bool ok = true;
    std::string detail;
    for (const auto& pt : pts) {
        ok = ok && pt.holds;
        detail += "t=" + fmt(pt.t) + ": margin " + fmt(pt.margin) + " (slack " + fmt(pt.slack) + ")  ";
    }
    return {ok, detail};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "monoflow_acceptance";
    std::filesystem::remove_all(root);
    std::ostringstream sink;
    RunOptions base;
    base.subcommand = "ergodic";
    base.preset = "tvflow_1d.wiener";
    base.seed = 4242;
    base.paths = 16;
    base.horizon = 1.0;
    RunOptions one = base, eight = base;
    one.workers = 1;
    one.out_dir = (root / "w1").string();
    eight.workers = 8;
    eight.out_dir = (root / "w8").string();
    run(one, sink);
    run(eight, sink);
    int same_ergodic = 0, files = 0;
    for (const char* f : {"occupation_x.csv", "occupation_y.csv", "occupation_gap.csv", "concentration.csv"}) {
        ++files;
        const std::string a = slurp(root / "w1" / f);
        same_ergodic += !a.empty() && a == slurp(root / "w8" / f);
    }
    RunOptions sim = base;
    sim.subcommand = "simulate";
    sim.out_dir = (root / "s1").string();
    run(sim, sink);
    sim.out_dir = (root / "s2").string();
    run(sim, sink);
    const bool sim_same = slurp(root / "s1" / "trajectory.csv") == slurp(root / "s2" / "trajectory.csv") &&
                          slurp(root / "s1" / "states.sgfl") == slurp(root / "s2" / "states.sgfl");
    std::filesystem::remove_all(root);
    return {same_ergodic == files && sim_same, "ergodic 1 vs 8 workers: " + std::to_string(same_ergodic) + "/" +
                                                   std::to_string(files) + " files identical; simulate " +
                                                   (sim_same ? "byte-exact" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* id;
        const char* name;
        double budget_s;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria = {
        {"AC01", "resolvent correctness", 5, resolvent_correctness},
        {"AC02", "non-expansiveness", 120, non_expansiveness},
        {"AC03", "viscosity limit convergence", 120, limit_convergence},
        {"AC04", "finite-time extinction", 60, finite_extinction},
        {"AC05", "plasma decay exponent", 300, plasma_decay},
        {"AC06", "Lyapunov monotonicity", 300, lyapunov},
        {"AC07", "discrete Brezis dissipativity", 60, brezis},
        {"AC08", "Picard contraction", 180, picard},
        {"AC09", "weak-* mean ergodicity", 1200, weak_ergodicity},
        {"AC10", "e-property and stochastic stability", 300, eproperty_and_stability},
        {"AC11", "SVI inequality", 300, svi},
        {"AC12", "determinism and parallel equivalence", 300, determinism},
    };
    std::vector<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs <= c.budget_s;
        if (o.pass && !pass) o.detail += " [over time budget]";
        failed += !pass;
        std::cout << (pass ? "PASS " : "FAIL ") << c.id << ' ' << c.name << ": " << o.detail << " (" << fmt(secs)
                  << " s / " << c.budget_s << " s)" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
