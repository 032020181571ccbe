#include "monoflow/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

namespace monoflow {

namespace {
thread_local bool tl_in_pool_task = false;
}

WorkerPool::WorkerPool(int workers) {
    if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
    for (int i = 1; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerPool::worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
        {
            std::unique_lock<std::mutex> lock(mutex_);
            wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
        }
        drain();
    }
}

void WorkerPool::drain() {
    std::unique_lock<std::mutex> lock(mutex_);
    while (task_ && next_ < count_) {
        const int i = next_++;
        const auto* task = task_;
        lock.unlock();
        std::exception_ptr err;
        tl_in_pool_task = true;
        try {
            (*task)(i);
        } catch (...) {
            err = std::current_exception();
        }
        tl_in_pool_task = false;
        lock.lock();
        if (err) errors_.emplace_back(i, err);
        if (++finished_ == count_) done_.notify_all();
    }
}

void WorkerPool::parallel_for(int count, const std::function<void(int)>& task) {
    if (count <= 0) return;
    if (tl_in_pool_task || threads_.empty()) {
        for (int i = 0; i < count; ++i) task(i);
        return;
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        task_ = &task;
        count_ = count;
        next_ = 0;
        finished_ = 0;
        errors_.clear();
        ++generation_;
    }
    wake_.notify_all();
    drain();
    std::unique_lock<std::mutex> lock(mutex_);
    done_.wait(lock, [&] { return finished_ == count_; });
    task_ = nullptr;
    if (!errors_.empty()) {
        auto first = std::min_element(errors_.begin(), errors_.end(),
                                      [](const auto& a, const auto& b) { return a.first < b.first; });
        std::exception_ptr e = first->second;
        errors_.clear();
        std::rethrow_exception(e);
    }
}

PathExecutor WorkerPool::executor() {
    return [this](int count, const std::function<void(int)>& task) { parallel_for(count, task); };
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s = {"simulate", "ergodic", "extinction", "decay",
                                               "picard",   "verify",  "dump-noise"};
    return s;
}

ExperimentPreset resolve_preset(const RunOptions& opts) {
    Config cfg;
    if (!opts.config_path.empty()) cfg = Config::load(opts.config_path);
    if (!opts.preset.empty()) {
        const auto dot = opts.preset.find('.');
        cfg.set("harness", "preset", opts.preset.substr(0, dot));
        if (dot != std::string::npos) cfg.set("harness", "variant", opts.preset.substr(dot + 1));
    }
    if (opts.seed) cfg.set("harness", "seed", std::to_string(*opts.seed));
    if (opts.dt) cfg.set("evolve", "dt", format_double(*opts.dt));
    if (opts.horizon) {
        cfg.set("evolve", "horizon", format_double(*opts.horizon));
        cfg.set("ergodics", "horizons", format_double(*opts.horizon));
    }
    if (opts.paths) cfg.set("ergodics", "paths", std::to_string(*opts.paths));
    if (!cfg.get("harness", "preset") && opts.config_path.empty()) {
        throw ConfigError({"harness.preset: give --preset or --config"});
    }
    return preset_from_config(cfg);
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t path_seed(const ExperimentPreset& p) { return split_seed(p.seed, 0); }

Trajectory simulate(const ExperimentPreset& p, const DriftOperator& op, const Vec& x0, const SolverConfig& cfg,
                    PicardLog* log = nullptr) {
    const SpectralSpace& space = op.space();
    switch (p.variant) {
        case Variant::Deterministic:
            return solve_deterministic(op, x0, cfg);
        case Variant::Wiener:
        case Variant::Poisson: {
            const NoisePath path = sample_path(space, p.noise, path_seed(p), cfg.dt, cfg.steps());
            return solve_additive(op, x0, path, cfg);
        }
        case Variant::Multiplicative:
            return solve_multiplicative(op, x0, build_coefficient(p, space), path_seed(p), cfg, log);
    }
    return {};
}

class Artifacts {
public:
    explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    std::ofstream open(const std::string& name, bool binary = false) {
        names_.push_back(name);
        std::ofstream f(dir_ / name, binary ? std::ios::binary : std::ios::out);
        if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
        return f;
    }
    const std::vector<std::string>& names() const { return names_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
};

std::vector<double> default_radii(const DriftOperator& op, const Vec& x0) {
    double base = op.lyapunov_theta(x0);
    if (!(base > 0.0)) base = 1.0;
    return {0.25 * base, 0.5 * base, base, 2.0 * base, 4.0 * base};
}

double extinction_alpha(const ExperimentPreset& p) {
    if (p.graph != GraphKind::Power || p.p >= 2.0) {
        throw std::invalid_argument("extinction analysis needs a power graph with p < 2");
    }
    return p.p;
}

// ---- verify checks -------------------------------------------------------

double bisect_resolvent(const ScalarGraph& g, double lambda, double f) {
    // r + λΦ(r) = f; for the set-valued p=1 case the interval [−λ, λ] maps to 0
    if (g.multivalued_at_zero() && std::abs(f) <= lambda) return 0.0;
    double lo = -std::abs(f) - 1.0, hi = std::abs(f) + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid + lambda * g.branch(mid) < f) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

CheckResult check_resolvent() {
    const std::vector<ScalarGraph> graphs = {ScalarGraph::power(1.0), ScalarGraph::power(1.5), ScalarGraph::power(2.0),
                                             ScalarGraph::power(1.2, 1e-3), ScalarGraph::log_plasma(),
                                             ScalarGraph::arctan(), ScalarGraph::minimal_surface(),
                                             ScalarGraph::plastic_shear()};
    std::mt19937_64 rng(make_engine(11));
    std::normal_distribution<double> nd(0.0, 3.0);
    double worst = 0.0;
    for (const auto& g : graphs)
        for (double lam : {0.0, 1e-3, 1.0, 1e3})
            for (int i = 0; i < 100; ++i) {
                const double f = nd(rng);
                const double r = g.resolvent(lam, f);
                worst = std::max(worst, std::abs(r - bisect_resolvent(g, lam, f)) / std::max(1.0, std::abs(f)));
            }
    return {"resolvent_vs_bisection", worst <= 1e-10, "max rel err " + format_double(worst)};
}

CheckResult check_contraction() {
    auto space = std::make_shared<const SpectralSpace>(GridDomain(1, 64, Boundary::Dirichlet), TripleMode::H1OverL2);
    DriftOperator op(space, ScalarGraph::power(1.0), DriftForm::Divergence);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 0.2;
    cfg.record_states = true;
    std::mt19937_64 rng = make_engine(5);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int pair = 0; pair < 6; ++pair) {
        const NoisePath path = sample_path(*space, NoiseSpec::wiener(100.0, 2.0), split_seed(5, pair), cfg.dt,
                                           cfg.steps());
        Vec x(64), y(64);
        for (int i = 0; i < 64; ++i) {
            x[i] = nd(rng);
            y[i] = nd(rng);
        }
        const double d0 = space->norm_h(x - y);
        const Trajectory a = solve_additive(op, x, path, cfg);
        const Trajectory b = solve_additive(op, y, path, cfg);
        for (std::size_t k = 0; k < a.states.size(); ++k)
            worst = std::max(worst, space->norm_h(a.states[k] - b.states[k]) / d0);
    }
    return {"nonexpansive_tvflow", worst <= 1.0 + 1e-9, "max ratio " + format_double(worst)};
}

CheckResult check_brezis() {
    const SpectralSpace space(GridDomain(1, 64, Boundary::Dirichlet), TripleMode::H1OverL2);
    std::mt19937_64 rng = make_engine(7);
    std::normal_distribution<double> nd;
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < 20; ++t) {
        Vec u(64);
        for (auto& v : u) v = nd(rng);
        for (double n : {1.0, 10.0, 100.0}) {
            worst = std::max(worst, space.grid().total_variation(space.resolvent_J(n, u)) -
                                        space.grid().total_variation(u));
        }
    }
    return {"brezis_tv_1d", worst <= 1e-10, "max excess " + format_double(worst)};
}

CheckResult check_delta2() {
    std::mt19937_64 rng = make_engine(3);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    std::vector<double> r(10000);
    for (double& v : r) v = std::pow(10.0, u(rng));
    const Delta2Report rep = delta2_check(r);
    return {"delta2_plasma", rep.holds,
            rep.first_violation ? "violated at r=" + format_double(*rep.first_violation) : "10000 samples"};
}

CheckResult check_lyapunov() {
    ExperimentPreset p = make_preset("plasma_2d");
    p.n = 16;
    p.solver.dt = 0.05;
    p.solver.horizon = 1.0;
    const auto space = build_space(p);
    const DriftOperator op = build_operator(p, space);
    const Trajectory tr = solve_deterministic(op, initial_state(p, *space), p.solver);
    double worst = 0.0;
    for (std::size_t k = 1; k < tr.diagnostics.size(); ++k)
        worst = std::max(worst, tr.diagnostics[k].theta - tr.diagnostics[k - 1].theta);
    return {"lyapunov_plasma", worst <= 10 * p.newton_tol, "max increase " + format_double(worst)};
}

CheckResult check_roundtrip() {
    int bad = 0, total = 0;
    for (const auto& name : preset_names())
        for (Variant v : preset_variants(name)) {
            ++total;
            const ExperimentPreset p = make_preset(name + "." + variant_name(v));
            const ExperimentPreset q = preset_from_config(Config::parse_string(to_config(p).to_string()));
            if (!(p == q) || to_config(q).to_string() != to_config(p).to_string()) ++bad;
        }
    return {"preset_roundtrip", bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) + " presets"};
}

CheckResult check_constant_beta() {
    ExperimentPreset p = make_preset("tvflow_1d.multiplicative");
    p.n = 32;
    p.coefficient.modulation = Modulation::Constant;
    p.solver.horizon = 0.2;
    const auto space = build_space(p);
    const DriftOperator op = build_operator(p, space);
    const Vec x0 = initial_state(p, *space);
    const DiffusionCoefficient coeff = build_coefficient(p, *space);
    const Trajectory mult = solve_multiplicative(op, x0, coeff, 9, p.solver);
    NoiseSpec additive = NoiseSpec::wiener(p.coefficient.sigma, p.coefficient.rho, p.coefficient.modes);
    const NoisePath path = sample_path(*space, additive, 9, p.solver.dt, p.solver.steps());
    const Trajectory add = solve_additive(op, x0, path, p.solver);
    const bool same = mult.final_state.size() == add.final_state.size() &&
                      std::equal(mult.final_state.begin(), mult.final_state.end(), add.final_state.begin());
    return {"constant_beta_matches_additive", same, same ? "bit-identical" : "differs"};
}

CheckResult check_parallel(WorkerPool& pool) {
    const auto space = std::make_shared<const SpectralSpace>(GridDomain(1, 32, Boundary::Dirichlet),
                                                             TripleMode::H1OverL2);
    DriftOperator op(space, ScalarGraph::power(1.0), DriftForm::Divergence);
    ErgodicSetup setup;
    setup.op = &op;
    setup.noise = NoiseSpec::wiener(100.0, 2.0);
    setup.cfg.dt = 0.05;
    Vec x0 = Vec::Zero(32);
    const auto dict = default_dictionary(0.25);
    const auto serial = occupation_average(setup, x0, dict, {1.0}, 8, 3);
    setup.executor = pool.executor();
    const auto parallel = occupation_average(setup, x0, dict, {1.0}, 8, 3);
    const bool same = serial[0].estimate == parallel[0].estimate && serial[0].se == parallel[0].se;
    return {"parallel_equivalence", same, std::to_string(pool.workers()) + " workers"};
}

CheckResult check_simulate_determinism() {
    ExperimentPreset p = make_preset("fastdiff_1d.wiener");
    p.n = 32;
    p.solver.horizon = 0.1;
    auto once = [&] {
        const auto space = build_space(p);
        const DriftOperator op = build_operator(p, space);
        std::ostringstream os;
        write_trajectory_csv(os, simulate(p, op, initial_state(p, *space), p.solver));
        return os.str();
    };
    const bool same = once() == once();
    return {"simulate_determinism", same, same ? "identical bytes" : "outputs differ"};
}

CheckResult check_extinction() {
    ExperimentPreset p = make_preset("fastdiff_1d");
    p.n = 64;
    p.solver.record_selections = true;
    const auto space = build_space(p);
    const DriftOperator op = build_operator(p, space);
    const Trajectory tr = solve_deterministic(op, initial_state(p, *space), p.solver);
    const ExtinctionReport r = extinction_time(*space, tr, p.p, p.solver.extinction_threshold);
    return {"extinction_fastdiff", r.extinct && r.within_bound,
            "T=" + format_double(r.time) + " bound=" + format_double(r.t_bound)};
}

}  // namespace

std::vector<CheckResult> verify_suite(WorkerPool& pool) {
    std::vector<std::function<CheckResult()>> checks = {
        check_resolvent, check_contraction,   check_brezis,
        check_delta2,    check_lyapunov,      check_roundtrip,
        check_constant_beta,
        [&] { return check_parallel(pool); },
        check_simulate_determinism,
        check_extinction,
    };
    std::vector<CheckResult> out;
    for (const auto& c : checks) {
        try {
            out.push_back(c());
        } catch (const std::exception& e) {
            out.push_back({"(check threw)", false, e.what()});
        }
    }
    return out;
}

int run(const RunOptions& opts, std::ostream& log) {
    const auto t0 = Clock::now();
    const auto& subs = subcommands();
    if (std::find(subs.begin(), subs.end(), opts.subcommand) == subs.end()) {
        throw std::invalid_argument("unknown subcommand '" + opts.subcommand + "'");
    }
    WorkerPool pool(opts.workers);
    Artifacts out(opts.out_dir);
    nlohmann::json manifest;
    manifest["tool"] = "monoflow";
    manifest["subcommand"] = opts.subcommand;
    manifest["workers"] = opts.workers;
    manifest["versions"] = {{"monoflow", "0.1.0"},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                          "." + std::to_string(EIGEN_MINOR_VERSION)},
                            {"compiler", __VERSION__}};
    int status = 0;

    if (opts.subcommand == "verify") {
        const auto results = verify_suite(pool);
        auto f = out.open("verify.csv");
        f << "check,passed,detail\n";
        for (const auto& r : results) {
            log << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
            f << r.name << ',' << (r.passed ? 1 : 0) << ',' << r.detail << '\n';
            if (!r.passed) status = 1;
        }
        manifest["preset"] = nullptr;
        manifest["seeds"] = {{"master", "fixed per check"}};
    } else {
        const ExperimentPreset p = resolve_preset(opts);
        const auto space = build_space(p);
        const DriftOperator op = build_operator(p, space);
        const Vec x0 = initial_state(p, *space);
        manifest["preset"] = p.full_name();
        manifest["seeds"] = {{"master", p.seed}, {"path_rule", "split_seed(master, path_index)"}};
        manifest["config"] = to_config(p).to_string();
        SolverConfig cfg = p.solver;

        if (opts.subcommand == "simulate") {
            const Trajectory tr = simulate(p, op, x0, cfg);
            auto f = out.open("trajectory.csv");
            write_trajectory_csv(f, tr);
            auto b = out.open("states.sgfl", true);
            write_states_binary(b, tr, space->grid());
            manifest["extinction_time"] = tr.extinction_time ? nlohmann::json(*tr.extinction_time) : nullptr;
            log << "simulated " << tr.size() - 1 << " steps, final |x|_H = " << tr.diagnostics.back().norm_h << '\n';
        } else if (opts.subcommand == "dump-noise") {
            const NoisePath path = sample_path(*space, p.noise, path_seed(p), cfg.dt, cfg.steps());
            auto f = out.open("noise.csv");
            path.write_csv(f);
            const RegularityReport rep = regularity_report(*space, path);
            manifest["regularity"] = {{"l2_T32_norm", rep.l2_T32_norm},
                                      {"tail_fraction", rep.tail_fraction},
                                      {"certified", rep.certifies_hyp_g}};
            log << "wrote " << path.steps() << " increments on " << path.driven_modes() << " modes\n";
        } else if (opts.subcommand == "ergodic") {
            if (p.variant != Variant::Wiener && p.variant != Variant::Poisson && p.variant != Variant::Deterministic) {
                throw std::invalid_argument("ergodic runs need additive or zero noise");
            }
            ErgodicSetup setup;
            setup.op = &op;
            setup.noise = p.noise;
            setup.cfg = cfg;
            setup.executor = pool.executor();
            const auto dict = default_dictionary(p.dictionary_scale);
            const Vec y0 = p.partner_scale * x0;
            const auto ex = occupation_average(setup, x0, dict, p.horizons, p.paths, p.seed);
            const auto ey = occupation_average(setup, y0, dict, p.horizons, p.paths, p.seed);
            {
                auto f = out.open("occupation_x.csv");
                write_occupation_csv(f, ex);
            }
            {
                auto f = out.open("occupation_y.csv");
                write_occupation_csv(f, ey);
            }
            auto g = out.open("occupation_gap.csv");
            g.precision(17);
            g << "functional_id,T,gap,combined_stderr,within_3se\n";
            int within = 0, total = 0;
            for (std::size_t h = 0; h < ex.size(); ++h) {
                const OccupationGap gap = compare_occupation(ex[h], ey[h]);
                for (std::size_t f = 0; f < dict.size(); ++f) {
                    const bool ok = gap.gap[f] <= 3.0 * gap.combined_se[f];
                    g << ex[h].ids[f] << ',' << ex[h].horizon << ',' << gap.gap[f] << ',' << gap.combined_se[f] << ','
                      << (ok ? 1 : 0) << '\n';
                    if (h + 1 == ex.size()) {
                        ++total;
                        within += ok;
                    }
                }
            }
            const std::vector<double> radii = p.radii.empty() ? default_radii(op, x0) : p.radii;
            const double horizon = p.horizons.back();
            const ConcentrationReport conc = concentration_check(setup, x0, radii, horizon, p.paths, p.seed);
            auto c = out.open("concentration.csv");
            c.precision(17);
            c << "R,occupation_fraction\n";
            for (const auto& row : conc.rows) c << row.radius << ',' << row.fraction << '\n';
            manifest["occupation"] = {{"within_3se", within}, {"functionals", total}, {"c_hat", conc.c_hat}};
            log << within << "/" << total << " functionals within 3 combined SE at T=" << horizon << '\n';
        } else if (opts.subcommand == "extinction") {
            const double alpha = extinction_alpha(p);
            if (p.variant != Variant::Deterministic) throw std::invalid_argument("extinction needs the deterministic variant");
            cfg.record_selections = true;
            const Trajectory tr = solve_deterministic(op, x0, cfg);
            const ExtinctionReport r = extinction_time(*space, tr, alpha, cfg.extinction_threshold);
            auto f = out.open("trajectory.csv");
            write_trajectory_csv(f, tr);
            auto e = out.open("extinction.csv");
            e.precision(17);
            e << "quantity,value\nextinction_time," << r.time << "\nc_hat," << r.c_hat << "\nt_bound," << r.t_bound
              << "\nextinct," << r.extinct << "\nwithin_bound," << r.within_bound << '\n';
            manifest["extinction"] = {{"time", std::isfinite(r.time) ? nlohmann::json(r.time) : nullptr},
                                      {"c_hat", r.c_hat},
                                      {"t_bound", r.t_bound},
                                      {"within_bound", r.within_bound}};
            log << "extinction time " << r.time << " (bound " << r.t_bound << ")\n";
            if (!r.within_bound) status = 2;
        } else if (opts.subcommand == "decay") {
            if (p.variant != Variant::Deterministic) throw std::invalid_argument("decay needs the deterministic variant");
            const Trajectory tr = solve_deterministic(op, x0, cfg);
            auto f = out.open("decay.csv");
            f.precision(17);
            f << "t,norm_H\n";
            for (int k = 0; k < tr.size(); ++k) f << tr.times[k] << ',' << tr.diagnostics[k].norm_h << '\n';
            const double slope = decay_rate_fit(tr, p.fit_t0, p.fit_t1);
            manifest["decay"] = {{"slope", slope}, {"window", {p.fit_t0, p.fit_t1}}};
            log << "fitted slope " << slope << " over [" << p.fit_t0 << ", " << p.fit_t1 << "]\n";
        } else if (opts.subcommand == "picard") {
            if (p.variant != Variant::Multiplicative) throw std::invalid_argument("picard needs the multiplicative variant");
            PicardLog plog;
            const Trajectory tr = simulate(p, op, x0, cfg, &plog);
            auto f = out.open("trajectory.csv");
            write_trajectory_csv(f, tr);
            auto s = out.open("sweeps.csv");
            s.precision(17);
            s << "window,sweep,gap,ratio\n";
            double worst = 0.0;
            for (const auto& r : plog.sweeps) {
                s << r.window << ',' << r.sweep << ',' << r.gap << ',' << r.ratio << '\n';
                worst = std::max(worst, r.ratio);
            }
            manifest["picard"] = {{"window_length", plog.window_length},
                                  {"max_sweeps_used", plog.max_sweeps_used},
                                  {"max_ratio", worst}};
            log << "window " << plog.window_length << ", at most " << plog.max_sweeps_used
                << " sweeps, worst ratio " << worst << '\n';
        }
    }

    manifest["artifacts"] = out.names();
    manifest["exit_status"] = status;
    manifest["timings"] = {{"total_seconds", std::chrono::duration<double>(Clock::now() - t0).count()}};
    std::ofstream m(out.dir() / "manifest.json");
    m << manifest.dump(2) << '\n';
    return status;
}

}  // namespace monoflow
