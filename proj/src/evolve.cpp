#include "monoflow/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace monoflow {

int SolverConfig::steps() const { return static_cast<int>(std::llround(horizon / dt)); }

void SolverConfig::validate() const {
    std::vector<std::string> errs;
    if (!(dt > 0.0)) errs.push_back("dt must be > 0");
    if (!(horizon >= 0.0)) errs.push_back("horizon must be >= 0");
    if (!(epsilon >= 0.0)) errs.push_back("epsilon must be >= 0");
    if (galerkin_modes < 0) errs.push_back("galerkin_modes must be >= 0");
    if (!(picard.window >= 0.0)) errs.push_back("picard window must be >= 0");
    if (!(picard.tol > 0.0)) errs.push_back("picard tol must be > 0");
    if (picard.max_sweeps < 1) errs.push_back("picard max_sweeps must be >= 1");
    if (!(extinction_threshold >= 0.0)) errs.push_back("extinction_threshold must be >= 0");
    if (errs.empty()) return;
    std::string msg = "invalid solver config:";
    for (const auto& e : errs) msg += " " + e + ";";
    throw std::invalid_argument(msg);
}

StepFailure::StepFailure(int step, const NonConvergence& cause)
    : NonConvergence("step " + std::to_string(step) + ": " + cause.what(), cause.residual(), cause.iterations()),
      step_(step) {}

PicardStall::PicardStall(int window, int sweeps, double gap)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "Picard iteration stalled in window " << window << " after " << sweeps
             << " sweeps (gap " << gap << "); shrink the Picard window";
          return os.str();
      }()),
      window_(window),
      sweeps_(sweeps),
      gap_(gap) {}

Vec step_implicit(const DriftOperator& op, const Vec& x, const Vec& dn, double dt, SolveStats* stats) {
    return op.resolvent(dt, x + dn, stats);
}

Vec step_viscous(const DriftOperator& op, const Vec& x, const Vec& g, const Vec& dn, double dt, double epsilon,
                 SolveStats* stats) {
    return op.viscous_resolvent(dt, epsilon, g, x + dn, stats);
}

namespace {

StepDiagnostics diagnose(const DriftOperator& op, const Vec& x, int iters) {
    const SpectralSpace& space = op.space();
    StepDiagnostics d;
    d.norm_h = space.norm_h(x);
    d.norm_s = space.norm_s(x);
    d.energy = op.energy_phi(x, op.effective_delta());
    d.theta = op.lyapunov_theta(x);
    d.newton_iters = iters;
    return d;
}

// Tracks 3 consecutive sub-threshold states.
class ExtinctionWatch {
public:
    explicit ExtinctionWatch(double threshold) : threshold_(threshold) {}
    void observe(double t, double norm) {
        if (time_) return;
        if (norm <= threshold_) {
            if (run_ == 0) first_ = t;
            if (++run_ == 3) time_ = first_;
        } else {
            run_ = 0;
        }
    }
    std::optional<double> time() const { return time_; }

private:
    double threshold_;
    int run_ = 0;
    double first_ = 0.0;
    std::optional<double> time_;
};

// Generic stepping loop. increment(k, X_k) supplies ΔN_k, gnext(k) the viscous
// target for step k -> k+1.
template <class Increment, class Target>
Trajectory march(const DriftOperator& op, const Vec& x0, int steps, double t0, const SolverConfig& cfg,
                 Increment&& increment, Target&& gnext, const StepObserver& observer) {
    op.space().grid().check_size(x0);
    Trajectory traj;
    ExtinctionWatch watch(cfg.extinction_threshold);
    const bool viscous = cfg.epsilon > 0.0;
    Vec x = x0;
    auto record = [&](int k, const Vec& state, int iters) {
        const double t = t0 + k * cfg.dt;
        traj.times.push_back(t);
        traj.diagnostics.push_back(diagnose(op, state, iters));
        watch.observe(t, traj.diagnostics.back().norm_h);
        if (cfg.record_states) traj.states.push_back(state);
        if (observer) observer(k, t, state);
    };
    record(0, x, 0);
    for (int k = 0; k < steps; ++k) {
        const Vec dn = increment(k, x);
        SolveStats stats;
        Vec next;
        try {
            if (viscous) {
                const Vec g = gnext(k);
                next = step_viscous(op, x, g, dn, cfg.dt, cfg.epsilon, &stats);
                if (cfg.record_selections) {
                    traj.selections.push_back((x + dn - next) / cfg.dt -
                                              cfg.epsilon * op.space().apply_T(next - g));
                }
            } else {
                next = step_implicit(op, x, dn, cfg.dt, &stats);
                if (cfg.record_selections) traj.selections.push_back((x + dn - next) / cfg.dt);
            }
        } catch (const NonConvergence& e) {
            throw StepFailure(k, e);
        }
        x = std::move(next);
        record(k + 1, x, stats.iterations);
    }
    traj.extinction_time = watch.time();
    traj.final_state = x;
    return traj;
}

}  // namespace

Trajectory solve_additive(const DriftOperator& op, const Vec& x0, const NoisePath& path, const SolverConfig& cfg,
                          const StepObserver& observer) {
    cfg.validate();
    if (path.steps() > 0 && std::abs(path.dt() - cfg.dt) > 1e-12 * cfg.dt) {
        throw std::invalid_argument("noise path time step differs from the solver time step");
    }
    const SpectralSpace& space = op.space();
    const int steps = std::min(cfg.steps(), path.steps());
    const bool project = cfg.galerkin_modes > 0 && cfg.galerkin_modes < path.driven_modes();
    Vec running = Vec::Zero(space.grid().size());
    Vec current;
    auto increment = [&](int k, const Vec&) -> Vec {
        current = project ? space.project_P(cfg.galerkin_modes, path.increment(k)) : path.increment(k);
        running += current;
        return current;
    };
    auto target = [&](int) -> Vec { return running; };
    return march(op, x0, steps, 0.0, cfg, increment, target, observer);
}

Trajectory solve_deterministic(const DriftOperator& op, const Vec& x0, const SolverConfig& cfg,
                               const StepObserver& observer) {
    cfg.validate();
    const Vec zero = Vec::Zero(op.space().grid().size());
    auto increment = [&](int, const Vec&) -> Vec { return zero; };
    auto target = [&](int) -> Vec { return zero; };
    return march(op, x0, cfg.steps(), 0.0, cfg, increment, target, observer);
}

double default_picard_window(const DiffusionCoefficient& coeff, double dt) {
    const double l = coeff.lipschitz_beta();
    const double s = coeff.sum_b2();
    double window = 0.1;
    if (l > 0.0 && s > 0.0) window = std::min(window, 1.0 / (4.0 * l * l * s));
    const double steps = std::max(1.0, std::floor(window / dt + 1e-9));
    return steps * dt;
}

Trajectory solve_multiplicative(const DriftOperator& op, const Vec& x0, const DiffusionCoefficient& coeff,
                                std::uint64_t seed, const SolverConfig& cfg, PicardLog* log) {
    cfg.validate();
    const SpectralSpace& space = op.space();
    const int m = static_cast<int>(coeff.b.size());
    if (m < 1 || m > space.modes()) throw std::invalid_argument("coefficient needs between 1 and K amplitudes");
    // Unit draws come from the same stream an additive Wiener path with this
    // seed and mode count would use.
    const NoisePath draws = sample_path(space, NoiseSpec::wiener(1.0, 0.0, m), seed, cfg.dt, cfg.steps());
    const double window = cfg.picard.window > 0.0 ? cfg.picard.window : default_picard_window(coeff, cfg.dt);
    const int wsteps = std::max(1, static_cast<int>(std::floor(window / cfg.dt + 1e-9)));
    if (log) {
        log->window_length = wsteps * cfg.dt;
        log->sweeps.clear();
        log->max_sweeps_used = 0;
    }

    SolverConfig inner = cfg;
    inner.record_states = true;
    Trajectory out;
    Vec start = x0;
    Vec base = Vec::Zero(space.grid().size());  // N_t at the window start
    const int total = cfg.steps();
    for (int first = 0, window_index = 0; first < total || (total == 0 && first == 0); ++window_index) {
        const int len = std::min(wsteps, total - first);
        std::vector<Vec> frozen(static_cast<std::size_t>(len + 1), start);
        Trajectory sweep_traj;
        Vec window_end = base;
        double prev_gap = 0.0;
        bool converged = len == 0;
        int sweep = 0;
        while (!converged) {
            if (sweep == cfg.picard.max_sweeps) throw PicardStall(window_index, sweep, prev_gap);
            ++sweep;
            Vec running = base;
            auto increment = [&](int k, const Vec&) -> Vec {
                const Vec dn = multiplicative_increment(space, coeff, frozen[static_cast<std::size_t>(k)],
                                                        draws.wiener_increment(first + k));
                running += dn;
                return dn;
            };
            auto target = [&](int) -> Vec { return running; };
            sweep_traj = march(op, start, len, first * cfg.dt, inner, increment, target, {});
            window_end = running;
            double gap = 0.0;
            for (int k = 0; k <= len; ++k)
                gap = std::max(gap, space.norm_h(sweep_traj.states[k] - frozen[static_cast<std::size_t>(k)]));
            if (log) {
                log->sweeps.push_back({window_index, sweep, gap, sweep > 1 && prev_gap > 0.0 ? gap / prev_gap : 0.0});
            }
            for (int k = 0; k <= len; ++k) frozen[static_cast<std::size_t>(k)] = sweep_traj.states[k];
            prev_gap = gap;
            converged = gap < cfg.picard.tol;
        }
        if (log) log->max_sweeps_used = std::max(log->max_sweeps_used, sweep);
        const int from = out.times.empty() ? 0 : 1;
        for (int k = from; k < sweep_traj.size(); ++k) {
            out.times.push_back(sweep_traj.times[k]);
            out.diagnostics.push_back(sweep_traj.diagnostics[k]);
            out.states.push_back(sweep_traj.states[k]);
        }
        if (len == 0 && out.times.empty()) {
            out.times.push_back(0.0);
            out.diagnostics.push_back(diagnose(op, start, 0));
            out.states.push_back(start);
        }
        start = out.states.back();
        base = window_end;
        first += len;
        if (len == 0) break;
    }
    ExtinctionWatch watch(cfg.extinction_threshold);
    for (int k = 0; k < out.size(); ++k) watch.observe(out.times[k], out.diagnostics[k].norm_h);
    out.extinction_time = watch.time();
    out.final_state = out.states.back();
    if (!cfg.record_states) out.states.clear();
    return out;
}

LimitResult limit_solution(const DriftOperator& op, const Vec& x0, const SolverConfig& cfg,
                           const std::vector<LimitLevel>& ladder, const NoisePath* path) {
    if (ladder.empty()) throw std::invalid_argument("limit ladder is empty");
    const SpectralSpace& space = op.space();
    LimitResult result;
    std::vector<Vec> previous;
    for (const LimitLevel& level : ladder) {
        const DriftOperator level_op = op.with_graph(op.graph().with_delta(level.delta));
        SolverConfig c = cfg;
        c.epsilon = level.epsilon;
        c.galerkin_modes = level.modes;
        c.record_states = true;
        const Vec start = level.smoothing > 0.0 ? space.resolvent_J(level.smoothing, x0) : x0;
        Trajectory traj = path ? solve_additive(level_op, start, *path, c) : solve_deterministic(level_op, start, c);
        if (!previous.empty()) {
            double gap = 0.0;
            for (std::size_t k = 0; k < traj.states.size(); ++k)
                gap = std::max(gap, space.norm_h(traj.states[k] - previous[k]));
            result.gaps.push_back(gap);
        }
        previous = traj.states;
        result.finest = std::move(traj);
    }
    return result;
}

double semiflow_check(const DriftOperator& op, const Vec& x0, double s, double t, const SolverConfig& cfg,
                      const NoisePath* path) {
    const int ks = static_cast<int>(std::llround(s / cfg.dt));
    const int kt = static_cast<int>(std::llround(t / cfg.dt));
    if (std::abs(ks * cfg.dt - s) > 1e-9 * std::max(1.0, s) || std::abs(kt * cfg.dt - t) > 1e-9 * std::max(1.0, t)) {
        throw std::invalid_argument("semiflow times must be multiples of dt");
    }
    auto run = [&](const Vec& start, int first, int count) {
        SolverConfig c = cfg;
        c.horizon = count * cfg.dt;
        c.record_states = false;
        if (path) return solve_additive(op, start, path->slice(first, count), c).final_state;
        return solve_deterministic(op, start, c).final_state;
    };
    const Vec whole = run(x0, 0, ks + kt);
    const Vec composed = run(run(x0, 0, ks), ks, kt);
    return op.space().norm_h(whole - composed);
}

SBoundReport s_bound(const SpectralSpace& space, const Trajectory& traj, const NoisePath* path) {
    SBoundReport r;
    if (traj.diagnostics.empty()) return r;
    const int count = traj.size();
    std::vector<double> s2(count), integral(count, 0.0);
    for (int k = 0; k < count; ++k) s2[k] = traj.diagnostics[k].norm_s * traj.diagnostics[k].norm_s;
    r.initial_s2 = s2[0];
    r.sup_s2 = *std::max_element(s2.begin(), s2.end());
    if (path && path->steps() > 0) {
        double acc = 0.0;
        for (int k = 1; k < count && k <= path->steps(); ++k) {
            const double f = space.fractional_norm(path->cumulative(k));
            acc += path->dt() * f * f;
            integral[k] = acc;
        }
        for (int k = std::min(count, path->steps() + 1); k < count; ++k) integral[k] = acc;
    }
    r.path_integral = integral.back();
    auto holds = [&](double c) {
        for (int k = 0; k < count; ++k) {
            const double bound = std::exp(c * traj.times[k]) * (r.initial_s2 + c * integral[k]);
            if (s2[k] > bound * (1.0 + 1e-12) + 1e-300) return false;
        }
        return true;
    };
    if (holds(0.0)) return r;
    double lo = 0.0, hi = 1.0;
    while (!holds(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) {
            r.finite = false;
            r.constant = std::numeric_limits<double>::infinity();
            return r;
        }
    }
    for (int it = 0; it < 100 && hi - lo > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (holds(mid) ? hi : lo) = mid;
    }
    r.constant = hi;
    return r;
}

NoisePath coarsen_path(const SpectralSpace& space, const NoisePath& fine, int factor) {
    return fine.coarsen(space, factor);
}

RefinementReport dt_refinement(const DriftOperator& op, const Vec& x0, const NoiseSpec& noise, std::uint64_t seed,
                               const SolverConfig& cfg, int halvings) {
    if (halvings < 1) throw std::invalid_argument("need at least one halving");
    const SpectralSpace& space = op.space();
    const int finest_factor = 1 << halvings;
    const double fine_dt = cfg.dt / finest_factor;
    const int fine_steps = cfg.steps() * finest_factor;
    const NoisePath fine = sample_path(space, noise, seed, fine_dt, fine_steps);
    RefinementReport report;
    std::vector<std::vector<Vec>> coarse_states;
    for (int level = 0; level <= halvings; ++level) {
        const int factor = finest_factor >> level;
        SolverConfig c = cfg;
        c.dt = cfg.dt / (1 << level);
        c.record_states = true;
        Trajectory traj = noise.kind == NoiseKind::Zero
                              ? solve_deterministic(op, x0, c)
                              : solve_additive(op, x0, factor == 1 ? fine : coarsen_path(space, fine, factor), c);
        // sample on the coarsest time grid
        std::vector<Vec> sampled;
        const int stride = 1 << level;
        for (int k = 0; k < traj.size(); k += stride) sampled.push_back(traj.states[k]);
        report.dts.push_back(c.dt);
        coarse_states.push_back(std::move(sampled));
    }
    for (int level = 0; level < halvings; ++level) {
        double gap = 0.0;
        const auto& a = coarse_states[level];
        const auto& b = coarse_states[level + 1];
        for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) gap = std::max(gap, space.norm_h(a[k] - b[k]));
        report.gaps.push_back(gap);
    }
    for (std::size_t i = 0; i + 1 < report.gaps.size(); ++i)
        report.factors.push_back(report.gaps[i + 1] > 0.0 ? report.gaps[i] / report.gaps[i + 1]
                                                          : std::numeric_limits<double>::infinity());
    return report;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os.precision(17);
    os << "k,t,norm_H,norm_S,energy,theta,newton_iters\n";
    for (int k = 0; k < traj.size(); ++k) {
        const auto& d = traj.diagnostics[k];
        os << k << ',' << traj.times[k] << ',' << d.norm_h << ',' << d.norm_s << ',' << d.energy << ','
           << d.theta << ',' << d.newton_iters << '\n';
    }
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("state dump: truncated header");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

}  // namespace

void write_states_binary(std::ostream& os, const Trajectory& traj, const GridDomain& grid) {
    os.write("SGFL", 4);
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(grid.dim()));
    put_u32(os, static_cast<std::uint32_t>(grid.n()));
    for (const Vec& x : traj.states)
        for (int i = 0; i < x.size(); ++i) put_f64(os, x[i]);
}

std::vector<Vec> read_states_binary(std::istream& is, int* dim, int* n) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "SGFL", 4) != 0) throw std::runtime_error("state dump: bad magic");
    if (get_u32(is) != 1) throw std::runtime_error("state dump: unsupported version");
    const int d = static_cast<int>(get_u32(is));
    const int nn = static_cast<int>(get_u32(is));
    if (d < 1 || d > 2 || nn < 1) throw std::runtime_error("state dump: bad grid header");
    if (dim) *dim = d;
    if (n) *n = nn;
    const int size = d == 1 ? nn : nn * nn;
    std::vector<Vec> states;
    std::vector<unsigned char> buf(static_cast<std::size_t>(size) * 8);
    while (is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
        Vec x(size);
        for (int i = 0; i < size; ++i) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[8 * i + b]) << (8 * b);
            std::memcpy(&x[i], &bits, 8);
        }
        states.push_back(std::move(x));
    }
    if (is.gcount() != 0) throw std::runtime_error("state dump: trailing partial state");
    return states;
}

}  // namespace monoflow
