#include "monoflow/ergodics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace monoflow {

TestFunctional TestFunctional::mode_tanh(int k) {
    if (k < 0) throw std::invalid_argument("mode index must be >= 0");
    TestFunctional f;
    f.kind = FunctionalKind::ModeTanh;
    f.mode = k;
    return f;
}

TestFunctional TestFunctional::clipped_norm(double m) {
    if (!(m > 0.0)) throw std::invalid_argument("clip level must be > 0");
    TestFunctional f;
    f.kind = FunctionalKind::ClippedNorm;
    f.level = m;
    return f;
}

TestFunctional TestFunctional::ball(double radius, double width) {
    if (!(radius >= 0.0) || !(width > 0.0)) throw std::invalid_argument("ball needs radius >= 0 and width > 0");
    TestFunctional f;
    f.kind = FunctionalKind::BallIndicator;
    f.level = radius;
    f.width = width;
    return f;
}

double TestFunctional::operator()(const SpectralSpace& space, const Vec& x) const {
    switch (kind) {
        case FunctionalKind::ModeTanh: {
            const double c = space.grid().inner(x, space.eigenvector(mode));
            return std::tanh(c * std::sqrt(space.h_weight(mode)));
        }
        case FunctionalKind::ClippedNorm:
            return std::min(space.norm_h(x), level);
        case FunctionalKind::BallIndicator:
            return std::clamp((level + width - space.norm_h(x)) / width, 0.0, 1.0);
    }
    return 0.0;
}

double TestFunctional::lipschitz() const { return kind == FunctionalKind::BallIndicator ? 1.0 / width : 1.0; }

double TestFunctional::sup() const { return kind == FunctionalKind::ClippedNorm ? level : 1.0; }

std::string TestFunctional::id() const {
    std::ostringstream os;
    switch (kind) {
        case FunctionalKind::ModeTanh:
            os << "tanh_e" << mode + 1;
            break;
        case FunctionalKind::ClippedNorm:
            os << "clipnorm_" << level;
            break;
        case FunctionalKind::BallIndicator:
            os << "ball_" << level << "_w" << width;
            break;
    }
    return os.str();
}

std::vector<TestFunctional> default_dictionary(double scale) {
    return {TestFunctional::mode_tanh(0),          TestFunctional::mode_tanh(1),
            TestFunctional::mode_tanh(2),          TestFunctional::mode_tanh(3),
            TestFunctional::clipped_norm(scale),   TestFunctional::clipped_norm(2.0 * scale),
            TestFunctional::ball(0.5 * scale, scale), TestFunctional::ball(scale, scale)};
}

PathExecutor serial_executor() {
    return [](int count, const std::function<void(int)>& task) {
        for (int i = 0; i < count; ++i) task(i);
    };
}

MeanWithError batch_means(const std::vector<double>& samples, int batches) {
    MeanWithError r;
    const int n = static_cast<int>(samples.size());
    if (n == 0) return r;
    double sum = 0.0;
    for (double s : samples) sum += s;
    r.mean = sum / n;
    const int b = std::min(batches, n);
    if (b < 2) return r;
    std::vector<double> means(static_cast<std::size_t>(b), 0.0);
    for (int i = 0; i < b; ++i) {
        const int lo = static_cast<int>(static_cast<long long>(i) * n / b);
        const int hi = static_cast<int>(static_cast<long long>(i + 1) * n / b);
        for (int j = lo; j < hi; ++j) means[i] += samples[j];
        means[i] /= (hi - lo);
    }
    double mbar = 0.0;
    for (double m : means) mbar += m;
    mbar /= b;
    double var = 0.0;
    for (double m : means) var += (m - mbar) * (m - mbar);
    var /= (b - 1);
    r.se = std::sqrt(var / b);
    return r;
}

namespace {

const DriftOperator& checked_op(const ErgodicSetup& setup) {
    if (!setup.op) throw std::invalid_argument("ergodic setup has no drift operator");
    setup.cfg.validate();
    return *setup.op;
}

int steps_for(double horizon, double dt) {
    const long long k = std::llround(horizon / dt);
    if (k < 0 || std::abs(k * dt - horizon) > 1e-9 * std::max(1.0, horizon)) {
        throw std::invalid_argument("horizon must be a nonnegative multiple of dt");
    }
    return static_cast<int>(k);
}

NoisePath path_for(const ErgodicSetup& setup, std::uint64_t seed, int i, int steps) {
    return sample_path(setup.op->space(), setup.noise, split_seed(seed, static_cast<std::uint64_t>(i)), setup.cfg.dt,
                       steps);
}

// Mean over paths of time averages of per-step values (rows 1..k), with
// batch-means SE across paths, or across 8 time blocks when paths are few.
MeanWithError average_steps(const std::vector<std::vector<double>>& per_path, int k) {
    std::vector<double> samples;
    if (per_path.size() >= 8) {
        for (const auto& v : per_path) {
            double s = 0.0;
            for (int j = 1; j <= k; ++j) s += v[j];
            samples.push_back(k > 0 ? s / k : 0.0);
        }
        return batch_means(samples, 8);
    }
    const int blocks = std::min(8, std::max(1, k));
    std::vector<double> block_means(static_cast<std::size_t>(blocks), 0.0);
    for (int b = 0; b < blocks; ++b) {
        const int lo = 1 + static_cast<int>(static_cast<long long>(b) * k / blocks);
        const int hi = 1 + static_cast<int>(static_cast<long long>(b + 1) * k / blocks);
        double s = 0.0;
        for (const auto& v : per_path)
            for (int j = lo; j < hi; ++j) s += v[j];
        block_means[b] = hi > lo ? s / ((hi - lo) * static_cast<double>(per_path.size())) : 0.0;
    }
    MeanWithError r = batch_means(block_means, blocks);
    double total = 0.0;
    for (const auto& v : per_path)
        for (int j = 1; j <= k; ++j) total += v[j];
    r.mean = k > 0 ? total / (k * static_cast<double>(per_path.size())) : 0.0;
    return r;
}

}  // namespace

std::vector<OccupationEstimate> occupation_average(const ErgodicSetup& setup, const Vec& x0,
                                                   const std::vector<TestFunctional>& functionals,
                                                   const std::vector<double>& horizons, int n_paths,
                                                   std::uint64_t seed, int first_path) {
    const DriftOperator& op = checked_op(setup);
    if (n_paths < 1) throw std::invalid_argument("need at least one path");
    if (first_path < 0) throw std::invalid_argument("first path index must be >= 0");
    if (horizons.empty()) throw std::invalid_argument("need at least one horizon");
    std::vector<int> ks;
    for (double h : horizons) ks.push_back(steps_for(h, setup.cfg.dt));
    const int steps = *std::max_element(ks.begin(), ks.end());
    const std::size_t nf = functionals.size();

    // values[f][path][k]
    std::vector<std::vector<std::vector<double>>> values(
        nf, std::vector<std::vector<double>>(static_cast<std::size_t>(n_paths)));
    setup.executor(n_paths, [&](int i) {
        const NoisePath path = path_for(setup, seed, first_path + i, steps);
        SolverConfig cfg = setup.cfg;
        cfg.horizon = steps * cfg.dt;
        cfg.record_states = false;
        for (std::size_t f = 0; f < nf; ++f) values[f][i].assign(static_cast<std::size_t>(steps + 1), 0.0);
        solve_additive(op, x0, path, cfg, [&](int k, double, const Vec& x) {
            for (std::size_t f = 0; f < nf; ++f) values[f][i][k] = functionals[f](op.space(), x);
        });
    });

    std::vector<OccupationEstimate> out;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        OccupationEstimate est;
        est.horizon = horizons[h];
        est.n_paths = n_paths;
        est.seed = seed;
        for (std::size_t f = 0; f < nf; ++f) {
            const MeanWithError m = average_steps(values[f], ks[h]);
            est.ids.push_back(functionals[f].id());
            est.estimate.push_back(m.mean);
            est.se.push_back(m.se);
        }
        out.push_back(std::move(est));
    }
    return out;
}

OccupationGap compare_occupation(const OccupationEstimate& x, const OccupationEstimate& y) {
    if (x.estimate.size() != y.estimate.size()) throw std::invalid_argument("estimates cover different functionals");
    OccupationGap g;
    for (std::size_t f = 0; f < x.estimate.size(); ++f) {
        g.gap.push_back(std::abs(x.estimate[f] - y.estimate[f]));
        g.combined_se.push_back(std::hypot(x.se[f], y.se[f]));
    }
    return g;
}

void write_occupation_csv(std::ostream& os, const std::vector<OccupationEstimate>& estimates) {
    os.precision(17);
    os << "functional_id,T,estimate,stderr,n_paths\n";
    for (const auto& e : estimates)
        for (std::size_t f = 0; f < e.ids.size(); ++f)
            os << e.ids[f] << ',' << e.horizon << ',' << e.estimate[f] << ',' << e.se[f] << ',' << e.n_paths << '\n';
}

EPropertyResult eproperty_check(const ErgodicSetup& setup, const TestFunctional& f, const Vec& x, const Vec& y,
                                double t, int n_paths, std::uint64_t seed) {
    const DriftOperator& op = checked_op(setup);
    if (n_paths < 1) throw std::invalid_argument("need at least one path");
    const int steps = steps_for(t, setup.cfg.dt);
    std::vector<double> diffs(static_cast<std::size_t>(n_paths));
    setup.executor(n_paths, [&](int i) {
        const NoisePath path = path_for(setup, seed, i, steps);
        SolverConfig cfg = setup.cfg;
        cfg.horizon = steps * cfg.dt;
        cfg.record_states = false;
        const Vec xt = solve_additive(op, x, path, cfg).final_state;
        const Vec yt = solve_additive(op, y, path, cfg).final_state;
        diffs[i] = f(op.space(), xt) - f(op.space(), yt);
    });
    const MeanWithError m = batch_means(diffs, 8);
    EPropertyResult r;
    r.t = t;
    r.lhs = std::abs(m.mean);
    r.se = m.se;
    r.bound = f.lipschitz() * op.space().norm_h(x - y);
    r.holds = r.lhs <= r.bound + 3.0 * r.se + 1e-12;
    return r;
}

ExtinctionReport extinction_time(const SpectralSpace& space, const Trajectory& traj, double alpha, double threshold) {
    if (!(alpha >= 1.0 && alpha < 2.0)) throw std::invalid_argument("extinction exponent must lie in [1, 2)");
    if (traj.states.empty()) throw std::invalid_argument("extinction analysis needs recorded states");
    ExtinctionReport r;
    const double x0 = space.norm_h(traj.states.front());
    if (x0 <= threshold) return {0.0, 0.0, 0.0, true, true};
    r.time = std::numeric_limits<double>::infinity();
    int run = 0;
    for (int k = 0; k < traj.size(); ++k) {
        if (traj.diagnostics[k].norm_h <= threshold) {
            if (++run == 3) {
                r.time = traj.times[k - 2];
                r.extinct = true;
                break;
            }
        } else {
            run = 0;
        }
    }
    if (traj.selections.size() + 1 < traj.states.size()) {
        throw std::invalid_argument("extinction analysis needs recorded selections");
    }
    r.c_hat = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
        const double nx = space.norm_h(traj.states[k + 1]);
        if (nx <= threshold) break;
        r.c_hat = std::min(r.c_hat, 2.0 * space.inner_h(traj.selections[k], traj.states[k + 1]) / std::pow(nx, alpha));
    }
    r.t_bound = r.c_hat > 0.0 ? std::pow(x0, 2.0 - alpha) * 2.0 / (r.c_hat * (2.0 - alpha))
                              : std::numeric_limits<double>::infinity();
    r.within_bound = r.extinct && r.time <= 1.05 * r.t_bound;
    return r;
}

double decay_rate_fit(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1) {
    if (t.size() != y.size()) throw std::invalid_argument("time and value series differ in length");
    if (!(t0 > 0.0) || !(t1 > t0)) throw std::invalid_argument("fit window needs 0 < t0 < t1");
    if (t.empty() || t0 < t.front() - 1e-12 || t1 > t.back() + 1e-12) {
        throw std::out_of_range("fit window outside the trajectory horizon");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 - 1e-12 || t[i] > t1 + 1e-12) continue;
        if (!(y[i] > 0.0)) throw std::domain_error("decay fit needs positive values");
        const double lx = std::log(t[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("fit window holds fewer than two samples");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double decay_rate_fit(const Trajectory& traj, double t0, double t1) {
    std::vector<double> y;
    for (const auto& d : traj.diagnostics) y.push_back(d.norm_h);
    return decay_rate_fit(traj.times, y, t0, t1);
}

namespace {

std::vector<double> distances_to_flow(const ErgodicSetup& setup, const Vec& x, double horizon, int n_paths,
                                      std::uint64_t seed) {
    const DriftOperator& op = checked_op(setup);
    if (n_paths < 1) throw std::invalid_argument("need at least one path");
    const int steps = steps_for(horizon, setup.cfg.dt);
    SolverConfig cfg = setup.cfg;
    cfg.horizon = steps * cfg.dt;
    cfg.record_states = false;
    const Vec flow = solve_deterministic(op, x, cfg).final_state;
    std::vector<double> d(static_cast<std::size_t>(n_paths));
    setup.executor(n_paths, [&](int i) {
        const NoisePath path = path_for(setup, seed, i, steps);
        const Vec xt = solve_additive(op, x, path, cfg).final_state;
        const double n = op.space().norm_h(xt - flow);
        d[i] = n * n;
    });
    return d;
}

}  // namespace

double pilot_ball(const ErgodicSetup& setup, const Vec& x, double horizon, int n_paths, std::uint64_t seed) {
    std::vector<double> d = distances_to_flow(setup, x, horizon, n_paths, seed);
    std::sort(d.begin(), d.end());
    const std::size_t mid = d.size() / 2;
    return d.size() % 2 ? d[mid] : 0.5 * (d[mid - 1] + d[mid]);
}

double stochastic_stability(const ErgodicSetup& setup, const Vec& x, double horizon, double eps_ball, int n_paths,
                            std::uint64_t seed) {
    const std::vector<double> d = distances_to_flow(setup, x, horizon, n_paths, seed);
    const auto hits = std::count_if(d.begin(), d.end(), [&](double v) { return v <= eps_ball; });
    return static_cast<double>(hits) / static_cast<double>(d.size());
}

ConcentrationReport concentration_check(const ErgodicSetup& setup, const Vec& x, const std::vector<double>& radii,
                                        double horizon, int n_paths, std::uint64_t seed) {
    const DriftOperator& op = checked_op(setup);
    if (n_paths < 1) throw std::invalid_argument("need at least one path");
    const int steps = steps_for(horizon, setup.cfg.dt);
    std::vector<std::vector<double>> theta(static_cast<std::size_t>(n_paths));
    setup.executor(n_paths, [&](int i) {
        const NoisePath path = path_for(setup, seed, i, steps);
        SolverConfig cfg = setup.cfg;
        cfg.horizon = steps * cfg.dt;
        cfg.record_states = false;
        const Trajectory traj = solve_additive(op, x, path, cfg);
        for (const auto& d : traj.diagnostics) theta[i].push_back(d.theta);
    });
    ConcentrationReport report;
    const double norm = op.space().norm_h(x);
    report.c_hat = average_steps(theta, steps).mean / (norm * norm + 1.0);
    for (double r : radii) {
        std::vector<std::vector<double>> inside(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i)
            for (double v : theta[i]) inside[i].push_back(v <= r ? 1.0 : 0.0);
        const MeanWithError m = average_steps(inside, steps);
        ConcentrationRow row;
        row.radius = r;
        row.fraction = m.mean;
        row.se = m.se;
        row.markov_floor = r > 0.0 ? 1.0 - report.c_hat * (norm * norm + 1.0) / r - 3.0 * m.se
                                   : -std::numeric_limits<double>::infinity();
        row.consistent = row.fraction >= row.markov_floor - 1e-12;
        report.rows.push_back(row);
    }
    return report;
}

std::vector<SviPoint> svi_check(const ErgodicSetup& setup, const Vec& x0, const DriftOperator& z_op, const Vec& z0,
                                const std::vector<double>& checkpoints, int n_paths, std::uint64_t seed) {
    const DriftOperator& op = checked_op(setup);
    if (n_paths < 1) throw std::invalid_argument("need at least one path");
    if (checkpoints.empty()) throw std::invalid_argument("need at least one checkpoint");
    std::vector<int> ks;
    for (double t : checkpoints) ks.push_back(steps_for(t, setup.cfg.dt));
    const int steps = *std::max_element(ks.begin(), ks.end());
    const double dt = setup.cfg.dt;
    const double delta = op.effective_delta();
    const SpectralSpace& space = op.space();
    const double start = 0.5 * std::pow(space.norm_h(x0 - z0), 2);

    std::vector<std::vector<double>> margins(checkpoints.size(), std::vector<double>(static_cast<std::size_t>(n_paths)));
    setup.executor(n_paths, [&](int i) {
        const NoisePath path = path_for(setup, seed, i, steps);
        SolverConfig cfg = setup.cfg;
        cfg.horizon = steps * dt;
        cfg.record_states = true;
        const Trajectory x = solve_additive(op, x0, path, cfg);
        const Trajectory z = solve_additive(z_op, z0, path, cfg);
        // running Σ Δt [φ(Z_{k+1}) + (X_{k+1} − Z_{k+1}, G_k) − φ(X_{k+1})], right endpoints
        std::vector<double> acc(static_cast<std::size_t>(steps + 1), 0.0);
        for (int k = 0; k < steps; ++k) {
            const Vec g = (z.states[k] + path.increment(k) - z.states[k + 1]) / dt;
            const double term = op.energy_phi(z.states[k + 1], delta) +
                                space.inner_h(x.states[k + 1] - z.states[k + 1], g) -
                                op.energy_phi(x.states[k + 1], delta);
            acc[k + 1] = acc[k] + dt * term;
        }
        for (std::size_t c = 0; c < ks.size(); ++c) {
            const int k = ks[c];
            margins[c][i] = start + acc[k] - 0.5 * std::pow(space.norm_h(x.states[k] - z.states[k]), 2);
        }
    });
    std::vector<SviPoint> out;
    for (std::size_t c = 0; c < ks.size(); ++c) {
        const MeanWithError m = batch_means(margins[c], 8);
        SviPoint p;
        p.t = checkpoints[c];
        p.margin = m.mean;
        p.se = m.se;
        p.slack = 3.0 * m.se + 10.0 * (dt + delta);
        p.holds = p.margin >= -p.slack;
        out.push_back(p);
    }
    return out;
}

}  // namespace monoflow
