#include "monoflow/noise.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace monoflow {

NoiseSpec NoiseSpec::wiener(double sigma, double rho, int modes) {
    NoiseSpec s;
    s.kind = NoiseKind::TraceClassWiener;
    s.sigma = sigma;
    s.rho = rho;
    s.modes = modes;
    return s;
}

NoiseSpec NoiseSpec::compound_poisson(double rate, std::vector<int> jump_modes, double jump_scale) {
    NoiseSpec s;
    s.kind = NoiseKind::CompoundPoisson;
    s.rate = rate;
    s.jump_modes = std::move(jump_modes);
    s.jump_scale = jump_scale;
    return s;
}

void NoiseSpec::validate(const SpectralSpace& space) const {
    if (modes < 0 || modes > space.modes()) {
        throw std::invalid_argument("noise modes must lie in [0, " + std::to_string(space.modes()) + "]");
    }
    const int driven = modes == 0 ? space.modes() : modes;
    switch (kind) {
        case NoiseKind::Zero:
            break;
        case NoiseKind::TraceClassWiener:
            if (!(sigma >= 0.0)) throw std::invalid_argument("wiener sigma must be >= 0");
            if (!std::isfinite(rho)) throw std::invalid_argument("wiener rho must be finite");
            break;
        case NoiseKind::CompoundPoisson:
            if (!(rate >= 0.0)) throw std::invalid_argument("poisson rate must be >= 0");
            if (!(jump_scale >= 0.0)) throw std::invalid_argument("poisson jump_scale must be >= 0");
            if (jump_modes.empty()) throw std::invalid_argument("poisson jump_modes must not be empty");
            for (int m : jump_modes) {
                if (m < 0 || m >= driven) {
                    throw std::invalid_argument("poisson jump mode " + std::to_string(m) + " outside [0, " +
                                                std::to_string(driven) + ")");
                }
            }
            break;
    }
}

std::string NoiseSpec::kind_name() const {
    switch (kind) {
        case NoiseKind::Zero:
            return "zero";
        case NoiseKind::TraceClassWiener:
            return "wiener";
        case NoiseKind::CompoundPoisson:
            return "poisson";
    }
    return "zero";
}

NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "zero") return NoiseKind::Zero;
    if (name == "wiener") return NoiseKind::TraceClassWiener;
    if (name == "poisson") return NoiseKind::CompoundPoisson;
    throw std::invalid_argument("unknown noise kind '" + name + "'");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

Vec wiener_amplitudes(const SpectralSpace& space, double sigma, double rho, int m) {
    Vec amp(m);
    for (int k = 0; k < m; ++k) amp[k] = sigma * std::pow(space.eigenvalue(k), -rho);
    return amp;
}

Vec modal_increment(const SpectralSpace& space, const Vec& amplitudes, const Vec& dw, double scale) {
    Vec c = Vec::Zero(space.modes());
    for (int k = 0; k < dw.size(); ++k) c[k] = (amplitudes[k] * scale) * dw[k];
    return space.synthesize(c);
}

NoisePath sample_path(const SpectralSpace& space, const NoiseSpec& spec, std::uint64_t seed, double dt,
                      int n_steps) {
    if (!(dt > 0.0)) throw std::invalid_argument("noise time step must be > 0");
    if (n_steps < 0) throw std::invalid_argument("noise step count must be >= 0");
    spec.validate(space);
    NoisePath path;
    path.spec_ = spec;
    path.dt_ = dt;
    path.seed_ = seed;
    const int driven = spec.kind == NoiseKind::Zero ? 0 : (spec.modes == 0 ? space.modes() : spec.modes);
    path.modal_ = Eigen::MatrixXd::Zero(n_steps, driven);
    path.jumps_.assign(static_cast<std::size_t>(n_steps), 0);
    auto engine = make_engine(seed);
    if (spec.kind == NoiseKind::TraceClassWiener) {
        std::normal_distribution<double> normal;
        const Vec amp = wiener_amplitudes(space, spec.sigma, spec.rho, driven);
        const double sq = std::sqrt(dt);
        path.unit_.resize(n_steps, driven);
        for (int k = 0; k < n_steps; ++k) {
            for (int m = 0; m < driven; ++m) {
                const double dw = sq * normal(engine);
                path.unit_(k, m) = dw;
                path.modal_(k, m) = amp[m] * dw;
            }
        }
    } else if (spec.kind == NoiseKind::CompoundPoisson) {
        std::poisson_distribution<int> count(spec.rate * dt);
        std::uniform_int_distribution<std::size_t> pick(0, spec.jump_modes.size() - 1);
        std::normal_distribution<double> normal;
        for (int k = 0; k < n_steps; ++k) {
            const int jumps = spec.rate > 0.0 ? count(engine) : 0;
            path.jumps_[static_cast<std::size_t>(k)] = jumps;
            for (int j = 0; j < jumps; ++j) {
                const int mode = spec.jump_modes[pick(engine)];
                path.modal_(k, mode) += spec.jump_scale * normal(engine);
            }
        }
    }
    path.materialize(space);
    return path;
}

void NoisePath::materialize(const SpectralSpace& space) {
    grid_.clear();
    grid_.reserve(static_cast<std::size_t>(steps()));
    const Vec amp = spec_.kind == NoiseKind::TraceClassWiener
                        ? wiener_amplitudes(space, spec_.sigma, spec_.rho, driven_modes())
                        : Vec();
    for (int k = 0; k < steps(); ++k) {
        if (spec_.kind == NoiseKind::TraceClassWiener) {
            grid_.push_back(modal_increment(space, amp, unit_.row(k).transpose()));
        } else {
            Vec c = Vec::Zero(space.modes());
            c.head(driven_modes()) = modal_.row(k).transpose();
            grid_.push_back(space.synthesize(c));
        }
    }
}

Eigen::VectorXd NoisePath::wiener_increment(int k) const {
    if (k < 0 || k >= steps()) throw std::out_of_range("noise step out of range");
    if (spec_.kind != NoiseKind::TraceClassWiener) return Vec::Zero(driven_modes());
    return unit_.row(k).transpose();
}

Vec NoisePath::cumulative(int k) const {
    if (k < 0 || k > steps()) throw std::out_of_range("noise step out of range");
    if (grid_.empty()) throw std::logic_error("cumulative of an empty path");
    Vec acc = Vec::Zero(grid_.front().size());
    for (int j = 0; j < k; ++j) acc += grid_[static_cast<std::size_t>(j)];
    return acc;
}

int NoisePath::jumps(int k) const { return jumps_.at(static_cast<std::size_t>(k)); }

NoisePath NoisePath::coarsen(const SpectralSpace& space, int factor) const {
    if (factor < 1) throw std::invalid_argument("coarsening factor must be >= 1");
    NoisePath out;
    out.spec_ = spec_;
    out.dt_ = dt_ * factor;
    out.seed_ = seed_;
    const int coarse = steps() / factor;
    out.modal_ = Eigen::MatrixXd::Zero(coarse, driven_modes());
    if (unit_.size() > 0) out.unit_ = Eigen::MatrixXd::Zero(coarse, driven_modes());
    out.jumps_.assign(static_cast<std::size_t>(coarse), 0);
    for (int k = 0; k < coarse; ++k) {
        for (int j = 0; j < factor; ++j) {
            const int f = k * factor + j;
            out.modal_.row(k) += modal_.row(f);
            if (unit_.size() > 0) out.unit_.row(k) += unit_.row(f);
            out.jumps_[static_cast<std::size_t>(k)] += jumps_[static_cast<std::size_t>(f)];
        }
    }
    out.materialize(space);
    return out;
}

NoisePath NoisePath::slice(int first, int count) const {
    if (first < 0 || count < 0 || first + count > steps()) throw std::out_of_range("noise slice out of range");
    NoisePath out;
    out.spec_ = spec_;
    out.dt_ = dt_;
    out.seed_ = seed_;
    out.modal_ = modal_.middleRows(first, count);
    if (unit_.size() > 0) out.unit_ = unit_.middleRows(first, count);
    out.jumps_.assign(jumps_.begin() + first, jumps_.begin() + first + count);
    out.grid_.assign(grid_.begin() + first, grid_.begin() + first + count);
    return out;
}

// The first line carries the metadata needed to rebuild the path; the rest
// is one row per (step, mode) with nonzero increment.
void NoisePath::write_csv(std::ostream& os) const {
    os.precision(17);
    os << "# kind=" << spec_.kind_name() << " dt=" << dt_ << " steps=" << steps()
       << " modes=" << driven_modes() << " seed=" << seed_ << " sigma=" << spec_.sigma
       << " rho=" << spec_.rho << "\n";
    os << "k,t_k,mode_index,increment_value\n";
    for (int k = 0; k < steps(); ++k) {
        for (int m = 0; m < driven_modes(); ++m) {
            const double v = spec_.kind == NoiseKind::TraceClassWiener ? unit_(k, m) : modal_(k, m);
            if (v != 0.0) os << k << ',' << k * dt_ << ',' << m << ',' << v << '\n';
        }
    }
}

NoisePath NoisePath::read_csv(std::istream& is, const SpectralSpace& space) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
        throw std::runtime_error("noise CSV: missing metadata line");
    }
    std::map<std::string, std::string> meta;
    std::istringstream ms(line.substr(2));
    for (std::string tok; ms >> tok;) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos) meta[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    for (const char* key : {"kind", "dt", "steps", "modes", "seed", "sigma", "rho"}) {
        if (!meta.count(key)) throw std::runtime_error(std::string("noise CSV: missing metadata '") + key + "'");
    }
    NoisePath path;
    path.spec_.kind = parse_noise_kind(meta["kind"]);
    path.spec_.sigma = std::stod(meta["sigma"]);
    path.spec_.rho = std::stod(meta["rho"]);
    path.dt_ = std::stod(meta["dt"]);
    path.seed_ = std::stoull(meta["seed"]);
    const int steps = std::stoi(meta["steps"]);
    const int modes = std::stoi(meta["modes"]);
    if (modes > space.modes()) throw std::runtime_error("noise CSV: more modes than the space provides");
    path.spec_.modes = modes == space.modes() ? 0 : modes;
    path.modal_ = Eigen::MatrixXd::Zero(steps, modes);
    path.jumps_.assign(static_cast<std::size_t>(steps), 0);
    if (path.spec_.kind == NoiseKind::TraceClassWiener) path.unit_ = Eigen::MatrixXd::Zero(steps, modes);
    std::getline(is, line);  // column header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string f[4];
        for (auto& field : f) std::getline(ls, field, ',');
        const int k = std::stoi(f[0]);
        const int m = std::stoi(f[2]);
        if (k < 0 || k >= steps || m < 0 || m >= modes) throw std::runtime_error("noise CSV: index out of range");
        const double v = std::stod(f[3]);
        if (path.spec_.kind == NoiseKind::TraceClassWiener) {
            path.unit_(k, m) = v;
        } else {
            path.modal_(k, m) = v;
        }
    }
    if (path.spec_.kind == NoiseKind::TraceClassWiener) {
        const Vec amp = wiener_amplitudes(space, path.spec_.sigma, path.spec_.rho, modes);
        for (int k = 0; k < steps; ++k)
            for (int m = 0; m < modes; ++m) path.modal_(k, m) = amp[m] * path.unit_(k, m);
    }
    path.materialize(space);
    return path;
}

double DiffusionCoefficient::beta(const SpectralSpace& space, const Vec& x) const {
    switch (modulation) {
        case Modulation::Constant:
            return 1.0;
        case Modulation::Saturating:
            return 1.0 / (1.0 + space.norm_h(x));
        case Modulation::AffineClipped:
            return std::clamp(a + slope * space.norm_h(x), -clip, clip);
    }
    return 1.0;
}

double DiffusionCoefficient::lipschitz_beta() const {
    switch (modulation) {
        case Modulation::Constant:
            return 0.0;
        case Modulation::Saturating:
            return 1.0;
        case Modulation::AffineClipped:
            return std::abs(slope);
    }
    return 0.0;
}

double DiffusionCoefficient::sup_beta() const {
    return modulation == Modulation::AffineClipped ? clip : 1.0;
}

double DiffusionCoefficient::growth_h(const SpectralSpace& space) const {
    double acc = 0.0;
    for (int k = 0; k < b.size(); ++k) acc += b[k] * b[k] * space.h_weight(k);
    return sup_beta() * std::sqrt(acc);
}

double DiffusionCoefficient::lipschitz_h(const SpectralSpace& space) const {
    return sup_beta() > 0.0 ? lipschitz_beta() * growth_h(space) / sup_beta() : 0.0;
}

double DiffusionCoefficient::growth_s(const SpectralSpace& space) const {
    double acc = 0.0;
    for (int k = 0; k < b.size(); ++k) acc += b[k] * b[k] * space.s_weight(k);
    return sup_beta() * std::sqrt(acc);
}

Modulation parse_modulation(const std::string& name) {
    if (name == "constant") return Modulation::Constant;
    if (name == "saturating") return Modulation::Saturating;
    if (name == "affine_clipped") return Modulation::AffineClipped;
    throw std::invalid_argument("unknown modulation '" + name + "'");
}

std::string modulation_name(Modulation m) {
    switch (m) {
        case Modulation::Constant:
            return "constant";
        case Modulation::Saturating:
            return "saturating";
        case Modulation::AffineClipped:
            return "affine_clipped";
    }
    return "constant";
}

Vec multiplicative_increment(const SpectralSpace& space, const DiffusionCoefficient& coeff, const Vec& x,
                             const Vec& dw) {
    if (dw.size() > coeff.b.size()) throw std::invalid_argument("more Wiener modes than coefficient amplitudes");
    return modal_increment(space, coeff.b, dw, coeff.beta(space, x));
}

CoefficientAudit audit_coefficient(const SpectralSpace& space, const DiffusionCoefficient& coeff,
                                   const std::vector<Vec>& samples) {
    CoefficientAudit audit;
    const double hs_h = coeff.sup_beta() > 0.0 ? coeff.growth_h(space) / coeff.sup_beta() : 0.0;
    const double hs_s = coeff.sup_beta() > 0.0 ? coeff.growth_s(space) / coeff.sup_beta() : 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double bx = coeff.beta(space, samples[i]);
        audit.growth_h = std::max(audit.growth_h, std::abs(bx) * hs_h);
        audit.growth_s = std::max(audit.growth_s, std::abs(bx) * hs_s);
        if (i == 0) continue;
        const double dist = space.norm_h(samples[i] - samples[i - 1]);
        if (dist > 0.0) {
            const double by = coeff.beta(space, samples[i - 1]);
            audit.lipschitz_h = std::max(audit.lipschitz_h, std::abs(bx - by) * hs_h / dist);
        }
    }
    const double slack = 1e-12;
    audit.within_declared = audit.growth_h <= coeff.growth_h(space) * (1 + slack) + slack &&
                            audit.growth_s <= coeff.growth_s(space) * (1 + slack) + slack &&
                            audit.lipschitz_h <= coeff.lipschitz_h(space) * (1 + slack) + slack;
    return audit;
}

RegularityReport regularity_report(const SpectralSpace& space, const NoisePath& path) {
    RegularityReport report;
    const int m = path.driven_modes();
    if (m == 0 || path.steps() == 0) return report;
    Vec running = Vec::Zero(m);
    Vec energy = Vec::Zero(space.modes());
    for (int k = 0; k < path.steps(); ++k) {
        running += path.modal().row(k).transpose();
        for (int j = 0; j < m; ++j) {
            const double lam = space.eigenvalue(j);
            energy[j] += path.dt() * (1.0 + lam * lam * lam) * running[j] * running[j];
        }
    }
    const double total = energy.sum();
    report.l2_T32_norm = std::sqrt(total);
    if (total == 0.0) return report;
    const int half = space.modes() / 2;
    report.tail_fraction = energy.tail(space.modes() - half).sum() / total;
    report.certifies_hyp_g = std::isfinite(total) && report.tail_fraction <= 0.05;
    return report;
}

}  // namespace monoflow
