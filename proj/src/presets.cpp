#include "monoflow/presets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>

namespace monoflow {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Deterministic:
            return "deterministic";
        case Variant::Wiener:
            return "wiener";
        case Variant::Poisson:
            return "poisson";
        case Variant::Multiplicative:
            return "multiplicative";
    }
    return "deterministic";
}

Variant parse_variant(const std::string& name) {
    if (name == "deterministic") return Variant::Deterministic;
    if (name == "wiener") return Variant::Wiener;
    if (name == "poisson") return Variant::Poisson;
    if (name == "multiplicative") return Variant::Multiplicative;
    throw std::invalid_argument("unknown variant '" + name + "'");
}

namespace {

std::string graph_key(GraphKind k) {
    switch (k) {
        case GraphKind::Power:
            return "power";
        case GraphKind::LogPlasma:
            return "log_plasma";
        case GraphKind::Arctan:
            return "arctan";
        case GraphKind::MinimalSurface:
            return "minimal_surface";
        case GraphKind::PlasticShear:
            return "plastic_shear";
    }
    return "power";
}

GraphKind parse_graph(const std::string& s) {
    if (s == "power") return GraphKind::Power;
    if (s == "log_plasma") return GraphKind::LogPlasma;
    if (s == "arctan") return GraphKind::Arctan;
    if (s == "minimal_surface") return GraphKind::MinimalSurface;
    if (s == "plastic_shear") return GraphKind::PlasticShear;
    throw std::invalid_argument("unknown graph kind '" + s + "'");
}

Boundary parse_boundary(const std::string& s) {
    if (s == "dirichlet") return Boundary::Dirichlet;
    if (s == "neumann") return Boundary::NeumannMeanZero;
    throw std::invalid_argument("unknown boundary '" + s + "'");
}

DriftForm parse_form(const std::string& s) {
    if (s == "divergence") return DriftForm::Divergence;
    if (s == "diffusion") return DriftForm::Diffusion;
    throw std::invalid_argument("unknown drift form '" + s + "'");
}

struct Base {
    std::string name;
    std::vector<Variant> variants;
    std::function<void(ExperimentPreset&)> fill;
};

const std::vector<Variant> kAll = {Variant::Deterministic, Variant::Wiener, Variant::Poisson, Variant::Multiplicative};
const std::vector<Variant> kAdditive = {Variant::Deterministic, Variant::Wiener, Variant::Poisson};

void divergence_1d(ExperimentPreset& p, int n, GraphKind g, double power) {
    p.dim = 1;
    p.n = n;
    p.graph = g;
    p.p = power;
    p.form = DriftForm::Divergence;
    p.solver.dt = 1e-3;
    p.solver.horizon = 0.1;
    p.initial.coeffs = {1.0, 0.0, 0.5};
    p.diagnostics = {"norm_h", "norm_s", "energy"};
}

const std::vector<Base>& bases() {
    static const std::vector<Base> b = {
        {"tvflow_1d", kAll,
         [](ExperimentPreset& p) {
             divergence_1d(p, 256, GraphKind::Power, 1.0);
             p.noise = NoiseSpec::wiener(100.0, 2.0);
             p.diagnostics = {"norm_h", "norm_s", "energy", "limit_gaps", "occupation"};
             p.paths = 64;
             p.horizons = {20.0, 200.0};
             p.dictionary_scale = 0.25;
         }},
        {"tvflow_2d", kAdditive,
         [](ExperimentPreset& p) {
             p.dim = 2;
             p.n = 48;
             p.graph = GraphKind::Power;
             p.p = 1.0;
             p.form = DriftForm::Divergence;
             p.solver.dt = 1e-3;
             p.solver.horizon = 0.02;
             p.noise = NoiseSpec::wiener(100.0, 2.5);
             p.diagnostics = {"norm_h", "energy"};
         }},
        {"fastdiff_1d", kAll,
         [](ExperimentPreset& p) {
             p.n = 128;
             p.graph = GraphKind::Power;
             p.p = 1.5;
             p.form = DriftForm::Diffusion;
             p.solver.dt = 1e-3;
             p.solver.horizon = 1.0;
             p.noise = NoiseSpec::wiener(1.0, 2.0);
             p.diagnostics = {"norm_h", "extinction"};
         }},
        {"fastdiff_p1_1d", kAdditive,
         [](ExperimentPreset& p) {
             p.n = 128;
             p.graph = GraphKind::Power;
             p.p = 1.0;
             p.form = DriftForm::Diffusion;
             p.solver.dt = 1e-3;
             p.solver.horizon = 0.5;
             p.noise = NoiseSpec::wiener(1.0, 2.0);
             p.diagnostics = {"norm_h", "extinction"};
         }},
        {"plasma_2d", kAdditive,
         [](ExperimentPreset& p) {
             p.dim = 2;
             p.n = 48;
             p.graph = GraphKind::LogPlasma;
             p.form = DriftForm::Diffusion;
             p.solver.dt = 0.05;
             p.solver.horizon = 10.0;
             p.initial.kind = "random";
             p.initial.amplitude = 1.0;
             p.noise = NoiseSpec::wiener(1.0, 2.5);
             p.diagnostics = {"norm_h", "theta", "decay"};
         }},
        {"curveshort_1d", kAll,
         [](ExperimentPreset& p) {
             divergence_1d(p, 128, GraphKind::Arctan, 2.0);
             p.noise = NoiseSpec::wiener(10.0, 2.0);
         }},
        {"msf_1d", kAll,
         [](ExperimentPreset& p) {
             divergence_1d(p, 128, GraphKind::MinimalSurface, 2.0);
             p.noise = NoiseSpec::wiener(10.0, 2.0);
         }},
        {"pshear_1d", kAll,
         [](ExperimentPreset& p) {
             divergence_1d(p, 128, GraphKind::PlasticShear, 2.0);
             p.noise = NoiseSpec::wiener(10.0, 2.0);
         }},
        {"neumann_plap_1d", kAll,
         [](ExperimentPreset& p) {
             divergence_1d(p, 128, GraphKind::Power, 1.5);
             p.boundary = Boundary::NeumannMeanZero;
             p.noise = NoiseSpec::wiener(10.0, 2.0);
         }},
    };
    return b;
}

const Base& find_base(const std::string& name) {
    for (const auto& b : bases())
        if (b.name == name) return b;
    throw std::invalid_argument("unknown preset '" + name + "'");
}

void apply_variant(ExperimentPreset& p, Variant v) {
    p.variant = v;
    switch (v) {
        case Variant::Deterministic:
            p.noise = NoiseSpec::zero();
            break;
        case Variant::Wiener:
            p.claims_s_regular = true;
            p.solver.dt = std::max(p.solver.dt, 1e-2);
            p.solver.horizon = std::max(p.solver.horizon, 1.0);
            break;
        case Variant::Poisson:
            p.noise = NoiseSpec::compound_poisson(5.0, {0, 1, 2}, 1.0);
            p.solver.dt = std::max(p.solver.dt, 1e-2);
            p.solver.horizon = std::max(p.solver.horizon, 1.0);
            break;
        case Variant::Multiplicative:
            p.noise = NoiseSpec::zero();
            p.coefficient = CoefficientSpec{};
            p.coefficient.sigma = 10.0;
            p.solver.dt = std::max(p.solver.dt, 1e-2);
            p.solver.horizon = std::max(p.solver.horizon, 1.0);
            break;
    }
    if (p.variant != Variant::Multiplicative) p.coefficient.sigma = 0.0;
    for (double& h : p.horizons) h = std::max(h, p.solver.dt);
}

// Typed reads that record problems instead of throwing.
class Reader {
public:
    explicit Reader(const Config& cfg) : cfg_(cfg) {}

    template <class F>
    void read(const std::string& sec, const std::string& key, F&& assign) {
        seen_.insert({sec, key});
        const auto v = cfg_.get(sec, key);
        if (!v) return;
        try {
            if (!assign(*v)) issues_.push_back(sec + "." + key + ": cannot parse '" + *v + "'");
        } catch (const std::exception& e) {
            issues_.push_back(sec + "." + key + ": " + e.what());
        }
    }

    void number(const std::string& sec, const std::string& key, double& out) {
        read(sec, key, [&](const std::string& s) {
            const auto d = parse_double(s);
            if (d) out = *d;
            return d.has_value();
        });
    }
    void integer(const std::string& sec, const std::string& key, int& out) {
        read(sec, key, [&](const std::string& s) {
            const auto d = parse_int(s);
            if (d && *d >= INT32_MIN && *d <= INT32_MAX) {
                out = static_cast<int>(*d);
                return true;
            }
            return false;
        });
    }
    void u64(const std::string& sec, const std::string& key, std::uint64_t& out) {
        read(sec, key, [&](const std::string& s) {
            const auto d = parse_u64(s);
            if (d) out = *d;
            return d.has_value();
        });
    }
    void flag(const std::string& sec, const std::string& key, bool& out) {
        read(sec, key, [&](const std::string& s) {
            const auto d = parse_bool(s);
            if (d) out = *d;
            return d.has_value();
        });
    }
    void numbers(const std::string& sec, const std::string& key, std::vector<double>& out) {
        read(sec, key, [&](const std::string& s) {
            std::vector<double> v;
            for (const auto& item : split_list(s)) {
                const auto d = parse_double(item);
                if (!d) return false;
                v.push_back(*d);
            }
            out = std::move(v);
            return true;
        });
    }
    void integers(const std::string& sec, const std::string& key, std::vector<int>& out) {
        read(sec, key, [&](const std::string& s) {
            std::vector<int> v;
            for (const auto& item : split_list(s)) {
                const auto d = parse_int(item);
                if (!d) return false;
                v.push_back(static_cast<int>(*d));
            }
            out = std::move(v);
            return true;
        });
    }
    template <class T, class P>
    void choice(const std::string& sec, const std::string& key, T& out, P&& parse) {
        read(sec, key, [&](const std::string& s) {
            out = parse(s);
            return true;
        });
    }

    void flag_unknown() {
        for (const auto& s : cfg_.sections()) {
            for (const auto& [k, v] : s.entries) {
                if (!seen_.count({s.name, k})) issues_.push_back(s.name + "." + k + ": unknown key");
            }
        }
    }

    std::vector<std::string>& issues() { return issues_; }

private:
    const Config& cfg_;
    std::set<std::pair<std::string, std::string>> seen_;
    std::vector<std::string> issues_;
};

std::string list_of(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double d : v) s.push_back(format_double(d));
    return join_list(s);
}

std::string list_of(const std::vector<int>& v) {
    std::vector<std::string> s;
    for (int d : v) s.push_back(std::to_string(d));
    return join_list(s);
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& b : bases()) out.push_back(b.name);
    return out;
}

std::vector<Variant> preset_variants(const std::string& base) { return find_base(base).variants; }

ExperimentPreset make_preset(const std::string& name) {
    const auto dot = name.find('.');
    const std::string base_name = name.substr(0, dot);
    const Variant v = dot == std::string::npos ? Variant::Deterministic : parse_variant(name.substr(dot + 1));
    const Base& base = find_base(base_name);
    if (std::find(base.variants.begin(), base.variants.end(), v) == base.variants.end()) {
        throw std::invalid_argument("preset " + base_name + " has no " + variant_name(v) + " variant");
    }
    ExperimentPreset p;
    p.name = base_name;
    base.fill(p);
    apply_variant(p, v);
    return p;
}

void ExperimentPreset::validate() const {
    std::vector<std::string> issues;
    auto need = [&](bool ok, const std::string& what) {
        if (!ok) issues.push_back(what);
    };
    need(dim == 1 || dim == 2, "spectral_space.dim: must be 1 or 2");
    need(n >= 2 && n <= 4096, "spectral_space.n: must lie in [2, 4096]");
    need(graph != GraphKind::Power || (p >= 1.0 && p <= 2.0), "monotone_graphs.p: must lie in [1, 2]");
    need(delta >= 0.0, "monotone_graphs.delta: must be >= 0");
    need(form == DriftForm::Divergence || boundary == Boundary::Dirichlet,
         "drift_ops.form: diffusion form needs dirichlet boundary");
    need(newton_tol > 0.0, "drift_ops.newton_tol: must be > 0");
    need(newton_max_iter >= 1, "drift_ops.newton_max_iter: must be >= 1");
    need(solver.dt > 0.0, "evolve.dt: must be > 0");
    need(solver.horizon >= solver.dt, "evolve.horizon: must be >= dt");
    need(solver.epsilon >= 0.0, "evolve.epsilon: must be >= 0");
    need(solver.galerkin_modes >= 0, "evolve.galerkin_modes: must be >= 0");
    need(solver.picard.window >= 0.0, "evolve.picard_window: must be >= 0");
    need(solver.picard.tol > 0.0, "evolve.picard_tol: must be > 0");
    need(solver.picard.max_sweeps >= 1, "evolve.picard_max_sweeps: must be >= 1");
    need(solver.extinction_threshold >= 0.0, "evolve.extinction_threshold: must be >= 0");
    need(paths >= 1, "ergodics.paths: must be >= 1");
    need(!horizons.empty(), "ergodics.horizons: must not be empty");
    for (double h : horizons) {
        const double k = std::round(h / solver.dt);
        need(h > 0.0 && k >= 1.0 && std::abs(k * solver.dt - h) <= 1e-9 * h,
             "ergodics.horizons: " + format_double(h) + " is not a positive multiple of dt");
    }
    need(dictionary_scale > 0.0, "ergodics.dictionary_scale: must be > 0");
    for (double r : radii) need(r > 0.0, "ergodics.radii: entries must be > 0");
    need(fit_t0 > 0.0 && fit_t1 > fit_t0, "harness.fit_window: needs 0 < t0 < t1");
    need(initial.kind == "sine" || initial.kind == "random" || initial.kind == "zero",
         "harness.initial: must be sine, random or zero");
    need(initial.norm >= 0.0, "harness.initial_norm: must be >= 0");

    const NoiseKind expected = variant == Variant::Wiener    ? NoiseKind::TraceClassWiener
                               : variant == Variant::Poisson ? NoiseKind::CompoundPoisson
                                                             : NoiseKind::Zero;
    need(noise.kind == expected, "noise.kind: " + noise.kind_name() + " does not match the " + variant_name(variant) +
                                     " variant");
    if (variant == Variant::Multiplicative) {
        need(coefficient.sigma > 0.0, "noise.coefficient_sigma: must be > 0 for the multiplicative variant");
        need(coefficient.modes >= 1, "noise.coefficient_modes: must be >= 1");
        need(coefficient.clip > 0.0, "noise.modulation_clip: must be > 0");
    }
    need(!claims_s_regular || noise.kind == NoiseKind::TraceClassWiener,
         "harness.claims_s_regular: only wiener noise can be certified");

    if (issues.empty() && dim >= 1 && n >= 2) {
        const auto space = build_space(*this);
        try {
            noise.validate(*space);
        } catch (const std::exception& e) {
            issues.push_back(std::string("noise: ") + e.what());
        }
        need(coefficient.modes <= space->modes(), "noise.coefficient_modes: exceeds the number of modes");
        if (issues.empty() && claims_s_regular) {
            const NoisePath path = sample_path(*space, noise, seed, solver.dt, 16);
            const RegularityReport rep = regularity_report(*space, path);
            need(rep.certifies_hyp_g, "noise.rho: tail fraction " + format_double(rep.tail_fraction) +
                                          " too large to certify pathwise S-regularity");
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

Config to_config(const ExperimentPreset& p) {
    Config c;
    c.set("harness", "preset", p.name);
    c.set("harness", "variant", variant_name(p.variant));
    c.set("harness", "seed", std::to_string(p.seed));
    c.set("harness", "initial", p.initial.kind);
    c.set("harness", "initial_coeffs", list_of(p.initial.coeffs));
    c.set("harness", "initial_amplitude", format_double(p.initial.amplitude));
    c.set("harness", "initial_seed", std::to_string(p.initial.seed));
    c.set("harness", "initial_norm", format_double(p.initial.norm));
    c.set("harness", "claims_s_regular", p.claims_s_regular ? "true" : "false");
    c.set("harness", "diagnostics", join_list(p.diagnostics));
    c.set("harness", "fit_window", list_of(std::vector<double>{p.fit_t0, p.fit_t1}));

    c.set("spectral_space", "dim", std::to_string(p.dim));
    c.set("spectral_space", "n", std::to_string(p.n));
    c.set("spectral_space", "boundary", p.boundary == Boundary::Dirichlet ? "dirichlet" : "neumann");

    c.set("monotone_graphs", "kind", graph_key(p.graph));
    c.set("monotone_graphs", "p", format_double(p.p));
    c.set("monotone_graphs", "delta", format_double(p.delta));

    c.set("drift_ops", "form", p.form == DriftForm::Divergence ? "divergence" : "diffusion");
    c.set("drift_ops", "newton_tol", format_double(p.newton_tol));
    c.set("drift_ops", "newton_max_iter", std::to_string(p.newton_max_iter));

    c.set("noise", "kind", p.noise.kind_name());
    c.set("noise", "sigma", format_double(p.noise.sigma));
    c.set("noise", "rho", format_double(p.noise.rho));
    c.set("noise", "rate", format_double(p.noise.rate));
    c.set("noise", "jump_modes", list_of(p.noise.jump_modes));
    c.set("noise", "jump_scale", format_double(p.noise.jump_scale));
    c.set("noise", "modes", std::to_string(p.noise.modes));
    c.set("noise", "coefficient_sigma", format_double(p.coefficient.sigma));
    c.set("noise", "coefficient_rho", format_double(p.coefficient.rho));
    c.set("noise", "coefficient_modes", std::to_string(p.coefficient.modes));
    c.set("noise", "modulation", modulation_name(p.coefficient.modulation));
    c.set("noise", "modulation_a", format_double(p.coefficient.a));
    c.set("noise", "modulation_slope", format_double(p.coefficient.slope));
    c.set("noise", "modulation_clip", format_double(p.coefficient.clip));

    c.set("evolve", "dt", format_double(p.solver.dt));
    c.set("evolve", "horizon", format_double(p.solver.horizon));
    c.set("evolve", "epsilon", format_double(p.solver.epsilon));
    c.set("evolve", "galerkin_modes", std::to_string(p.solver.galerkin_modes));
    c.set("evolve", "picard_window", format_double(p.solver.picard.window));
    c.set("evolve", "picard_tol", format_double(p.solver.picard.tol));
    c.set("evolve", "picard_max_sweeps", std::to_string(p.solver.picard.max_sweeps));
    c.set("evolve", "extinction_threshold", format_double(p.solver.extinction_threshold));
    c.set("evolve", "record_states", p.solver.record_states ? "true" : "false");
    c.set("evolve", "record_selections", p.solver.record_selections ? "true" : "false");

    c.set("ergodics", "paths", std::to_string(p.paths));
    c.set("ergodics", "horizons", list_of(p.horizons));
    c.set("ergodics", "dictionary_scale", format_double(p.dictionary_scale));
    c.set("ergodics", "partner_scale", format_double(p.partner_scale));
    c.set("ergodics", "radii", list_of(p.radii));
    return c;
}

ExperimentPreset preset_from_config(const Config& cfg) {
    std::vector<std::string> issues;
    ExperimentPreset p;
    const auto name = cfg.get("harness", "preset");
    const auto variant = cfg.get("harness", "variant");
    if (name) {
        try {
            p = make_preset(*name + (variant ? "." + *variant : std::string()));
        } catch (const std::exception& e) {
            issues.push_back(std::string("harness.preset: ") + e.what());
        }
    } else {
        p.name = "custom";
        if (variant) {
            try {
                p.variant = parse_variant(*variant);
            } catch (const std::exception& e) {
                issues.push_back(std::string("harness.variant: ") + e.what());
            }
        }
    }

    Reader r(cfg);
    r.read("harness", "preset", [](const std::string&) { return true; });
    r.read("harness", "variant", [](const std::string&) { return true; });
    r.u64("harness", "seed", p.seed);
    r.read("harness", "initial", [&](const std::string& s) {
        p.initial.kind = s;
        return true;
    });
    r.numbers("harness", "initial_coeffs", p.initial.coeffs);
    r.number("harness", "initial_amplitude", p.initial.amplitude);
    r.u64("harness", "initial_seed", p.initial.seed);
    r.number("harness", "initial_norm", p.initial.norm);
    r.flag("harness", "claims_s_regular", p.claims_s_regular);
    r.read("harness", "diagnostics", [&](const std::string& s) {
        p.diagnostics = split_list(s);
        return true;
    });
    r.read("harness", "fit_window", [&](const std::string& s) {
        const auto items = split_list(s);
        if (items.size() != 2) return false;
        const auto a = parse_double(items[0]), b = parse_double(items[1]);
        if (!a || !b) return false;
        p.fit_t0 = *a;
        p.fit_t1 = *b;
        return true;
    });

    r.integer("spectral_space", "dim", p.dim);
    r.integer("spectral_space", "n", p.n);
    r.choice("spectral_space", "boundary", p.boundary, parse_boundary);

    r.choice("monotone_graphs", "kind", p.graph, parse_graph);
    r.number("monotone_graphs", "p", p.p);
    r.number("monotone_graphs", "delta", p.delta);

    r.choice("drift_ops", "form", p.form, parse_form);
    r.number("drift_ops", "newton_tol", p.newton_tol);
    r.integer("drift_ops", "newton_max_iter", p.newton_max_iter);

    r.choice("noise", "kind", p.noise.kind, parse_noise_kind);
    r.number("noise", "sigma", p.noise.sigma);
    r.number("noise", "rho", p.noise.rho);
    r.number("noise", "rate", p.noise.rate);
    r.integers("noise", "jump_modes", p.noise.jump_modes);
    r.number("noise", "jump_scale", p.noise.jump_scale);
    r.integer("noise", "modes", p.noise.modes);
    r.number("noise", "coefficient_sigma", p.coefficient.sigma);
    r.number("noise", "coefficient_rho", p.coefficient.rho);
    r.integer("noise", "coefficient_modes", p.coefficient.modes);
    r.choice("noise", "modulation", p.coefficient.modulation, parse_modulation);
    r.number("noise", "modulation_a", p.coefficient.a);
    r.number("noise", "modulation_slope", p.coefficient.slope);
    r.number("noise", "modulation_clip", p.coefficient.clip);

    r.number("evolve", "dt", p.solver.dt);
    r.number("evolve", "horizon", p.solver.horizon);
    r.number("evolve", "epsilon", p.solver.epsilon);
    r.integer("evolve", "galerkin_modes", p.solver.galerkin_modes);
    r.number("evolve", "picard_window", p.solver.picard.window);
    r.number("evolve", "picard_tol", p.solver.picard.tol);
    r.integer("evolve", "picard_max_sweeps", p.solver.picard.max_sweeps);
    r.number("evolve", "extinction_threshold", p.solver.extinction_threshold);
    r.flag("evolve", "record_states", p.solver.record_states);
    r.flag("evolve", "record_selections", p.solver.record_selections);

    r.integer("ergodics", "paths", p.paths);
    r.numbers("ergodics", "horizons", p.horizons);
    r.number("ergodics", "dictionary_scale", p.dictionary_scale);
    r.number("ergodics", "partner_scale", p.partner_scale);
    r.numbers("ergodics", "radii", p.radii);

    r.flag_unknown();
    for (auto& i : r.issues()) issues.push_back(std::move(i));
    // unparsable values kept their preset defaults, so the rest can still be checked
    try {
        p.validate();
    } catch (const ConfigError& e) {
        for (const auto& i : e.issues()) issues.push_back(i);
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return p;
}

std::shared_ptr<const SpectralSpace> build_space(const ExperimentPreset& p) {
    return std::make_shared<const SpectralSpace>(GridDomain(p.dim, p.n, p.boundary), p.mode());
}

DriftOperator build_operator(const ExperimentPreset& p, std::shared_ptr<const SpectralSpace> space) {
    ScalarGraph g = ScalarGraph::power(2.0);
    switch (p.graph) {
        case GraphKind::Power:
            g = ScalarGraph::power(p.p, p.delta);
            break;
        case GraphKind::LogPlasma:
            g = ScalarGraph::log_plasma();
            break;
        case GraphKind::Arctan:
            g = ScalarGraph::arctan();
            break;
        case GraphKind::MinimalSurface:
            g = ScalarGraph::minimal_surface();
            break;
        case GraphKind::PlasticShear:
            g = ScalarGraph::plastic_shear();
            break;
    }
    NewtonOptions newton;
    newton.tol = p.newton_tol;
    newton.max_iter = p.newton_max_iter;
    return DriftOperator(std::move(space), g, p.form, newton);
}

Vec initial_state(const ExperimentPreset& p, const SpectralSpace& space) {
    const GridDomain& grid = space.grid();
    const int n = grid.n();
    const double h = grid.h();
    Vec x = Vec::Zero(grid.size());
    if (p.initial.kind == "sine") {
        for (std::size_t j = 0; j < p.initial.coeffs.size(); ++j) {
            const double c = p.initial.amplitude * p.initial.coeffs[j];
            const double w = M_PI * static_cast<double>(j + 1);
            for (int i = 0; i < grid.size(); ++i) {
                const double sx = std::sin(w * (i % n + 1) * h);
                const double sy = grid.dim() == 2 ? std::sin(w * (i / n + 1) * h) : 1.0;
                x[i] += c * sx * sy;
            }
        }
    } else if (p.initial.kind == "random") {
        std::mt19937_64 rng = make_engine(p.initial.seed);
        std::uniform_real_distribution<double> u(-p.initial.amplitude, p.initial.amplitude);
        for (int i = 0; i < grid.size(); ++i) x[i] = u(rng);
    }
    x = space.admissible(x);
    if (p.initial.norm > 0.0) {
        const double nx = space.norm_h(x);
        if (nx > 0.0) x *= p.initial.norm / nx;
    }
    return x;
}

DiffusionCoefficient build_coefficient(const ExperimentPreset& p, const SpectralSpace& space) {
    DiffusionCoefficient c;
    c.b = wiener_amplitudes(space, p.coefficient.sigma, p.coefficient.rho, p.coefficient.modes);
    c.modulation = p.coefficient.modulation;
    c.a = p.coefficient.a;
    c.slope = p.coefficient.slope;
    c.clip = p.coefficient.clip;
    return c;
}

}  // namespace monoflow
