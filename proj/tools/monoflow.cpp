#include "monoflow/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace monoflow;
    CLI::App app{"monoflow: implicit solvers and ergodic diagnostics for monotone stochastic flows"};
    app.require_subcommand(0, 1);

    RunOptions opts;
    std::uint64_t seed = 0;
    double horizon = 0.0, dt = 0.0;
    int paths = 0;
    bool list = false;

    app.add_flag("--list-presets", list, "print preset names and variants, then exit");
    const std::vector<std::pair<std::string, std::string>> descriptions = {
        {"simulate", "one trajectory -> trajectory.csv"},
        {"ergodic", "occupation averages for two starts"},
        {"extinction", "deterministic run with extinction-time bound"},
        {"decay", "deterministic run with log-log slope fit"},
        {"picard", "multiplicative run with sweep log"},
        {"verify", "hermetic property suite"},
        {"dump-noise", "one sampled noise path -> noise.csv"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : descriptions) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config_path, "config file")->check(CLI::ExistingFile);
        sub->add_option("--preset", opts.preset, "preset name, optionally with .variant");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--horizon", horizon, "time horizon");
        sub->add_option("--dt", dt, "time step");
        sub->add_option("--paths", paths, "number of sample paths");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (list) {
        for (const auto& name : preset_names()) {
            std::cout << name << ':';
            for (Variant v : preset_variants(name)) std::cout << ' ' << variant_name(v);
            std::cout << '\n';
        }
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
    }

    for (CLI::App* sub : subs) {
        if (!sub->parsed()) continue;
        opts.subcommand = sub->get_name();
        if (sub->count("--seed")) opts.seed = seed;
        if (sub->count("--horizon")) opts.horizon = horizon;
        if (sub->count("--dt")) opts.dt = dt;
        if (sub->count("--paths")) opts.paths = paths;
    }

    try {
        return run(opts, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 3;
    } catch (const StepFailure& e) {
        std::cerr << "numerical failure at step " << e.step() << ": residual " << e.residual() << " after "
                  << e.iterations() << " iterations (" << e.what() << ")\n";
        return 4;
    } catch (const PicardStall& e) {
        std::cerr << "picard iteration stalled in window " << e.window() << " after " << e.sweeps()
                  << " sweeps, gap " << e.gap() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
