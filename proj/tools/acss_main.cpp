#include "acss/bench.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

void print_summary(const std::vector<acss::ExperimentRow>& rows, double alpha) {
    std::fprintf(stderr, "%-26s %8s %6s %8s %8s %6s\n", "method", "grid", "reps", "rate", "se", "errors");
    for (const auto& s : acss::summarize(rows, alpha))
        std::fprintf(stderr, "%-26s %8.3g %6d %8.4f %8.4f %6d\n", s.method.c_str(), s.grid, s.reps, s.rate, s.se, s.errors);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acss: approximate co-sufficient sampling experiments"};
    app.require_subcommand(1);

    std::string config_path, out, format;
    int reps = -1, threads = 0;
    std::uint64_t seed = 0;
    bool have_seed = false, no_timing = false;
    auto* run = app.add_subcommand("run", "run an experiment described by a JSON config");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--reps", reps, "replications (overrides config)");
    run->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { seed = s; have_seed = true; },
                                            "master seed (overrides config)");
    run->add_option("--out", out, "output path ('-' = stdout)");
    run->add_option("--format", format, "csv|json|svg-lines");
    run->add_option("--threads", threads, "worker threads");
    run->add_flag("--no-timing", no_timing, "write ms = 0 so repeated runs are byte-identical");

    std::string suite = "exchangeability";
    int vreps = 1000, vthreads = 1;
    std::uint64_t vseed = 20240601;
    auto* val = app.add_subcommand("validate", "check super-uniformity of a validity suite");
    val->add_option("--suite", suite, "exchangeability|resampling-free")->required();
    val->add_option("--reps", vreps, "replications");
    val->add_option("--seed", vseed, "master seed");
    val->add_option("--threads", vthreads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (run->parsed()) {
        acss::ExperimentConfig cfg;
        acss::OutputFormat fmt;
        try {
            cfg = acss::load_config(config_path);
            if (reps >= 0) cfg.replications = reps;
            if (have_seed) cfg.master_seed = seed;
            if (!out.empty()) cfg.out = out;
            if (!format.empty()) cfg.format = format;
            if (threads > 0) cfg.threads = threads;
            fmt = acss::parse_format(cfg.format);
            cfg.validate();
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 1;
        }
        try {
            auto rows = acss::run_experiment(cfg, cfg.threads);
            if (no_timing)
                for (auto& r : rows) r.ms = 0.0;
            acss::emit(rows, cfg.alpha, fmt, cfg.out.empty() ? "-" : cfg.out);
            print_summary(rows, cfg.alpha);
            for (const auto& r : rows)
                if (!r.error.empty()) return 2;
            return 0;
        } catch (const acss::ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 1;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }
    }

    acss::ExperimentConfig cfg;
    try {
        cfg = acss::default_config(acss::Experiment::ValiditySuite);
        cfg.suite = suite;
        cfg.replications = vreps;
        cfg.master_seed = vseed;
        cfg.threads = std::max(1, vthreads);
        cfg.methods = acss::validity_suite_methods(suite);
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    const auto rows = acss::run_experiment(cfg, cfg.threads);
    bool ok = true, errors = false;
    for (const auto& r : rows) errors = errors || !r.error.empty();
    for (const auto& c : acss::check_validity(rows)) {
        std::printf("%s %-22s alpha=%.2f rate=%.4f bound=%.4f\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.alpha,
                    c.rate, c.alpha + 2 * c.se);
        ok = ok && c.pass;
    }
    if (errors) return 2;
    return ok ? 0 : 2;
}
