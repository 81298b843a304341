#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "parsplit/applications.hpp"
#include "parsplit/config.hpp"
#include "parsplit/coupling.hpp"
#include "parsplit/solver.hpp"

namespace parsplit {

namespace cli_detail {

struct SourceFlags {
    std::string config_path;
    std::string demo;
};

struct SolveFlags {
    SourceFlags source;
    std::string trace_out;
    std::optional<double> tol;
    std::optional<std::size_t> max_iter;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    std::optional<double> gamma;
    std::optional<double> lambda;
};

inline void add_source(CLI::App* cmd, SourceFlags& s)
{
    auto* c = cmd->add_option("--config", s.config_path, "problem configuration file (JSON)");
    auto* d = cmd->add_option("--demo", s.demo, "built-in demo name (see `list`)");
    c->excludes(d);
    d->excludes(c);
}

inline ProblemConfig load_source(const SourceFlags& s)
{
    if (!s.config_path.empty()) {
        return load_config(s.config_path);
    }
    if (!s.demo.empty()) {
        return demo_config(s.demo);
    }
    throw ConfigError("one of --config or --demo is required");
}

inline json vector_json(const Vector& v)
{
    return json(v);
}

inline int cmd_list(bool machine, std::ostream& out)
{
    if (machine) {
        json kinds = json::array();
        for (const auto& info : builtin_applications()) {
            kinds.push_back({{"kind", to_string(info.kind)},
                             {"description", info.description},
                             {"beta", info.beta_formula}});
        }
        json demos = json::array();
        for (const auto& d : demo_sources()) {
            demos.push_back(d.first);
        }
        out << json{{"kinds", kinds}, {"demos", demos}}.dump(2) << '\n';
        return 0;
    }
    for (const auto& info : builtin_applications()) {
        out << to_string(info.kind) << "  beta = " << info.beta_formula << "  " << info.description << '\n';
    }
    out << "\ndemos:";
    for (const auto& d : demo_sources()) {
        out << ' ' << d.first;
    }
    out << '\n';
    return 0;
}

inline int cmd_solve(const SolveFlags& f, std::ostream& out, std::ostream& err)
{
    ProblemConfig cfg;
    std::optional<BuiltProblem> built;
    std::optional<SolverConfig> config;
    BlockVector x0;
    try {
        cfg = load_source(f.source);
        if (f.tol) {
            cfg.solver.tol = *f.tol;
        }
        if (f.max_iter) {
            cfg.solver.max_iter = *f.max_iter;
        }
        if (f.workers) {
            cfg.solver.workers = *f.workers;
        }
        if (f.seed) {
            cfg.solver.seed = *f.seed;
        }
        if (f.gamma) {
            cfg.solver.gamma = *f.gamma;
        }
        if (f.lambda) {
            cfg.solver.lambda = *f.lambda;
        }
        built.emplace(build_problem(cfg));
        x0 = initial_point(cfg, built->instance.dims());
        try {
            config.emplace(built->instance.beta(), solver_options(cfg, built->instance.dims()));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("solver: ") + e.what());
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    SolveResult result;
    try {
        result = solve(built->instance, *config, x0);
    } catch (const ScheduleError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: solve failed: " << e.what() << '\n';
        return 1;
    }

    if (!f.trace_out.empty()) {
        std::ofstream trace(f.trace_out, std::ios::binary);
        if (!trace) {
            err << "error: cannot write trace to '" << f.trace_out << "'\n";
            return 1;
        }
        result.trace.write_csv(trace, built->instance.num_blocks());
    }

    json blocks = json::array();
    for (const auto& b : result.x.blocks()) {
        blocks.push_back(vector_json(b));
    }
    json summary = {{"name", cfg.name},
                    {"kind", cfg.kind},
                    {"status", to_string(result.status)},
                    {"iterations", result.iterations},
                    {"final_residual", result.final_residual},
                    {"beta", result.beta},
                    {"certificate", to_string(result.provenance)},
                    {"x", blocks}};
    out << summary.dump(2) << '\n';
    switch (result.status) {
    case SolveStatus::converged: return 0;
    case SolveStatus::max_iter: return 2;
    case SolveStatus::diverged: return 3;
    }
    return 1;
}

inline int cmd_certify(const SourceFlags& s, std::size_t pairs, std::uint64_t seed, std::ostream& out,
                       std::ostream& err)
{
    std::optional<BuiltProblem> built;
    try {
        built.emplace(build_problem(load_source(s)));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    const CouplingOperator& b = built->instance.coupling();
    CocoercivityReport r = certify_cocoercivity(b, gaussian_block_pair_sampler(b.dims()), pairs, seed);
    const bool ok = r.worst_margin >= -1e-9;
    out << json{{"beta", b.beta()},
                {"certificate", to_string(b.certificate().provenance())},
                {"samples", r.samples},
                {"worst_margin", r.worst_margin},
                {"worst_relative_margin", r.worst_relative_margin},
                {"max_pair_norm_sq", r.max_pair_norm_sq},
                {"passes", ok}}
               .dump(2)
        << '\n';
    return ok ? 0 : 1;
}

} // namespace cli_detail

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Parallel forward-backward splitting for coupled monotone inclusions", "parsplit"};
    app.require_subcommand(1);

    bool machine = false;
    auto* list = app.add_subcommand("list", "list built-in problem kinds and demos");
    list->add_flag("--json", machine, "machine-readable listing");

    cli_detail::SolveFlags sf;
    auto* solve_cmd = app.add_subcommand("solve", "run the solver on a configuration");
    cli_detail::add_source(solve_cmd, sf.source);
    solve_cmd->add_option("--trace-out", sf.trace_out, "write the iteration trace as CSV");
    solve_cmd->add_option("--tol", sf.tol, "residual tolerance");
    solve_cmd->add_option("--max-iter", sf.max_iter, "iteration limit");
    solve_cmd->add_option("--workers", sf.workers, "worker threads")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--seed", sf.seed, "seed for random starting points");
    solve_cmd->add_option("--gamma", sf.gamma, "constant step size");
    solve_cmd->add_option("--lambda", sf.lambda, "constant relaxation");

    cli_detail::SourceFlags cs;
    std::size_t pairs = 10000;
    std::uint64_t seed = 7;
    auto* certify_cmd = app.add_subcommand("certify", "sample the cocoercivity inequality of the coupling");
    cli_detail::add_source(certify_cmd, cs);
    certify_cmd->add_option("--pairs", pairs, "number of sampled pairs")->check(CLI::PositiveNumber);
    certify_cmd->add_option("--seed", seed, "sampler seed");

    auto* demo_cmd = app.add_subcommand("demo", "print a built-in demo configuration");
    std::string demo_name;
    demo_cmd->add_option("name", demo_name, "demo name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    if (list->parsed()) {
        return cli_detail::cmd_list(machine, out);
    }
    if (solve_cmd->parsed()) {
        return cli_detail::cmd_solve(sf, out, err);
    }
    if (certify_cmd->parsed()) {
        return cli_detail::cmd_certify(cs, pairs, seed, out, err);
    }
    if (demo_cmd->parsed()) {
        try {
            out << dump_config(demo_config(demo_name)) << '\n';
            return 0;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return 1;
        }
    }
    err << app.help();
    return 1;
}

} // namespace parsplit
