#pragma once

// Command-line front end. Subcommands:
//   run          single integration, trajectory CSV
//   convergence  H-ladder study, report CSV plus fitted slopes on stdout
//   contraction  Lipschitz/contraction analysis report
//   sweep        (b, d) stability sweep on dae-lin, table CSV
//   catalog      list built-in problems
// Exit codes: 0 success, 1 validation error, 2 numerical failure,
// 3 stability-gate refusal.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "multirate/config.hpp"
#include "multirate/contraction.hpp"
#include "multirate/core.hpp"
#include "multirate/dae_multirate.hpp"
#include "multirate/harness.hpp"
#include "multirate/ode_multirate.hpp"
#include "multirate/problems.hpp"

namespace multirate::cli {

namespace detail {

struct CommonOpts {
    std::string problem = "lin2";
    std::string config;
    std::string strategy = "fully-decoupled";
    std::string scheme;  // empty: explicit-euler for ODEs, implicit-euler for DAEs
    std::string H_text = "0.1";
    int m = 2;
    int k = 1;
    int extrap_order = 0;
    int interp_order = 0;
    bool dense_output = false;
    double t_end = 0.0;
    bool t_end_set = false;
    std::string out;
    bool force = false;
    unsigned long seed = 0;
};

inline void add_common_options(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--problem", o.problem, "catalog problem id");
    cmd->add_option("--config", o.config,
                    "config file path, or inline parameter overrides like b=0.5,d=0.25");
    cmd->add_option("--strategy", o.strategy,
                    "fully-decoupled | slowest-first | fastest-first");
    cmd->add_option("--scheme", o.scheme, "explicit-euler | heun | rk4 | implicit-euler");
    cmd->add_option("--H", o.H_text, "macro step size (comma list for convergence)");
    cmd->add_option("--m", o.m, "multirate factor");
    cmd->add_option("--k", o.k, "dynamic-iteration sweeps per window (DAE)");
    cmd->add_option("--extrap-order", o.extrap_order, "extrapolation order");
    cmd->add_option("--interp-order", o.interp_order, "interpolation order");
    cmd->add_flag("--dense-output", o.dense_output,
                  "use the scheme's dense output as the slow interpolant (slowest-first)");
    cmd->add_option("--t-end", o.t_end, "override the problem horizon");
    cmd->add_option("--out", o.out, "output path (default: stdout)");
    cmd->add_flag("--force", o.force, "override the stability gate");
    cmd->add_option("--seed", o.seed, "seed for randomized studies (reproducibility)");
}

inline std::vector<double> parse_h_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0' || !(v > 0.0))
            throw validation_error("bad step size '" + item + "' in --H");
        out.push_back(v);
    }
    if (out.empty()) throw validation_error("--H must contain at least one step size");
    return out;
}

inline CatalogEntry make_entry(const CommonOpts& o) {
    CatalogEntry entry;
    if (!o.config.empty() && o.config.find('=') == std::string::npos) {
        entry = load_problem_config(o.config);
    } else {
        std::map<std::string, double> params;
        if (!o.config.empty()) params = parse_inline_params(o.config);
        if (o.t_end_set) params["t_end"] = o.t_end;
        entry = make_problem(o.problem, params);
    }
    if (o.t_end_set) {
        if (entry.ode) entry.ode->t_end = o.t_end;
        if (entry.dae) entry.dae->t_end = o.t_end;
    }
    return entry;
}

inline MacroStepPlan make_plan(const CommonOpts& o, const CatalogEntry& entry, double H) {
    MacroStepPlan plan;
    plan.H = H;
    plan.m = o.m;
    plan.k = o.k;
    auto strat = strategy_from_string(o.strategy);
    if (!strat) throw validation_error("unknown strategy '" + o.strategy + "'");
    plan.strategy = *strat;
    std::string scheme_name = o.scheme;
    if (scheme_name.empty())
        scheme_name = entry.is_dae() ? "implicit-euler" : "explicit-euler";
    auto scheme = SchemeSpec::from_name(scheme_name);
    if (!scheme) throw validation_error("unknown scheme '" + scheme_name + "'");
    plan.scheme_slow = *scheme;
    plan.scheme_fast = *scheme;
    plan.extrap_order = o.extrap_order;
    plan.interp_order = o.interp_order;
    if (o.dense_output) {
        if (plan.strategy != Strategy::SlowestFirst)
            throw validation_error("--dense-output applies to the slowest-first strategy");
        plan.interp_order = scheme->dense_output_order;
    }
    return plan;
}

class OutputStream {
public:
    explicit OutputStream(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw validation_error("cannot open output file: " + path);
        }
    }
    std::ostream& get() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

inline int cmd_run(const CommonOpts& o) {
    CatalogEntry entry = make_entry(o);
    const double H = parse_h_list(o.H_text).front();
    MacroStepPlan plan = make_plan(o, entry, H);
    Trajectory traj;
    const auto t_start = std::chrono::steady_clock::now();
    if (entry.is_dae()) {
        ContractionReport report = build_contraction_report(
            *entry.dae, default_contraction_samples(*entry.dae),
            extrapolation_lphi(plan.extrap_order));
        IntegrateDaeOptions opts;
        opts.gate = &report;
        opts.force = o.force;
        traj = integrate_dae(*entry.dae, plan, opts);
    } else {
        traj = integrate(*entry.ode, plan);
    }
    const auto elapsed = std::chrono::duration<double, std::milli>(
        std::chrono::steady_clock::now() - t_start);
    for (const auto& w : traj.warnings) std::cerr << "warning: " << w << "\n";
    std::cerr << "timing: integration took " << elapsed.count() << " ms\n";
    OutputStream os(o.out);
    emit_trajectory_csv(os.get(), traj);
    return 0;
}

inline int cmd_convergence(const CommonOpts& o) {
    CatalogEntry entry = make_entry(o);
    std::vector<double> hs = parse_h_list(o.H_text);
    if (hs.size() == 1) hs = default_h_ladder(hs.front());
    MacroStepPlan plan = make_plan(o, entry, hs.front());
    ConvergenceReport rep = convergence_study(entry, plan, hs);
    OutputStream os(o.out);
    os.get() << rep.to_csv();
    std::cout << rep.slopes_text();
    return 0;
}

inline int cmd_contraction(const CommonOpts& o) {
    CatalogEntry entry = make_entry(o);
    if (!entry.is_dae())
        throw validation_error("contraction analysis requires a DAE problem");
    ContractionReport report =
        build_contraction_report(*entry.dae, default_contraction_samples(*entry.dae),
                                 extrapolation_lphi(o.extrap_order));
    OutputStream os(o.out);
    os.get() << report.to_text();
    return 0;
}

inline int cmd_sweep(const CommonOpts& o) {
    const std::vector<double> grid = {0.0, 0.3, 0.6, 0.9, 1.2, 1.5};
    auto strat = strategy_from_string(o.strategy);
    if (!strat) throw validation_error("unknown strategy '" + o.strategy + "'");
    const double H = parse_h_list(o.H_text).front();
    auto cells = stability_sweep(o.problem, grid, grid, *strat, o.k, H, o.m, o.extrap_order);
    OutputStream os(o.out);
    os.get() << sweep_to_csv(cells);
    return 0;
}

inline int cmd_catalog(const CommonOpts& o) {
    OutputStream os(o.out);
    for (const auto& entry : catalog()) {
        os.get() << entry.id << "  [" << (entry.is_dae() ? "dae" : "ode") << "]  "
                 << entry.description << "\n";
    }
    return 0;
}

}  // namespace detail

/// Run the CLI on argv-style arguments (without the program name).
inline int run(const std::vector<std::string>& args) {
    CLI::App app{"multirate time integration for partitioned ODEs and index-1 DAEs"};
    app.require_subcommand(1);

    detail::CommonOpts opts;
    CLI::App* c_run = app.add_subcommand("run", "single integration, trajectory CSV");
    CLI::App* c_conv = app.add_subcommand("convergence", "step-size study with fitted orders");
    CLI::App* c_contr = app.add_subcommand("contraction", "contraction/stability analysis");
    CLI::App* c_sweep = app.add_subcommand("sweep", "(b, d) stability sweep on dae-lin");
    CLI::App* c_cat = app.add_subcommand("catalog", "list built-in problems");
    for (CLI::App* cmd : {c_run, c_conv, c_contr, c_sweep, c_cat})
        detail::add_common_options(cmd, opts);

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (CLI::App* cmd : {c_run, c_conv, c_contr, c_sweep, c_cat})
            if (cmd->parsed() && cmd->count("--t-end") > 0) opts.t_end_set = true;
        if (c_run->parsed()) return detail::cmd_run(opts);
        if (c_conv->parsed()) return detail::cmd_convergence(opts);
        if (c_contr->parsed()) return detail::cmd_contraction(opts);
        if (c_sweep->parsed()) return detail::cmd_sweep(opts);
        if (c_cat->parsed()) return detail::cmd_catalog(opts);
        std::cerr << "error: no subcommand given\n";
        return 1;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const stability_gate_error& e) {
        std::cerr << "error: " << e.what() << "\n"
                  << "(use --force to run anyway)\n";
        return 3;
    } catch (const numerical_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const singular_matrix_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace multirate::cli
