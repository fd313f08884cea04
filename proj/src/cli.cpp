#include "impulse/cli.hpp"

#include "impulse/config.hpp"
#include "impulse/diagnostics.hpp"
#include "impulse/simulate.hpp"
#include "impulse/solver.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace impulse {

namespace fs = std::filesystem;

namespace {

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::string stanza(const CliOptions& opt, const Config& cfg, const Grid* grid,
                   const SolverParams* params, std::uint64_t seed) {
    std::ostringstream os;
    os << std::setprecision(10);
    if (!opt.command_line.empty()) os << "command " << opt.command_line << "\n";
    os << "config " << opt.config << "\n";
    os << "config_hash " << hex(cfg.hash) << "\n";
    os << "seed " << seed << "\n";
    os << "grid_scale " << opt.grid_scale << "\n";
    if (grid) os << "grid " << grid_header(*grid).substr(7) << "\n";
    if (params)
        os << "tolerances tol_outer=" << params->tol_outer << " tol_region=" << params->tol_region
           << " newton_tol=" << params->newton_tol << " penalty_unit=" << params->penalty_unit
           << " schedule_length=" << params->schedule_length << "\n";
    return os.str();
}

// Off-box jump mass from core nodes above which solve warns.
constexpr double kOffboxWarning = 1e-3;

void append_log(const std::string& dir, const std::string& title, const std::string& text) {
    fs::create_directories(dir);
    std::ofstream log((fs::path(dir) / "log.txt").string(), std::ios::app);
    log << "== " << title << "\n" << text;
}

// Loads the config or reports a usage error.
std::optional<Config> load(const CliOptions& opt, std::ostream& err) {
    if (opt.config.empty()) {
        err << "error: --config is required\n";
        return std::nullopt;
    }
    try {
        return load_config(opt.config);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return std::nullopt;
    }
}

double sup_f(const ModelSpec& m, const Grid& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s = std::max(s, std::abs(m.running_cost(g.coord(i))));
    return s;
}

}  // namespace

int cmd_validate(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    const auto cfg = load(opt, err);
    if (!cfg) return exit_usage;
    ValidationOptions vo;
    vo.box = {cfg->grid.lo, cfg->grid.hi};
    vo.sample_count = cfg->diagnostics.validation_samples;
    vo.tolerance = cfg->diagnostics.validation_tolerance;
    vo.seed = cfg->diagnostics.validation_seed;
    ValidationReport rep;
    try {
        rep = validate_assumptions(cfg->model, vo);
    } catch (const std::exception& e) {
        err << "validation failed: " << e.what() << "\n";
        return exit_domain;
    }
    if (!opt.quiet) out << rep.to_string();
    if (const auto* a5 = rep.find("A5"); a5 && !a5->passed)
        err << "assumption (A5) violated: " << a5->detail << "\n";
    if (!opt.out.empty()) append_log(opt.out, "validate", stanza(opt, *cfg, nullptr, nullptr, vo.seed));
    return rep.passed() ? exit_ok : exit_domain;
}

int cmd_solve(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    const auto cfg = load(opt, err);
    if (!cfg) return exit_usage;
    if (opt.out.empty()) {
        err << "error: --out is required\n";
        return exit_usage;
    }
    Grid grid;
    try {
        grid = make_grid(cfg->grid, opt.grid_scale);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_domain;
    }
    const std::string log_path = (fs::path(opt.out) / "log.txt").string();
    SolverParams params;
    try {
        params = resolve_params(cfg->model, grid, cfg->solver);
        const SolveResult res = solve_qvi(cfg->model, grid, cfg->solver);
        write_result(opt.out, res, stanza(opt, *cfg, &grid, &res.params, cfg->simulate.options.seed));
        if (res.offbox_mass > kOffboxWarning)
            err << "warning: jump mass " << res.offbox_mass << " leaves the box from the core (above "
                << kOffboxWarning << "); enlarge the box or the core margin\n";
        if (!opt.quiet) {
            out << "residual " << res.residual_hjb << "\n";
            out << "outer_iterations " << res.outer_iterations << "\n";
            out << "action_nodes " << res.action_count() << "\n";
            out << "continuation_nodes " << res.u.size() - res.action_count() << "\n";
            out << "offbox_mass " << res.offbox_mass << "\n";
            out << "written " << opt.out << "\n";
        }
        return exit_ok;
    } catch (const ConvergenceError& e) {
        std::ostringstream os;
        os << stanza(opt, *cfg, &grid, &params, cfg->simulate.options.seed);
        os << "error " << e.what() << "\nhistory";
        for (double h : e.history) os << " " << h;
        os << "\n";
        append_log(opt.out, "solve", os.str());
        err << "solve failed: " << e.what() << " (see " << log_path << ")\n";
        return exit_domain;
    } catch (const std::exception& e) {
        append_log(opt.out, "solve",
                   stanza(opt, *cfg, &grid, &params, cfg->simulate.options.seed) + "error " + e.what() + "\n");
        err << "solve failed: " << e.what() << " (see " << log_path << ")\n";
        return exit_domain;
    }
}

int cmd_simulate(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    const auto cfg = load(opt, err);
    if (!cfg) return exit_usage;
    if (opt.out.empty()) {
        err << "error: --out is required\n";
        return exit_usage;
    }
    StoredResult stored;
    try {
        stored = read_result(opt.out);
    } catch (const std::exception& e) {
        err << "error: missing policy: " << e.what() << "\n";
        return exit_usage;
    }
    SimulationOptions so = cfg->simulate.options;
    if (opt.seed) so.seed = *opt.seed;
    if (opt.dt) so.dt = *opt.dt;
    if (opt.horizon) so.horizon = *opt.horizon;
    const std::size_t paths = opt.paths.value_or(cfg->simulate.paths);
    const Vec& x0 = cfg->simulate.x0;
    try {
        const ImpulsePolicy policy =
            ImpulsePolicy::from_regions(stored.u.grid(), stored.region, stored.policy);
        const CostEstimate est = estimate_cost(cfg->model, policy, x0, paths, so);
        const double u_pde = stored.u.evaluate(x0);
        std::ofstream csv((fs::path(opt.out) / "mc_summary.csv").string());
        csv << std::setprecision(12);
        csv << "seed,paths,dt,horizon,jump_cutoff,x0,j_hat,ci_halfwidth,truncation_bias,"
               "small_jump_bias,u_pde,impulses\n";
        csv << so.seed << "," << paths << "," << so.dt << "," << so.horizon << "," << so.jump_cutoff << ",";
        for (Eigen::Index a = 0; a < x0.size(); ++a) csv << (a ? ";" : "") << x0[a];
        csv << "," << est.j_hat << "," << est.ci_halfwidth << "," << est.truncation_bias << ","
            << est.small_jump_bias << "," << u_pde << "," << est.impulses << "\n";
        std::ostringstream extra;
        extra << "paths " << paths << "\ndt " << so.dt << "\nhorizon " << so.horizon
              << "\nj_hat " << est.j_hat << "\nci_halfwidth " << est.ci_halfwidth << "\n";
        append_log(opt.out, "simulate",
                   stanza(opt, *cfg, &stored.u.grid(), nullptr, so.seed) + extra.str());
        if (!opt.quiet) {
            out << std::setprecision(8);
            out << "j_hat " << est.j_hat << " +- " << est.ci_halfwidth << "\n";
            out << "u_pde " << u_pde << "\n";
            out << "truncation_bias " << est.truncation_bias << "\n";
            out << "small_jump_bias " << est.small_jump_bias << "\n";
            out << "impulses " << est.impulses << "\n";
        }
        return exit_ok;
    } catch (const std::exception& e) {
        err << "simulation failed: " << e.what() << "\n";
        return exit_domain;
    }
}

int cmd_diagnose(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    const auto cfg = load(opt, err);
    if (!cfg) return exit_usage;
    if (opt.out.empty()) {
        err << "error: --out is required\n";
        return exit_usage;
    }
    StoredResult stored;
    try {
        stored = read_result(opt.out);
    } catch (const std::exception& e) {
        err << "error: missing artifacts: " << e.what() << "\n";
        return exit_usage;
    }
    const ModelSpec& model = cfg->model;
    const DiagnosticsSettings& ds = cfg->diagnostics;
    const Grid grid = stored.u.grid();
    DiagnosticsReport rep;
    auto row = [&](const std::string& name, double value, double threshold, bool pass) {
        rep.rows.push_back({name, value, threshold, pass});
    };
    try {
        const SolverParams p = resolve_params(model, grid, cfg->solver);
        const ScalarField u(grid, stored.u.values(), p.extension);
        const SearchBox search{p.search_radius, p.include_offbox};
        const double c_u = lipschitz_bound(model);
        const MResult mu = apply_M(u, model.transaction_cost, search);

        if (ds.lipschitz_exact) {
            const double slack = 2.0 * p.tol_outer / grid.min_spacing();
            const LipschitzCheck lc = check_lipschitz(u, c_u, ds.lipschitz_tol, slack);
            row("lipschitz", lc.observed, lc.bound, lc.pass);
        }
        const ObstacleCheck oc = check_obstacle(u, mu.field);
        row("obstacle", oc.max_violation, p.tol_region, oc.max_violation <= p.tol_region);

        const OperatorStencil stencil(grid, model, p.scheme);
        const double res = hjb_residual(u, model, stencil, search);
        const double res_tol = ds.residual_factor * p.tol_outer * std::max(1.0, sup_f(model, grid));
        row("hjb_residual", res, res_tol, res <= res_tol);

        const double margin = ds.holder_margin > 0.0 ? ds.holder_margin : 4.0 * grid.min_spacing();
        for (double alpha : ds.holder_alphas) {
            std::ostringstream name;
            name << "iu_holder_" << alpha;
            try {
                const HolderCheck hc = check_iu_holder(u, model, stored.region, alpha, margin);
                row(name.str(), hc.quotient, std::numeric_limits<double>::infinity(),
                    std::isfinite(hc.quotient));
            } catch (const std::runtime_error& e) {
                err << name.str() << ": " << e.what() << "\n";
                row(name.str(), std::nan(""), std::numeric_limits<double>::infinity(), false);
            }
        }

        const SmoothFitCheck sf = check_smooth_fit(u, stored.region);
        if (!sf.has_free_boundary() && !opt.quiet) out << "smooth_fit: no free boundary\n";
        row("smooth_fit_jump", sf.max_gradient_jump, ds.smooth_fit_max,
            sf.max_gradient_jump <= ds.smooth_fit_max);
        const SecondDerivativeCheck sd = check_second_derivative(u, stored.region);
        row("second_derivative", sd.max_d2_continuation, ds.second_derivative_max,
            sd.max_d2_continuation <= ds.second_derivative_max);

        SolveResult view;
        view.u = u;
        view.mu_field = mu.field;
        view.region = stored.region;
        view.policy = stored.policy;
        view.target.assign(grid.size(), -1);
        const double tol_jump = ds.placement_factor * grid.min_spacing() * c_u;
        const PolicyReport pr = extract_policy(view, model.transaction_cost, tol_jump);
        row("post_impulse_placement", static_cast<double>(pr.violations.size()), 0.0,
            pr.violations.empty());

        if (ds.refinement) {
            const SolveResult coarse = solve_qvi(model, grid, cfg->solver);
            const SolveResult fine = solve_qvi(model, grid.refined(), cfg->solver);
            const SmoothFitCheck a = check_smooth_fit(coarse.u, coarse.region);
            const SmoothFitCheck b = check_smooth_fit(fine.u, fine.region);
            if (a.has_free_boundary() && b.has_free_boundary()) {
                const double rate = smooth_fit_rate(a, b);
                row("smooth_fit_rate", rate, 0.5, rate >= 0.5);
            }
            const bool d2 = second_derivative_stable(check_second_derivative(coarse.u, coarse.region),
                                                     check_second_derivative(fine.u, fine.region));
            row("second_derivative_stable", d2 ? 1.0 : 0.0, 1.0, d2);
            for (double alpha : ds.holder_alphas) {
                try {
                    const HolderCheck hc = check_iu_holder(coarse.u, model, coarse.region, alpha, margin);
                    const HolderCheck hf = check_iu_holder(fine.u, model, fine.region, alpha, margin);
                    std::ostringstream name;
                    name << "iu_holder_stable_" << alpha;
                    const double ratio = hc.quotient > 0.0 ? hf.quotient / hc.quotient : 1.0;
                    row(name.str(), ratio, 2.0, holder_stable(hc, hf));
                } catch (const std::runtime_error& e) {
                    err << "holder refinement: " << e.what() << "\n";
                }
            }
        }
    } catch (const std::exception& e) {
        err << "diagnostics failed: " << e.what() << "\n";
        return exit_domain;
    }

    std::ofstream csv((fs::path(opt.out) / "diagnostics.csv").string());
    rep.write_csv(csv);
    std::ofstream txt((fs::path(opt.out) / "diagnostics.txt").string());
    rep.write_summary(txt);
    if (!opt.quiet) rep.write_summary(out);
    append_log(opt.out, "diagnose",
               stanza(opt, *cfg, &grid, nullptr, 0) + std::string("passed ") +
                   (rep.passed() ? "yes" : "no") + "\n");
    return rep.passed() ? exit_ok : exit_domain;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Impulse-control QVI solver for jump diffusions"};
    app.require_subcommand(1);
    CliOptions opt;
    for (int i = 0; i < argc; ++i) opt.command_line += (i ? " " : "") + std::string(argv[i]);

    std::size_t paths = 0;
    std::uint64_t seed = 0;
    double dt = 0.0, horizon = 0.0;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "model/solver config (JSON)")->required();
        sub->add_option("--out", opt.out, "result directory");
        sub->add_option("--grid-scale", opt.grid_scale, "cells per axis multiplier");
        sub->add_flag("--quiet", opt.quiet, "suppress reports on stdout");
    };
    CLI::App* validate = app.add_subcommand("validate", "check the model assumptions");
    CLI::App* solve = app.add_subcommand("solve", "solve the QVI and write the result directory");
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo cost of the stored policy");
    CLI::App* diagnose = app.add_subcommand("diagnose", "run the diagnostics on a stored result");
    for (CLI::App* s : {validate, solve, simulate, diagnose}) common(s);
    CLI::Option* o_paths = simulate->add_option("--paths", paths, "number of paths");
    CLI::Option* o_seed = simulate->add_option("--seed", seed, "RNG seed");
    CLI::Option* o_dt = simulate->add_option("--dt", dt, "time step");
    CLI::Option* o_hor = simulate->add_option("--horizon", horizon, "time horizon");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return exit_usage;
    }
    if (*o_paths) opt.paths = paths;
    if (*o_seed) opt.seed = seed;
    if (*o_dt) opt.dt = dt;
    if (*o_hor) opt.horizon = horizon;

    if (validate->parsed()) return cmd_validate(opt, out, err);
    if (solve->parsed()) return cmd_solve(opt, out, err);
    if (simulate->parsed()) return cmd_simulate(opt, out, err);
    return cmd_diagnose(opt, out, err);
}

}  // namespace impulse
