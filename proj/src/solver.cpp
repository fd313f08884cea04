#include "impulse/solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace impulse {

namespace {

using ColMat = Eigen::SparseMatrix<double, Eigen::ColMajor>;

double sup_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Running-window sum along one axis, truncated at the box edges.
Vec window_sum(const Grid& grid, const Vec& v, int axis, int reach) {
    Vec out(v.size());
    const int n = grid.nodes(axis);
    const std::size_t stride = grid.stride(axis);
    for (std::size_t f = 0; f < grid.size(); ++f) {
        const int i = grid.index(f)[axis];
        double s = 0.0;
        for (int j = std::max(0, i - reach); j <= std::min(n - 1, i + reach); ++j)
            s += v[static_cast<Eigen::Index>(f + (j - i) * static_cast<std::ptrdiff_t>(stride))];
        out[static_cast<Eigen::Index>(f)] = s;
    }
    return out;
}

}  // namespace

Vec mollify(const Grid& grid, const Vec& g, double radius) {
    if (!(radius > 0.0)) return g;
    Vec sum = g, count = Vec::Ones(g.size());
    bool any = false;
    for (int a = 0; a < grid.dim(); ++a) {
        const int reach = static_cast<int>(std::floor(radius / grid.spacing(a) + 1e-9));
        if (reach <= 0) continue;
        any = true;
        sum = window_sum(grid, sum, a, reach);
        count = window_sum(grid, count, a, reach);
    }
    return any ? Vec(sum.cwiseQuotient(count)) : g;
}

ObstacleSolution solve_obstacle_penalized(const OperatorStencil& stencil, const Vec& f_src,
                                          const Vec& g_obstacle, const Vec& boundary,
                                          const Vec& v0, const ObstacleOptions& opt) {
    if (!stencil.monotone())
        throw std::invalid_argument(
            "stencil is not monotone (positive off-diagonal); use the upwind drift scheme");
    const auto& sched = opt.eps_schedule;
    if (sched.empty()) throw std::invalid_argument("empty eps schedule");
    for (std::size_t k = 1; k < sched.size(); ++k)
        if (!(sched[k] < sched[k - 1])) throw std::invalid_argument("eps schedule must decrease strictly");

    const Grid& grid = stencil.grid();
    const std::size_t N = grid.size();
    std::vector<bool> interior(N);
    for (std::size_t i = 0; i < N; ++i) interior[i] = !grid.on_boundary(i);

    const SparseMat dir = stencil.dirichlet_matrix();
    const ColMat dir_col = dir;

    // Mollified obstacles and omega(eps) = sup_{eps' <= eps} |g^eps' - g|.
    std::vector<Vec> gk(sched.size());
    std::vector<double> dist(sched.size()), omega(sched.size());
    for (std::size_t k = 0; k < sched.size(); ++k) {
        const double rad = k < opt.mollify_radius.size() ? opt.mollify_radius[k] : 0.0;
        gk[k] = mollify(grid, g_obstacle, rad);
        dist[k] = sup_norm(gk[k] - g_obstacle);
    }
    double running = 0.0;
    for (std::size_t k = sched.size(); k-- > 0;) {
        running = std::max(running, dist[k]);
        omega[k] = running;
    }

    double fmax = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        if (interior[i]) fmax = std::max(fmax, std::abs(f_src[static_cast<Eigen::Index>(i)]));

    ObstacleSolution sol;
    Vec v = v0;
    for (std::size_t i = 0; i < N; ++i)
        if (!interior[i]) v[static_cast<Eigen::Index>(i)] = boundary[static_cast<Eigen::Index>(i)];

    Eigen::SparseLU<ColMat> lu;
    lu.analyzePattern(dir_col);

    for (std::size_t k = 0; k < sched.size(); ++k) {
        const PenaltyFamily beta = make_penalty(sched[k], omega[k]);
        const Vec& g = gk[k];
        auto residual = [&](const Vec& w) {
            Vec F = dir * w;
            for (std::size_t i = 0; i < N; ++i) {
                const auto e = static_cast<Eigen::Index>(i);
                if (interior[i]) F[e] += beta(w[e] - g[e]) - f_src[e];
                else F[e] -= boundary[e];
            }
            return F;
        };

        std::vector<double> history;
        Vec F = residual(v);
        double fnorm = sup_norm(F);
        history.push_back(fnorm);
        int it = 0;
        bool converged = fnorm == 0.0;
        while (!converged) {
            if (++it > opt.max_newton) {
                std::ostringstream msg;
                msg << "Newton did not converge at eps = " << sched[k] << " after "
                    << opt.max_newton << " iterations (residual " << fnorm << ")";
                throw ConvergenceError(msg.str(), history);
            }
            ColMat J = dir_col;
            for (std::size_t i = 0; i < N; ++i) {
                const auto e = static_cast<Eigen::Index>(i);
                if (interior[i]) J.coeffRef(e, e) += beta.derivative(v[e] - g[e]);
            }
            lu.factorize(J);
            if (lu.info() != Eigen::Success)
                throw ConvergenceError("Newton Jacobian factorization failed", history);
            const Vec step = lu.solve(Vec(-F));

            // M-matrix plus a convex increasing diagonal term: undamped Newton
            // iterates are supersolutions after one step and decrease
            // monotonically, so the full step is taken. Halving only guards
            // against non-finite residuals.
            double lambda = 1.0;
            Vec trial = v + step;
            Vec Ft = residual(trial);
            for (int h = 0; h < opt.max_halvings && !Ft.allFinite(); ++h) {
                lambda *= 0.5;
                trial = v + lambda * step;
                Ft = residual(trial);
            }
            const double tnorm = sup_norm(Ft);
            v = std::move(trial);
            F = std::move(Ft);
            fnorm = tnorm;
            history.push_back(fnorm);
            const double moved = lambda * sup_norm(step);
            converged = moved <= opt.newton_tol * std::max(1.0, sup_norm(v)) || fnorm == 0.0;
        }

        PenaltyStep rec;
        rec.eps = sched[k];
        rec.mollify_radius = k < opt.mollify_radius.size() ? opt.mollify_radius[k] : 0.0;
        rec.omega = omega[k];
        rec.newton_iterations = it;
        const Vec lg = stencil.matrix() * g;
        double lg_min = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (!interior[i]) continue;
            const auto e = static_cast<Eigen::Index>(i);
            rec.sup_beta = std::max(rec.sup_beta, std::abs(beta(v[e] - g[e])));
            lg_min = std::min(lg_min, lg[e]);
        }
        rec.lg_floor = lg_min < 0.0 ? -lg_min : 0.0;
        rec.bound = fmax + rec.lg_floor + 1.0;
        sol.log.push_back(rec);
    }
    sol.v = std::move(v);
    return sol;
}

std::size_t SolveResult::action_count() const {
    return static_cast<std::size_t>(std::count(region.begin(), region.end(), Region::action));
}

SolverParams resolve_params(const ModelSpec& model, const Grid& grid, SolverParams p) {
    double fmax = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        fmax = std::max(fmax, std::abs(model.running_cost(grid.coord(i))));
    if (p.schedule_length < 1) throw std::invalid_argument("schedule_length must be >= 1");
    // The penalty floor limits accuracy to about eps_final / r.
    const double eps_final = std::ldexp(p.penalty_unit, -p.schedule_length);
    if (!(p.tol_outer > 0.0))
        p.tol_outer = std::max(1e-6 * fmax, 10.0 * eps_final) / model.discount;
    if (!(p.tol_region > 0.0)) p.tol_region = 10.0 * p.tol_outer;
    if (!(p.mollify_unit > 0.0)) p.mollify_unit = 4.0 * grid.min_spacing();
    if (!(p.search_radius > 0.0)) p.search_radius = (grid.hi() - grid.lo()).maxCoeff();
    p.search_radius = std::max(p.search_radius, model.transaction_cost.coercivity_radius);
    return p;
}

SolveResult solve_qvi(const ModelSpec& model, const Grid& grid, const SolverParams& raw) {
    const double c_u = lipschitz_bound(model);  // rejects models violating A5
    (void)c_u;
    const SolverParams p = resolve_params(model, grid, raw);
    const OperatorStencil stencil(grid, model, p.scheme);
    if (!stencil.monotone())
        throw std::invalid_argument("stencil is not monotone; use the upwind drift scheme");

    const std::size_t N = grid.size();
    const double r = model.discount;
    Vec f(N), far(N);
    for (std::size_t i = 0; i < N; ++i) {
        f[static_cast<Eigen::Index>(i)] = model.running_cost(grid.coord(i));
        far[static_cast<Eigen::Index>(i)] = f[static_cast<Eigen::Index>(i)] / r;
    }
    std::vector<bool> interior(N);
    for (std::size_t i = 0; i < N; ++i) interior[i] = !grid.on_boundary(i);

    // No-intervention value: L u0 = f + I u0 with far-field data f / r,
    // by frozen-I fixed point iteration on one factorization.
    const ColMat dir = stencil.dirichlet_matrix();
    Eigen::SparseLU<ColMat> lu;
    lu.compute(dir);
    if (lu.info() != Eigen::Success) throw std::runtime_error("stencil factorization failed");

    Vec u = far;
    std::vector<double> hist0;
    for (int it = 0;; ++it) {
        const IResult iu = apply_I(ScalarField(grid, u, p.extension), model);
        Vec rhs(N);
        for (std::size_t i = 0; i < N; ++i) {
            const auto e = static_cast<Eigen::Index>(i);
            rhs[e] = interior[i] ? f[e] + iu.field[i] : far[e];
        }
        const Vec next = lu.solve(rhs);
        const double d = sup_norm(next - u);
        hist0.push_back(d);
        u = next;
        if (d <= p.tol_outer) break;
        if (it + 1 >= p.max_outer)
            throw ConvergenceError("no-intervention iteration did not converge", hist0);
    }
    SolveResult res;
    res.params = p;
    res.tol_outer = p.tol_outer;
    res.tol_region = p.tol_region;
    res.u0 = ScalarField(grid, u, p.extension);

    ObstacleOptions opt;
    opt.newton_tol = p.newton_tol;
    opt.max_newton = p.max_newton;
    for (int k = 1; k <= p.schedule_length; ++k) {
        opt.eps_schedule.push_back(std::ldexp(p.penalty_unit, -k));
        opt.mollify_radius.push_back(std::ldexp(p.mollify_unit, -k));
    }
    const SearchBox search{p.search_radius, p.include_offbox};

    for (int k = 0;; ++k) {
        const ScalarField uf(grid, u, p.extension);
        const IResult iu = apply_I(uf, model);
        const MResult mu = apply_M(uf, model.transaction_cost, search);
        Vec src = f + iu.field.values();
        Vec bnd(N);
        for (std::size_t i = 0; i < N; ++i) {
            const auto e = static_cast<Eigen::Index>(i);
            bnd[e] = std::min(far[e], mu.field[i]);
        }
        ObstacleSolution sol =
            solve_obstacle_penalized(stencil, src, mu.field.values(), bnd, u, opt);
        const double d = sup_norm(sol.v - u);
        res.outer_history.push_back(d);
        res.penalty_log = std::move(sol.log);
        u = std::move(sol.v);
        res.outer_iterations = k + 1;
        if (d <= p.tol_outer) break;
        if (k + 1 >= p.max_outer) {
            std::ostringstream msg;
            msg << "outer iteration did not converge in " << p.max_outer << " steps (last change "
                << d << ")";
            throw ConvergenceError(msg.str(), res.outer_history);
        }
    }

    res.u = ScalarField(grid, u, p.extension);
    const IResult iu = apply_I(res.u, model);
    const MResult mu = apply_M(res.u, model.transaction_cost, search);
    res.iu_field = iu.field;
    res.mu_field = mu.field;
    res.offbox_mass = iu.offbox_mass;
    res.policy = mu.argmin;
    res.target = mu.target;
    res.region.resize(N);
    const Vec lu_vals = stencil.matrix() * u;
    for (std::size_t i = 0; i < N; ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        res.region[i] = u[e] - mu.field[i] >= -p.tol_region ? Region::action : Region::continuation;
        if (!grid.in_core(i)) continue;
        const double pde = lu_vals[e] - iu.field[i] - f[e];
        res.residual_hjb = std::max(res.residual_hjb, std::abs(std::max(pde, u[e] - mu.field[i])));
    }
    return res;
}

PolicyReport extract_policy(const SolveResult& result, const CostB& cost, double tol_jump) {
    PolicyReport rep;
    rep.tol_jump = tol_jump;
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    const Grid& grid = result.u.grid();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (result.region[i] != Region::action) continue;
        rep.action_nodes.push_back(i);
        rep.displacement.push_back(result.policy[i]);
        double uy, muy;
        if (result.target[i] >= 0) {
            const auto t = static_cast<std::size_t>(result.target[i]);
            uy = result.u[t];
            muy = result.mu_field[t];
        } else {
            const Vec y = grid.coord(i) + result.policy[i];
            uy = result.u.evaluate(y);
            muy = result.mu_field.evaluate(y);
        }
        const double margin = uy - muy + cost.K;
        rep.worst_margin = std::max(rep.worst_margin, margin);
        if (margin > tol_jump) rep.violations.push_back(i);
        if (!(uy < muy - 0.5 * cost.K)) rep.outside_d.push_back(i);
    }
    return rep;
}

namespace {

void write_policy_csv(const std::string& path, const Grid& grid, const std::vector<Region>& region,
                      const std::vector<Vec>& policy) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << grid_header(grid) << "\n";
    for (int a = 0; a < grid.dim(); ++a) os << "x" << a << ",";
    os << "region";
    for (int a = 0; a < grid.dim(); ++a) os << ",xi" << a;
    os << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec x = grid.coord(i);
        for (int a = 0; a < grid.dim(); ++a) os << x[a] << ",";
        const bool act = region[i] == Region::action;
        os << (act ? 1 : 0);
        for (int a = 0; a < grid.dim(); ++a) os << "," << (act ? policy[i][a] : 0.0);
        os << "\n";
    }
}

}  // namespace

void write_result(const std::string& dir, const SolveResult& res, const std::string& stanza) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);
    write_field_csv((d / "u.csv").string(), res.u);
    write_field_csv((d / "u0.csv").string(), res.u0);
    write_field_csv((d / "mu.csv").string(), res.mu_field);
    write_field_csv((d / "iu.csv").string(), res.iu_field);
    write_policy_csv((d / "policy.csv").string(), res.u.grid(), res.region, res.policy);
    {
        const Grid& g = res.u.grid();
        std::ofstream os((d / "regions.csv").string());
        if (!os) throw std::runtime_error("cannot write regions.csv");
        os << grid_header(g) << "\n";
        for (int a = 0; a < g.dim(); ++a) os << "x" << a << ",";
        os << "u,mu,region\n" << std::setprecision(17);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Vec x = g.coord(i);
            for (int a = 0; a < g.dim(); ++a) os << x[a] << ",";
            os << res.u[i] << "," << res.mu_field[i] << ","
               << (res.region[i] == Region::action ? "action" : "continuation") << "\n";
        }
    }
    std::ofstream log((d / "log.txt").string(), std::ios::app);
    if (!log) throw std::runtime_error("cannot write log.txt");
    log << std::setprecision(10);
    log << "== solve\n" << stanza;
    log << "outer_iterations " << res.outer_iterations << "\n";
    log << "outer_history";
    for (double h : res.outer_history) log << " " << h;
    log << "\n";
    log << "tol_outer " << res.tol_outer << "\ntol_region " << res.tol_region << "\n";
    log << "residual_hjb " << res.residual_hjb << "\n";
    log << "action_nodes " << res.action_count() << " of " << res.u.size() << "\n";
    log << "offbox_mass " << res.offbox_mass << "\n";
    log << "penalty_log eps,mollify_radius,omega,sup_beta,lg_floor,bound,newton_iterations\n";
    for (const auto& s : res.penalty_log)
        log << "  " << s.eps << "," << s.mollify_radius << "," << s.omega << "," << s.sup_beta
            << "," << s.lg_floor << "," << s.bound << "," << s.newton_iterations << "\n";
}

StoredResult read_result(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path d(dir);
    StoredResult out;
    out.u = read_field_csv((d / "u.csv").string());
    std::ifstream is((d / "policy.csv").string());
    if (!is) throw std::runtime_error("cannot read " + (d / "policy.csv").string());
    std::string line;
    std::getline(is, line);
    const Grid g = parse_grid_header(line);
    if (!(g == out.u.grid())) throw std::runtime_error("policy.csv grid differs from u.csv");
    std::getline(is, line);
    const int n = g.dim();
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(std::stod(c));
        if (static_cast<int>(cells.size()) != 2 * n + 1)
            throw std::runtime_error("policy.csv: malformed row");
        out.region.push_back(cells[n] != 0.0 ? Region::action : Region::continuation);
        Vec xi(n);
        for (int a = 0; a < n; ++a) xi[a] = cells[n + 1 + a];
        out.policy.push_back(xi);
    }
    if (out.region.size() != g.size()) throw std::runtime_error("policy.csv: row count mismatch");
    return out;
}

}  // namespace impulse
