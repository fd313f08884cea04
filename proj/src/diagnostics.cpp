#include "impulse/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <set>

namespace impulse {

LipschitzCheck check_lipschitz(const ScalarField& u, double bound, double tol, double slack) {
    const Grid& g = u.grid();
    LipschitzCheck c;
    c.bound = bound * (1.0 + tol) + slack;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.in_core(i)) continue;
        const Index idx = g.index(i);
        for (int a = 0; a < g.dim(); ++a) {
            if (idx[a] + 1 >= g.nodes(a)) continue;
            const std::size_t j = i + g.stride(a);
            if (!g.in_core(j)) continue;
            c.observed = std::max(c.observed, std::abs(u[j] - u[i]) / g.spacing(a));
        }
    }
    c.pass = c.observed <= c.bound;
    return c;
}

ObstacleCheck check_obstacle(const ScalarField& u, const ScalarField& mu_field) {
    const Grid& g = u.grid();
    ObstacleCheck c;
    c.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.in_core(i)) continue;
        const double v = u[i] - mu_field[i];
        if (v > c.max_violation) {
            c.max_violation = v;
            c.worst_node = i;
        }
    }
    return c;
}

HolderCheck check_iu_holder(const ScalarField& u, const ModelSpec& model,
                            const std::vector<Region>& region, double alpha, double margin,
                            std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    const Grid& g = u.grid();
    std::vector<Vec> action;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (region[i] == Region::action) action.push_back(g.coord(i));

    std::vector<std::size_t> dom;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.in_core(i) || region[i] != Region::continuation) continue;
        const Vec x = g.coord(i);
        const double wall = std::min((x - g.lo()).minCoeff(), (g.hi() - x).minCoeff());
        if (wall < margin) continue;
        bool far = true;
        for (const auto& y : action)
            if ((x - y).norm() < margin) {
                far = false;
                break;
            }
        if (far) dom.push_back(i);
    }
    if (dom.empty()) throw std::runtime_error("continuation core too small at this delta");

    const IResult iu = apply_I(u, model);
    HolderCheck c;
    c.domain_size = dom.size();
    auto visit = [&](std::size_t i, std::size_t j) {
        const double d = (g.coord(i) - g.coord(j)).norm();
        if (d <= 0.0) return;
        c.quotient = std::max(c.quotient, std::abs(iu.field[i] - iu.field[j]) / std::pow(d, alpha));
        ++c.pairs;
    };
    const double reach = 10.0 * g.min_spacing() * (1.0 + 1e-9);
    for (std::size_t p = 0; p < dom.size(); ++p)
        for (std::size_t q = p + 1; q < dom.size(); ++q)
            if ((g.coord(dom[p]) - g.coord(dom[q])).norm() <= reach) visit(dom[p], dom[q]);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, dom.size() - 1);
    for (int k = 0; k < 1000 && dom.size() > 1; ++k) visit(dom[pick(rng)], dom[pick(rng)]);
    return c;
}

bool holder_stable(const HolderCheck& coarse, const HolderCheck& fine) {
    if (coarse.quotient == 0.0 && fine.quotient == 0.0) return true;
    if (coarse.quotient == 0.0) return false;
    const double ratio = fine.quotient / coarse.quotient;
    return ratio >= 0.5 && ratio <= 2.0;
}

SmoothFitCheck check_smooth_fit(const ScalarField& u, const std::vector<Region>& region) {
    const Grid& g = u.grid();
    SmoothFitCheck c;
    std::set<std::size_t> nodes;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.in_core(i)) continue;
        const Index idx = g.index(i);
        for (int a = 0; a < g.dim(); ++a) {
            if (idx[a] + 1 >= g.nodes(a)) continue;
            const std::size_t j = i + g.stride(a);
            if (!g.in_core(j) || region[i] == region[j]) continue;
            // Edge (i, j) along +axis; take one-sided quotients away from the edge.
            if (idx[a] < 1 || idx[a] + 2 >= g.nodes(a)) continue;
            const double h = g.spacing(a);
            const double left = (u[i] - u[i - g.stride(a)]) / h;
            const double right = (u[j + g.stride(a)] - u[j]) / h;
            c.max_gradient_jump = std::max(c.max_gradient_jump, std::abs(right - left));
            nodes.insert(region[i] == Region::continuation ? i : j);
        }
    }
    c.boundary_nodes.assign(nodes.begin(), nodes.end());
    return c;
}

double smooth_fit_rate(const SmoothFitCheck& coarse, const SmoothFitCheck& fine) {
    if (!coarse.has_free_boundary() || !fine.has_free_boundary())
        return std::numeric_limits<double>::quiet_NaN();
    return std::log2(coarse.max_gradient_jump / fine.max_gradient_jump);
}

SecondDerivativeCheck check_second_derivative(const ScalarField& u,
                                              const std::vector<Region>& region) {
    const Grid& g = u.grid();
    SecondDerivativeCheck c;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.in_core(i) || region[i] != Region::continuation) continue;
        const Index idx = g.index(i);
        for (int a = 0; a < g.dim(); ++a) {
            if (idx[a] < 1 || idx[a] + 1 >= g.nodes(a)) continue;
            const std::size_t s = g.stride(a);
            const double h = g.spacing(a);
            const double d2 = (u[i + s] - 2.0 * u[i] + u[i - s]) / (h * h);
            c.max_d2_continuation = std::max(c.max_d2_continuation, std::abs(d2));
        }
    }
    return c;
}

bool second_derivative_stable(const SecondDerivativeCheck& coarse,
                              const SecondDerivativeCheck& fine) {
    const double a = coarse.max_d2_continuation, b = fine.max_d2_continuation;
    if (a == 0.0) return b == 0.0;
    return std::abs(b - a) < 0.5 * a;
}

double hjb_residual(const ScalarField& u, const ModelSpec& model, const OperatorStencil& stencil,
                    const SearchBox& search) {
    const Grid& g = u.grid();
    const int n = g.dim();
    const Vec lu = stencil.matrix() * u.values();
    const auto& quad = model.levy.nodes();

    std::vector<int> reach(n);
    for (int a = 0; a < n; ++a)
        reach[a] = static_cast<int>(std::floor(search.radius / g.spacing(a) + 1e-9));

    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.in_core(i)) continue;
        const Vec x = g.coord(i);

        double iu = 0.0;
        for (const auto& q : quad) iu += q.weight * (u.evaluate(x + model.jump(x, q.mark)) - u[i]);

        // Every lattice point in the search box, by nested index loops.
        const Index idx = g.index(i);
        double mu = std::numeric_limits<double>::infinity();
        std::vector<int> k(n);
        for (int a = 0; a < n; ++a) k[a] = -reach[a];
        for (;;) {
            bool zero = true, inside = true;
            Vec xi(n);
            for (int a = 0; a < n; ++a) {
                zero &= k[a] == 0;
                xi[a] = k[a] * g.spacing(a);
                const int j = idx[a] + k[a];
                inside &= j >= 0 && j < g.nodes(a);
            }
            if (!zero && (inside || search.include_offbox))
                mu = std::min(mu, u.evaluate(x + xi) + model.transaction_cost(xi));
            int a = 0;
            while (a < n && ++k[a] > reach[a]) k[a] = -reach[a], ++a;
            if (a == n) break;
        }

        const double pde = lu[static_cast<Eigen::Index>(i)] - iu - model.running_cost(x);
        worst = std::max(worst, std::abs(std::max(pde, u[i] - mu)));
    }
    return worst;
}

bool DiagnosticsReport::passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const DiagnosticRow& r) { return r.pass; });
}

void DiagnosticsReport::write_csv(std::ostream& os) const {
    os << "check,value,threshold,pass\n" << std::setprecision(10);
    for (const auto& r : rows)
        os << r.check << "," << r.value << "," << r.threshold << "," << (r.pass ? 1 : 0) << "\n";
}

void DiagnosticsReport::write_summary(std::ostream& os) const {
    os << std::setprecision(4);
    for (const auto& r : rows)
        os << (r.pass ? "PASS " : "FAIL ") << std::left << std::setw(28) << r.check << " value "
           << std::setw(12) << r.value << " threshold " << r.threshold << "\n";
    os << (passed() ? "all checks passed" : "some checks failed") << "\n";
}

}  // namespace impulse
