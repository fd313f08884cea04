#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"
#include "impulse/diagnostics.hpp"

#include <cmath>
#include <sstream>

using namespace impulse;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

Grid line(int nodes, int margin) { return Grid(v1(-4.0), v1(4.0), {nodes}, margin); }

// Action to the right of `edge`, continuation elsewhere.
std::vector<Region> split_at(const Grid& g, double edge) {
    std::vector<Region> r(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        r[i] = g.coord(i)[0] > edge ? Region::action : Region::continuation;
    return r;
}

}  // namespace

TEST_CASE("lipschitz check ignores the collar") {
    const Grid g = line(33, 4);
    Vec vals(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) vals[i] = 2.0 * g.coord(i)[0];
    vals[0] = 100.0;  // collar only
    const ScalarField u(g, vals);
    CHECK(check_lipschitz(u, 2.0).observed == doctest::Approx(2.0));
    CHECK(check_lipschitz(u, 2.0).pass);
    CHECK(check_lipschitz(u, 1.9, 0.0).pass == false);
    CHECK(check_lipschitz(u, 1.9, 0.1).pass);
    CHECK(check_lipschitz(u, 1.9, 0.0, 0.2).pass);
    CHECK(check_lipschitz(u, 1.9, 0.0, 0.2).bound == doctest::Approx(2.1));
}

TEST_CASE("obstacle check finds the worst core node") {
    const Grid g = line(17, 2);
    const auto u = ScalarField::from_function(g, [](const Vec&) { return 1.0; });
    Vec m = Vec::Constant(g.size(), 2.0);
    m[6] = 0.5;
    m[0] = -10.0;  // collar
    const ObstacleCheck c = check_obstacle(u, ScalarField(g, m));
    CHECK(c.max_violation == doctest::Approx(0.5));
    CHECK(c.worst_node == 6);
}

TEST_CASE("smooth fit: a quadratic has an O(h) gradient jump, a kink does not vanish") {
    auto jump = [](int nodes, bool kink) {
        const Grid g = line(nodes, (nodes - 1) / 8);
        const auto u = ScalarField::from_function(g, [kink](const Vec& x) {
            return kink ? std::max(x[0] - 1.0, 0.0) : x[0] * x[0];
        });
        return check_smooth_fit(u, split_at(g, 1.0));
    };
    const auto q1 = jump(65, false), q2 = jump(129, false);
    CHECK(q1.has_free_boundary());
    CHECK(q1.max_gradient_jump == doctest::Approx(4.0 * 8.0 / 64.0));
    CHECK(smooth_fit_rate(q1, q2) == doctest::Approx(1.0));
    const auto k1 = jump(65, true), k2 = jump(129, true);
    CHECK(k1.max_gradient_jump == doctest::Approx(1.0));
    CHECK(std::abs(smooth_fit_rate(k1, k2)) < 1e-9);
    const Grid g = line(33, 2);
    const auto flat = ScalarField::from_function(g, [](const Vec&) { return 0.0; });
    const auto none = check_smooth_fit(flat, std::vector<Region>(g.size(), Region::continuation));
    CHECK_FALSE(none.has_free_boundary());
    CHECK(std::isnan(smooth_fit_rate(none, q1)));
}

TEST_CASE("second derivative of x^2 is 2 and stable") {
    auto d2 = [](int nodes) {
        const Grid g = line(nodes, 2);
        const auto u = ScalarField::from_function(g, [](const Vec& x) { return x[0] * x[0]; });
        return check_second_derivative(u, std::vector<Region>(g.size(), Region::continuation));
    };
    CHECK(d2(33).max_d2_continuation == doctest::Approx(2.0));
    CHECK(second_derivative_stable(d2(33), d2(65)));
    SecondDerivativeCheck a, b;
    a.max_d2_continuation = 1.0;
    b.max_d2_continuation = 1.6;
    CHECK_FALSE(second_derivative_stable(a, b));
}

TEST_CASE("Holder quotient of I u") {
    const Config cfg = fixture::load("benchmark.json");
    const Grid g = line(129, 16);
    SUBCASE("linear field: I u is constant, quotient zero") {
        const auto u = ScalarField::from_function(
            g, [](const Vec& x) { return 3.0 * x[0]; }, Extension::linear_extrapolation);
        const HolderCheck c = check_iu_holder(u, cfg.model, split_at(g, 100.0), 0.5, 0.5);
        CHECK(c.quotient < 1e-9);
        CHECK(c.pairs > 1000);
    }
    SUBCASE("quadratic field: I u = 2x + 1 has C^1 quotient 2") {
        const auto u = ScalarField::from_function(g, [](const Vec& x) { return x[0] * x[0]; });
        const HolderCheck c = check_iu_holder(u, cfg.model, split_at(g, 100.0), 1.0, 0.5);
        CHECK(c.quotient == doctest::Approx(2.0));
    }
    SUBCASE("domain excludes the action region and walls") {
        const auto u = ScalarField::from_function(g, [](const Vec& x) { return x[0]; });
        const HolderCheck full = check_iu_holder(u, cfg.model, split_at(g, 100.0), 0.5, 0.5);
        const HolderCheck cut = check_iu_holder(u, cfg.model, split_at(g, 0.0), 0.5, 0.5);
        CHECK(cut.domain_size < full.domain_size);
        CHECK_THROWS_AS(check_iu_holder(u, cfg.model, split_at(g, -100.0), 0.5, 0.5),
                        std::runtime_error);
        CHECK_THROWS_AS(check_iu_holder(u, cfg.model, split_at(g, 100.0), 0.0, 0.5),
                        std::invalid_argument);
    }
    HolderCheck a, b;
    a.quotient = 1.0;
    b.quotient = 1.9;
    CHECK(holder_stable(a, b));
    b.quotient = 2.1;
    CHECK_FALSE(holder_stable(a, b));
}

TEST_CASE("HJB residual: small on a solve, large after a fault") {
    const Config cfg = fixture::load("benchmark.json");
    const Grid g = make_grid(cfg.grid);
    const SolveResult res = solve_qvi(cfg.model, g, cfg.solver);
    const OperatorStencil st(g, cfg.model, res.params.scheme);
    const SearchBox search{res.params.search_radius, res.params.include_offbox};
    const double clean = hjb_residual(res.u, cfg.model, st, search);
    CHECK(clean < 10.0 * res.tol_outer * 8.0);
    Vec bumped = res.u.values();
    bumped[g.nearest(v1(0.5))] += 0.01;
    const double faulty = hjb_residual(ScalarField(g, bumped, res.u.extension()), cfg.model, st, search);
    CHECK(faulty > 1.0);
}

TEST_CASE("report output") {
    DiagnosticsReport rep;
    rep.rows.push_back({"lipschitz", 0.5, 1.0, true});
    rep.rows.push_back({"obstacle", 1e-3, 1e-6, false});
    CHECK_FALSE(rep.passed());
    std::stringstream csv, txt;
    rep.write_csv(csv);
    rep.write_summary(txt);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "check,value,threshold,pass");
    std::getline(csv, line);
    CHECK(line == "lipschitz,0.5,1,1");
    CHECK(txt.str().find("FAIL obstacle") != std::string::npos);
    CHECK(txt.str().find("some checks failed") != std::string::npos);
}
