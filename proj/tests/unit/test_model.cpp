#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "impulse/model.hpp"

#include <cmath>

using namespace impulse;

namespace {

ModelSpec base_model() {
    ModelSpec m;
    m.drift = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    m.volatility = [](const Vec&) { return Mat(Mat::Identity(1, 1) * std::sqrt(2.0)); };
    m.jump = [](const Vec& x, const Vec&) { return Vec(Vec::Zero(x.size())); };
    m.levy = LevyMeasure::none();
    m.running_cost = [](const Vec& x) { return x.norm(); };
    m.transaction_cost.K = 1.0;
    m.transaction_cost.evaluate = [](const Vec& xi) { return 1.0 + 0.1 * xi.norm(); };
    m.transaction_cost.coercivity_radius = 1.0;
    m.discount = 1.0;
    m.c_f = 1.0;
    m.c_j = [](const Vec&) { return 0.0; };
    m.ellipticity = 1.0;
    return m;
}

ValidationOptions opts(int samples = 2000) {
    ValidationOptions o;
    o.box = {Vec::Constant(1, -5.0), Vec::Constant(1, 5.0)};
    o.sample_count = samples;
    return o;
}

}  // namespace

TEST_CASE("closed-form model passes every check") {
    const ValidationReport r = validate_assumptions(base_model(), opts());
    CHECK(r.passed());
    REQUIRE(r.find("A5") != nullptr);
    CHECK(r.find("A5")->passed);
    CHECK(r.find("A5")->detail.find("margin 1") != std::string::npos);
    CHECK(r.find("A3.running_cost")->worst_ratio == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("A5 fails when r is below the growth constant") {
    ModelSpec m = base_model();
    m.discount = 0.3;
    m.c_sigma = std::sqrt(2.0);
    const ValidationReport r = validate_assumptions(m, opts());
    CHECK_FALSE(r.passed());
    CHECK_FALSE(r.find("A5")->passed);
    CHECK_THROWS_AS(lipschitz_bound(m), AssumptionError);
    try {
        lipschitz_bound(m);
    } catch (const AssumptionError& e) {
        CHECK(std::string(e.what()).find("A5") != std::string::npos);
    }
}

TEST_CASE("under-declared drift constant is caught with a witness pair") {
    ModelSpec m = base_model();
    m.drift = [](const Vec& x) { return Vec(x.array().sin()); };
    m.c_mu = 0.5;
    const ValidationReport r = validate_assumptions(m, opts(1000));
    const AssumptionCheck* c = r.find("A1.drift");
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->passed);
    CHECK(c->worst_ratio > 1.05);
    CHECK(c->witness.find("x=") != std::string::npos);
    // Independent scan: the worst quotient cannot exceed the true constant 1.
    CHECK(c->worst_ratio <= 2.0 + 1e-9);
}

TEST_CASE("non-finite coefficients are a hard failure") {
    ModelSpec m = base_model();
    m.running_cost = [](const Vec& x) { return x[0] > 2.0 ? std::nan("") : std::abs(x[0]); };
    const ValidationReport r = validate_assumptions(m, opts(500));
    CHECK(r.hard_failure);
    CHECK_FALSE(r.passed());
}

TEST_CASE("transaction cost structure") {
    SUBCASE("floor mismatch") {
        ModelSpec m = base_model();
        m.transaction_cost.K = 2.0;  // true inf B is 1
        CHECK_FALSE(validate_assumptions(m, opts(500)).find("A4.floor")->passed);
    }
    SUBCASE("quadratic cost is not subadditive-plus-K") {
        ModelSpec m = base_model();
        m.transaction_cost.evaluate = [](const Vec& xi) { return 1.0 + xi.squaredNorm(); };
        CHECK_FALSE(validate_assumptions(m, opts(500)).find("A4.subadditive")->passed);
    }
    SUBCASE("bounded cost is not coercive") {
        ModelSpec m = base_model();
        m.transaction_cost.evaluate = [](const Vec& xi) { return 1.0 + std::tanh(xi.norm()); };
        const auto r = validate_assumptions(m, opts(500));
        CHECK_FALSE(r.find("A4.coercive")->passed);
    }
}

TEST_CASE("degenerate diffusion is rejected") {
    ModelSpec m = base_model();
    m.volatility = [](const Vec&) { return Mat(Mat::Zero(1, 1)); };
    CHECK_FALSE(validate_assumptions(m, opts(200)).find("A2.ellipticity")->passed);
}

TEST_CASE("jump Lipschitz constant C_j") {
    ModelSpec m = base_model();
    m.levy = LevyMeasure::from_atoms({{Vec::Constant(1, 1.0), 1.0}, {Vec::Constant(1, -0.5), 2.0}});
    m.jump = [](const Vec& x, const Vec& z) { return Vec(z + 0.2 * x * z[0]); };
    m.c_j = [](const Vec& z) { return 0.2 * z.norm(); };
    CHECK(validate_assumptions(m, opts(500)).find("A1.jump")->passed);
    m.c_j = [](const Vec& z) { return 0.1 * z.norm(); };
    CHECK_FALSE(validate_assumptions(m, opts(500)).find("A1.jump")->passed);
}

TEST_CASE("lipschitz bound arithmetic") {
    ModelSpec m = base_model();
    CHECK(lipschitz_bound(m) == 1.0);
    m.c_f = 0.0;
    CHECK(lipschitz_bound(m) == 0.0);
    // 2 C_mu + C_sigma^2 + int C_j^2 = 0.34 through C_mu = 0.17.
    m.c_f = 1.0;
    m.c_mu = 0.17;
    CHECK(lipschitz_bound(m) == doctest::Approx(1.0 / 0.66));
    // Through the measure: C_j = 0.3 |z| against 2 delta_1: int C_j^2 = 0.18.
    m.c_mu = 0.08;
    m.levy = LevyMeasure::from_atoms({{Vec::Constant(1, 1.0), 2.0}});
    m.c_j = [](const Vec& z) { return 0.3 * z.norm(); };
    CHECK(lipschitz_bound(m) == doctest::Approx(1.0 / 0.66));
}

TEST_CASE("lipschitz bound is monotone in C_f and r") {
    ModelSpec m = base_model();
    m.c_mu = 0.1;
    double prev = 0.0;
    for (double cf : {0.5, 1.0, 2.0}) {
        m.c_f = cf;
        const double c = lipschitz_bound(m);
        CHECK(c > prev);
        prev = c;
    }
    prev = std::numeric_limits<double>::infinity();
    for (double r : {0.5, 1.0, 3.0}) {
        m.discount = r;
        const double c = lipschitz_bound(m);
        CHECK(c < prev);
        prev = c;
    }
}

TEST_CASE("halton points are in the unit cube and reproducible") {
    for (std::uint64_t k = 1; k < 50; ++k) {
        const Vec p = halton_point(k, 3);
        CHECK(p.minCoeff() >= 0.0);
        CHECK(p.maxCoeff() < 1.0);
        CHECK(p == halton_point(k, 3));
    }
    CHECK(halton_point(1, 1)[0] == 0.5);
    CHECK(halton_point(3, 2)[1] == doctest::Approx(1.0 / 9.0));
}
