#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "impulse/levy.hpp"
#include "impulse/model.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace impulse;

namespace {

Vec v1(double a) {
    Vec v(1);
    v[0] = a;
    return v;
}

ModelSpec jump_model(LevyMeasure nu, JumpFn j, ScalarFn cj) {
    ModelSpec m;
    m.levy = std::move(nu);
    m.jump = std::move(j);
    m.c_j = std::move(cj);
    return m;
}

double abs_z(const Vec& z) { return z.norm(); }

}  // namespace

TEST_CASE("atom integrals are exact weighted sums") {
    const auto nu = LevyMeasure::from_atoms({{v1(1.0), 2.0}});
    const Integral r = integrate(nu, [](const Vec& z) { return z.squaredNorm(); });
    CHECK(r.value == 2.0);
    CHECK(r.error_estimate == 0.0);

    const auto sym = LevyMeasure::from_atoms({{v1(1.0), 0.5}, {v1(-1.0), 0.5}});
    CHECK(integrate(sym, [](const Vec& z) { return z[0]; }).value == 0.0);
    CHECK(sym.total_mass() == 1.0);
    CHECK(sym.finite_activity());
}

TEST_CASE("atom integral equals the brute-force sum bit-exactly") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.1, 3.0);
    std::vector<Atom> atoms;
    for (int k = 0; k < 9; ++k) atoms.push_back({v1(u(rng)), w(rng)});
    const auto nu = LevyMeasure::from_atoms(atoms);
    auto g = [](const Vec& z) { return std::sin(z[0]) + z[0] * z[0]; };
    double s = 0.0;
    for (const auto& a : atoms) s += a.intensity * g(a.mark);
    CHECK(integrate(nu, g).value == s);
}

TEST_CASE("exponential density: first absolute moment") {
    const auto nu = LevyMeasure::exponential(1.0, 1.0);
    const Integral r = integrate(nu, abs_z);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(std::abs(r.value - 2.0) <= std::max(10.0 * r.error_estimate, 1e-12));
    CHECK(nu.total_mass() == doctest::Approx(2.0));
}

TEST_CASE("tempered density moments match the gamma-function closed form") {
    for (double alpha : {0.25, 0.5, 0.75}) {
        const auto nu = LevyMeasure::tempered_power(0.7, alpha, 2.0);
        for (double p : {1.0, 2.0}) {
            const Integral r = integrate(nu, [p](const Vec& z) { return std::pow(z.norm(), p); });
            const double exact = oracle::tempered_moment(0.7, alpha, 2.0, p);
            CAPTURE(alpha);
            CAPTURE(p);
            CHECK(r.value == doctest::Approx(exact).epsilon(1e-6));
        }
        CHECK_FALSE(nu.finite_activity());
    }
}

TEST_CASE("integrate is linear in the integrand") {
    const auto nu = LevyMeasure::tempered_power(1.0, 0.5, 1.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 10; ++k) {
        const double a = u(rng), b = u(rng), s = u(rng);
        auto g1 = [a](const Vec& z) { return std::abs(z[0]) * std::cos(a * z[0]); };
        auto g2 = [b](const Vec& z) { return z[0] * z[0] * std::exp(-b * b * std::abs(z[0])); };
        const double lhs =
            integrate(nu, [&](const Vec& z) { return g1(z) + s * g2(z); }).value;
        const double rhs = integrate(nu, g1).value + s * integrate(nu, g2).value;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("divergent integrals are rejected") {
    const auto nu = LevyMeasure::tempered_power(1.0, 0.5, 1.0);
    CHECK_THROWS_AS(integrate(nu, [](const Vec&) { return 1.0; }), AssumptionError);
    const auto stable1 = LevyMeasure::tempered_power(1.0, 1.0, 1.0);
    CHECK_THROWS_AS(integrate(stable1, abs_z), AssumptionError);
}

TEST_CASE("integrability certificates") {
    const std::vector<Vec> xs{v1(-1.0), v1(0.0), v1(2.5)};
    SUBCASE("compound Poisson passes") {
        const auto m = jump_model(LevyMeasure::from_atoms({{v1(1.0), 1.0}}),
                                  [](const Vec&, const Vec& z) { return z; },
                                  [](const Vec& z) { return std::min(z.norm(), 1.0); });
        const auto rep = check_integrability(m.levy, m, xs);
        CHECK(rep.passed());
        CHECK(rep.cj_l1 == 1.0);
        CHECK(rep.j_l1_max == 1.0);
    }
    SUBCASE("density |z|^-2 near zero fails the jump condition") {
        const auto m = jump_model(LevyMeasure::tempered_power(1.0, 1.0, 1.0),
                                  [](const Vec&, const Vec& z) { return z; },
                                  [](const Vec&) { return 0.0; });
        const auto rep = check_integrability(m.levy, m, xs);
        CHECK_FALSE(rep.passed());
        CHECK_FALSE(rep.j_l1_ok);
        CHECK(rep.failure.find("j(x,.)") != std::string::npos);
    }
    SUBCASE("tempered |z|^-1.5 e^-|z| passes, value against the closed form") {
        const auto m = jump_model(LevyMeasure::tempered_power(1.0, 0.5, 1.0),
                                  [](const Vec&, const Vec& z) { return z; },
                                  [](const Vec& z) { return 0.1 * z.norm(); });
        const auto rep = check_integrability(m.levy, m, xs);
        CHECK(rep.passed());
        CHECK(rep.j_l1_max == doctest::Approx(2.0 * std::sqrt(M_PI)).epsilon(1e-6));
        // Two refinement levels agree.
        const auto fine = LevyMeasure::tempered_power(1.0, 0.5, 1.0, 1024);
        CHECK(integrate(fine, abs_z).value == doctest::Approx(rep.j_l1_max).epsilon(1e-6));
    }
    SUBCASE("C_j outside L1 is named") {
        const auto m = jump_model(LevyMeasure::tempered_power(1.0, 0.5, 1.0),
                                  [](const Vec&, const Vec& z) { return z; },
                                  [](const Vec& z) { return std::pow(z.norm(), -0.3); });
        const auto rep = check_integrability(m.levy, m, xs);
        CHECK_FALSE(rep.passed());
        CHECK(rep.failure == "C_j not in L1(nu)");
    }
}

TEST_CASE("small-jump split") {
    const JumpFn lin = [](const Vec&, const Vec& z) { return z; };
    SUBCASE("atoms above the cutoff are all kept") {
        const auto nu = LevyMeasure::from_atoms({{v1(0.5), 1.0}, {v1(-2.0), 0.3}});
        const JumpSplit s = small_jump_split(nu, lin, 0.1);
        CHECK(s.big.total_mass() == nu.total_mass());
        CHECK(s.correction(v1(3.0)).norm() == 0.0);
        CHECK(s.bias_bound(v1(3.0)) == 0.0);
    }
    SUBCASE("exponential density, cutoff 1") {
        const auto nu = LevyMeasure::exponential(1.0, 1.0);
        const JumpSplit s = small_jump_split(nu, lin, 1.0);
        CHECK(s.big.total_mass() == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
        CHECK(std::abs(s.correction(v1(0.0))[0]) < 1e-14);
        // int_{|z|<1} |z| e^{-|z|} dz = 2 (1 - 2/e)
        CHECK(s.bias_bound(v1(0.0)) == doctest::Approx(2.0 * (1.0 - 2.0 / std::exp(1.0))).epsilon(1e-8));
    }
    SUBCASE("big mass is nonincreasing in the cutoff") {
        const auto nu = LevyMeasure::tempered_power(1.0, 0.5, 1.0);
        double prev = std::numeric_limits<double>::infinity();
        for (double d : {1e-4, 1e-3, 1e-2, 0.1, 1.0}) {
            const double m = small_jump_split(nu, lin, d).big.total_mass();
            CHECK(m <= prev);
            CHECK(std::isfinite(m));
            prev = m;
        }
    }
    SUBCASE("invalid cutoffs") {
        const auto nu = LevyMeasure::tempered_power(1.0, 0.9, 1.0);
        CHECK_THROWS_AS(small_jump_split(nu, lin, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(small_jump_split(nu, lin, 1e-12), std::invalid_argument);
    }
}

TEST_CASE("mark sampling follows the normalised big-jump measure") {
    const auto nu = LevyMeasure::tempered_power(1.0, 0.5, 1.0).window(0.1, std::numeric_limits<double>::infinity());
    std::mt19937_64 rng(5);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double z = std::abs(nu.sample_mark(rng)[0]);
        s += z;
        s2 += z * z;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    const double exact = integrate(nu, abs_z).value / nu.total_mass();
    CHECK(std::abs(mean - exact) < 4.0 * se);

    const auto atoms = LevyMeasure::from_atoms({{v1(1.0), 3.0}, {v1(-1.0), 1.0}});
    int plus = 0;
    for (int k = 0; k < n; ++k) plus += atoms.sample_mark(rng)[0] > 0.0;
    CHECK(static_cast<double>(plus) / n == doctest::Approx(0.75).epsilon(0.01));
}
