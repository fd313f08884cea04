#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "impulse/grid.hpp"

#include <cmath>
#include <sstream>

using namespace impulse;

namespace {

Vec v(std::initializer_list<double> xs) {
    Vec out(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) out[i++] = x;
    return out;
}

Grid line(int nodes = 17, int margin = 2) { return Grid(v({-2.0}), v({2.0}), {nodes}, margin); }

}  // namespace

TEST_CASE("indexing round trips") {
    const Grid g(v({0.0, -1.0}), v({1.0, 1.0}), {5, 9}, 1);
    CHECK(g.size() == 45);
    CHECK(g.spacing(0) == 0.25);
    CHECK(g.spacing(1) == 0.25);
    for (std::size_t f = 0; f < g.size(); ++f) CHECK(g.flat(g.index(f)) == f);
    CHECK(g.coord(g.flat({4, 8})) == v({1.0, 1.0}));
    CHECK(g.on_boundary(g.flat({0, 3})));
    CHECK_FALSE(g.on_boundary(g.flat({1, 3})));
    CHECK(g.in_core(g.flat({1, 3})));
    CHECK_FALSE(g.in_core(g.flat({0, 3})));
}

TEST_CASE("projection and nearest node") {
    const Grid g = line();
    CHECK(g.project(v({5.0}))[0] == 2.0);
    CHECK(g.nearest(v({-1.99})) == 0);
    CHECK(g.nearest(v({0.1})) == 8);
    CHECK(g.contains(v({2.0})));
    CHECK_FALSE(g.contains(v({2.0 + 1e-9})));
}

TEST_CASE("invalid grids are rejected") {
    CHECK_THROWS_AS(Grid(v({0.0}), v({1.0}), {3}), std::invalid_argument);
    CHECK_THROWS_AS(Grid(v({0.0}), v({0.0}), {9}), std::invalid_argument);
    CHECK_THROWS_AS(Grid(v({0.0}), v({1.0}), {9}, 5), std::invalid_argument);
    CHECK_THROWS_AS(Grid(v({0.0, 0.0}), v({1.0}), {9}), std::invalid_argument);
    try {
        Grid(v({0.0}), v({1.0}), {3});
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("grid too small") != std::string::npos);
    }
}

TEST_CASE("refinement halves the spacing on the same box") {
    const Grid g = line(17, 2);
    const Grid f = g.refined();
    CHECK(f.nodes(0) == 33);
    CHECK(f.spacing(0) == g.spacing(0) / 2);
    CHECK(f.core_margin() == 4);
    CHECK(f.lo() == g.lo());
    CHECK(f.hi() == g.hi());
    // Coarse nodes are fine nodes.
    for (int i = 0; i < 17; ++i) CHECK(f.coord(0, 2 * i) == g.coord(0, i));
}

TEST_CASE("multilinear interpolation reproduces affine functions") {
    const Grid g(v({-1.0, -1.0}), v({1.0, 2.0}), {9, 13});
    const ScalarField phi = ScalarField::from_function(
        g, [](const Vec& x) { return 1.0 + 2.0 * x[0] - 0.5 * x[1]; });
    for (const Vec& x : {v({0.3, 0.7}), v({-0.99, 1.99}), v({0.0, 0.0})})
        CHECK(phi.evaluate(x) == doctest::Approx(1.0 + 2.0 * x[0] - 0.5 * x[1]));
    CHECK(phi.lipschitz_constant() == doctest::Approx(std::sqrt(4.25)));
    CHECK(phi.discrete_lipschitz() == doctest::Approx(2.0));
    CHECK(phi.increment(v({0.3, 0.7}), phi.evaluate(v({0.3, 0.7}))) == doctest::Approx(0.0));
}

TEST_CASE("extension rules outside the box") {
    const Grid g = line();
    const ScalarFn f = [](const Vec& x) { return 3.0 * x[0]; };
    const ScalarField lip = ScalarField::from_function(g, f, Extension::lipschitz_clamp);
    const ScalarField con = ScalarField::from_function(g, f, Extension::constant_clamp);
    const ScalarField lin = ScalarField::from_function(g, f, Extension::linear_extrapolation);
    CHECK(lip.extension_slope() == doctest::Approx(3.0));
    CHECK(lip.evaluate(v({3.0})) == doctest::Approx(6.0 + 3.0));
    CHECK(lip.evaluate(v({-3.0})) == doctest::Approx(-6.0 + 3.0));
    CHECK(con.evaluate(v({3.0})) == doctest::Approx(6.0));
    CHECK(lin.evaluate(v({3.0})) == doctest::Approx(9.0));
    CHECK(lin.evaluate(v({-3.0})) == doctest::Approx(-9.0));
}

TEST_CASE("field validation") {
    const Grid g = line();
    CHECK_THROWS_AS(ScalarField(g, Vec::Zero(3)), std::invalid_argument);
    Vec bad = Vec::Zero(static_cast<Eigen::Index>(g.size()));
    bad[4] = std::nan("");
    CHECK_THROWS_AS(ScalarField(g, bad), std::invalid_argument);
}

TEST_CASE("csv round trip is lossless") {
    const Grid g(v({-1.0, 0.5}), v({1.0 / 3.0, 2.0}), {7, 5}, 1);
    const ScalarField phi =
        ScalarField::from_function(g, [](const Vec& x) { return std::sin(x[0]) * std::exp(x[1]) / 7.0; });
    std::stringstream ss;
    write_field_csv(ss, phi);
    const ScalarField back = read_field_csv(ss);
    CHECK(back.grid() == g);
    CHECK(back.values() == phi.values());  // bit-exact
    CHECK(parse_grid_header(grid_header(g)) == g);
}

TEST_CASE("malformed csv") {
    std::stringstream none("x,value\n0,1\n");
    CHECK_THROWS_AS(read_field_csv(none), std::runtime_error);
    std::stringstream empty;
    CHECK_THROWS_AS(read_field_csv(empty), std::runtime_error);
    const Grid g = line(5, 0);
    std::stringstream short_rows;
    short_rows << grid_header(g) << "\nx0,value\n-2,0\n";
    CHECK_THROWS_AS(read_field_csv(short_rows), std::runtime_error);
    CHECK_THROWS_AS(read_field_csv("/nonexistent/dir/u.csv"), std::runtime_error);
}
