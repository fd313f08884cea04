#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"
#include "impulse/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace impulse;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string benchmark_text() { return read_text(fixture::config_path("benchmark.json")); }

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto p = s.find(from);
    REQUIRE(p != std::string::npos);
    return s.replace(p, from.size(), to);
}

Vec v1(double x) { return Vec::Constant(1, x); }

}  // namespace

TEST_CASE("benchmark config builds the expected model") {
    const Config c = fixture::load("benchmark.json");
    const ModelSpec& m = c.model;
    CHECK(m.dim_state == 1);
    CHECK(m.discount == 1.0);
    CHECK(m.diffusion_matrix(v1(3.0))(0, 0) == doctest::Approx(1.0));
    CHECK(m.running_cost(v1(-2.5)) == 2.5);
    CHECK(m.transaction_cost(v1(2.0)) == doctest::Approx(1.2));
    CHECK(m.transaction_cost.K == 1.0);
    CHECK(m.levy.total_mass() == 1.0);
    CHECK(m.jump(v1(4.0), v1(1.0))[0] == 1.0);
    CHECK(m.mean_jump(v1(0.0))[0] == 1.0);
    CHECK(c.grid.nodes == std::vector<int>{257});
    CHECK(c.simulate.paths == 10000);
    CHECK(c.simulate.options.horizon == 12.0);
    CHECK(c.hash == fnv1a(benchmark_text()));
    const Grid g = make_grid(c.grid);
    CHECK(g.size() == 257);
    CHECK(g.core_margin() == 32);  // 2 state units at h = 1/16
}

TEST_CASE("every shipped config parses") {
    for (const auto& name : fixture::matrix()) {
        CAPTURE(name);
        CHECK_NOTHROW(fixture::load(name));
    }
    for (const char* name : {"zero_cost.json", "a5_violation.json", "tiny_grid.json"})
        CHECK_NOTHROW(fixture::load(name));
}

TEST_CASE("families: state-dependent jumps and affine coefficients") {
    const Config c = fixture::load("matrix/m5_exponential_state_jump.json");
    // j(x, z) = z + 0.05 x z
    CHECK(c.model.jump(v1(2.0), v1(0.5))[0] == doctest::Approx(0.55));
    CHECK((*c.model.jump_matrix)(v1(2.0))(0, 0) == doctest::Approx(1.1));
    const Config d = fixture::load("matrix/m2_drift_diffusion.json");
    CHECK(d.model.drift(v1(2.0))[0] == doctest::Approx(-0.4));
    CHECK(d.model.levy.empty());
}

TEST_CASE("grid scaling") {
    const Config c = fixture::load("benchmark.json");
    const Grid g2 = make_grid(c.grid, 2.0);
    CHECK(g2.nodes(0) == 513);
    CHECK(g2.core_margin() == 64);
    CHECK(make_grid(c.grid, 0.5).nodes(0) == 129);
    CHECK_THROWS_AS(make_grid(c.grid, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(c.grid, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(fixture::load("tiny_grid.json").grid), std::invalid_argument);
}

TEST_CASE("defaults") {
    const std::string text = replace(replace(benchmark_text(),
        R"("simulate": {"paths": 10000, "seed": 1, "dt": 0.01, "horizon": 12.0, "x0": [0.0]},)", ""),
        R"("discount": 1.0,)", R"("discount": 0.5,)");
    const Config c = parse_config(text);
    CHECK(c.simulate.options.horizon == doctest::Approx(80.0));
    CHECK(c.simulate.paths == 1000);
    CHECK(c.simulate.x0 == v1(0.0));
    CHECK(c.solver.schedule_length == 10);
    CHECK(c.diagnostics.holder_alphas.size() == 3);
}

TEST_CASE("malformed configs raise ConfigError with a reason") {
    auto message = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    const std::string base = benchmark_text();
    CHECK(message("{ not json").find("invalid JSON") != std::string::npos);
    CHECK(message(replace(base, R"("type": "abs", "scale": 1.0)", R"("type": "cubic")"))
              .find("unknown running_cost type") != std::string::npos);
    CHECK(message(replace(base, R"("nodes": [257])", R"("nodes": [257, 3])"))
              .find("grid.nodes") != std::string::npos);
    CHECK(message(replace(base, R"("K": 1.0, )", "")).find("'K'") != std::string::npos);
    CHECK(message(replace(base, R"("scheme": "upwind")", R"("scheme": "spectral")"))
              .find("unknown scheme") != std::string::npos);
    CHECK(message(replace(base, R"([[1.4142135623730951]])", R"([[1.0, 2.0]])"))
              .find("volatility") != std::string::npos);
    CHECK(message(replace(base, R"("intensity": 1.0)", R"("intensity": -1.0)")) != "no error");
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("hash") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("ab") != fnv1a("ba"));
}
