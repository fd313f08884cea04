#include "impulse/config.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace impulse {

using json = nlohmann::json;

namespace {

const json& section(const json& root, const char* key) {
    if (!root.contains(key) || !root.at(key).is_object())
        throw ConfigError(std::string("config: missing section [") + key + "]");
    return root.at(key);
}

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ConfigError(std::string("config: missing number '") + key + "'");
    return j.at(key).get<double>();
}

Vec vec(const json& j, int dim, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ConfigError(std::string("config: '") + what + "' must be an array of length " +
                          std::to_string(dim));
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

Mat mat(const json& j, int rows, int cols, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw ConfigError(std::string("config: '") + what + "' must have " +
                          std::to_string(rows) + " rows");
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) m.row(r) = vec(j.at(static_cast<std::size_t>(r)), cols, what);
    return m;
}

std::string kind(const json& j, const char* what) {
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError(std::string("config: '") + what + "' needs a type");
    return j.at("type").get<std::string>();
}

void build_model(ModelSpec& m, const json& sm) {
    const int n = m.dim_state = sm.value("dim", 1);
    const int d = m.dim_noise = sm.value("noise_dim", n);
    const int l = m.dim_mark = sm.value("mark_dim", 1);
    if (n < 1 || d < 1 || l < 1) throw ConfigError("config: dimensions must be positive");
    m.discount = number(sm, "discount");

    if (!sm.contains("drift")) throw ConfigError("config: missing model.drift");
    {
        const json& j = sm.at("drift");
        const std::string t = kind(j, "drift");
        if (t == "zero") {
            m.drift = [n](const Vec&) { return Vec(Vec::Zero(n)); };
        } else if (t == "affine") {
            const Vec b = j.contains("offset") ? vec(j.at("offset"), n, "drift.offset") : Vec(Vec::Zero(n));
            const Mat A = j.contains("matrix") ? mat(j.at("matrix"), n, n, "drift.matrix") : Mat(Mat::Zero(n, n));
            m.drift = [b, A](const Vec& x) { return Vec(b + A * x); };
        } else {
            throw ConfigError("config: unknown drift type '" + t + "'");
        }
    }

    if (!sm.contains("volatility")) throw ConfigError("config: missing model.volatility");
    {
        const json& j = sm.at("volatility");
        const std::string t = kind(j, "volatility");
        if (t == "constant") {
            const Mat S = mat(j.at("matrix"), n, d, "volatility.matrix");
            m.volatility = [S](const Vec&) { return S; };
        } else if (t == "affine_diag") {
            if (d != n) throw ConfigError("config: affine_diag volatility needs noise_dim = dim");
            const Vec base = vec(j.at("base"), n, "volatility.base");
            const Vec slope = vec(j.at("slope"), n, "volatility.slope");
            m.volatility = [base, slope](const Vec& x) {
                return Mat((base + slope.cwiseProduct(x)).asDiagonal());
            };
        } else {
            throw ConfigError("config: unknown volatility type '" + t + "'");
        }
    }

    {
        const json j = sm.value("jump", json{{"type", "zero"}});
        const std::string t = kind(j, "jump");
        if (t == "zero") {
            m.jump = [n](const Vec&, const Vec&) { return Vec(Vec::Zero(n)); };
            m.jump_matrix = [n, l](const Vec&) { return Mat(Mat::Zero(n, l)); };
        } else if (t == "linear") {
            // j(x, z) = J z + (G x) z_0
            const Mat J = mat(j.at("matrix"), n, l, "jump.matrix");
            const Mat G = j.contains("state_gain") ? mat(j.at("state_gain"), n, n, "jump.state_gain")
                                                   : Mat(Mat::Zero(n, n));
            m.jump_matrix = [J, G](const Vec& x) {
                Mat M = J;
                M.col(0) += G * x;
                return M;
            };
            m.jump = [J, G](const Vec& x, const Vec& z) { return Vec(J * z + (G * x) * z[0]); };
        } else {
            throw ConfigError("config: unknown jump type '" + t + "'");
        }
    }

    if (!sm.contains("running_cost")) throw ConfigError("config: missing model.running_cost");
    {
        const json& j = sm.at("running_cost");
        const std::string t = kind(j, "running_cost");
        if (t == "zero") {
            m.running_cost = [](const Vec&) { return 0.0; };
        } else if (t == "constant") {
            const double c = number(j, "value");
            m.running_cost = [c](const Vec&) { return c; };
        } else if (t == "abs") {
            const double s = j.value("scale", 1.0), off = j.value("offset", 0.0);
            const Vec c = j.contains("center") ? vec(j.at("center"), n, "running_cost.center") : Vec(Vec::Zero(n));
            m.running_cost = [s, off, c](const Vec& x) { return s * (x - c).norm() + off; };
        } else {
            throw ConfigError("config: unknown running_cost type '" + t + "'");
        }
    }

    {
        const json& j = section(sm, "transaction_cost");
        CostB B;
        B.K = number(j, "K");
        const double lin = j.value("linear", 0.0), quad = j.value("quadratic", 0.0);
        const double K = B.K;
        B.evaluate = [K, lin, quad](const Vec& xi) {
            const double r = xi.norm();
            return K + lin * r + quad * r * r;
        };
        B.coercivity_radius = j.value("coercivity_radius", 1.0);
        m.transaction_cost = B;
    }

    {
        const json& j = section(sm, "constants");
        m.c_mu = number(j, "c_mu");
        m.c_sigma = number(j, "c_sigma");
        m.c_f = number(j, "c_f");
        m.ellipticity = number(j, "ellipticity");
        const json cj = j.value("c_j", json{{"type", "zero"}});
        const std::string t = kind(cj, "c_j");
        const double s = cj.value("scale", 0.0);
        if (t == "zero") m.c_j = [](const Vec&) { return 0.0; };
        else if (t == "abs") m.c_j = [s](const Vec& z) { return s * z.norm(); };
        else if (t == "min_abs_one") m.c_j = [s](const Vec& z) { return s * std::min(z.norm(), 1.0); };
        else throw ConfigError("config: unknown c_j type '" + t + "'");
    }
}

LevyMeasure build_levy(const json& j, int mark_dim) {
    const std::string t = kind(j, "levy");
    if (t == "none") return LevyMeasure::none(mark_dim);
    if (t == "atoms") {
        std::vector<Atom> atoms;
        for (const auto& a : j.at("atoms"))
            atoms.push_back({vec(a.at("mark"), mark_dim, "levy.atoms.mark"), number(a, "intensity")});
        return LevyMeasure::from_atoms(std::move(atoms));
    }
    if (mark_dim != 1) throw ConfigError("config: density measures need mark_dim = 1");
    const int nodes = j.value("nodes", LevyMeasure::default_nodes_per_sign);
    if (t == "exponential") return LevyMeasure::exponential(number(j, "scale"), number(j, "rate"), nodes);
    if (t == "tempered_power")
        return LevyMeasure::tempered_power(number(j, "scale"), number(j, "alpha"), number(j, "rate"), nodes);
    throw ConfigError("config: unknown levy type '" + t + "'");
}

Extension parse_extension(const std::string& s) {
    if (s == "lipschitz_clamp") return Extension::lipschitz_clamp;
    if (s == "constant_clamp") return Extension::constant_clamp;
    if (s == "linear_extrapolation") return Extension::linear_extrapolation;
    throw ConfigError("config: unknown extension '" + s + "'");
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Grid make_grid(const GridSpec& spec, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("grid scale must be positive");
    std::vector<int> nodes(spec.nodes.size());
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const double cells = (spec.nodes[a] - 1) * scale;
        if (std::abs(cells - std::round(cells)) > 1e-9)
            throw std::invalid_argument("grid scale must give a whole number of cells");
        nodes[a] = static_cast<int>(std::round(cells)) + 1;
    }
    // Collar in nodes from the finest axis spacing, so it covers core_margin on every axis.
    int margin = 0;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        if (nodes[a] < 2) continue;
        const double h = (spec.hi[static_cast<Eigen::Index>(a)] - spec.lo[static_cast<Eigen::Index>(a)]) / (nodes[a] - 1);
        margin = std::max(margin, static_cast<int>(std::ceil(spec.core_margin / h - 1e-9)));
    }
    return Grid(spec.lo, spec.hi, nodes, margin);
}

Config parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    Config c;
    c.source = text;
    c.hash = fnv1a(text);
    try {
        build_model(c.model, section(root, "model"));
        c.model.levy = build_levy(section(root, "levy"), c.model.dim_mark);
        const int n = c.model.dim_state;

        const json& g = section(root, "grid");
        c.grid.lo = vec(g.at("lo"), n, "grid.lo");
        c.grid.hi = vec(g.at("hi"), n, "grid.hi");
        const json& nodes = g.at("nodes");
        if (!nodes.is_array() || static_cast<int>(nodes.size()) != n)
            throw ConfigError("config: grid.nodes must have one entry per axis");
        for (const auto& v : nodes) c.grid.nodes.push_back(v.get<int>());
        c.grid.core_margin = g.value("core_margin", 0.0);

        if (root.contains("solver")) {
            const json& s = root.at("solver");
            SolverParams& p = c.solver;
            const std::string scheme = s.value("scheme", "upwind");
            if (scheme == "upwind") p.scheme = DriftScheme::upwind;
            else if (scheme == "central") p.scheme = DriftScheme::central;
            else throw ConfigError("config: unknown scheme '" + scheme + "'");
            p.tol_outer = s.value("tol_outer", p.tol_outer);
            p.tol_region = s.value("tol_region", p.tol_region);
            p.schedule_length = s.value("schedule_length", p.schedule_length);
            p.penalty_unit = s.value("penalty_unit", p.penalty_unit);
            p.mollify_unit = s.value("mollify_unit", p.mollify_unit);
            p.newton_tol = s.value("newton_tol", p.newton_tol);
            p.max_outer = s.value("max_outer", p.max_outer);
            p.max_newton = s.value("max_newton", p.max_newton);
            p.search_radius = s.value("search_radius", p.search_radius);
            p.include_offbox = s.value("include_offbox", p.include_offbox);
            p.extension = parse_extension(s.value("extension", std::string("lipschitz_clamp")));
        }

        c.simulate.x0 = Vec::Zero(n);
        if (root.contains("simulate")) {
            const json& s = root.at("simulate");
            SimulationOptions& o = c.simulate.options;
            c.simulate.paths = s.value("paths", c.simulate.paths);
            o.seed = s.value("seed", o.seed);
            o.dt = s.value("dt", o.dt);
            o.horizon = s.value("horizon", 40.0 / c.model.discount);
            o.jump_cutoff = s.value("jump_cutoff", o.jump_cutoff);
            if (s.contains("x0")) c.simulate.x0 = vec(s.at("x0"), n, "simulate.x0");
        } else {
            c.simulate.options.horizon = 40.0 / c.model.discount;
        }

        if (root.contains("diagnostics")) {
            const json& s = root.at("diagnostics");
            DiagnosticsSettings& d = c.diagnostics;
            d.lipschitz_tol = s.value("lipschitz_tol", d.lipschitz_tol);
            d.lipschitz_exact = s.value("lipschitz_exact", d.lipschitz_exact);
            d.holder_alphas = s.value("holder_alphas", d.holder_alphas);
            d.holder_margin = s.value("holder_margin", d.holder_margin);
            d.residual_factor = s.value("residual_factor", d.residual_factor);
            d.smooth_fit_max = s.value("smooth_fit_max", d.smooth_fit_max);
            d.second_derivative_max = s.value("second_derivative_max", d.second_derivative_max);
            d.placement_factor = s.value("placement_factor", d.placement_factor);
            d.refinement = s.value("refinement", d.refinement);
            d.validation_samples = s.value("validation_samples", d.validation_samples);
            d.validation_tolerance = s.value("validation_tolerance", d.validation_tolerance);
            d.validation_seed = s.value("validation_seed", d.validation_seed);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

}  // namespace impulse
