#pragma once

#include "impulse/grid.hpp"
#include "impulse/model.hpp"
#include "impulse/operators.hpp"

#include <string>
#include <vector>

namespace impulse {

/// Penalty function beta_eps for the obstacle constraint v <= g.
///   t > 0 : beta(t) = m t
///   t <= 0: beta(t) = c (exp(m t / c) - 1)
/// with slope m = (1 - 1e-6) min(1/eps, 1/omega) and floor c = min(1, eps).
/// beta(0) = 0, beta >= -1, 0 < beta' <= m < 1/omega, and beta is C^1.
class PenaltyFamily {
public:
    PenaltyFamily(double eps, double omega);

    double eps() const { return eps_; }
    double omega() const { return omega_; }
    double slope() const { return slope_; }
    double floor() const { return floor_; }

    double operator()(double t) const;
    double derivative(double t) const;

private:
    double eps_, omega_, slope_, floor_;
};

PenaltyFamily make_penalty(double eps, double omega);

struct PenaltyStep {
    double eps = 0.0;
    double mollify_radius = 0.0;
    double omega = 0.0;       // sup_{eps' <= eps} |g^eps' - g|
    double sup_beta = 0.0;    // sup over interior nodes of |beta(v - g^eps)|
    double lg_floor = 0.0;    // M with L g^eps >= -M on interior nodes
    double bound = 0.0;       // max|f| + M + 1
    int newton_iterations = 0;
};

struct ObstacleOptions {
    std::vector<double> eps_schedule;    // strictly decreasing
    std::vector<double> mollify_radius;  // per eps, state units; empty = none
    double newton_tol = 1e-10;
    int max_newton = 60;
    int max_halvings = 30;  // guard against non-finite trial residuals
};

struct ObstacleSolution {
    Vec v;
    std::vector<PenaltyStep> log;
};

/// Box-kernel average of g over nodes within `radius` (sup-norm) of each node.
Vec mollify(const Grid& grid, const Vec& g, double radius);

/// Solves L v + beta_eps(v - g^eps) = f on interior nodes, v = boundary on the
/// grid boundary, for each eps in the schedule (warm-started). `v0` is the
/// initial iterate. Throws ConvergenceError on Newton failure and
/// std::invalid_argument for a non-monotone stencil.
ObstacleSolution solve_obstacle_penalized(const OperatorStencil& stencil, const Vec& f_src,
                                          const Vec& g_obstacle, const Vec& boundary,
                                          const Vec& v0, const ObstacleOptions& options);

enum class Region : unsigned char { continuation = 0, action = 1 };

struct SolverParams {
    DriftScheme scheme = DriftScheme::upwind;
    double tol_outer = 0.0;      // <= 0: max(1e-6 |f|_inf, 10 eps_final) / r
    double tol_region = 0.0;     // <= 0: 10 tol_outer
    int schedule_length = 10;    // eps_k = 2^-k penalty_unit, k = 1..len
    double penalty_unit = 1e-6;
    double mollify_unit = 0.0;   // <= 0: 4 h_min; radius_k = 2^-k mollify_unit
    double newton_tol = 1e-10;
    int max_outer = 200;
    int max_newton = 60;
    double search_radius = 0.0;  // <= 0: covers the whole box
    bool include_offbox = false;
    Extension extension = Extension::lipschitz_clamp;
};

struct SolveResult {
    ScalarField u;
    ScalarField u0;              // no-intervention value
    ScalarField mu_field;        // M u
    ScalarField iu_field;        // I u
    std::vector<Region> region;
    std::vector<Vec> policy;     // xi* per node (meaningful on action nodes)
    std::vector<std::ptrdiff_t> target;
    double residual_hjb = 0.0;
    int outer_iterations = 0;
    std::vector<double> outer_history;  // |u_{k+1} - u_k|_inf
    std::vector<PenaltyStep> penalty_log;
    double tol_outer = 0.0;
    double tol_region = 0.0;
    double offbox_mass = 0.0;
    SolverParams params;

    std::size_t action_count() const;
};

/// Resolved tolerances and schedules for a model/grid pair.
SolverParams resolve_params(const ModelSpec& model, const Grid& grid, SolverParams params);

/// Iterated optimal stopping for max(Ell u - f, u - M u) = 0 on the grid box.
SolveResult solve_qvi(const ModelSpec& model, const Grid& grid, const SolverParams& params = {});

struct PolicyReport {
    std::vector<std::size_t> action_nodes;
    std::vector<Vec> displacement;
    std::vector<std::size_t> violations;        // u(y) > M u(y) - K + tol_jump
    std::vector<std::size_t> outside_d;         // u(y) >= M u(y) - K/2
    double tol_jump = 0.0;
    double worst_margin = 0.0;                  // max u(y) - M u(y) + K
};

/// Reads the optimal displacement of every action node and audits the landing
/// points y = x + xi*: u(y) <= M u(y) - K + tol_jump, and y in {u < M u - K/2}.
PolicyReport extract_policy(const SolveResult& result, const CostB& cost, double tol_jump);

/// Writes u.csv, u0.csv, mu.csv, iu.csv, regions.csv, policy.csv and log.txt.
void write_result(const std::string& dir, const SolveResult& result, const std::string& stanza);

struct StoredResult {
    ScalarField u;
    std::vector<Region> region;
    std::vector<Vec> policy;
};

/// Loads u.csv, regions.csv and policy.csv. Throws std::runtime_error when
/// any is missing or malformed.
StoredResult read_result(const std::string& dir);

}  // namespace impulse
