#pragma once

#include "impulse/grid.hpp"
#include "impulse/model.hpp"
#include "impulse/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace impulse {

struct ImpulseRule {
    std::function<bool(const Vec&)> trigger;
    VectorFn displacement;
};

/// Either a region policy read off a solve (nearest-node classification,
/// lattice displacement of that node) or an explicit list of trigger rules
/// where the first matching rule fires.
class ImpulsePolicy {
public:
    enum class Kind { region_policy, explicit_schedule };

    static ImpulsePolicy never();
    static ImpulsePolicy from_regions(Grid grid, std::vector<Region> region, std::vector<Vec> xi);
    static ImpulsePolicy from_result(const SolveResult& result);
    static ImpulsePolicy from_rules(std::vector<ImpulseRule> rules);

    Kind kind() const { return kind_; }
    /// Displacement to apply at x, or nullopt when x is in continuation.
    std::optional<Vec> decide(const Vec& x) const;

private:
    Kind kind_ = Kind::explicit_schedule;
    Grid grid_;
    std::vector<Region> region_;
    std::vector<Vec> xi_;
    std::vector<ImpulseRule> rules_;
};

struct JumpEvent {
    double time;
    Vec mark;
    Vec displacement;
};

struct ImpulseEvent {
    double time;
    Vec xi;
    double cost;  // B(xi), undiscounted
};

struct PathRecord {
    std::vector<double> times;   // t_k
    std::vector<Vec> states;     // X(t_k) after any impulse at t_k
    std::vector<Vec> diffusion;  // Brownian increments of step k
    std::vector<JumpEvent> jumps;
    std::vector<ImpulseEvent> impulses;
    double running_cost = 0.0;   // sum e^{-r t_k} f(X_k) dt
    double impulse_cost = 0.0;   // sum e^{-r tau_i} B(xi_i)
    double total_cost() const { return running_cost + impulse_cost; }
};

struct SimulationOptions {
    double horizon = 40.0;
    double dt = 0.01;
    double jump_cutoff = 0.01;      // small-jump truncation for densities
    std::uint64_t seed = 0;
    double blowup = 1e8;            // state-norm guard
};

/// Euler-Maruyama with compound-Poisson big jumps. Deterministic given the
/// seed (and path index).
PathRecord simulate_uncontrolled(const ModelSpec& model, const Vec& x0,
                                 const SimulationOptions& options,
                                 std::uint64_t path_index = 0);

/// As simulate_uncontrolled, with the policy consulted at t = 0 and after
/// every step. Throws std::runtime_error when an impulse lands in a state
/// the policy would act on again.
PathRecord simulate_controlled(const ModelSpec& model, const ImpulsePolicy& policy,
                               const Vec& x0, const SimulationOptions& options,
                               std::uint64_t path_index = 0);

/// Recomputes the discounted cost from a stored path.
double replay_cost(const ModelSpec& model, const PathRecord& path, double dt);

struct CostEstimate {
    double j_hat = 0.0;
    double ci_halfwidth = 0.0;     // 95% normal interval
    double truncation_bias = 0.0;  // (sup f / r) e^{-rT}, sup over visited states
    double small_jump_bias = 0.0;  // max over visited states of int_{|z|<cut} |j| dnu
    std::size_t paths = 0;
    std::size_t impulses = 0;
};

CostEstimate estimate_cost(const ModelSpec& model, const ImpulsePolicy& policy, const Vec& x0,
                           std::size_t n_paths, const SimulationOptions& options);

/// max_t E|X1(t) - X2(t)| / (e^{Ct} |x1 - x2|), C = 2C_mu + C_sigma^2 + int C_j^2,
/// over coupled paths sharing noise and jump marks.
double paired_lipschitz_probe(const ModelSpec& model, const Vec& x1, const Vec& x2,
                              std::size_t n_paths, const SimulationOptions& options);

/// One row per event: kind,time,state...,detail...
void write_path_csv(std::ostream& os, const PathRecord& path);

}  // namespace impulse
