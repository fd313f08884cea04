#pragma once

#include "impulse/levy.hpp"
#include "impulse/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace impulse {

/// Transaction cost B with fixed floor K = inf B.
struct CostB {
    double K = 1.0;
    ScalarFn evaluate;
    // B(xi) exceeds every level relevant to the intervention operator once
    // |xi| > coercivity_radius; the search for M must cover this radius.
    double coercivity_radius = 0.0;

    double operator()(const Vec& xi) const { return evaluate(xi); }
};

/// Axis-aligned box used for sampling and grids.
struct Box {
    Vec lo;
    Vec hi;
    Vec width() const { return hi - lo; }
};

struct ModelSpec {
    int dim_state = 1;
    int dim_noise = 1;
    int dim_mark = 1;

    VectorFn drift;         // mu: R^n -> R^n
    MatrixFn volatility;    // sigma: R^n -> R^{n x m}
    JumpFn jump;            // j: R^n x R^l -> R^n
    // Optional structure hint: when set, j(x, z) = jump_matrix(x) * z and
    // moment integrals of j reduce to moments of the measure.
    std::optional<MatrixFn> jump_matrix;
    LevyMeasure levy;
    ScalarFn running_cost;  // f >= 0
    CostB transaction_cost;
    double discount = 1.0;  // r

    // Declared constants; checked, never inferred.
    double c_mu = 0.0;
    double c_sigma = 0.0;
    double c_f = 0.0;
    ScalarFn c_j;           // C_j: R^l -> R_+
    double ellipticity = 0.0;  // lambda in A(x) >= lambda I

    /// A(x) = sigma sigma^T / 2.
    Mat diffusion_matrix(const Vec& x) const;
    /// int j(x, z) nu(dz) over the measure's quadrature rule.
    Vec mean_jump(const Vec& x) const;
    /// 2 C_mu + C_sigma^2 + int C_j^2 dnu.
    double growth_constant() const;
};

struct AssumptionCheck {
    std::string name;       // "A1.drift", "A5", ...
    bool passed = false;
    double worst_ratio = 0.0;  // observed / allowed; pass iff <= 1 + tol
    std::string witness;    // sample realising the worst ratio
    std::string detail;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    double tolerance = 0.05;
    bool hard_failure = false;  // non-finite evaluation encountered

    bool passed() const;
    const AssumptionCheck* find(const std::string& name) const;
    std::string to_string() const;
};

struct ValidationOptions {
    Box box;
    int sample_count = 10000;
    std::uint64_t seed = 0;
    double tolerance = 0.05;
};

/// Sampled consistency check of the standing assumptions against the model's
/// declared constants. Samples come from a randomly shifted Halton sequence.
ValidationReport validate_assumptions(const ModelSpec& model, const ValidationOptions& options);

/// C_u = C_f / (r - [2 C_mu + C_sigma^2 + int C_j^2 dnu]).
/// Throws AssumptionError if the denominator is not positive.
double lipschitz_bound(const ModelSpec& model);

/// Point k of the Halton sequence in `dim` dimensions (bases: first primes).
Vec halton_point(std::uint64_t k, int dim);

}  // namespace impulse
