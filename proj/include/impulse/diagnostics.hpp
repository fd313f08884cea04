#pragma once

#include "impulse/grid.hpp"
#include "impulse/model.hpp"
#include "impulse/operators.hpp"
#include "impulse/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace impulse {

struct LipschitzCheck {
    double observed = 0.0;
    double bound = 0.0;
    bool pass = false;
};

/// Max over axis-adjacent core pairs of |delta u| / h against
/// bound (1 + tol) + slack; `slack` absorbs solver error in the quotients.
LipschitzCheck check_lipschitz(const ScalarField& u, double bound, double tol = 0.1,
                               double slack = 0.0);

struct ObstacleCheck {
    double max_violation = 0.0;  // max over the core of u - M u
    std::size_t worst_node = 0;
};

ObstacleCheck check_obstacle(const ScalarField& u, const ScalarField& mu_field);

struct HolderCheck {
    double quotient = 0.0;
    std::size_t domain_size = 0;
    std::size_t pairs = 0;
};

/// Empirical C^alpha quotient of I u on D: continuation core nodes at
/// distance >= margin from the action region and from the box boundary.
/// Pairs: all within 10 h plus 1000 random long-range pairs.
/// Throws std::runtime_error when D is empty.
HolderCheck check_iu_holder(const ScalarField& u, const ModelSpec& model,
                            const std::vector<Region>& region, double alpha, double margin,
                            std::uint64_t seed = 7);

/// Refinement stability: ratio of quotients at h and h/2 inside [0.5, 2].
bool holder_stable(const HolderCheck& coarse, const HolderCheck& fine);

struct SmoothFitCheck {
    std::vector<std::size_t> boundary_nodes;  // continuation side of each interface edge
    double max_gradient_jump = 0.0;
    bool has_free_boundary() const { return !boundary_nodes.empty(); }
};

/// One-sided difference quotients from each side of every interface edge in
/// the core, compared along the edge axis.
SmoothFitCheck check_smooth_fit(const ScalarField& u, const std::vector<Region>& region);

/// log2(jump(h) / jump(h/2)).
double smooth_fit_rate(const SmoothFitCheck& coarse, const SmoothFitCheck& fine);

struct SecondDerivativeCheck {
    double max_d2_continuation = 0.0;
};

SecondDerivativeCheck check_second_derivative(const ScalarField& u,
                                              const std::vector<Region>& region);

/// Value at h/2 differs from value at h by less than 50%.
bool second_derivative_stable(const SecondDerivativeCheck& coarse,
                              const SecondDerivativeCheck& fine);

/// sup over the core of |max(Ell u - f, u - M u)|, with I u and M u recomputed
/// by direct loops independent of apply_I / apply_M.
double hjb_residual(const ScalarField& u, const ModelSpec& model,
                    const OperatorStencil& stencil, const SearchBox& search);

struct DiagnosticRow {
    std::string check;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct DiagnosticsReport {
    std::vector<DiagnosticRow> rows;
    bool passed() const;
    void write_csv(std::ostream& os) const;
    void write_summary(std::ostream& os) const;
};

}  // namespace impulse
