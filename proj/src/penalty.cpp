#include "impulse/solver.hpp"

#include <algorithm>
#include <cmath>

namespace impulse {

PenaltyFamily::PenaltyFamily(double eps, double omega) : eps_(eps), omega_(omega) {
    if (!(eps > 0.0)) throw std::invalid_argument("penalty: eps must be positive");
    if (omega < 0.0) throw std::invalid_argument("penalty: omega must be non-negative");
    const double cap = omega > 0.0 ? std::min(1.0 / eps, 1.0 / omega) : 1.0 / eps;
    slope_ = (1.0 - 1e-6) * cap;
    floor_ = std::min(1.0, eps);
}

double PenaltyFamily::operator()(double t) const {
    if (t > 0.0) return slope_ * t;
    return floor_ * std::expm1(slope_ * t / floor_);
}

double PenaltyFamily::derivative(double t) const {
    if (t > 0.0) return slope_;
    return slope_ * std::exp(slope_ * t / floor_);
}

PenaltyFamily make_penalty(double eps, double omega) { return PenaltyFamily(eps, omega); }

}  // namespace impulse
