#pragma once

#include "impulse/types.hpp"

#include <limits>
#include <random>
#include <vector>

namespace impulse {

struct ModelSpec;

enum class LevyKind { finite_atoms, density };

// Symmetric one-dimensional densities in the mark variable.
//   exponential:    rho(z) = c exp(-a|z|)
//   tempered_power: rho(z) = c |z|^-(1+alpha) exp(-a|z|)
enum class DensityFamily { exponential, tempered_power };

struct Atom {
    Vec mark;
    double intensity;
};

struct QuadratureNode {
    Vec mark;
    double weight;  // nu-mass carried by the node
};

struct Integral {
    double value;
    double error_estimate;
};

class LevyMeasure {
public:
    static constexpr int default_nodes_per_sign = 256;

    /// Empty measure (no jumps) with the given mark dimension.
    static LevyMeasure none(int mark_dim = 1);
    static LevyMeasure from_atoms(std::vector<Atom> atoms);
    static LevyMeasure exponential(double scale, double rate,
                                   int nodes_per_sign = default_nodes_per_sign);
    static LevyMeasure tempered_power(double scale, double alpha, double rate,
                                      int nodes_per_sign = default_nodes_per_sign);

    LevyKind kind() const { return kind_; }
    DensityFamily family() const { return family_; }
    int mark_dim() const { return mark_dim_; }
    const std::vector<Atom>& atoms() const { return atoms_; }

    double scale() const { return scale_; }
    double alpha() const { return alpha_; }
    double rate() const { return rate_; }
    int nodes_per_sign() const { return nodes_per_sign_; }

    /// |z| range carried by a density measure: [inner_cutoff, outer_cutoff).
    double inner_cutoff() const { return inner_; }
    double outer_cutoff() const { return outer_; }

    double density(double z) const;

    /// nu(R^l); +infinity for infinite activity.
    double total_mass() const;
    bool finite_activity() const { return std::isfinite(total_mass()); }
    bool empty() const;

    /// Quadrature nodes realising the measure. Exact for atoms; for densities
    /// a graded composite Simpson rule (geometric toward z = 0, uniform in
    /// the exponential tail) with `nodes_per_sign` intervals per sign.
    std::vector<QuadratureNode> rule(int nodes_per_sign) const;
    const std::vector<QuadratureNode>& nodes() const { return nodes_; }

    /// The measure restricted to lo <= |z| < hi.
    LevyMeasure window(double lo, double hi) const;

    /// Draws a mark from the normalised measure. Requires finite mass.
    Vec sample_mark(std::mt19937_64& rng) const;

private:
    LevyKind kind_ = LevyKind::finite_atoms;
    DensityFamily family_ = DensityFamily::exponential;
    int mark_dim_ = 1;
    std::vector<Atom> atoms_;
    double scale_ = 0.0;
    double alpha_ = 0.0;
    double rate_ = 1.0;
    int nodes_per_sign_ = default_nodes_per_sign;
    double inner_ = 0.0;
    double outer_ = std::numeric_limits<double>::infinity();
    std::vector<QuadratureNode> nodes_;
    std::vector<double> cumulative_;  // running atom intensities

    void finalize();
    // |z| limits actually covered by the density rule.
    double rule_lo() const;
    double rule_hi() const;
};

/// Integral of `integrand` against the measure. Atoms: exact weighted sum,
/// zero error. Densities: graded Simpson at 2N nodes per sign, Richardson
/// error estimate against N, plus a power-law remainder on (0, z_floor).
/// Throws AssumptionError when the integrand is not integrable at z = 0.
Integral integrate(const LevyMeasure& measure, const ScalarFn& integrand);

/// Componentwise integral of a vector-valued integrand, using the measure's
/// stored rule.
Vec integrate_vector(const LevyMeasure& measure, int dim, const VectorFn& integrand);

struct CertificateReport {
    double cj_l1 = 0.0;       // int C_j dnu
    double cj_l2 = 0.0;       // int C_j^2 dnu
    double j_l1_max = 0.0;    // max over samples of int |j(x, z)| dnu
    bool cj_l1_ok = false;
    bool cj_l2_ok = false;
    bool j_l1_ok = false;
    std::string failure;      // names the first violated condition
    bool passed() const { return cj_l1_ok && cj_l2_ok && j_l1_ok; }
};

CertificateReport check_integrability(const LevyMeasure& measure, const ModelSpec& model,
                                      const std::vector<Vec>& sample_x);

struct JumpSplit {
    LevyMeasure big;          // |z| >= cutoff, finite mass
    VectorFn correction;      // x -> -int_{|z|<cutoff} j(x, z) nu(dz)
    ScalarFn bias_bound;      // x -> int_{|z|<cutoff} |j(x, z)| nu(dz)
};

JumpSplit small_jump_split(const LevyMeasure& measure, const JumpFn& jump, double cutoff);

}  // namespace impulse
