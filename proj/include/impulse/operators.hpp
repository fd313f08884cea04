#pragma once

#include "impulse/grid.hpp"
#include "impulse/model.hpp"

#include <Eigen/Sparse>

#include <vector>

namespace impulse {

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class DriftScheme { central, upwind };

/// Finite-difference realisation of
///   L phi = -tr(A D^2 phi) - mubar . D phi + r phi,   mubar = mu - int j dnu.
/// Interior rows use centred second differences and the selected drift
/// scheme; boundary rows use one-sided differences (see boundary_row()).
class OperatorStencil {
public:
    OperatorStencil(const Grid& grid, const ModelSpec& model,
                    DriftScheme scheme = DriftScheme::upwind);

    const Grid& grid() const { return grid_; }
    DriftScheme scheme() const { return scheme_; }
    double discount() const { return discount_; }
    const SparseMat& matrix() const { return matrix_; }
    const std::vector<Vec>& effective_drift() const { return mubar_; }

    /// True when every interior off-diagonal is <= 0 (M-matrix structure).
    bool monotone() const { return max_offdiag_ <= 0.0; }
    double max_interior_offdiagonal() const { return max_offdiag_; }

    /// The matrix with boundary rows replaced by identity rows (Dirichlet).
    SparseMat dirichlet_matrix() const;

private:
    Grid grid_;
    DriftScheme scheme_;
    double discount_;
    SparseMat matrix_;
    std::vector<Vec> mubar_;
    double max_offdiag_ = 0.0;
};

struct LResult {
    ScalarField field;
    std::vector<bool> one_sided;  // boundary collar flag per node
};

LResult apply_L(const ScalarField& field, const OperatorStencil& stencil);

struct IResult {
    ScalarField field;
    double extension_fraction = 0.0;  // share of evaluations outside the box
    double offbox_mass = 0.0;         // max over core nodes of nu{z : x + j(x,z) off box}
};

/// I phi(x) = int [phi(x + j(x, z)) - phi(x)] nu(dz), nodewise over the
/// measure's quadrature rule. Throws AssumptionError when j(x, .) is not
/// nu-integrable.
IResult apply_I(const ScalarField& field, const ModelSpec& model);

/// Ell phi = L phi - I phi.
ScalarField apply_Ell(const ScalarField& field, const ModelSpec& model,
                      const OperatorStencil& stencil);

struct SearchBox {
    double radius = 0.0;          // sup-norm radius of candidate displacements
    bool include_offbox = false;  // allow targets outside the grid box
};

struct MResult {
    ScalarField field;
    std::vector<Vec> argmin;                // minimising displacement per node
    std::vector<std::ptrdiff_t> target;     // target node, -1 when off the box
};

/// M phi(x) = min over lattice displacements xi != 0 within the search box of
/// phi(x + xi) + B(xi). Ties go to the smallest |xi|, then lexicographic.
MResult apply_M(const ScalarField& field, const CostB& cost, const SearchBox& search);

}  // namespace impulse
