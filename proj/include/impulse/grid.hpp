#pragma once

#include "impulse/types.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace impulse {

using Index = std::vector<int>;

/// Uniform tensor grid on [lo, hi]^n. `core_margin` nodes on each side form
/// the collar excluded from diagnostics.
class Grid {
public:
    Grid() = default;
    Grid(Vec lo, Vec hi, std::vector<int> nodes, int core_margin = 0);

    int dim() const { return static_cast<int>(nodes_.size()); }
    std::size_t size() const { return size_; }
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }
    int nodes(int axis) const { return nodes_[axis]; }
    const std::vector<int>& nodes() const { return nodes_; }
    double spacing(int axis) const { return h_[axis]; }
    double min_spacing() const;
    int core_margin() const { return margin_; }

    std::size_t stride(int axis) const { return stride_[axis]; }
    Index index(std::size_t flat) const;
    std::size_t flat(const Index& idx) const;
    Vec coord(std::size_t flat) const;
    double coord(int axis, int i) const { return lo_[axis] + i * h_[axis]; }

    bool on_boundary(std::size_t flat) const;
    bool in_core(std::size_t flat) const;
    bool contains(const Vec& x) const;
    Vec project(const Vec& x) const;
    std::size_t nearest(const Vec& x) const;

    /// Same box, spacing halved on every axis, margin doubled.
    Grid refined() const;

    bool operator==(const Grid& other) const;

private:
    Vec lo_, hi_, h_;
    std::vector<int> nodes_;
    std::vector<std::size_t> stride_;
    std::size_t size_ = 0;
    int margin_ = 0;
};

enum class Extension {
    lipschitz_clamp,      // phi(proj x) + slope * dist(x, box)
    constant_clamp,       // phi(proj x)
    linear_extrapolation  // multilinear formula continued from the edge cell
};

/// Grid-sampled function with multilinear interpolation inside the box and a
/// declared extension rule outside.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(Grid grid, Vec values, Extension extension = Extension::lipschitz_clamp);

    const Grid& grid() const { return grid_; }
    const Vec& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return grid_.size(); }
    Extension extension() const { return extension_; }

    /// Slope used by lipschitz_clamp; defaults to lipschitz_constant().
    double extension_slope() const { return slope_; }
    void set_extension_slope(double slope) { slope_ = slope; }

    double evaluate(const Vec& x) const;
    /// evaluate(x) - base, accumulated as sum w_c (phi_c - base) so tiny
    /// displacements keep their relative precision.
    double increment(const Vec& x, double base) const;

    /// Euclidean Lipschitz constant of the multilinear interpolant.
    double lipschitz_constant() const;
    /// max over axis-adjacent node pairs of |delta phi| / h.
    double discrete_lipschitz() const;

    static ScalarField from_function(const Grid& grid, const ScalarFn& fn,
                                     Extension extension = Extension::lipschitz_clamp);

private:
    Grid grid_;
    Vec values_;
    Extension extension_ = Extension::lipschitz_clamp;
    double slope_ = 0.0;

    template <class Visit>
    void visit_cell(const Vec& x, Visit&& visit) const;
};

/// CSV with a one-line grid header:
///   # grid dim=<n> lo=<..> hi=<..> nodes=<..> margin=<m>
///   x0,...,x{n-1},value
/// Values are written with 17 significant digits (lossless round trip).
void write_field_csv(const std::string& path, const ScalarField& field);
void write_field_csv(std::ostream& os, const ScalarField& field);
ScalarField read_field_csv(const std::string& path);
ScalarField read_field_csv(std::istream& is);

std::string grid_header(const Grid& grid);
Grid parse_grid_header(const std::string& line);

}  // namespace impulse
