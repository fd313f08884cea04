#include "impulse/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace impulse {

Grid::Grid(Vec lo, Vec hi, std::vector<int> nodes, int core_margin)
    : lo_(std::move(lo)), hi_(std::move(hi)), nodes_(std::move(nodes)), margin_(core_margin) {
    const int n = static_cast<int>(nodes_.size());
    if (n < 1 || lo_.size() != n || hi_.size() != n)
        throw std::invalid_argument("grid: bounds and node counts disagree in dimension");
    h_.resize(n);
    stride_.resize(n);
    size_ = 1;
    for (int a = 0; a < n; ++a) {
        if (nodes_[a] < 5) throw std::invalid_argument("grid too small: need >= 5 nodes per axis");
        if (!(hi_[a] > lo_[a])) throw std::invalid_argument("grid: empty box");
        h_[a] = (hi_[a] - lo_[a]) / (nodes_[a] - 1);
        stride_[a] = size_;
        size_ *= static_cast<std::size_t>(nodes_[a]);
    }
    if (margin_ < 0) throw std::invalid_argument("grid: negative core margin");
    for (int a = 0; a < n; ++a)
        if (nodes_[a] - 2 * margin_ < 1)
            throw std::invalid_argument("grid too small: core region is empty");
}

double Grid::min_spacing() const { return h_.minCoeff(); }

Index Grid::index(std::size_t flat) const {
    Index idx(nodes_.size());
    for (std::size_t a = 0; a < nodes_.size(); ++a) {
        idx[a] = static_cast<int>(flat % nodes_[a]);
        flat /= nodes_[a];
    }
    return idx;
}

std::size_t Grid::flat(const Index& idx) const {
    std::size_t f = 0;
    for (std::size_t a = 0; a < nodes_.size(); ++a) f += stride_[a] * idx[a];
    return f;
}

Vec Grid::coord(std::size_t flat) const {
    Vec x(dim());
    for (int a = 0; a < dim(); ++a) {
        const int i = static_cast<int>(flat % nodes_[a]);
        flat /= nodes_[a];
        x[a] = coord(a, i);
    }
    return x;
}

bool Grid::on_boundary(std::size_t flat) const {
    for (int a = 0; a < dim(); ++a) {
        const int i = static_cast<int>(flat % nodes_[a]);
        flat /= nodes_[a];
        if (i == 0 || i == nodes_[a] - 1) return true;
    }
    return false;
}

bool Grid::in_core(std::size_t flat) const {
    for (int a = 0; a < dim(); ++a) {
        const int i = static_cast<int>(flat % nodes_[a]);
        flat /= nodes_[a];
        if (i < margin_ || i > nodes_[a] - 1 - margin_) return false;
    }
    return true;
}

bool Grid::contains(const Vec& x) const {
    for (int a = 0; a < dim(); ++a)
        if (x[a] < lo_[a] || x[a] > hi_[a]) return false;
    return true;
}

Vec Grid::project(const Vec& x) const { return x.cwiseMax(lo_).cwiseMin(hi_); }

std::size_t Grid::nearest(const Vec& x) const {
    std::size_t f = 0;
    for (int a = 0; a < dim(); ++a) {
        int i = static_cast<int>(std::lround((x[a] - lo_[a]) / h_[a]));
        i = std::clamp(i, 0, nodes_[a] - 1);
        f += stride_[a] * i;
    }
    return f;
}

Grid Grid::refined() const {
    std::vector<int> nodes(nodes_.size());
    for (std::size_t a = 0; a < nodes_.size(); ++a) nodes[a] = 2 * (nodes_[a] - 1) + 1;
    return Grid(lo_, hi_, nodes, 2 * margin_);
}

bool Grid::operator==(const Grid& o) const {
    return nodes_ == o.nodes_ && margin_ == o.margin_ && lo_ == o.lo_ && hi_ == o.hi_;
}

ScalarField::ScalarField(Grid grid, Vec values, Extension extension)
    : grid_(std::move(grid)), values_(std::move(values)), extension_(extension) {
    if (static_cast<std::size_t>(values_.size()) != grid_.size())
        throw std::invalid_argument("field: value count does not match the grid");
    if (!values_.allFinite()) throw std::invalid_argument("field: non-finite value");
    slope_ = lipschitz_constant();
}

ScalarField ScalarField::from_function(const Grid& grid, const ScalarFn& fn, Extension extension) {
    Vec v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = fn(grid.coord(i));
    return ScalarField(grid, std::move(v), extension);
}

// Calls visit(node, weight) for the 2^n corners of the cell containing x
// (x already inside the box, or outside for linear extrapolation).
template <class Visit>
void ScalarField::visit_cell(const Vec& x, Visit&& visit) const {
    const int n = grid_.dim();
    int base[8];
    double frac[8];
    for (int a = 0; a < n; ++a) {
        const double s = (x[a] - grid_.lo()[a]) / grid_.spacing(a);
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, 0, grid_.nodes(a) - 2);
        base[a] = i;
        frac[a] = s - i;
    }
    const int corners = 1 << n;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t f = 0;
        for (int a = 0; a < n; ++a) {
            const bool up = (c >> a) & 1;
            w *= up ? frac[a] : 1.0 - frac[a];
            f += grid_.stride(a) * static_cast<std::size_t>(base[a] + (up ? 1 : 0));
        }
        if (w != 0.0) visit(f, w);
    }
}

double ScalarField::evaluate(const Vec& x) const {
    if (grid_.dim() > 3) throw std::invalid_argument("field evaluation supports n <= 3");
    return increment(x, 0.0);
}

double ScalarField::increment(const Vec& x, double base) const {
    double s = 0.0;
    if (grid_.contains(x) || extension_ == Extension::linear_extrapolation) {
        visit_cell(x, [&](std::size_t f, double w) { s += w * (values_[f] - base); });
        return s;
    }
    const Vec p = grid_.project(x);
    visit_cell(p, [&](std::size_t f, double w) { s += w * (values_[f] - base); });
    if (extension_ == Extension::lipschitz_clamp) s += slope_ * (x - p).norm();
    return s;
}

double ScalarField::lipschitz_constant() const {
    // The interpolant's gradient norm is convex on each cell, so its maximum
    // sits at a corner; corner gradients use the cell's edge differences.
    const int n = grid_.dim();
    double best = 0.0;
    const std::size_t N = grid_.size();
    for (std::size_t f = 0; f < N; ++f) {
        const Index idx = grid_.index(f);
        bool lower_corner = true;
        for (int a = 0; a < n; ++a) lower_corner &= idx[a] < grid_.nodes(a) - 1;
        if (!lower_corner) continue;
        const int corners = 1 << n;
        for (int c = 0; c < corners; ++c) {
            double g2 = 0.0;
            for (int a = 0; a < n; ++a) {
                std::size_t lo = f;
                for (int b = 0; b < n; ++b)
                    if (b != a && ((c >> b) & 1)) lo += grid_.stride(b);
                const double d = (values_[lo + grid_.stride(a)] - values_[lo]) / grid_.spacing(a);
                g2 += d * d;
            }
            best = std::max(best, std::sqrt(g2));
        }
    }
    return best;
}

double ScalarField::discrete_lipschitz() const {
    double best = 0.0;
    for (std::size_t f = 0; f < grid_.size(); ++f) {
        const Index idx = grid_.index(f);
        for (int a = 0; a < grid_.dim(); ++a) {
            if (idx[a] + 1 >= grid_.nodes(a)) continue;
            const double d = std::abs(values_[f + grid_.stride(a)] - values_[f]) / grid_.spacing(a);
            best = std::max(best, d);
        }
    }
    return best;
}

std::string grid_header(const Grid& g) {
    std::ostringstream os;
    os << std::setprecision(17) << "# grid dim=" << g.dim();
    auto list = [&](const char* key, auto get) {
        os << " " << key << "=";
        for (int a = 0; a < g.dim(); ++a) os << (a ? ";" : "") << get(a);
    };
    list("lo", [&](int a) { return g.lo()[a]; });
    list("hi", [&](int a) { return g.hi()[a]; });
    list("nodes", [&](int a) { return g.nodes(a); });
    os << " margin=" << g.core_margin();
    return os.str();
}

Grid parse_grid_header(const std::string& line) {
    std::istringstream is(line);
    std::string tok;
    is >> tok;
    if (tok != "#") throw std::runtime_error("field csv: missing grid header");
    is >> tok;
    if (tok != "grid") throw std::runtime_error("field csv: missing grid header");
    int dim = 0, margin = 0;
    std::vector<double> lo, hi;
    std::vector<int> nodes;
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string p;
        while (std::getline(ss, p, ';')) parts.push_back(p);
        return parts;
    };
    while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "dim") dim = std::stoi(val);
        else if (key == "margin") margin = std::stoi(val);
        else if (key == "lo") for (auto& p : split(val)) lo.push_back(std::stod(p));
        else if (key == "hi") for (auto& p : split(val)) hi.push_back(std::stod(p));
        else if (key == "nodes") for (auto& p : split(val)) nodes.push_back(std::stoi(p));
    }
    if (dim < 1 || static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim ||
        static_cast<int>(nodes.size()) != dim)
        throw std::runtime_error("field csv: malformed grid header");
    return Grid(Eigen::Map<Vec>(lo.data(), dim), Eigen::Map<Vec>(hi.data(), dim), nodes, margin);
}

void write_field_csv(std::ostream& os, const ScalarField& field) {
    const Grid& g = field.grid();
    os << grid_header(g) << "\n";
    for (int a = 0; a < g.dim(); ++a) os << "x" << a << ",";
    os << "value\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec x = g.coord(i);
        for (int a = 0; a < g.dim(); ++a) os << x[a] << ",";
        os << field[i] << "\n";
    }
}

void write_field_csv(const std::string& path, const ScalarField& field) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_field_csv(os, field);
}

ScalarField read_field_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("field csv: empty input");
    Grid g = parse_grid_header(line);
    std::getline(is, line);  // column names
    Vec v(g.size());
    std::size_t i = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (i >= g.size()) throw std::runtime_error("field csv: too many rows");
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) throw std::runtime_error("field csv: malformed row");
        v[static_cast<Eigen::Index>(i++)] = std::stod(line.substr(comma + 1));
    }
    if (i != g.size()) throw std::runtime_error("field csv: row count does not match the grid");
    return ScalarField(std::move(g), std::move(v));
}

ScalarField read_field_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    return read_field_csv(is);
}

}  // namespace impulse
