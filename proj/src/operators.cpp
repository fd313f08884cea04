#include "impulse/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace impulse {

namespace {

// One-dimensional first-difference stencil: (node offset, weight).
using Diff = std::vector<std::pair<int, double>>;

Diff central(double h) { return {{1, 0.5 / h}, {-1, -0.5 / h}}; }
Diff forward(double h) { return {{1, 1.0 / h}, {0, -1.0 / h}}; }
Diff backward(double h) { return {{0, 1.0 / h}, {-1, -1.0 / h}}; }

}  // namespace

OperatorStencil::OperatorStencil(const Grid& grid, const ModelSpec& model, DriftScheme scheme)
    : grid_(grid), scheme_(scheme), discount_(model.discount) {
    const int n = grid.dim();
    if (model.dim_state != n) throw std::invalid_argument("stencil: model and grid dimensions differ");
    const std::size_t N = grid.size();
    mubar_.resize(N);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(N * (1 + 2 * n + 4 * n * n));
    max_offdiag_ = -std::numeric_limits<double>::infinity();

    for (std::size_t f = 0; f < N; ++f) {
        const Index idx = grid.index(f);
        const Vec x = grid.coord(f);
        const Mat A = model.diffusion_matrix(x);
        const Vec mubar = model.drift(x) - model.mean_jump(x);
        mubar_[f] = mubar;
        const bool boundary = grid.on_boundary(f);

        std::map<std::ptrdiff_t, double> row;
        row[0] += model.discount;
        auto add = [&](const std::vector<std::pair<std::ptrdiff_t, double>>& terms, double c) {
            for (const auto& [off, w] : terms) row[off] += c * w;
        };
        auto shift = [&](int a, int k) {
            return static_cast<std::ptrdiff_t>(grid.stride(a)) * k;
        };

        for (int a = 0; a < n; ++a) {
            const double h = grid.spacing(a);
            const bool at_lo = idx[a] == 0, at_hi = idx[a] == grid.nodes(a) - 1;
            // Second difference, shifted inward at an edge.
            int c0 = 0;
            if (at_lo) c0 = 1;
            if (at_hi) c0 = -1;
            add({{shift(a, c0 + 1), 1.0 / (h * h)},
                 {shift(a, c0), -2.0 / (h * h)},
                 {shift(a, c0 - 1), 1.0 / (h * h)}},
                -A(a, a));

            Diff d;
            if (at_lo) d = forward(h);
            else if (at_hi) d = backward(h);
            else if (scheme == DriftScheme::central) d = central(h);
            else d = mubar[a] > 0.0 ? forward(h) : backward(h);
            std::vector<std::pair<std::ptrdiff_t, double>> first;
            for (const auto& [k, w] : d) first.push_back({shift(a, k), w});
            add(first, -mubar[a]);
        }
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                const double aab = A(a, b);
                if (aab == 0.0) continue;
                auto pick = [&](int axis) {
                    const double h = grid.spacing(axis);
                    if (idx[axis] == 0) return forward(h);
                    if (idx[axis] == grid.nodes(axis) - 1) return backward(h);
                    return central(h);
                };
                std::vector<std::pair<std::ptrdiff_t, double>> cross;
                for (const auto& [ka, wa] : pick(a))
                    for (const auto& [kb, wb] : pick(b)) cross.push_back({shift(a, ka) + shift(b, kb), wa * wb});
                add(cross, -2.0 * aab);
            }
        }

        for (const auto& [off, w] : row) {
            if (w == 0.0 && off != 0) continue;
            trip.emplace_back(static_cast<int>(f), static_cast<int>(static_cast<std::ptrdiff_t>(f) + off), w);
            if (!boundary && off != 0) max_offdiag_ = std::max(max_offdiag_, w);
        }
    }
    if (!std::isfinite(max_offdiag_)) max_offdiag_ = 0.0;
    matrix_.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    matrix_.setFromTriplets(trip.begin(), trip.end());
    matrix_.makeCompressed();
}

SparseMat OperatorStencil::dirichlet_matrix() const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(matrix_.nonZeros()));
    for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r) {
        if (grid_.on_boundary(static_cast<std::size_t>(r))) {
            trip.emplace_back(static_cast<int>(r), static_cast<int>(r), 1.0);
            continue;
        }
        for (SparseMat::InnerIterator it(matrix_, r); it; ++it)
            trip.emplace_back(static_cast<int>(r), static_cast<int>(it.col()), it.value());
    }
    SparseMat m(matrix_.rows(), matrix_.cols());
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

LResult apply_L(const ScalarField& field, const OperatorStencil& stencil) {
    if (!(field.grid() == stencil.grid())) throw std::invalid_argument("apply_L: grid mismatch");
    Vec out = stencil.matrix() * field.values();
    std::vector<bool> flags(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) flags[i] = field.grid().on_boundary(i);
    return {ScalarField(field.grid(), std::move(out), field.extension()), std::move(flags)};
}

IResult apply_I(const ScalarField& field, const ModelSpec& model) {
    const Grid& grid = field.grid();
    const auto& nodes = model.levy.nodes();
    IResult res;
    if (nodes.empty()) {
        res.field = ScalarField(grid, Vec::Zero(grid.size()), field.extension());
        return res;
    }
    if (!model.levy.finite_activity()) {
        const Vec xc = 0.5 * (grid.lo() + grid.hi());
        try {
            integrate(model.levy, [&](const Vec& z) { return model.jump(xc, z).norm(); });
        } catch (const AssumptionError& e) {
            throw AssumptionError(std::string("jump amplitude j(x,.) is not nu-integrable: ") + e.what());
        }
    }
    Vec out(grid.size());
    std::size_t offbox = 0, total = 0;
    for (std::size_t f = 0; f < grid.size(); ++f) {
        const Vec x = grid.coord(f);
        const double base = field[f];
        double s = 0.0, mass_off = 0.0;
        for (const auto& q : nodes) {
            const Vec y = x + model.jump(x, q.mark);
            if (!grid.contains(y)) {
                ++offbox;
                mass_off += q.weight;
            }
            s += q.weight * field.increment(y, base);
        }
        total += nodes.size();
        out[static_cast<Eigen::Index>(f)] = s;
        if (grid.in_core(f)) res.offbox_mass = std::max(res.offbox_mass, mass_off);
    }
    res.field = ScalarField(grid, std::move(out), field.extension());
    res.extension_fraction = total ? static_cast<double>(offbox) / static_cast<double>(total) : 0.0;
    return res;
}

ScalarField apply_Ell(const ScalarField& field, const ModelSpec& model,
                      const OperatorStencil& stencil) {
    const LResult l = apply_L(field, stencil);
    const IResult i = apply_I(field, model);
    return ScalarField(field.grid(), l.field.values() - i.field.values(), field.extension());
}

MResult apply_M(const ScalarField& field, const CostB& cost, const SearchBox& search) {
    if (search.radius < cost.coercivity_radius) {
        std::ostringstream msg;
        msg << "coercivity bound not covered: search radius " << search.radius
            << " < R_B = " << cost.coercivity_radius;
        throw std::invalid_argument(msg.str());
    }
    const Grid& grid = field.grid();
    const int n = grid.dim();

    struct Offset {
        std::vector<int> k;
        Vec xi;
        double norm2;
        double cost;
        std::ptrdiff_t delta;
    };
    std::vector<int> reach(n);
    for (int a = 0; a < n; ++a) {
        reach[a] = static_cast<int>(std::floor(search.radius / grid.spacing(a) + 1e-9));
        if (!search.include_offbox) reach[a] = std::min(reach[a], grid.nodes(a) - 1);
    }
    std::vector<Offset> offsets;
    std::vector<int> k(n);
    for (int a = 0; a < n; ++a) k[a] = -reach[a];
    for (;;) {
        if (std::any_of(k.begin(), k.end(), [](int v) { return v != 0; })) {
            Offset o;
            o.k = k;
            o.xi.resize(n);
            o.delta = 0;
            for (int a = 0; a < n; ++a) {
                o.xi[a] = static_cast<double>(k[a]) * grid.spacing(a);
                o.delta += static_cast<std::ptrdiff_t>(grid.stride(a)) * k[a];
            }
            o.norm2 = o.xi.squaredNorm();
            offsets.push_back(std::move(o));
        }
        int a = 0;
        while (a < n && ++k[a] > reach[a]) {
            k[a] = -reach[a];
            ++a;
        }
        if (a == n) break;
    }
    std::sort(offsets.begin(), offsets.end(), [](const Offset& p, const Offset& q) {
        if (p.norm2 != q.norm2) return p.norm2 < q.norm2;
        return std::lexicographical_compare(p.xi.data(), p.xi.data() + p.xi.size(), q.xi.data(),
                                            q.xi.data() + q.xi.size());
    });
    for (auto& o : offsets) o.cost = cost(o.xi);

    MResult res;
    Vec out(grid.size());
    res.argmin.resize(grid.size());
    res.target.assign(grid.size(), -1);
    const Vec& v = field.values();
    for (std::size_t f = 0; f < grid.size(); ++f) {
        const Index idx = grid.index(f);
        double best = std::numeric_limits<double>::infinity();
        const Offset* arg = nullptr;
        std::ptrdiff_t tgt = -1;
        for (const auto& o : offsets) {
            bool inside = true;
            for (int a = 0; a < n && inside; ++a) {
                const int j = idx[a] + o.k[a];
                inside = j >= 0 && j < grid.nodes(a);
            }
            double val;
            if (inside) {
                val = v[static_cast<std::ptrdiff_t>(f) + o.delta] + o.cost;
            } else if (search.include_offbox) {
                val = field.evaluate(grid.coord(f) + o.xi) + o.cost;
            } else {
                continue;
            }
            if (val < best) {
                best = val;
                arg = &o;
                tgt = inside ? static_cast<std::ptrdiff_t>(f) + o.delta : -1;
            }
        }
        if (!arg) throw std::invalid_argument("apply_M: empty candidate set");
        out[static_cast<Eigen::Index>(f)] = best;
        res.argmin[f] = arg->xi;
        res.target[f] = tgt;
    }
    res.field = ScalarField(grid, std::move(out), field.extension());
    return res;
}

}  // namespace impulse
