#include "impulse/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace impulse {

namespace {

constexpr std::array<int, 24> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                         41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

double radical_inverse(std::uint64_t k, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (k > 0) {
        r += f * static_cast<double>(k % base);
        k /= base;
        f *= inv;
    }
    return r;
}

std::string fmt_point(const Vec& x) {
    std::ostringstream os;
    os.precision(6);
    os << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

// observed / allowed with the convention 0/0 = 0 and c/0 = inf.
double ratio(double observed, double allowed) {
    if (allowed > 0.0) return observed / allowed;
    return observed <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
}

// Randomly shifted Halton stream in `dim` dimensions.
class Sampler {
public:
    Sampler(int dim, std::uint64_t seed) : shift_(dim) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < dim; ++i) shift_[i] = u(rng);
    }
    Vec next() {
        Vec p = halton_point(++k_, static_cast<int>(shift_.size())) + shift_;
        for (Eigen::Index i = 0; i < p.size(); ++i) p[i] -= std::floor(p[i]);
        return p;
    }

private:
    Vec shift_;
    std::uint64_t k_ = 0;
};

struct Tracker {
    AssumptionCheck check;
    bool non_finite = false;

    explicit Tracker(std::string name) { check.name = std::move(name); }
    void observe(double r, const std::string& witness) {
        if (std::isnan(r)) {
            non_finite = true;
            check.witness = "non-finite evaluation at " + witness;
            check.worst_ratio = std::numeric_limits<double>::infinity();
            return;
        }
        if (r > check.worst_ratio && !non_finite) {
            check.worst_ratio = r;
            check.witness = witness;
        }
    }
    AssumptionCheck finish(double tol) {
        check.passed = !non_finite && check.worst_ratio <= 1.0 + tol;
        return check;
    }
};

bool finite(const Vec& v) { return v.allFinite(); }
bool finite(const Mat& m) { return m.allFinite(); }

}  // namespace

Vec halton_point(std::uint64_t k, int dim) {
    if (dim > static_cast<int>(kPrimes.size()))
        throw std::invalid_argument("halton_point: dimension too large");
    Vec p(dim);
    for (int i = 0; i < dim; ++i) p[i] = radical_inverse(k, kPrimes[i]);
    return p;
}

Mat ModelSpec::diffusion_matrix(const Vec& x) const {
    const Mat s = volatility(x);
    return 0.5 * s * s.transpose();
}

Vec ModelSpec::mean_jump(const Vec& x) const {
    if (levy.empty()) return Vec::Zero(dim_state);
    if (jump_matrix) {
        const Vec m1 = integrate_vector(levy, dim_mark, [](const Vec& z) { return z; });
        return (*jump_matrix)(x) * m1;
    }
    return integrate_vector(levy, dim_state, [&](const Vec& z) { return jump(x, z); });
}

double ModelSpec::growth_constant() const {
    double cj2 = 0.0;
    if (!levy.empty() && c_j)
        cj2 = integrate(levy, [&](const Vec& z) { const double c = c_j(z); return c * c; }).value;
    return 2.0 * c_mu + c_sigma * c_sigma + cj2;
}

double lipschitz_bound(const ModelSpec& model) {
    const double c = model.growth_constant();
    const double denom = model.discount - c;
    if (!(denom > 0.0)) {
        std::ostringstream msg;
        msg << "A5 violated: r = " << model.discount
            << " is not above 2C_mu + C_sigma^2 + int C_j^2 dnu = " << c;
        throw AssumptionError(msg.str());
    }
    return model.c_f / denom;
}

bool ValidationReport::passed() const {
    if (hard_failure) return false;
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    os.precision(6);
    for (const auto& c : checks) {
        os << (c.passed ? "PASS " : "FAIL ") << c.name << "  worst ratio " << c.worst_ratio;
        if (!c.witness.empty()) os << "  at " << c.witness;
        if (!c.detail.empty()) os << "  [" << c.detail << "]";
        os << "\n";
    }
    os << (passed() ? "all assumptions hold" : "assumption check failed")
       << " (tolerance " << tolerance << ")\n";
    return os.str();
}

ValidationReport validate_assumptions(const ModelSpec& model, const ValidationOptions& opt) {
    if (opt.sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
    const int n = model.dim_state;
    if (opt.box.lo.size() != n || opt.box.hi.size() != n)
        throw std::invalid_argument("sampling box dimension does not match the model");

    ValidationReport report;
    report.tolerance = opt.tolerance;
    const double tol = opt.tolerance;
    const Vec width = opt.box.width();
    const int count = opt.sample_count;

    // Pair generator: even k -> two independent points, odd k -> a local pair.
    Sampler pairs(2 * n, opt.seed);
    auto next_pair = [&](int k, Vec& x, Vec& y) {
        const Vec p = pairs.next();
        x = opt.box.lo + width.cwiseProduct(p.head(n));
        if (k % 2 == 0) {
            y = opt.box.lo + width.cwiseProduct(p.tail(n));
        } else {
            y = x + 1e-3 * width.cwiseProduct(2.0 * p.tail(n) - Vec::Ones(n));
        }
    };

    auto lipschitz_check = [&](const std::string& name, double declared, auto&& diff) {
        Tracker t(name);
        Vec x, y;
        for (int k = 0; k < count; ++k) {
            next_pair(k, x, y);
            const double d = (x - y).norm();
            if (d == 0.0) continue;
            const double q = diff(x, y) / d;
            t.observe(std::isfinite(q) ? ratio(q, declared) : std::nan(""),
                      "x=" + fmt_point(x) + ", y=" + fmt_point(y));
        }
        std::ostringstream d;
        d << "declared " << declared;
        t.check.detail = d.str();
        report.hard_failure |= t.non_finite;
        report.checks.push_back(t.finish(tol));
    };

    lipschitz_check("A1.drift", model.c_mu, [&](const Vec& x, const Vec& y) {
        const Vec a = model.drift(x), b = model.drift(y);
        return finite(a) && finite(b) ? (a - b).norm() : std::nan("");
    });
    lipschitz_check("A1.volatility", model.c_sigma, [&](const Vec& x, const Vec& y) {
        const Mat a = model.volatility(x), b = model.volatility(y);
        return finite(a) && finite(b) ? (a - b).norm() : std::nan("");
    });

    {
        Tracker t("A1.jump");
        const auto& nodes = model.levy.nodes();
        if (!nodes.empty()) {
            Vec x, y;
            for (int k = 0; k < count; ++k) {
                next_pair(k, x, y);
                const Vec& z = nodes[static_cast<std::size_t>(k) % nodes.size()].mark;
                const double d = (x - y).norm();
                if (d == 0.0) continue;
                const Vec a = model.jump(x, z), b = model.jump(y, z);
                const double q = finite(a) && finite(b) ? (a - b).norm() / d : std::nan("");
                t.observe(std::isfinite(q) ? ratio(q, model.c_j(z)) : std::nan(""),
                          "x=" + fmt_point(x) + ", y=" + fmt_point(y) + ", z=" + fmt_point(z));
            }
        }
        report.hard_failure |= t.non_finite;
        report.checks.push_back(t.finish(tol));
    }

    {
        AssumptionCheck c;
        c.name = "A1.integrability";
        std::vector<Vec> xs;
        Sampler s(n, opt.seed + 1);
        for (int k = 0; k < std::min(count, 16); ++k)
            xs.push_back(opt.box.lo + width.cwiseProduct(s.next()));
        const CertificateReport cert = check_integrability(model.levy, model, xs);
        c.passed = cert.passed();
        c.worst_ratio = c.passed ? 0.0 : std::numeric_limits<double>::infinity();
        std::ostringstream d;
        d << "int C_j = " << cert.cj_l1 << ", int C_j^2 = " << cert.cj_l2
          << ", max int |j| = " << cert.j_l1_max;
        if (!cert.failure.empty()) d << "; " << cert.failure;
        c.detail = d.str();
        report.checks.push_back(c);
    }

    {
        Tracker t("A2.ellipticity");
        Sampler s(n, opt.seed + 2);
        for (int k = 0; k < count; ++k) {
            const Vec x = opt.box.lo + width.cwiseProduct(s.next());
            const Mat a = model.diffusion_matrix(x);
            if (!finite(a)) {
                t.observe(std::nan(""), "x=" + fmt_point(x));
                continue;
            }
            const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(a).eigenvalues().minCoeff();
            const double r = lmin > 0.0 ? model.ellipticity / lmin
                                        : std::numeric_limits<double>::infinity();
            t.observe(r, "x=" + fmt_point(x));
        }
        std::ostringstream d;
        d << "declared lambda " << model.ellipticity;
        t.check.detail = d.str();
        if (!(model.ellipticity > 0.0)) {
            t.check.worst_ratio = std::numeric_limits<double>::infinity();
            t.check.detail += "; degenerate diffusion is not supported";
        }
        report.hard_failure |= t.non_finite;
        // Ellipticity is a lower bound: the tolerance applies as for ratios.
        report.checks.push_back(t.finish(tol));
    }

    {
        Tracker t("A3.nonnegative");
        Sampler s(n, opt.seed + 3);
        for (int k = 0; k < count; ++k) {
            const Vec x = opt.box.lo + width.cwiseProduct(s.next());
            const double f = model.running_cost(x);
            if (!std::isfinite(f)) {
                t.observe(std::nan(""), "x=" + fmt_point(x));
                continue;
            }
            t.observe(f < 0.0 ? std::numeric_limits<double>::infinity() : 0.0,
                      "x=" + fmt_point(x));
        }
        report.hard_failure |= t.non_finite;
        report.checks.push_back(t.finish(tol));
    }
    lipschitz_check("A3.running_cost", model.c_f, [&](const Vec& x, const Vec& y) {
        const double a = model.running_cost(x), b = model.running_cost(y);
        return std::isfinite(a) && std::isfinite(b) ? std::abs(a - b) : std::nan("");
    });

    // Transaction cost: samples in the ball of radius R around 0.
    const CostB& B = model.transaction_cost;
    const double R = std::max(B.coercivity_radius, width.norm());
    Sampler xi_s(n, opt.seed + 4);
    auto sample_xi = [&](double radius) {
        Vec p = 2.0 * xi_s.next() - Vec::Ones(n);
        if (p.norm() > 1.0) p /= p.norm();
        return Vec(radius * p);
    };
    {
        Tracker t("A4.floor");
        double min_b = std::numeric_limits<double>::infinity();
        Vec argmin;
        for (int k = 0; k < count; ++k) {
            // Every fourth sample probes tiny displacements, where inf B is approached.
            const Vec xi = sample_xi(k % 4 == 0 ? 1e-6 * R : R);
            if (xi.norm() == 0.0) continue;
            const double b = B(xi);
            if (!std::isfinite(b)) {
                t.observe(std::nan(""), "xi=" + fmt_point(xi));
                continue;
            }
            if (b < min_b) {
                min_b = b;
                argmin = xi;
            }
        }
        if (!t.non_finite && argmin.size() > 0) {
            const double r = B.K > 0.0 ? std::max(B.K / min_b, min_b / B.K)
                                       : std::numeric_limits<double>::infinity();
            t.observe(r, "xi=" + fmt_point(argmin));
        }
        std::ostringstream d;
        d << "K = " << B.K << ", sampled inf B = " << min_b;
        t.check.detail = d.str();
        report.hard_failure |= t.non_finite;
        report.checks.push_back(t.finish(tol));
    }
    {
        Tracker t("A4.subadditive");
        for (int k = 0; k < count; ++k) {
            const Vec a = sample_xi(R / 2), b = sample_xi(R / 2);
            if (a.norm() == 0.0 || b.norm() == 0.0 || (a + b).norm() == 0.0) continue;
            const double lhs = B(a) + B(b), rhs = B(a + b) + B.K;
            t.observe(std::isfinite(lhs) && std::isfinite(rhs) ? rhs / lhs : std::nan(""),
                      "xi1=" + fmt_point(a) + ", xi2=" + fmt_point(b));
        }
        report.hard_failure |= t.non_finite;
        // B(xi1) + B(xi2) >= B(xi1 + xi2) + K up to a relative slack of tol.
        report.checks.push_back(t.finish(tol));
    }
    {
        AssumptionCheck c;
        c.name = "A4.coercive";
        const double base = B.coercivity_radius > 0.0 ? B.coercivity_radius : width.norm();
        std::vector<Vec> dirs;
        for (int k = 0; k < 64; ++k) {
            Vec d = sample_xi(1.0);
            if (d.norm() > 0.0) dirs.push_back(d / d.norm());
        }
        std::vector<double> levels;
        std::ostringstream d;
        d << "min B on |xi| = R:";
        for (double s : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
            double m = std::numeric_limits<double>::infinity();
            for (const auto& u : dirs) m = std::min(m, B(Vec(s * base * u)));
            levels.push_back(m);
            d << " " << m;
        }
        c.worst_ratio = 0.0;
        for (std::size_t i = 0; i + 1 < levels.size(); ++i)
            c.worst_ratio = std::max(c.worst_ratio, levels[i] / levels[i + 1]);
        // Growth must not stall: the last doubling gains at least half of the
        // previous gain, which rules out saturating costs.
        const std::size_t L = levels.size();
        const double last_gain = levels[L - 1] - levels[L - 2];
        const double prev_gain = levels[L - 2] - levels[L - 3];
        c.passed = std::all_of(levels.begin(), levels.end(), [](double v) { return std::isfinite(v); }) &&
                   c.worst_ratio < 1.0 && last_gain > 0.0 && last_gain >= 0.5 * prev_gain;
        c.detail = d.str();
        report.checks.push_back(c);
    }

    {
        AssumptionCheck c;
        c.name = "A5";
        double growth = std::numeric_limits<double>::infinity();
        try {
            growth = model.growth_constant();
        } catch (const AssumptionError&) {
        }
        c.worst_ratio = ratio(growth, model.discount);
        c.passed = growth < model.discount;  // strict, no tolerance
        std::ostringstream d;
        d << "r = " << model.discount << ", 2C_mu + C_sigma^2 + int C_j^2 = " << growth
          << ", margin " << model.discount - growth;
        c.detail = d.str();
        report.checks.push_back(c);
    }
    return report;
}

}  // namespace impulse
