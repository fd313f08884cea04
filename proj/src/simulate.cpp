#include "impulse/simulate.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace impulse {

ImpulsePolicy ImpulsePolicy::never() { return from_rules({}); }

ImpulsePolicy ImpulsePolicy::from_regions(Grid grid, std::vector<Region> region,
                                          std::vector<Vec> xi) {
    if (region.size() != grid.size() || xi.size() != grid.size())
        throw std::invalid_argument("region policy: mask and displacement sizes must match the grid");
    ImpulsePolicy p;
    p.kind_ = Kind::region_policy;
    p.grid_ = std::move(grid);
    p.region_ = std::move(region);
    p.xi_ = std::move(xi);
    return p;
}

ImpulsePolicy ImpulsePolicy::from_result(const SolveResult& result) {
    return from_regions(result.u.grid(), result.region, result.policy);
}

ImpulsePolicy ImpulsePolicy::from_rules(std::vector<ImpulseRule> rules) {
    ImpulsePolicy p;
    p.kind_ = Kind::explicit_schedule;
    p.rules_ = std::move(rules);
    return p;
}

std::optional<Vec> ImpulsePolicy::decide(const Vec& x) const {
    if (kind_ == Kind::region_policy) {
        const std::size_t i = grid_.nearest(x);
        if (region_[i] == Region::action) return xi_[i];
        return std::nullopt;
    }
    for (const auto& r : rules_)
        if (r.trigger(x)) return r.displacement(x);
    return std::nullopt;
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
    return std::mt19937_64(splitmix(splitmix(seed) ^ splitmix(path + 0x632be59bd9b4e019ULL)));
}

int step_count(const SimulationOptions& o) {
    if (!(o.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(o.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    return std::max(1, static_cast<int>(std::ceil(o.horizon / o.dt - 1e-9)));
}

// Dynamics shared by all simulators: drift with the big-jump compensator
// folded in, and compound-Poisson big jumps. The compensated small jumps are
// mean-zero and dropped.
struct Dynamics {
    const ModelSpec& model;
    LevyMeasure big;
    double big_mass = 0.0;
    Vec big_mean_mark;            // used with the jump_matrix fast path
    ScalarFn bias_bound;

    Dynamics(const ModelSpec& m, double cutoff) : model(m) {
        if (m.levy.empty()) {
            big = LevyMeasure::none(m.dim_mark);
        } else if (m.levy.kind() == LevyKind::finite_atoms) {
            big = m.levy;
        } else {
            JumpSplit s = small_jump_split(m.levy, m.jump, cutoff);
            big = std::move(s.big);
            bias_bound = std::move(s.bias_bound);
        }
        big_mass = big.empty() ? 0.0 : big.total_mass();
        if (big_mass > 0.0 && m.jump_matrix)
            big_mean_mark = integrate_vector(big, m.dim_mark, [](const Vec& z) { return z; });
    }

    Vec drift(const Vec& x) const {
        Vec d = model.drift(x);
        if (big_mass > 0.0) {
            if (model.jump_matrix) {
                d -= (*model.jump_matrix)(x) * big_mean_mark;
            } else {
                for (const auto& n : big.nodes()) d -= n.weight * model.jump(x, n.mark);
            }
        }
        return d;
    }

    double small_bias(const Vec& x) const { return bias_bound ? bias_bound(x) : 0.0; }
};

struct PathTotals {
    double running = 0.0;
    double impulse = 0.0;
    std::size_t impulses = 0;
    double max_f = 0.0;
    Vec final_state;
};

// One path; `rec` may be null when only totals are needed.
PathTotals run_path(const Dynamics& dyn, const ImpulsePolicy* policy, const Vec& x0,
                    const SimulationOptions& o, std::uint64_t path_index, PathRecord* rec) {
    const ModelSpec& m = dyn.model;
    const int steps = step_count(o);
    const double r = m.discount;
    std::mt19937_64 rng = path_rng(o.seed, path_index);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> arrival(dyn.big_mass > 0.0 ? dyn.big_mass : 1.0);
    double next_jump = dyn.big_mass > 0.0 ? arrival(rng) : std::numeric_limits<double>::infinity();

    PathTotals tot;
    Vec x = x0;
    Vec dw(m.dim_noise);
    double t = 0.0;

    auto consult = [&](double time) {
        if (!policy) return;
        const auto xi = policy->decide(x);
        if (!xi) return;
        x += *xi;
        const double b = m.transaction_cost(*xi);
        tot.impulse += std::exp(-r * time) * b;
        ++tot.impulses;
        if (rec) rec->impulses.push_back({time, *xi, b});
        if (policy->decide(x)) {
            std::ostringstream msg;
            msg << "impulse at t = " << time << " lands in the action region; the policy must "
                << "place post-impulse states in the continuation region";
            throw std::runtime_error(msg.str());
        }
    };

    consult(0.0);
    if (rec) {
        rec->times.push_back(0.0);
        rec->states.push_back(x);
    }
    for (int k = 0; k < steps; ++k) {
        const double h = std::min(o.dt, o.horizon - t);
        const double fx = m.running_cost(x);
        tot.max_f = std::max(tot.max_f, fx);
        tot.running += std::exp(-r * t) * fx * h;

        for (int a = 0; a < m.dim_noise; ++a) dw[a] = std::sqrt(h) * normal(rng);
        Vec next = x + dyn.drift(x) * h + m.volatility(x) * dw;
        const double t_next = t + h;
        while (next_jump <= t_next) {
            const Vec z = dyn.big.sample_mark(rng);
            const Vec d = m.jump(x, z);
            next += d;
            if (rec) rec->jumps.push_back({next_jump, z, d});
            next_jump += arrival(rng);
        }
        x = std::move(next);
        t = (k + 1 == steps) ? o.horizon : t_next;
        if (!x.allFinite() || x.norm() > o.blowup) {
            std::ostringstream msg;
            msg << "state blow-up at step " << k + 1 << " (t = " << t << ")";
            throw std::runtime_error(msg.str());
        }
        consult(t);
        if (rec) {
            rec->times.push_back(t);
            rec->states.push_back(x);
            rec->diffusion.push_back(dw);
        }
    }
    tot.final_state = x;
    if (rec) {
        rec->running_cost = tot.running;
        rec->impulse_cost = tot.impulse;
    }
    return tot;
}

}  // namespace

PathRecord simulate_uncontrolled(const ModelSpec& model, const Vec& x0,
                                 const SimulationOptions& options, std::uint64_t path_index) {
    const Dynamics dyn(model, options.jump_cutoff);
    PathRecord rec;
    run_path(dyn, nullptr, x0, options, path_index, &rec);
    return rec;
}

PathRecord simulate_controlled(const ModelSpec& model, const ImpulsePolicy& policy,
                               const Vec& x0, const SimulationOptions& options,
                               std::uint64_t path_index) {
    const Dynamics dyn(model, options.jump_cutoff);
    PathRecord rec;
    run_path(dyn, &policy, x0, options, path_index, &rec);
    return rec;
}

double replay_cost(const ModelSpec& model, const PathRecord& path, double dt) {
    (void)dt;  // step lengths are read from the recorded times
    const double r = model.discount;
    double running = 0.0;
    for (std::size_t k = 0; k + 1 < path.times.size(); ++k) {
        const double t = path.times[k];
        running += std::exp(-r * t) * model.running_cost(path.states[k]) * (path.times[k + 1] - t);
    }
    double imp = 0.0;
    for (const auto& e : path.impulses) imp += std::exp(-r * e.time) * model.transaction_cost(e.xi);
    return running + imp;
}

CostEstimate estimate_cost(const ModelSpec& model, const ImpulsePolicy& policy, const Vec& x0,
                           std::size_t n_paths, const SimulationOptions& options) {
    if (n_paths < 2) throw std::invalid_argument("estimate_cost needs at least 2 paths");
    const Dynamics dyn(model, options.jump_cutoff);
    CostEstimate est;
    double mean = 0.0, m2 = 0.0, max_f = 0.0;
    double small = dyn.small_bias(x0);
    for (std::size_t p = 0; p < n_paths; ++p) {
        const PathTotals tot = run_path(dyn, &policy, x0, options, p, nullptr);
        const double c = tot.running + tot.impulse;
        const double delta = c - mean;
        mean += delta / static_cast<double>(p + 1);
        m2 += delta * (c - mean);
        max_f = std::max(max_f, tot.max_f);
        est.impulses += tot.impulses;
        if (p < 256 && dyn.bias_bound) small = std::max(small, dyn.small_bias(tot.final_state));
    }
    const double var = m2 / static_cast<double>(n_paths - 1);
    est.j_hat = mean;
    est.ci_halfwidth = 1.96 * std::sqrt(var / static_cast<double>(n_paths));
    est.truncation_bias = max_f / model.discount * std::exp(-model.discount * options.horizon);
    est.small_jump_bias = small;
    est.paths = n_paths;
    return est;
}

double paired_lipschitz_probe(const ModelSpec& model, const Vec& x1, const Vec& x2,
                              std::size_t n_paths, const SimulationOptions& o) {
    const double gap = (x1 - x2).norm();
    if (!(gap > 0.0)) throw std::invalid_argument("paired probe needs x1 != x2");
    if (n_paths < 1) throw std::invalid_argument("paired probe needs at least one path");
    const Dynamics dyn(model, o.jump_cutoff);
    const int steps = step_count(o);
    const double C = model.growth_constant();
    std::vector<double> sum(static_cast<std::size_t>(steps), 0.0);
    std::vector<double> times(static_cast<std::size_t>(steps), 0.0);

    for (std::size_t p = 0; p < n_paths; ++p) {
        std::mt19937_64 rng = path_rng(o.seed, p);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::exponential_distribution<double> arrival(dyn.big_mass > 0.0 ? dyn.big_mass : 1.0);
        double next_jump =
            dyn.big_mass > 0.0 ? arrival(rng) : std::numeric_limits<double>::infinity();
        Vec a = x1, b = x2, dw(model.dim_noise);
        double t = 0.0;
        for (int k = 0; k < steps; ++k) {
            const double h = std::min(o.dt, o.horizon - t);
            for (int i = 0; i < model.dim_noise; ++i) dw[i] = std::sqrt(h) * normal(rng);
            Vec na = a + dyn.drift(a) * h + model.volatility(a) * dw;
            Vec nb = b + dyn.drift(b) * h + model.volatility(b) * dw;
            const double t_next = t + h;
            while (next_jump <= t_next) {
                const Vec z = dyn.big.sample_mark(rng);
                na += model.jump(a, z);
                nb += model.jump(b, z);
                next_jump += arrival(rng);
            }
            a = std::move(na);
            b = std::move(nb);
            t = (k + 1 == steps) ? o.horizon : t_next;
            if (!a.allFinite() || !b.allFinite() || a.norm() > o.blowup || b.norm() > o.blowup) {
                std::ostringstream msg;
                msg << "state blow-up at step " << k + 1 << " in paired probe";
                throw std::runtime_error(msg.str());
            }
            sum[static_cast<std::size_t>(k)] += (a - b).norm();
            times[static_cast<std::size_t>(k)] = t;
        }
    }
    double worst = 1.0;  // t = 0
    for (int k = 0; k < steps; ++k) {
        const double e = sum[static_cast<std::size_t>(k)] / static_cast<double>(n_paths);
        worst = std::max(worst, e / (std::exp(C * times[static_cast<std::size_t>(k)]) * gap));
    }
    return worst;
}

void write_path_csv(std::ostream& os, const PathRecord& path) {
    const std::size_t n = path.states.empty() ? 0 : static_cast<std::size_t>(path.states[0].size());
    os << "kind,time";
    for (std::size_t a = 0; a < n; ++a) os << ",v" << a;
    os << ",detail\n";
    os.precision(17);
    auto vec = [&](const Vec& v) {
        for (Eigen::Index a = 0; a < v.size(); ++a) os << "," << v[a];
    };
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        os << "state," << path.times[k];
        vec(path.states[k]);
        os << ",\n";
    }
    // Jumps: v = displacement, detail = mark. Impulses: v = xi, detail = B(xi).
    for (const auto& j : path.jumps) {
        os << "jump," << j.time;
        vec(j.displacement);
        os << ",";
        for (Eigen::Index a = 0; a < j.mark.size(); ++a) os << (a ? ";" : "") << j.mark[a];
        os << "\n";
    }
    for (const auto& e : path.impulses) {
        os << "impulse," << e.time;
        vec(e.xi);
        os << "," << e.cost << "\n";
    }
}

}  // namespace impulse
