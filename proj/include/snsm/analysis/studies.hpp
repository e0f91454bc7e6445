#pragma once

// Coupled-noise studies: continuity in the initial data with the weight
// rho(t) = (1/(4 nu)) int_0^t ||u||^2, the epsilon -> 0 Cauchy sequence, the
// dt / n refinement distances, and the increment proxy E|u(T0 + d) - u(T0)|^2.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "snsm/integrator.hpp"
#include "snsm/parallel.hpp"
#include "snsm/stats.hpp"

namespace snsm {

struct ContinuityRow {
    double delta = 0.0;
    stats::MeanSE functional;  // E sup_t e^{-rho(t)} |w(t)|^2
    double ratio = 0.0;        // previous row's mean / this row's mean
};

/// sup_t e^{-rho(t)} |w(t)|^2 for one coupled pair, rho accumulated by the
/// trapezoid rule from the first path's ||u||^2 on the common samples.
inline double weighted_difference(const CoupledRecord& c, double nu) {
    double rho = 0.0, sup = 0.0;
    const auto& sa = c.a.samples;
    std::size_t k = 0;
    double prev_t = 0.0, prev_v = 0.0;
    for (std::size_t j = 0; j < c.t.size(); ++j) {
        while (k < sa.size() && sa[k].t < c.t[j]) ++k;
        const double v = sa[k].v_norm_sq;
        if (j > 0) rho += 0.5 * (c.t[j] - prev_t) * (v + prev_v) / (4.0 * nu);
        prev_t = c.t[j];
        prev_v = v;
        sup = std::max(sup, std::exp(-rho) * c.w_h_norm_sq[j]);
    }
    return sup;
}

/// Pairs (u0, u0 + delta e_mode) under shared noise, one row per delta.
inline std::vector<ContinuityRow> continuity_study(const SimConfig& config, const Models& models,
                                                   const std::vector<double>& deltas, std::size_t paths,
                                                   std::size_t mode, int threads) {
    for (double d : deltas)
        if (d < 0.0) throw std::invalid_argument("perturbation sizes must be >= 0");
    const Integrator base(config, models);
    std::vector<Integrator> perturbed;
    for (double d : deltas) {
        SimConfig c = config;
        c.initial.perturbation += d;
        c.initial.perturbation_mode = mode;
        perturbed.emplace_back(c, models);
    }
    auto per = parallel_map(paths, threads, [&](std::size_t i) {
        const auto noise = realization_for(models, path_seed(config.seed, i), config.horizon, config.dt);
        RecordOptions opt;
        opt.path_id = long(i);
        opt.keep_sample_states = true;
        opt.keep_events = false;
        CoupledRecord c;
        c.a = base.run(noise, opt);
        std::vector<double> out;
        for (const auto& p : perturbed) {
            c.b = p.run(noise, opt);
            coupled_difference(c.a, c.b, c.t, c.w_h_norm_sq);
            out.push_back(weighted_difference(c, config.nu));
        }
        return out;
    });
    std::vector<ContinuityRow> rows;
    for (std::size_t d = 0; d < deltas.size(); ++d) {
        std::vector<double> col;
        for (const auto& v : per) col.push_back(v[d]);
        ContinuityRow row{deltas[d], stats::mean_se(col), 0.0};
        if (d > 0 && row.functional.mean > 0.0) row.ratio = rows.back().functional.mean / row.functional.mean;
        rows.push_back(row);
    }
    return rows;
}

struct DistanceRow {
    std::string level_a, level_b;
    stats::MeanSE squared;  // E int_0^T |uA - uB|^2 dt
    double distance() const { return std::sqrt(std::max(0.0, squared.mean)); }
};

/// Runs every config on the same realization and reports
/// E int |u_k - u_{k+1}|^2 for consecutive configs.
inline std::vector<DistanceRow> coupled_chain_distances(const std::vector<SimConfig>& configs,
                                                        const std::vector<std::string>& labels, const Models& models,
                                                        std::size_t paths, double master_dt, int threads) {
    if (configs.size() < 2) throw std::invalid_argument("need at least two levels");
    for (std::size_t k = 1; k < configs.size(); ++k) check_coupling_whitelist(configs[0], configs[k]);
    std::vector<Integrator> integ;
    for (const auto& c : configs) integ.emplace_back(c, models);
    const auto& c0 = configs.front();
    auto per = parallel_map(paths, threads, [&](std::size_t i) {
        const auto noise = realization_for(models, path_seed(c0.seed, i), c0.horizon, master_dt);
        RecordOptions opt;
        opt.path_id = long(i);
        opt.keep_sample_states = true;
        opt.keep_events = false;
        std::vector<double> out;
        PathRecord prev = integ[0].run(noise, opt);
        std::vector<double> t, w2;
        for (std::size_t k = 1; k < integ.size(); ++k) {
            PathRecord cur = integ[k].run(noise, opt);
            coupled_difference(prev, cur, t, w2);
            out.push_back(trapezoid(t, w2));
            prev = std::move(cur);
        }
        return out;
    });
    std::vector<DistanceRow> rows;
    for (std::size_t k = 0; k + 1 < configs.size(); ++k) {
        std::vector<double> col;
        for (const auto& v : per) col.push_back(v[k]);
        rows.push_back({labels[k], labels[k + 1], stats::mean_se(col)});
    }
    return rows;
}

/// D(eps) = (E int |u^eps - u^{eps/2}|^2)^{1/2} with u0^eps = k_eps u0.
inline std::vector<DistanceRow> eps_cauchy_study(const SimConfig& config, const Models& models,
                                                 const std::vector<double>& eps_levels, std::size_t paths,
                                                 int threads) {
    for (std::size_t k = 1; k < eps_levels.size(); ++k)
        if (!(eps_levels[k] < eps_levels[k - 1])) throw std::invalid_argument("epsilon levels must decrease");
    std::vector<SimConfig> cfgs;
    std::vector<std::string> labels;
    for (double e : eps_levels) {
        SimConfig c = config;
        c.epsilon = e;
        c.initial.mollify = true;
        cfgs.push_back(c);
        labels.push_back("eps=" + std::to_string(e));
    }
    return coupled_chain_distances(cfgs, labels, models, paths, config.dt, threads);
}

enum class RefineAxis { dt, n };

/// Consecutive coupled distances along dt (levels are step sizes, finest
/// sets the master grid) or n (levels are Galerkin dimensions).
inline std::vector<DistanceRow> refinement_study(const SimConfig& config, const Models& models, RefineAxis axis,
                                                 const std::vector<double>& levels, std::size_t paths, int threads) {
    std::vector<SimConfig> cfgs;
    std::vector<std::string> labels;
    double master = config.dt;
    if (axis == RefineAxis::dt) {
        const double coarsest = *std::max_element(levels.begin(), levels.end());
        master = *std::min_element(levels.begin(), levels.end());
        for (double h : levels) {
            SimConfig c = config;
            c.dt = h;
            c.sample_interval = coarsest;
            cfgs.push_back(c);
            labels.push_back("dt=" + std::to_string(h));
        }
    } else {
        for (double n : levels) {
            SimConfig c = config;
            c.galerkin_n = std::size_t(std::llround(n));
            cfgs.push_back(c);
            labels.push_back("n=" + std::to_string(c.galerkin_n));
        }
    }
    return coupled_chain_distances(cfgs, labels, models, paths, master, threads);
}

struct IncrementRow {
    double delta = 0.0;
    stats::MeanSE increment;  // E|u(T0 + delta) - u(T0)|^2
};

inline std::vector<IncrementRow> increment_proxy(const SimConfig& config, const Models& models, double t0,
                                                 const std::vector<double>& deltas, std::size_t paths, int threads) {
    const Integrator integ(config, models);
    const long stride = config.sample_stride();
    const double h = config.dt * stride;
    auto index_of = [&](double t) {
        const long k = std::lround(t / h);
        if (std::abs(k * h - t) > 1e-9 || k < 0 || k * h > config.horizon + 1e-12)
            throw std::invalid_argument("increment times must lie on the sample grid");
        return std::size_t(k);
    };
    const std::size_t i0 = index_of(t0);
    std::vector<std::size_t> idx;
    for (double d : deltas) idx.push_back(index_of(t0 + d));
    auto per = parallel_map(paths, threads, [&](std::size_t i) {
        const auto noise = realization_for(models, path_seed(config.seed, i), config.horizon, config.dt);
        RecordOptions opt;
        opt.path_id = long(i);
        opt.keep_sample_states = true;
        opt.keep_events = false;
        const auto rec = integ.run(noise, opt);
        std::vector<double> out;
        for (auto k : idx) {
            double s = 0.0;
            for (std::size_t l = 0; l < rec.sample_states[k].size(); ++l)
                s += std::norm(rec.sample_states[k][l] - rec.sample_states[i0][l]);
            out.push_back(s);
        }
        return out;
    });
    std::vector<IncrementRow> rows;
    for (std::size_t d = 0; d < deltas.size(); ++d) {
        std::vector<double> col;
        for (const auto& v : per) col.push_back(v[d]);
        rows.push_back({deltas[d], stats::mean_se(col)});
    }
    return rows;
}

}  // namespace snsm
