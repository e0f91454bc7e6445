#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "snsm/analysis/gronwall.hpp"
#include "snsm/integrator.hpp"
#include "snsm/parallel.hpp"
#include "snsm/stats.hpp"

namespace snsm {

/// Per-path functionals on the sample grid (time integrals by trapezoid).
struct PathMoments {
    double sup_h2 = 0.0;         // sup_t |u|^2
    double sup_h3 = 0.0;         // sup_t |u|^3
    double nu_int_v2 = 0.0;      // nu int_0^T ||u||^2
    double int_h_v2 = 0.0;       // int_0^T |u| ||u||^2
    std::vector<double> h2;      // |u(t)|^2 per sample
    std::vector<double> nu_int_v2_t;  // nu int_0^t ||u||^2 per sample
};

inline PathMoments path_moments(const PathRecord& rec, double nu) {
    PathMoments m;
    const auto& s = rec.samples;
    m.h2.resize(s.size());
    m.nu_int_v2_t.resize(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        m.sup_h2 = std::max(m.sup_h2, s[k].h_norm_sq);
        m.sup_h3 = std::max(m.sup_h3, s[k].h_norm_cubed);
        m.h2[k] = s[k].h_norm_sq;
        if (k > 0) {
            const double dt = s[k].t - s[k - 1].t;
            m.nu_int_v2 += 0.5 * nu * dt * (s[k].v_norm_sq + s[k - 1].v_norm_sq);
            m.int_h_v2 += 0.5 * dt *
                          (std::sqrt(s[k].h_norm_sq) * s[k].v_norm_sq + std::sqrt(s[k - 1].h_norm_sq) * s[k - 1].v_norm_sq);
        }
        m.nu_int_v2_t[k] = m.nu_int_v2;
    }
    return m;
}

struct MomentReport {
    std::size_t paths = 0;
    std::size_t blow_ups = 0;
    double nu = 1.0;
    stats::MeanSE sup_h2;            // E sup |u|^2
    stats::MeanSE nu_int_v2;         // nu E int ||u||^2
    stats::MeanSE sup_h3;            // E sup |u|^3
    stats::MeanSE int_h_v2;          // E int |u| ||u||^2
    stats::MeanSE l2_sup;            // E[sup |u|^2 + nu int ||u||^2]
    stats::MeanSE l3_sup;            // E[sup |u|^3 + 2 nu int |u| ||u||^2]
    stats::MeanSE l2_pointwise;      // max_t E[|u(t)|^2 + nu int_0^t ||u||^2]
    std::vector<double> mean_h2;     // E|u(t)|^2 per sample
    GronwallBounds bounds;

    bool pass_c1() const { return blow_ups == 0 && l2_pointwise.mean + 3.0 * l2_pointwise.se <= bounds.c1; }
    bool pass_c2() const { return blow_ups == 0 && l2_sup.mean + 3.0 * l2_sup.se <= bounds.c2; }
    bool pass_c3() const { return blow_ups == 0 && bounds.c3 && l3_sup.mean + 3.0 * l3_sup.se <= *bounds.c3; }
    bool pass() const { return paths > 0 && pass_c1() && pass_c2() && pass_c3(); }
};

/// Reduces per-path functionals (all on one sample grid) to a report.
inline MomentReport estimate_moments(const std::vector<PathMoments>& per_path, double nu, std::size_t blow_ups,
                                     const GronwallBounds& bounds) {
    MomentReport r;
    r.paths = per_path.size();
    r.blow_ups = blow_ups;
    r.nu = nu;
    r.bounds = bounds;
    if (per_path.empty()) return r;
    const std::size_t n = per_path.size();
    std::vector<double> a(n), b(n), c(n), d(n), e(n), f(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = per_path[i];
        a[i] = p.sup_h2;
        b[i] = p.nu_int_v2;
        c[i] = p.sup_h3;
        d[i] = p.int_h_v2;
        e[i] = p.sup_h2 + p.nu_int_v2;
        f[i] = p.sup_h3 + 2.0 * nu * p.int_h_v2;
    }
    r.sup_h2 = stats::mean_se(a);
    r.nu_int_v2 = stats::mean_se(b);
    r.sup_h3 = stats::mean_se(c);
    r.int_h_v2 = stats::mean_se(d);
    r.l2_sup = stats::mean_se(e);
    r.l3_sup = stats::mean_se(f);
    const std::size_t samples = per_path.front().h2.size();
    for (const auto& p : per_path)
        if (p.h2.size() != samples) throw std::invalid_argument("paths must share one sample grid");
    r.mean_h2.resize(samples);
    std::vector<double> col(n), col2(n);
    for (std::size_t k = 0; k < samples; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = per_path[i].h2[k];
            col2[i] = per_path[i].h2[k] + per_path[i].nu_int_v2_t[k];
        }
        r.mean_h2[k] = stats::mean_se(col).mean;
        const auto m = stats::mean_se(col2);
        if (k == 0 || m.mean > r.l2_pointwise.mean) r.l2_pointwise = m;
    }
    return r;
}

inline MomentReport estimate_moments(const std::vector<PathRecord>& records, double nu, const GronwallBounds& bounds,
                                     std::size_t blow_ups = 0) {
    if (records.size() < 100) throw std::invalid_argument("moment estimation needs at least 100 paths");
    std::vector<PathMoments> per(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) per[i] = path_moments(records[i], nu);
    return estimate_moments(per, nu, blow_ups, bounds);
}

/// Runs `paths` independent paths and reduces them without keeping records.
inline MomentReport run_moment_study(const SimConfig& config, const Models& models, double K, int threads) {
    if (config.paths < 100) throw std::invalid_argument("moment estimation needs at least 100 paths");
    const Integrator integ(config, models);
    const auto bounds = gronwall_bounds(gronwall_inputs(integ, K));
    struct Out {
        PathMoments m;
        bool blew_up = false;
    };
    auto per = parallel_map(config.paths, threads, [&](std::size_t i) {
        const auto seed = path_seed(config.seed, i);
        const auto noise = realization_for(models, seed, config.horizon, config.dt);
        Out o;
        try {
            RecordOptions opt;
            opt.path_id = long(i);
            opt.keep_events = false;
            o.m = path_moments(integ.run(noise, opt), config.nu);
        } catch (const BlowUpError&) {
            o.blew_up = true;
        }
        return o;
    });
    std::vector<PathMoments> ok;
    std::size_t blow = 0;
    for (auto& o : per) {
        if (o.blew_up) ++blow;
        else ok.push_back(std::move(o.m));
    }
    return estimate_moments(ok, config.nu, blow, bounds);
}

}  // namespace snsm
