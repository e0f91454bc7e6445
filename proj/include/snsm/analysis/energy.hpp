#pragma once

// Discrete defect of the energy equality
//
//   |u(t)|^2 = |u0|^2 + int (-2 nu ||u||^2 + 2 <f, u> - 2 <int G nu(dz), u> + ||sigma||_{L_Q}^2) ds
//            + 2 int <u, sigma dW> + sum_{jumps <= t} (|u(s-) + G|^2 - |u(s-)|^2).
//
// The jump sum is split as its compensated part plus the closed-form
// intensity term int lambda g_i^2 E z^2 |zeta + c u|^2 ds + 2 <int G nu, u>,
// both reported.  Deterministic integrals use the trapezoid rule over step
// nodes, stochastic integrals use left points.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "snsm/integrator.hpp"
#include "snsm/parallel.hpp"
#include "snsm/stats.hpp"

namespace snsm {

struct EnergyPoint {
    double t = 0.0;
    double residual = 0.0;
};

struct EnergyTerms {
    double initial = 0.0;
    double dissipation = 0.0;    // -2 nu int ||u||^2
    double forcing = 0.0;        // 2 int <f, u>
    double compensator = 0.0;    // -2 int <int G nu, u>
    double quadratic = 0.0;      // int ||sigma||_{L_Q}^2
    double ito = 0.0;            // 2 int <u, sigma dW>
    double jumps = 0.0;          // sum of |u+|^2 - |u-|^2
    double jump_intensity = 0.0; // int lambda g^2 E z^2 |zeta + c u|^2  (closed form)
    double nonlinear = 0.0;      // -2 int <B_eps(u), u>, kept only when requested
    double current = 0.0;        // |u(t)|^2

    double jump_martingale() const { return jumps - jump_intensity; }
    double residual() const {
        return current - (initial + dissipation + forcing + compensator + quadratic + ito + jumps + nonlinear);
    }
};

/// Observer accumulating the energy balance along a path.
class EnergyBalance {
public:
    EnergyBalance(const Integrator& integ, bool include_nonlinear = false)
        : integ_(integ), include_nonlinear_(include_nonlinear) {}

    void operator()(const NodeView& v) {
        const auto& models = integ_.models();
        const auto& cfg = integ_.config();
        switch (v.kind) {
            case NodeKind::start:
                terms_ = {};
                terms_.initial = terms_.current = h_norm_sq(v.after.u);
                series_.clear();
                break;
            case NodeKind::step: {
                const auto& u0 = v.before.u;
                const auto& u1 = v.after.u;
                const double h = v.dt;
                const int i = v.before.regime;
                terms_.dissipation -= cfg.nu * h * (v_norm_sq(u0) + v_norm_sq(u1));
                terms_.forcing += h * (h_inner(cfg.forcing.at(models.modes, v.before.t), u0) +
                                       h_inner(cfg.forcing.at(models.modes, v.after.t), u1));
                terms_.quadratic += h * models.diffusion.lq_norm_sq(v.before.t, u0, i);
                if (!v.dw.empty())
                    terms_.ito += 2.0 * h_inner(u0, models.diffusion.apply(v.before.t, u0, i, v.dw));
                if (models.jump.rate() > 0.0) {
                    terms_.compensator -= 2.0 * h * h_inner(models.jump.compensator_mean(v.before.t, u0, i), u0);
                    terms_.jump_intensity += h * (models.jump.moment(v.before.t, u0, i, 2) +
                                                  2.0 * h_inner(models.jump.compensator_mean(v.before.t, u0, i), u0));
                }
                if (include_nonlinear_) terms_.nonlinear -= 2.0 * h * h_inner(integ_.nonlinear_term(u0), u0);
                terms_.current = h_norm_sq(u1);
                series_.push_back({v.after.t, terms_.residual()});
                break;
            }
            case NodeKind::jump:
                terms_.jumps += h_norm_sq(v.after.u) - h_norm_sq(v.before.u);
                terms_.current = h_norm_sq(v.after.u);
                series_.back().residual = terms_.residual();
                break;
            case NodeKind::chain_switch:
                break;
        }
    }

    const EnergyTerms& terms() const noexcept { return terms_; }
    const std::vector<EnergyPoint>& series() const noexcept { return series_; }

private:
    const Integrator& integ_;
    bool include_nonlinear_;
    EnergyTerms terms_;
    std::vector<EnergyPoint> series_;
};

/// Residual series for a record kept with its full trajectory.
inline std::vector<EnergyPoint> energy_residual(const PathRecord& record, const NoiseRealization& noise,
                                                const Integrator& integ, bool include_nonlinear = false) {
    if (record.trajectory.empty()) throw std::invalid_argument("record too coarse: trajectory nodes are required");
    EnergyBalance bal(integ, include_nonlinear);
    const auto& modes = integ.models().modes;
    auto state_of = [&](const TrajectoryNode& n) { return SolverState{n.t, SpectralField(modes, n.coeffs), n.regime}; };
    SolverState prev = state_of(record.trajectory.front());
    bal({NodeKind::start, prev, prev});
    for (std::size_t k = 1; k < record.trajectory.size(); ++k) {
        const auto& node = record.trajectory[k];
        SolverState cur = state_of(node);
        if (node.kind == NodeKind::step) {
            const auto dw = noise.increment_between(prev.t, cur.t);
            bal({NodeKind::step, prev, cur, cur.t - prev.t, dw});
        } else {
            bal({node.kind, prev, cur});
        }
        prev = std::move(cur);
    }
    return bal.series();
}

inline std::vector<EnergyPoint> energy_residual(const PathRecord& record, const NoiseRealization& noise,
                                                const Models& models, const SimConfig& config) {
    return energy_residual(record, noise, Integrator(config, models));
}

struct EnergyReport {
    std::size_t paths = 0;
    stats::MeanSE residual_T;     // residual at T across paths
    stats::MeanSE max_abs;        // max_t |residual| across paths
    stats::MeanSE ito_T;          // size reference: the Ito term at T
    double z() const { return residual_T.se > 0.0 ? residual_T.mean / residual_T.se : 0.0; }
};

/// Ensemble of residuals at T, one observer pass per path.
inline EnergyReport run_energy_study(const SimConfig& config, const Models& models, int threads) {
    const Integrator integ(config, models);
    struct Out {
        double res_T, max_abs, ito;
    };
    auto per = parallel_map(config.paths, threads, [&](std::size_t i) {
        const auto noise = realization_for(models, path_seed(config.seed, i), config.horizon, config.dt);
        EnergyBalance bal(integ);
        RecordOptions opt;
        opt.path_id = long(i);
        opt.keep_events = false;
        integ.run(noise, opt, std::ref(bal));
        double mx = 0.0;
        for (const auto& p : bal.series()) mx = std::max(mx, std::abs(p.residual));
        return Out{bal.terms().residual(), mx, bal.terms().ito};
    });
    std::vector<double> a, b, c;
    for (const auto& o : per) {
        a.push_back(o.res_T);
        b.push_back(o.max_abs);
        c.push_back(o.ito);
    }
    EnergyReport r;
    r.paths = per.size();
    r.residual_T = stats::mean_se(a);
    r.max_abs = stats::mean_se(b);
    r.ito_T = stats::mean_se(c);
    return r;
}

/// max_t |residual(t)| along path 0 of the ensemble.
inline double energy_max_abs_residual(const SimConfig& config, const Models& models, bool include_nonlinear = false) {
    const Integrator integ(config, models);
    const auto noise = realization_for(models, path_seed(config.seed, 0), config.horizon, config.dt);
    EnergyBalance bal(integ, include_nonlinear);
    integ.run(noise, {}, std::ref(bal));
    double mx = 0.0;
    for (const auto& p : bal.series()) mx = std::max(mx, std::abs(p.residual));
    return mx;
}

}  // namespace snsm
