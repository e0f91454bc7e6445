#pragma once

// The generator of the regime-switching system on cylinder functions
// F(t, u, i) = phi(<u, rho>, i) and the canonical process
//
//   M^phi(t) = phi(<u(t), rho>, r(t)) - phi(<u(0), rho>, r(0)) - int_0^t L F(s) ds,
//
// together with the conditioned-increment test E[(M(t) - M(s)) prod psi_j] = 0.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "snsm/integrator.hpp"
#include "snsm/parallel.hpp"
#include "snsm/quadrature.hpp"
#include "snsm/stats.hpp"

namespace snsm {

/// phi(x, i) = w_i (1 - (x/R)^2)^4 on |x| < R, zero outside.
struct TestFunctionPhi {
    double radius = 4.0;
    std::vector<double> weights{1.0, 2.0};

    double weight(int i) const {
        if (i < 0 || std::size_t(i) >= weights.size()) throw std::out_of_range("no weight for regime state");
        return weights[i];
    }
    double value(double x, int i) const {
        const double y = x / radius;
        if (std::abs(y) >= 1.0) return 0.0;
        const double s = 1.0 - y * y;
        return weight(i) * s * s * s * s;
    }
    double d1(double x, int i) const {
        const double y = x / radius;
        if (std::abs(y) >= 1.0) return 0.0;
        const double s = 1.0 - y * y;
        return weight(i) * (-8.0 * y / radius) * s * s * s;
    }
    double d2(double x, int i) const {
        const double y = x / radius;
        if (std::abs(y) >= 1.0) return 0.0;
        const double s = 1.0 - y * y;
        return weight(i) * (-8.0 / (radius * radius)) * s * s * (1.0 - 7.0 * y * y);
    }
};

/// Term-by-term value of L F at (t, u, i).
struct GeneratorTerms {
    double drift = 0.0;      // phi'(x) <-nu A u - B_eps(u) + f, rho>
    double viscous = 0.0;    // the -nu A u part of drift
    double chain = 0.0;      // sum_j gamma_ij phi(x, j)
    double diffusion = 0.0;  // (1/2) phi''(x) sum_l (q_l / 2) |sigma_l rho_l|^2
    double jump = 0.0;       // lambda E_z[phi(x + <G, rho>) - phi(x) - phi'(x) <G, rho>]
    double total() const { return drift + chain + diffusion + jump; }
    /// Total with the viscosity scaled by `nu_scale` in the drift only.
    double total_scaled(double nu_scale) const { return total() + (nu_scale - 1.0) * viscous; }
};

class GeneratorEvaluator {
public:
    GeneratorEvaluator(const Integrator& integ, TestFunctionPhi phi, SpectralField rho, int hermite_nodes = 21)
        : integ_(integ), phi_(std::move(phi)), rho_(integ.project_level(std::move(rho))),
          hermite_(gauss_hermite_normal(hermite_nodes)) {
        if (phi_.weights.size() < std::size_t(integ.models().states()))
            throw std::invalid_argument("test function needs one weight per regime state");
        rho_stokes_ = stokes_apply(rho_);
    }

    const TestFunctionPhi& phi() const noexcept { return phi_; }
    const SpectralField& rho() const noexcept { return rho_; }

    double pairing(const SpectralField& u) const { return h_inner(u, rho_); }

    /// `nu_scale` multiplies the viscosity in the drift pairing only.
    GeneratorTerms terms(double t, const SpectralField& u, int i, double nu_scale = 1.0) const {
        const auto& models = integ_.models();
        const auto& cfg = integ_.config();
        const double x = pairing(u);
        const double p1 = phi_.d1(x, i);
        GeneratorTerms g;

        const double viscous_pair = -nu_scale * cfg.nu * h_inner(u, rho_stokes_);
        double drift_pair = viscous_pair + h_inner(cfg.forcing.at(models.modes, t), rho_);
        if (cfg.nonlinear && p1 != 0.0) drift_pair -= h_inner(integ_.nonlinear_term(u), rho_);
        g.drift = p1 * drift_pair;
        g.viscous = p1 * viscous_pair;

        for (int j = 0; j < models.states(); ++j) g.chain += models.generator(i, j) * phi_.value(x, j);

        const double p2 = phi_.d2(x, i);
        if (p2 != 0.0) {
            const auto& q = models.diffusion.spectrum();
            double qv = 0.0;
            for (std::size_t l = 0; l < u.size(); ++l) {
                if (rho_[l] == cplx{0.0, 0.0}) continue;
                qv += 0.5 * q[l] * std::norm(models.diffusion.factor(l, u, i) * rho_[l]);
            }
            g.diffusion = 0.5 * p2 * qv;
        }

        const double lambda = models.jump.rate();
        if (lambda > 0.0) {
            // <G(z), rho> = z * g_i <zeta + c u, rho>.
            const double a = models.jump.gain(i) * h_inner(models.jump.shape(u), rho_);
            const double p0 = phi_.value(x, i);
            double e = 0.0;
            for (std::size_t k = 0; k < hermite_.nodes.size(); ++k) {
                const double gz = a * hermite_.nodes[k];
                e += hermite_.weights[k] * (phi_.value(x + gz, i) - p0 - p1 * gz);
            }
            g.jump = lambda * e;
        }
        return g;
    }

    double apply(double t, const SpectralField& u, int i, double nu_scale = 1.0) const {
        return terms(t, u, i, nu_scale).total();
    }

private:
    const Integrator& integ_;
    TestFunctionPhi phi_;
    SpectralField rho_;
    SpectralField rho_stokes_;
    QuadratureRule hermite_;
};

inline double generator_apply(const TestFunctionPhi& phi, const SpectralField& rho, const SolverState& s,
                              const SimConfig& config, const Models& models) {
    const Integrator integ(config, models);
    return GeneratorEvaluator(integ, phi, rho).apply(s.t, s.u, s.regime);
}

struct MphiPoint {
    double t = 0.0;
    double m = 0.0;          // M^phi(t)
    double m_control = 0.0;  // same with the control viscosity scale
    double h2 = 0.0;         // |u(t)|^2
    int regime = 0;
};

/// Observer building M^phi along a path.  The integral of L F uses the
/// trapezoid rule over each continuous step with the left-limit state at
/// the step end, so events add only the jump of phi.
class MphiTracker {
public:
    MphiTracker(const GeneratorEvaluator& eval, double control_nu_scale = 2.0)
        : eval_(eval), control_(control_nu_scale) {}

    void operator()(const NodeView& v) {
        const auto& phi = eval_.phi();
        const auto& a = v.after;
        switch (v.kind) {
            case NodeKind::start:
                series_.clear();
                integral_ = integral_control_ = 0.0;
                phi0_ = phi.value(eval_.pairing(a.u), a.regime);
                evaluate(a);
                break;
            case NodeKind::step: {
                const double l0 = lf_, c0 = lf_control_;
                evaluate(a);
                integral_ += 0.5 * v.dt * (l0 + lf_);
                integral_control_ += 0.5 * v.dt * (c0 + lf_control_);
                break;
            }
            case NodeKind::jump:
            case NodeKind::chain_switch:
                evaluate(a);
                break;
        }
        const double p = phi.value(eval_.pairing(a.u), a.regime) - phi0_;
        MphiPoint pt{a.t, p - integral_, p - integral_control_, h_norm_sq(a.u), a.regime};
        if (!series_.empty() && series_.back().t == a.t) series_.back() = pt;
        else series_.push_back(pt);
    }

    const std::vector<MphiPoint>& series() const noexcept { return series_; }

    /// Right-continuous value at time t.
    const MphiPoint& at(double t) const {
        auto it = std::upper_bound(series_.begin(), series_.end(), t + 1e-12,
                                   [](double v, const MphiPoint& p) { return v < p.t; });
        if (it == series_.begin()) throw std::out_of_range("time before the path start");
        return *(it - 1);
    }

private:
    void evaluate(const SolverState& s) {
        const auto g = eval_.terms(s.t, s.u, s.regime);
        lf_ = g.total();
        lf_control_ = g.total_scaled(control_);
    }

    const GeneratorEvaluator& eval_;
    double control_;
    double phi0_ = 0.0;
    double integral_ = 0.0, integral_control_ = 0.0;
    double lf_ = 0.0, lf_control_ = 0.0;
    std::vector<MphiPoint> series_;
};

/// M^phi(t) for a record kept with its full trajectory.
inline std::vector<MphiPoint> mphi_series(const TestFunctionPhi& phi, const SpectralField& rho, const PathRecord& record,
                                          const SimConfig& config, const Models& models) {
    if (record.trajectory.empty()) throw std::invalid_argument("record too coarse: trajectory nodes are required");
    const Integrator integ(config, models);
    const GeneratorEvaluator eval(integ, phi, rho);
    MphiTracker tracker(eval);
    auto state_of = [&](const TrajectoryNode& n) {
        return SolverState{n.t, SpectralField(models.modes, n.coeffs), n.regime};
    };
    SolverState prev = state_of(record.trajectory.front());
    tracker({NodeKind::start, prev, prev});
    for (std::size_t k = 1; k < record.trajectory.size(); ++k) {
        SolverState cur = state_of(record.trajectory[k]);
        tracker({record.trajectory[k].kind, prev, cur, cur.t - prev.t});
        prev = std::move(cur);
    }
    return tracker.series();
}

/// Bounded F_s-measurable weights.
enum class PsiFamily { clipped_energy, regime_indicator };

inline const char* psi_name(PsiFamily f) {
    return f == PsiFamily::clipped_energy ? "clipped_energy" : "regime_indicator";
}

struct MartingaleCell {
    double s = 0.0, t = 0.0;
    PsiFamily family = PsiFamily::clipped_energy;
    stats::MeanSE stat;
    stats::MeanSE control;
    bool inconclusive = false;
    double z() const { return stat.se > 0.0 ? stat.mean / stat.se : 0.0; }
    double z_control() const { return control.se > 0.0 ? control.mean / control.se : 0.0; }
    bool pass() const { return inconclusive || std::abs(z()) <= 3.0; }
};

struct MartingaleReport {
    std::size_t paths = 0;
    std::size_t blow_ups = 0;
    std::vector<MartingaleCell> cells;
    bool pass() const {
        return blow_ups == 0 && !cells.empty() &&
               std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.pass(); });
    }
    /// The control viscosity must be detected somewhere.
    bool control_detected() const {
        return std::any_of(cells.begin(), cells.end(), [](const auto& c) { return std::abs(c.z_control()) > 3.0; });
    }
};

struct MartingaleSetup {
    TestFunctionPhi phi{};
    std::size_t rho_mode = 1;
    std::vector<std::pair<double, double>> pairs{{0.2, 0.5}, {0.3, 0.8}, {0.5, 1.0}};
    double clip = 4.0;              // clipped_energy uses min(|u(s_j)|^2, clip) / clip at s_j in {s/2, s}
    int indicator_state = 0;        // regime_indicator uses 1{r(s) = state}
    double control_nu_scale = 2.0;
};

inline double psi_value(PsiFamily f, const MphiTracker& tr, double s, const MartingaleSetup& setup) {
    if (f == PsiFamily::regime_indicator) return tr.at(s).regime == setup.indicator_state ? 1.0 : 0.0;
    const double a = std::min(tr.at(0.5 * s).h2, setup.clip) / setup.clip;
    const double b = std::min(tr.at(s).h2, setup.clip) / setup.clip;
    return a * b;
}

inline MartingaleReport martingale_test(const SimConfig& config, const Models& models, const MartingaleSetup& setup,
                                        int threads) {
    if (config.paths < 1000) throw std::invalid_argument("the martingale test needs at least 1000 paths");
    for (const auto& [s, t] : setup.pairs)
        if (!(0.0 <= s && s < t && t <= config.horizon + 1e-12)) throw std::invalid_argument("time pairs need 0 <= s < t <= T");
    const Integrator integ(config, models);
    const GeneratorEvaluator eval(integ, setup.phi, SpectralField::unit_mode(models.modes, setup.rho_mode));
    const PsiFamily families[] = {PsiFamily::clipped_energy, PsiFamily::regime_indicator};
    const std::size_t ncell = setup.pairs.size() * 2;

    struct Out {
        std::vector<double> stat, control;
        bool blew_up = false;
    };
    auto per = parallel_map(config.paths, threads, [&](std::size_t i) {
        Out o;
        const auto noise = realization_for(models, path_seed(config.seed, i), config.horizon, config.dt);
        MphiTracker tracker(eval, setup.control_nu_scale);
        RecordOptions opt;
        opt.path_id = long(i);
        opt.keep_events = false;
        try {
            integ.run(noise, opt, std::ref(tracker));
        } catch (const BlowUpError&) {
            o.blew_up = true;
            return o;
        }
        for (const auto& [s, t] : setup.pairs) {
            const auto& ms = tracker.at(s);
            const auto& mt = tracker.at(t);
            for (auto f : families) {
                const double psi = psi_value(f, tracker, s, setup);
                o.stat.push_back((mt.m - ms.m) * psi);
                o.control.push_back((mt.m_control - ms.m_control) * psi);
            }
        }
        return o;
    });

    MartingaleReport r;
    std::vector<std::vector<double>> cols(ncell), ctrl(ncell);
    for (const auto& o : per) {
        if (o.blew_up) {
            ++r.blow_ups;
            continue;
        }
        ++r.paths;
        for (std::size_t c = 0; c < ncell; ++c) {
            cols[c].push_back(o.stat[c]);
            ctrl[c].push_back(o.control[c]);
        }
    }
    for (std::size_t p = 0; p < setup.pairs.size(); ++p)
        for (std::size_t f = 0; f < 2; ++f) {
            const std::size_t c = p * 2 + f;
            MartingaleCell cell;
            cell.s = setup.pairs[p].first;
            cell.t = setup.pairs[p].second;
            cell.family = families[f];
            cell.stat = stats::mean_se(cols[c]);
            cell.control = stats::mean_se(ctrl[c]);
            // Degenerate variance: no sampling noise to judge against.
            cell.inconclusive = cell.stat.sd <= 1e-12 * (1.0 + std::abs(cell.stat.mean));
            r.cells.push_back(cell);
        }
    return r;
}

}  // namespace snsm
