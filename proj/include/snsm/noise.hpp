#pragma once

// Noise coefficients and their moment formulas.
//
// Q-Wiener increments are complex per (k, p) entry, with real and imaginary
// parts independent N(0, q_l dt / 2), so E|dW_l|^2 = q_l dt and tr Q = sum q.
//
// Diffusion acts mode-diagonally:
//     (sigma(t, u, i) dW)_l = s_i (a_l + b_l c_l) dW_l ,
// with c_l the coefficient of u.  Jumps have finite intensity lambda and
// standard Gaussian marks z:
//     G(t, u, i, z) = g_i z (zeta + c u),   |zeta| = 1.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snsm/rng.hpp"
#include "snsm/spectral.hpp"

namespace snsm {

class CovarianceSpectrum {
public:
    CovarianceSpectrum() = default;
    explicit CovarianceSpectrum(std::vector<double> q) : q_(std::move(q)) {
        for (double v : q_)
            if (!(v >= 0.0)) throw std::invalid_argument("covariance eigenvalues must be >= 0");
    }

    /// q_l = scale * l^(-exponent), l the 1-based ordering index.
    static CovarianceSpectrum power_law(std::size_t n, double exponent, double scale = 1.0) {
        std::vector<double> q(n);
        for (std::size_t l = 0; l < n; ++l) q[l] = scale * std::pow(double(l + 1), -exponent);
        return CovarianceSpectrum(std::move(q));
    }

    std::size_t size() const noexcept { return q_.size(); }
    double operator[](std::size_t l) const { return q_[l]; }
    const std::vector<double>& values() const noexcept { return q_; }
    double trace() const {
        double s = 0.0;
        for (double v : q_) s += v;
        return s;
    }

private:
    std::vector<double> q_;
};

inline std::vector<cplx> sample_wiener_increment(const CovarianceSpectrum& q, double dt,
                                                 RngStream& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    std::vector<cplx> dw(q.size());
    for (std::size_t l = 0; l < q.size(); ++l) {
        const double sd = std::sqrt(0.5 * q[l] * dt);
        const double re = rng.normal();
        const double im = rng.normal();
        dw[l] = {sd * re, sd * im};
    }
    return dw;
}

namespace detail {

/// sup_{X >= 0} (alpha + beta X)^p / (1 + X^p), by a dense sweep over
/// X = tan(theta) followed by golden-section refinement.
inline double growth_sup(double alpha, double beta, double p) {
    auto f = [&](double theta) {
        if (theta >= 0.5 * std::numbers::pi) return std::pow(beta, p);
        const double x = std::tan(theta);
        return std::pow(alpha + beta * x, p) / (1.0 + std::pow(x, p));
    };
    const int n = 4000;
    const double h = 0.5 * std::numbers::pi / n;
    int best = 0;
    double fbest = f(0.0);
    for (int k = 1; k <= n; ++k) {
        const double v = f(k * h);
        if (v > fbest) fbest = v, best = k;
    }
    double lo = std::max(0.0, (best - 1) * h), hi = std::min(0.5 * std::numbers::pi, (best + 1) * h);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80; ++it) {
        const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        if (f(a) > f(b)) hi = b; else lo = a;
    }
    return std::max(fbest, f(0.5 * (lo + hi)));
}

}  // namespace detail

class DiffusionModel {
public:
    DiffusionModel() = default;
    DiffusionModel(std::vector<double> regime_amplitude, std::vector<double> a, std::vector<double> b,
                   CovarianceSpectrum spectrum)
        : s_(std::move(regime_amplitude)), a_(std::move(a)), b_(std::move(b)), q_(std::move(spectrum)) {
        if (a_.size() != q_.size() || b_.size() != q_.size())
            throw std::invalid_argument("diffusion profiles must match the mode count");
        for (double v : s_)
            if (!std::isfinite(v)) throw std::invalid_argument("regime amplitudes must be finite");
    }

    /// Constant profiles a_l = a, b_l = b.
    static DiffusionModel uniform(std::vector<double> regime_amplitude, double a, double b,
                                  CovarianceSpectrum spectrum) {
        const std::size_t n = spectrum.size();
        return DiffusionModel(std::move(regime_amplitude), std::vector<double>(n, a),
                              std::vector<double>(n, b), std::move(spectrum));
    }

    std::size_t states() const noexcept { return s_.size(); }
    const CovarianceSpectrum& spectrum() const noexcept { return q_; }
    double amplitude(int i) const {
        if (i < 0 || std::size_t(i) >= s_.size())
            throw std::out_of_range("unknown regime state " + std::to_string(i + 1));
        return s_[i];
    }

    /// Multiplier applied to dW_l.
    cplx factor(std::size_t l, const SpectralField& u, int i) const {
        return amplitude(i) * (a_[l] + b_[l] * u[l]);
    }

    SpectralField apply(double /*t*/, const SpectralField& u, int i, std::span<const cplx> dw) const {
        SpectralField out(u.modes_ptr());
        const double s = amplitude(i);
        for (std::size_t l = 0; l < out.size(); ++l) out[l] = s * (a_[l] + b_[l] * u[l]) * dw[l];
        return out;
    }

    /// ||sigma(t, u, i)||^2_{L_Q} = sum_l q_l |s_i (a_l + b_l c_l)|^2.
    double lq_norm_sq(double /*t*/, const SpectralField& u, int i) const {
        const double s = amplitude(i);
        double acc = 0.0;
        for (std::size_t l = 0; l < u.size(); ++l) acc += q_[l] * std::norm(a_[l] + b_[l] * u[l]);
        return s * s * acc;
    }

    double lq_norm(double t, const SpectralField& u, int i) const { return std::sqrt(lq_norm_sq(t, u, i)); }

    /// ||sigma(u) - sigma(v)||^2_{L_Q}.
    double lq_distance_sq(const SpectralField& u, const SpectralField& v, int i) const {
        const double s = amplitude(i);
        double acc = 0.0;
        for (std::size_t l = 0; l < u.size(); ++l) acc += q_[l] * b_[l] * b_[l] * std::norm(u[l] - v[l]);
        return s * s * acc;
    }

    double max_amplitude() const {
        double m = 0.0;
        for (double v : s_) m = std::max(m, std::abs(v));
        return m;
    }
    /// ||Q^{1/2} a||.
    double alpha() const {
        double acc = 0.0;
        for (std::size_t l = 0; l < a_.size(); ++l) acc += q_[l] * a_[l] * a_[l];
        return std::sqrt(acc);
    }
    /// max_l |b_l| sqrt(q_l).
    double beta() const {
        double m = 0.0;
        for (std::size_t l = 0; l < b_.size(); ++l) m = std::max(m, std::abs(b_[l]) * std::sqrt(q_[l]));
        return m;
    }

    /// Growth constant for ||sigma||^p <= K (1 + |u|^p), from
    /// ||sigma(u)|| <= s_max (alpha + beta |u|).
    double growth_constant(int p) const {
        const double s = max_amplitude();
        return std::pow(s, p) * detail::growth_sup(alpha(), beta(), p);
    }
    /// Lipschitz constant for ||sigma(u) - sigma(v)||^2 <= L |u - v|^2.
    double lipschitz_constant() const {
        const double s = max_amplitude(), b = beta();
        return s * s * b * b;
    }

private:
    std::vector<double> s_;
    std::vector<double> a_, b_;
    CovarianceSpectrum q_;
};

/// Absolute moments of a standard Gaussian.
inline double gaussian_abs_moment(int p) {
    switch (p) {
        case 0: return 1.0;
        case 1: return std::sqrt(2.0 / std::numbers::pi);
        case 2: return 1.0;
        case 3: return 2.0 * std::sqrt(2.0 / std::numbers::pi);
        case 4: return 3.0;
        default: throw std::invalid_argument("Gaussian absolute moment order not tabulated");
    }
}

class JumpModel {
public:
    JumpModel() = default;
    JumpModel(double rate, std::vector<double> regime_gain, SpectralField direction, double coupling)
        : rate_(rate), g_(std::move(regime_gain)), zeta_(std::move(direction)), c_(coupling) {
        if (!(rate_ >= 0.0)) throw std::invalid_argument("jump rate must be >= 0");
        const double n = h_norm(zeta_);
        if (!(n > 0.0)) throw std::invalid_argument("jump direction must be nonzero");
        zeta_ *= 1.0 / n;
    }

    double rate() const noexcept { return rate_; }
    double coupling() const noexcept { return c_; }
    const SpectralField& direction() const noexcept { return zeta_; }
    std::size_t states() const noexcept { return g_.size(); }
    double gain(int i) const {
        if (i < 0 || std::size_t(i) >= g_.size())
            throw std::out_of_range("unknown regime state " + std::to_string(i + 1));
        return g_[i];
    }
    double max_gain() const {
        double m = 0.0;
        for (double v : g_) m = std::max(m, std::abs(v));
        return m;
    }
    /// Mark law is N(0, 1).
    static constexpr double mark_mean = 0.0;

    /// zeta + c u.
    SpectralField shape(const SpectralField& u) const {
        SpectralField out = zeta_;
        for (std::size_t l = 0; l < out.size(); ++l) out[l] += c_ * u[l];
        return out;
    }

    SpectralField eval(double /*t*/, const SpectralField& u, int i, double z) const {
        SpectralField out = shape(u);
        out *= gain(i) * z;
        return out;
    }

    /// integral |G(t, u, i, z)|^p nu_1(dz) = lambda |g_i|^p E|z|^p |zeta + c u|^p.
    double moment(double /*t*/, const SpectralField& u, int i, int p) const {
        return rate_ * std::pow(std::abs(gain(i)), p) * gaussian_abs_moment(p) *
               std::pow(h_norm(shape(u)), p);
    }

    /// integral |G(u) - G(v)|^2 nu_1(dz) = lambda g_i^2 c^2 |u - v|^2.
    double lipschitz_integral(const SpectralField& u, const SpectralField& v, int i) const {
        const double g = gain(i);
        return rate_ * g * g * c_ * c_ * h_norm_sq(u - v);
    }

    /// integral G nu_1(dz) = lambda g_i E[z] (zeta + c u).
    SpectralField compensator_mean(double /*t*/, const SpectralField& u, int i) const {
        SpectralField out = shape(u);
        out *= rate_ * gain(i) * mark_mean;
        return out;
    }

    double growth_constant(int p) const {
        return rate_ * std::pow(max_gain(), p) * gaussian_abs_moment(p) *
               detail::growth_sup(1.0, std::abs(c_), p);
    }
    double lipschitz_constant() const {
        const double g = max_gain();
        return rate_ * g * g * c_ * c_;
    }

private:
    double rate_ = 0.0;
    std::vector<double> g_;
    SpectralField zeta_;
    double c_ = 0.0;
};

inline SpectralField sigma_apply(const DiffusionModel& m, double t, const SpectralField& u, int i,
                                 std::span<const cplx> dw) {
    return m.apply(t, u, i, dw);
}
inline double sigma_lq_norm(const DiffusionModel& m, double t, const SpectralField& u, int i) {
    return m.lq_norm(t, u, i);
}
inline SpectralField jump_eval(const JumpModel& m, double t, const SpectralField& u, int i, double z) {
    return m.eval(t, u, i, z);
}
inline double jump_moments(const JumpModel& m, double t, const SpectralField& u, int i, int p) {
    if (p < 1 || p > 3) throw std::invalid_argument("jump moment order must be 1, 2 or 3");
    return m.moment(t, u, i, p);
}
inline SpectralField compensator_mean(const JumpModel& m, double t, const SpectralField& u, int i) {
    return m.compensator_mean(t, u, i);
}

struct AuditReport {
    std::size_t samples = 0;
    // Empirical suprema of the hypothesis ratios.
    double h1_p2 = 0.0, h1_p3 = 0.0;
    double h2 = 0.0;
    double h3_p1 = 0.0, h3_p2 = 0.0, h3_p3 = 0.0;
    double h4 = 0.0;
    // Closed-form constants of the built-in families.
    double h1_p2_bound = 0.0, h1_p3_bound = 0.0;
    double h2_bound = 0.0;
    double h3_p1_bound = 0.0, h3_p2_bound = 0.0, h3_p3_bound = 0.0;
    double h4_bound = 0.0;
    double slack = 0.05;

    double k_hat() const { return std::max({h1_p2, h1_p3, h3_p1, h3_p2, h3_p3}); }
    double l_hat() const { return std::max(h2, h4); }
    double k_closed() const {
        return std::max({h1_p2_bound, h1_p3_bound, h3_p1_bound, h3_p2_bound, h3_p3_bound});
    }
    double l_closed() const { return std::max(h2_bound, h4_bound); }

    static bool within(double hat, double bound, double slack) { return hat <= (1.0 + slack) * bound; }
    bool pass_h1() const { return within(h1_p2, h1_p2_bound, slack) && within(h1_p3, h1_p3_bound, slack); }
    bool pass_h2() const { return within(h2, h2_bound, slack); }
    bool pass_h3() const {
        return within(h3_p1, h3_p1_bound, slack) && within(h3_p2, h3_p2_bound, slack) &&
               within(h3_p3, h3_p3_bound, slack);
    }
    bool pass_h4() const { return within(h4, h4_bound, slack); }
    bool pass() const { return pass_h1() && pass_h2() && pass_h3() && pass_h4(); }
};

/// Random field with h_norm uniform in [0, radius] and isotropic direction.
inline SpectralField random_field_in_ball(const ModeSetPtr& modes, double radius, RngStream& rng) {
    SpectralField f(modes);
    for (std::size_t l = 0; l < f.size(); ++l) {
        const double re = rng.normal();
        const double im = rng.normal();
        f[l] = {re, im};
    }
    const double n = h_norm(f);
    f *= radius * rng.uniform() / n;
    return f;
}

/// Samples (t, u, v, i) and records the suprema of the four hypothesis
/// ratios next to the closed-form constants.
inline AuditReport hypotheses_audit(const DiffusionModel& diffusion, const JumpModel& jump,
                                    const ModeSetPtr& modes, std::size_t sample_count, double radius,
                                    double horizon, std::uint64_t seed) {
    if (sample_count < 1000) throw std::invalid_argument("audit needs at least 1000 samples");
    const int m = int(std::max(diffusion.states(), jump.states()));
    RngStream rng(seed);
    AuditReport r;
    r.samples = sample_count;
    for (std::size_t s = 0; s < sample_count; ++s) {
        const double t = horizon * rng.uniform();
        const int i = std::min(m - 1, int(rng.uniform() * m));
        const SpectralField u = random_field_in_ball(modes, radius, rng);
        const SpectralField v = random_field_in_ball(modes, radius, rng);
        const double hu = h_norm(u);
        const double sig2 = diffusion.lq_norm_sq(t, u, i);
        r.h1_p2 = std::max(r.h1_p2, sig2 / (1.0 + hu * hu));
        r.h1_p3 = std::max(r.h1_p3, std::pow(sig2, 1.5) / (1.0 + hu * hu * hu));
        for (int p = 1; p <= 3; ++p) {
            const double ratio = jump.moment(t, u, i, p) / (1.0 + std::pow(hu, p));
            double& slot = p == 1 ? r.h3_p1 : (p == 2 ? r.h3_p2 : r.h3_p3);
            slot = std::max(slot, ratio);
        }
        const double d2 = h_norm_sq(u - v);
        if (d2 < 1e-24) continue;
        r.h2 = std::max(r.h2, diffusion.lq_distance_sq(u, v, i) / d2);
        r.h4 = std::max(r.h4, jump.lipschitz_integral(u, v, i) / d2);
    }
    r.h1_p2_bound = diffusion.growth_constant(2);
    r.h1_p3_bound = diffusion.growth_constant(3);
    r.h2_bound = diffusion.lipschitz_constant();
    r.h3_p1_bound = jump.growth_constant(1);
    r.h3_p2_bound = jump.growth_constant(2);
    r.h3_p3_bound = jump.growth_constant(3);
    r.h4_bound = jump.lipschitz_constant();
    return r;
}

}  // namespace snsm
