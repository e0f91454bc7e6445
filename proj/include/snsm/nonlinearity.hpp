#pragma once

// Trilinear form b(u, v, w) = avg( (u . grad) v . w ), the induced operator
// B(u, v), and the mollified variant where the advecting field is replaced by
// eta_eps * u.  On the torus the mollifier is the radial Fourier multiplier
// m_eps(k) = eta_hat(eps |k|).

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "snsm/quadrature.hpp"
#include "snsm/spectral.hpp"

namespace snsm {

namespace detail {

inline double bump(double s) {
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 / (s * s - 1.0));
}

inline double sinc(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

/// integral_0^1 exp(1/(s^2-1)) s^2 ds; 4*pi times this is 1/C.
inline double bump_radial_mass() {
    static const double mass =
        integrate_adaptive([](double s) { return bump(s) * s * s; }, 0.0, 1.0, 1e-15);
    return mass;
}

}  // namespace detail

/// Fourier transform of the unit-mass standard bump at radius r = |xi|.
inline double bump_transform(double r, double abs_tol = 1e-10) {
    if (r == 0.0) return 1.0;
    const double mass = detail::bump_radial_mass();
    const double num = integrate_adaptive(
        [r](double s) { return detail::bump(s) * s * s * detail::sinc(r * s); }, 0.0, 1.0,
        abs_tol * mass);
    return num / mass;
}

inline double mollifier_multiplier(double epsilon, const Wavevector& k, double abs_tol = 1e-10) {
    if (epsilon < 0.0) throw std::invalid_argument("mollification parameter must be >= 0");
    if (epsilon == 0.0) return 1.0;
    return bump_transform(epsilon * std::sqrt(double(norm_sq(k))), abs_tol);
}

/// m_eps(k) for every |k|^2 reachable at a given k_max.  Read-only after
/// construction.  epsilon == 0 means "off" (multiplier identically 1).
class MollifierTable {
public:
    MollifierTable(double epsilon, int k_max, double abs_tol = 1e-10)
        : epsilon_(epsilon), tol_(abs_tol) {
        if (epsilon < 0.0) throw std::invalid_argument("mollification parameter must be >= 0");
        for (int k2 = 1; k2 <= 3 * k_max * k_max; ++k2)
            values_[k2] = epsilon == 0.0 ? 1.0 : bump_transform(epsilon * std::sqrt(double(k2)), tol_);
    }

    double epsilon() const noexcept { return epsilon_; }
    bool off() const noexcept { return epsilon_ == 0.0; }

    double multiplier(int k2) const {
        auto it = values_.find(k2);
        if (it != values_.end()) return it->second;
        return epsilon_ == 0.0 ? 1.0 : bump_transform(epsilon_ * std::sqrt(double(k2)), tol_);
    }
    double multiplier(const Wavevector& k) const { return multiplier(norm_sq(k)); }

private:
    double epsilon_;
    double tol_;
    std::map<int, double> values_;
};

/// k_eps u.
inline SpectralField apply_mollifier(const MollifierTable& table, const SpectralField& u) {
    SpectralField out = u;
    const auto& m = u.modes();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= table.multiplier(m[i].k2);
    return out;
}

using CVec3 = std::array<cplx, 3>;

/// Index tables for the convolution sums over the cube |k|_inf <= k_max.
class ConvolutionPlan {
public:
    explicit ConvolutionPlan(ModeSetPtr modes) : modes_(std::move(modes)) {
        const int km = modes_->k_max();
        side_ = 2 * km + 1;
        const auto& wv = modes_->wavevectors();
        plus_.reserve(wv.size());
        minus_.reserve(wv.size());
        for (const auto& k : wv) {
            plus_.push_back(box_index(k));
            minus_.push_back(box_index({-k[0], -k[1], -k[2]}));
        }
        const int zero = box_index({0, 0, 0});
        for (std::uint32_t w = 0; w < wv.size(); ++w) {
            const auto& k = wv[w];
            for (int a = -km; a <= km; ++a)
                for (int b = -km; b <= km; ++b)
                    for (int c = -km; c <= km; ++c) {
                        const Wavevector q{k[0] - a, k[1] - b, k[2] - c};
                        if (!in_box(q)) continue;
                        const int ip = box_index({a, b, c});
                        const int iq = box_index(q);
                        if (ip == zero || iq == zero) continue;
                        triads_.push_back({w, std::uint32_t(ip), std::uint32_t(iq),
                                           {double(q[0]), double(q[1]), double(q[2])}});
                    }
        }
    }

    const ModeSet& modes() const { return *modes_; }
    int side() const noexcept { return side_; }
    std::size_t box_size() const noexcept { return std::size_t(side_) * side_ * side_; }

    int box_index(const Wavevector& k) const {
        const int km = modes_->k_max();
        return ((k[0] + km) * side_ + (k[1] + km)) * side_ + (k[2] + km);
    }
    bool in_box(const Wavevector& k) const {
        const int km = modes_->k_max();
        return std::abs(k[0]) <= km && std::abs(k[1]) <= km && std::abs(k[2]) <= km;
    }

    /// Full vector coefficients on the cube: u_hat(k) and u_hat(-k) = conj.
    /// `scale` (optional) multiplies each canonical wavevector's coefficient.
    void expand(const SpectralField& u, std::vector<CVec3>& full,
                const std::vector<double>* scale = nullptr) const {
        full.assign(box_size(), CVec3{});
        const auto& m = *modes_;
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        for (std::size_t w = 0; w < plus_.size(); ++w) {
            const auto& e1 = m[2 * w].e;
            const auto& e2 = m[2 * w + 1].e;
            cplx c1 = u[2 * w] * inv_sqrt2, c2 = u[2 * w + 1] * inv_sqrt2;
            if (scale) {
                c1 *= (*scale)[w];
                c2 *= (*scale)[w];
            }
            CVec3 v{c1 * e1[0] + c2 * e2[0], c1 * e1[1] + c2 * e2[1], c1 * e1[2] + c2 * e2[2]};
            full[plus_[w]] = v;
            full[minus_[w]] = {std::conj(v[0]), std::conj(v[1]), std::conj(v[2])};
        }
    }

    /// Leray-projected convolution sum_{p+q=k} i (a_hat(p) . q) v_hat(q),
    /// returned as field coefficients on the canonical entries.
    SpectralField advect(const std::vector<CVec3>& adv, const std::vector<CVec3>& v) const {
        const std::size_t nw = plus_.size();
        std::vector<CVec3> g(nw, CVec3{});
        for (const auto& t : triads_) {
            const auto& a = adv[t.p];
            const cplx s = a[0] * t.q[0] + a[1] * t.q[1] + a[2] * t.q[2];
            if (s == cplx{0.0, 0.0}) continue;
            const cplx is{-s.imag(), s.real()};
            const auto& vq = v[t.q_index];
            auto& gw = g[t.w];
            gw[0] += is * vq[0];
            gw[1] += is * vq[1];
            gw[2] += is * vq[2];
        }
        SpectralField out(modes_);
        const auto& m = *modes_;
        const double sqrt2 = std::sqrt(2.0);
        for (std::size_t w = 0; w < nw; ++w) {
            for (int p = 0; p < 2; ++p) {
                const auto& e = m[2 * w + p].e;
                out[2 * w + p] = sqrt2 * (g[w][0] * e[0] + g[w][1] * e[1] + g[w][2] * e[2]);
            }
        }
        return out;
    }

    const ModeSetPtr& modes_ptr() const noexcept { return modes_; }

private:
    struct Triad {
        std::uint32_t w;
        std::uint32_t p;
        std::uint32_t q_index;
        Vec3 q;
    };

    ModeSetPtr modes_;
    int side_ = 0;
    std::vector<int> plus_, minus_;
    std::vector<Triad> triads_;
};

using ConvolutionPlanPtr = std::shared_ptr<const ConvolutionPlan>;

inline ConvolutionPlanPtr make_plan(ModeSetPtr modes) {
    return std::make_shared<const ConvolutionPlan>(std::move(modes));
}

/// b(u, v, w) by direct summation over every k in the cube (both halves).
inline double b_form(const ConvolutionPlan& plan, const SpectralField& u, const SpectralField& v,
                     const SpectralField& w) {
    u.check_same(v);
    u.check_same(w);
    std::vector<CVec3> uf, vf, wf;
    plan.expand(u, uf);
    plan.expand(v, vf);
    plan.expand(w, wf);
    const int km = plan.modes().k_max();
    double total = 0.0;
    for (int k0 = -km; k0 <= km; ++k0)
        for (int k1 = -km; k1 <= km; ++k1)
            for (int k2 = -km; k2 <= km; ++k2) {
                const auto& wk = wf[plan.box_index({k0, k1, k2})];
                cplx acc{0.0, 0.0};
                for (int p0 = -km; p0 <= km; ++p0)
                    for (int p1 = -km; p1 <= km; ++p1)
                        for (int p2 = -km; p2 <= km; ++p2) {
                            const Wavevector q{k0 - p0, k1 - p1, k2 - p2};
                            if (!plan.in_box(q)) continue;
                            const auto& up = uf[plan.box_index({p0, p1, p2})];
                            const auto& vq = vf[plan.box_index(q)];
                            const cplx uq = up[0] * double(q[0]) + up[1] * double(q[1]) +
                                            up[2] * double(q[2]);
                            const cplx vw = vq[0] * std::conj(wk[0]) + vq[1] * std::conj(wk[1]) +
                                            vq[2] * std::conj(wk[2]);
                            acc += cplx{0.0, 1.0} * uq * vw;
                        }
                total += acc.real();
            }
    return total;
}

/// b(k_eps u, v, w).
inline double mollified_b_form(const ConvolutionPlan& plan, const MollifierTable& table,
                               const SpectralField& u, const SpectralField& v,
                               const SpectralField& w) {
    return b_form(plan, apply_mollifier(table, u), v, w);
}

inline SpectralField B_apply(const ConvolutionPlan& plan, const SpectralField& u,
                             const SpectralField& v) {
    u.check_same(v);
    std::vector<CVec3> uf, vf;
    plan.expand(u, uf);
    plan.expand(v, vf);
    return plan.advect(uf, vf);
}

/// Multipliers m_eps(k) per canonical wavevector of the plan's mode set.
inline std::vector<double> wavevector_multipliers(const ConvolutionPlan& plan,
                                                  const MollifierTable& table) {
    const auto& wv = plan.modes().wavevectors();
    std::vector<double> out(wv.size());
    for (std::size_t w = 0; w < wv.size(); ++w) out[w] = table.multiplier(wv[w]);
    return out;
}

/// B_{k_eps}(u) = B(k_eps u, u): only the advecting slot is mollified.
inline SpectralField B_mollified_apply(const ConvolutionPlan& plan, const MollifierTable& table,
                                       const SpectralField& u) {
    const auto mult = wavevector_multipliers(plan, table);
    std::vector<CVec3> adv, vf;
    plan.expand(u, adv, &mult);
    plan.expand(u, vf);
    return plan.advect(adv, vf);
}

}  // namespace snsm
