#pragma once

// Explicit a priori bounds for the Galerkin system.
//
//   C_T = E|u0|^2 + (1/nu) int ||f||_{V'}^2 + 2KT(1 + m^2)
//   C1  = C_T (1 + 2KT e^{2KT})                      sup_t E|u|^2 + nu E int ||u||^2
//   C2  = 2 [E|u0|^2 + (1/nu) int ||f||^2 + (50K/nu) C1 + 50KT]
//                                                     E sup |u|^2 + nu E int ||u||^2
//   C3  composite bound for E sup |u|^3 + 2 nu E int |u| ||u||^2, assembled from the constants of each step.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "snsm/integrator.hpp"

namespace snsm {

struct GronwallInputs {
    double nu = 1.0;
    double horizon = 1.0;
    double K = 0.0;
    int states = 1;
    double u0_second = 0.0;            // E|u0|^2
    std::optional<double> u0_third;    // E|u0|^3 (or an upper bound)
    double f_second = 0.0;             // int ||f||_{V'}^2
    std::optional<double> f_third;     // int ||f||_{V'}^3
};

struct GronwallBounds {
    double c_t = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    std::optional<double> c3;
};

/// Bound on sup_t E|u(t)|^3 used inside C3: A e^{11KT} with
/// A = E|u0|^3 + int||f||^3/nu^2 + 6K C1/nu + 4K sqrt(T C1/nu) + KT.
inline double third_moment_growth(const GronwallInputs& in, double c1) {
    const double K = in.K, T = in.horizon, nu = in.nu;
    const double a = *in.u0_third + *in.f_third / (nu * nu) + 6.0 * K * c1 / nu +
                     4.0 * K * std::sqrt(T * c1 / nu) + K * T;
    return a * std::exp(11.0 * K * T);
}

inline GronwallBounds gronwall_bounds(const GronwallInputs& in, bool want_c3 = true) {
    if (!(in.nu > 0.0)) throw std::invalid_argument("viscosity must be positive");
    if (in.K < 0.0) throw std::invalid_argument("growth constant must be >= 0");
    const double K = in.K, T = in.horizon, nu = in.nu, m = in.states;
    GronwallBounds b;
    b.c_t = in.u0_second + in.f_second / nu + 2.0 * K * T * (1.0 + m * m);
    b.c1 = b.c_t * (1.0 + 2.0 * K * T * std::exp(2.0 * K * T));
    b.c2 = 2.0 * (in.u0_second + in.f_second / nu + 50.0 * K / nu * b.c1 + 50.0 * K * T);
    if (want_c3) {
        if (!in.u0_third || !in.f_third) throw std::invalid_argument("third moments are required for C3");
        const double sup3 = third_moment_growth(in, b.c1);  // sup_t E|u(t)|^3
        const double st = std::sqrt(T);
        b.c3 = 2.0 * ((13.0 + 8.0 * st) * K * T * sup3 + 6.0 * K * b.c1 / nu +
                      6.0 * K * std::sqrt(T * b.c1 / nu) + (8.0 * st + 1.0) * K * T + *in.u0_third +
                      *in.f_third / (nu * nu));
    }
    return b;
}

/// Closed-form K for the built-in families: the largest H1 / H3 constant.
inline double closed_form_growth_constant(const Models& models) {
    return std::max({models.diffusion.growth_constant(2), models.diffusion.growth_constant(3),
                     models.jump.growth_constant(1), models.jump.growth_constant(2),
                     models.jump.growth_constant(3)});
}

struct InitialMoments {
    double second = 0.0;  // exact
    double third = 0.0;   // exact for deterministic data, (E|u0|^4)^{3/4} otherwise
    double fourth = 0.0;  // exact
};

/// Moments of the (projected, possibly mollified) initial field u0 = d + g,
/// with d deterministic and g complex Gaussian with E|g_l|^2 = v_l:
///   E|u0|^2 = |d|^2 + sum v,   E|u0|^4 = (E|u0|^2)^2 + sum (2 |d_l|^2 v_l + v_l^2).
inline InitialMoments initial_moments(const Integrator& integ) {
    const auto& cfg = integ.config();
    const auto& spec = cfg.initial;
    const auto& modes = integ.models().modes;
    SpectralField d(modes);
    std::vector<double> v(d.size(), 0.0);
    if (spec.kind == InitialKind::mode) d[spec.mode - 1] = spec.amplitude;
    if (spec.kind == InitialKind::random)
        for (std::size_t l = 0; l < v.size(); ++l) v[l] = spec.amplitude * spec.amplitude * std::pow(double(l + 1), -spec.decay);
    if (spec.perturbation != 0.0) d[spec.perturbation_mode - 1] += spec.perturbation;
    for (std::size_t l = 0; l < v.size(); ++l) {
        double s = l < integ.level() ? 1.0 : 0.0;
        if (spec.mollify) s *= integ.mollifier().multiplier((*modes)[l].k2);
        d[l] *= s;
        v[l] *= s * s;
    }
    InitialMoments r;
    double extra = 0.0;
    r.second = h_norm_sq(d);
    for (std::size_t l = 0; l < v.size(); ++l) {
        r.second += v[l];
        extra += 2.0 * std::norm(d[l]) * v[l] + v[l] * v[l];
    }
    r.fourth = r.second * r.second + extra;
    const double dn = h_norm(d);
    r.third = extra == 0.0 ? dn * dn * dn : std::pow(r.fourth, 0.75);
    return r;
}

inline GronwallInputs gronwall_inputs(const Integrator& integ, double K) {
    const auto& cfg = integ.config();
    const auto mom = initial_moments(integ);
    GronwallInputs in;
    in.nu = cfg.nu;
    in.horizon = cfg.horizon;
    in.K = K;
    in.states = integ.models().states();
    in.u0_second = mom.second;
    in.u0_third = mom.third;
    in.f_second = cfg.forcing.vdual_integral(*integ.models().modes, cfg.horizon, 2);
    in.f_third = cfg.forcing.vdual_integral(*integ.models().modes, cfg.horizon, 3);
    return in;
}

inline GronwallBounds gronwall_bounds(const SimConfig& config, const Models& models, double K) {
    return gronwall_bounds(gronwall_inputs(Integrator(config, models), K));
}

}  // namespace snsm
