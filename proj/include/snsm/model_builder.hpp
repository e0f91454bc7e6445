#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "snsm/integrator.hpp"

namespace snsm {

/// Parameters of the built-in noise families and the chain.
struct NoiseParams {
    double q_exponent = 2.0;
    double q_scale = 1.0;
    std::vector<double> regime_amplitude{0.5, 1.0};  // s_i
    double a = 1.0;
    double b = 0.5;
    double jump_rate = 2.0;
    std::vector<double> jump_gain{0.3, 0.6};  // g_i
    double jump_coupling = 0.2;              // c
    std::size_t jump_direction_mode = 1;     // zeta = e_mode
    int states = 2;
    std::vector<double> generator{-1.0, 1.0, 2.0, -2.0};
    int initial_state = 0;
    ChainMethod chain_method = ChainMethod::gillespie;

    bool operator==(const NoiseParams&) const = default;

    /// sigma = 0 and G = 0, chain untouched.
    NoiseParams without_noise() const {
        NoiseParams p = *this;
        for (auto& s : p.regime_amplitude) s = 0.0;
        p.jump_rate = 0.0;
        return p;
    }
    /// Gamma = 0.
    NoiseParams frozen_chain() const {
        NoiseParams p = *this;
        for (auto& g : p.generator) g = 0.0;
        return p;
    }
};

inline Models build_models(int k_max, const NoiseParams& p) {
    Models m;
    m.modes = build_modes(k_max);
    m.plan = make_plan(m.modes);
    const std::size_t n = m.modes->size();
    if (int(p.regime_amplitude.size()) != p.states)
        throw std::invalid_argument("noise.s needs one amplitude per regime state");
    if (int(p.jump_gain.size()) != p.states) throw std::invalid_argument("jump.gain needs one gain per regime state");
    if (p.jump_direction_mode < 1 || p.jump_direction_mode > n)
        throw std::invalid_argument("jump.direction_mode out of range");
    if (p.initial_state < 0 || p.initial_state >= p.states)
        throw std::invalid_argument("chain.initial_state out of range");
    const auto spectrum = CovarianceSpectrum::power_law(n, p.q_exponent, p.q_scale);
    m.diffusion = DiffusionModel::uniform(p.regime_amplitude, p.a, p.b, spectrum);
    m.jump = JumpModel(p.jump_rate, p.jump_gain, SpectralField::unit_mode(m.modes, p.jump_direction_mode),
                       p.jump_coupling);
    m.generator = GeneratorMatrix(p.states, p.generator);
    m.intervals = IntervalTable(m.generator);
    m.initial_state = p.initial_state;
    m.chain_method = p.chain_method;
    return m;
}

}  // namespace snsm
