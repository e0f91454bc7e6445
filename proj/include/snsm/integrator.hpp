#pragma once

// Time stepping for the Galerkin system
//
//   du = [-nu A u - B_eps(u) + f(t)] dt + sigma(t, u, r) dW + int G(t, u-, r-, z) Ntilde(dz, dt)
//
// Semi-implicit in A, explicit in B_eps and the noise, with every chain switch
// and jump time inserted into the grid.  One step of size h reads
//
//   u+ = Pi_n (I + nu h A)^{-1} [ u + h (-B_eps(u) + f(t) - int G nu(dz)) + sigma(t, u, i) dW ].

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "snsm/noise.hpp"
#include "snsm/nonlinearity.hpp"
#include "snsm/realization.hpp"
#include "snsm/regime.hpp"
#include "snsm/rng.hpp"
#include "snsm/spectral.hpp"

namespace snsm {

enum class ForcingKind { zero, constant, sinusoidal };

/// f(t) = amplitude * e_mode (constant) or amplitude * sin(2 pi frequency t) * e_mode.
struct ForcingSpec {
    ForcingKind kind = ForcingKind::zero;
    std::size_t mode = 1;
    double amplitude = 0.0;
    double frequency = 1.0;

    bool operator==(const ForcingSpec&) const = default;

    double profile(double t) const {
        switch (kind) {
            case ForcingKind::zero: return 0.0;
            case ForcingKind::constant: return amplitude;
            case ForcingKind::sinusoidal: return amplitude * std::sin(2.0 * std::numbers::pi * frequency * t);
        }
        return 0.0;
    }

    SpectralField at(const ModeSetPtr& modes, double t) const {
        if (kind == ForcingKind::zero) return SpectralField(modes);
        return SpectralField::unit_mode(modes, mode, profile(t));
    }

    /// int_0^T ||f||_{V'}^p dt.
    double vdual_integral(const ModeSet& modes, double horizon, int p) const {
        if (kind == ForcingKind::zero || amplitude == 0.0) return 0.0;
        const double k = std::sqrt(double(modes[mode - 1].k2));
        const double scale = std::pow(std::abs(amplitude) / k, p);
        if (kind == ForcingKind::constant) return scale * horizon;
        const double w = 2.0 * std::numbers::pi * frequency;
        return scale * integrate_adaptive([&](double t) { return std::pow(std::abs(std::sin(w * t)), p); },
                                          0.0, horizon, 1e-13);
    }
};

enum class InitialKind { zero, mode, random };

/// u0 = d + g, with d = amplitude * e_mode (mode) and g a complex Gaussian
/// field with E|g_l|^2 = amplitude^2 * l^(-decay) (random).  A perturbation
/// delta * e_{perturbation_mode} is added afterwards, and the result is
/// optionally mollified with the run's epsilon.
struct InitialSpec {
    InitialKind kind = InitialKind::mode;
    std::size_t mode = 1;
    double amplitude = 1.0;
    double decay = 2.0;
    double perturbation = 0.0;
    std::size_t perturbation_mode = 1;
    bool mollify = false;

    bool operator==(const InitialSpec&) const = default;
};

struct SimConfig {
    double nu = 1.0;
    double epsilon = 0.2;
    int k_max = 2;
    std::size_t galerkin_n = 0;  // 0 selects the full dimension
    double dt = 1e-3;
    double horizon = 1.0;
    double sample_interval = 0.0;  // 0 samples every step
    bool nonlinear = true;
    ForcingSpec forcing{};
    InitialSpec initial{};
    std::uint64_t seed = 20240601;
    std::size_t paths = 100;

    bool operator==(const SimConfig&) const = default;

    std::size_t level(std::size_t dimension) const { return galerkin_n == 0 ? dimension : galerkin_n; }
    long sample_stride() const {
        if (sample_interval <= 0.0) return 1;
        const double r = sample_interval / dt;
        const long s = std::lround(r);
        if (s < 1 || std::abs(r - double(s)) > 1e-9 * r)
            throw std::invalid_argument("sample_interval must be a multiple of dt");
        return s;
    }

    void validate(std::size_t dimension) const {
        if (!(nu > 0.0)) throw std::invalid_argument("viscosity must be positive");
        if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
        if (k_max < 1) throw std::invalid_argument("empty basis: k_max must be >= 1");
        if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
        if (!(horizon >= dt)) throw std::invalid_argument("horizon must be >= dt");
        grid_cells(horizon, dt);
        sample_stride();
        if (galerkin_n > dimension)
            throw std::invalid_argument("galerkin_n exceeds the mode-set dimension " + std::to_string(dimension));
        if (forcing.kind != ForcingKind::zero && (forcing.mode < 1 || forcing.mode > dimension))
            throw std::invalid_argument("forcing mode out of range");
        if (initial.kind == InitialKind::mode && (initial.mode < 1 || initial.mode > dimension))
            throw std::invalid_argument("initial mode out of range");
        if (initial.perturbation_mode < 1 || initial.perturbation_mode > dimension)
            throw std::invalid_argument("perturbation mode out of range");
    }
};

/// Immutable model bundle shared by every path.
struct Models {
    ModeSetPtr modes;
    ConvolutionPlanPtr plan;
    DiffusionModel diffusion;
    JumpModel jump;
    GeneratorMatrix generator;
    IntervalTable intervals;
    int initial_state = 0;
    ChainMethod chain_method = ChainMethod::gillespie;

    int states() const { return generator.states(); }

    NoiseSource noise_source() const {
        return {diffusion.spectrum(), jump.rate(), generator, intervals, chain_method, initial_state};
    }
};

struct SolverState {
    double t = 0.0;
    SpectralField u;
    int regime = 0;
};

enum class NodeKind { start, step, jump, chain_switch };

inline const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::start: return "start";
        case NodeKind::step: return "step";
        case NodeKind::jump: return "jump";
        case NodeKind::chain_switch: return "switch";
    }
    return "?";
}

/// What an observer sees at every state change.
struct NodeView {
    NodeKind kind;
    const SolverState& before;
    const SolverState& after;
    double dt = 0.0;               // step only
    std::span<const cplx> dw{};    // step only
    double mark = 0.0;             // jump only
};

using NodeObserver = std::function<void(const NodeView&)>;

struct SampleRow {
    double t = 0.0;
    long grid = 0;  // master grid index
    double h_norm_sq = 0.0;
    double v_norm_sq = 0.0;
    double h_norm_cubed = 0.0;
    int regime = 0;
    long n_jumps = 0;
};

struct EventRecord {
    double t = 0.0;
    NodeKind kind = NodeKind::jump;
    int regime_before = 0;
    int regime_after = 0;
    double mark = 0.0;
    double h_norm_before = 0.0;
    double h_norm_after = 0.0;
};

struct TrajectoryNode {
    double t = 0.0;
    int regime = 0;
    NodeKind kind = NodeKind::start;
    std::vector<cplx> coeffs;
};

struct PathRecord {
    int run_id = 0;
    long path_id = 0;
    std::vector<SampleRow> samples;
    std::vector<std::vector<cplx>> sample_states;  // only when requested
    std::vector<TrajectoryNode> trajectory;        // only when requested
    std::vector<EventRecord> events;
    SolverState final_state;

    bool operator==(const PathRecord& o) const {
        auto same_rows = [](const SampleRow& a, const SampleRow& b) {
            return a.t == b.t && a.grid == b.grid && a.h_norm_sq == b.h_norm_sq && a.v_norm_sq == b.v_norm_sq &&
                   a.h_norm_cubed == b.h_norm_cubed && a.regime == b.regime && a.n_jumps == b.n_jumps;
        };
        if (samples.size() != o.samples.size() || events.size() != o.events.size()) return false;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (!same_rows(samples[i], o.samples[i])) return false;
        for (std::size_t i = 0; i < events.size(); ++i) {
            const auto &a = events[i], &b = o.events[i];
            if (a.t != b.t || a.kind != b.kind || a.regime_before != b.regime_before ||
                a.regime_after != b.regime_after || a.mark != b.mark || a.h_norm_after != b.h_norm_after)
                return false;
        }
        return sample_states == o.sample_states && final_state.t == o.final_state.t &&
               final_state.regime == o.final_state.regime && final_state.u.coeffs() == o.final_state.u.coeffs();
    }
};

struct RecordOptions {
    int run_id = 0;
    long path_id = 0;
    bool keep_sample_states = false;
    bool keep_trajectory = false;
    bool keep_events = true;
};

class BlowUpError : public std::runtime_error {
public:
    BlowUpError(double t, long path_id, SolverState state)
        : std::runtime_error(message(t, path_id)), t_(t), path_id_(path_id), state_(std::move(state)) {}
    double time() const noexcept { return t_; }
    long path_id() const noexcept { return path_id_; }
    const SolverState& state() const noexcept { return state_; }

private:
    static std::string message(double t, long path_id) {
        std::ostringstream os;
        os.precision(17);
        os << "blow-up at t=" << t << " (path " << path_id << ")";
        return os.str();
    }
    double t_;
    long path_id_;
    SolverState state_;
};

/// Path seed for ensemble member `index`.
inline std::uint64_t path_seed(std::uint64_t master, std::uint64_t index) { return derive_seed(master, index); }

class Integrator {
public:
    Integrator(const SimConfig& config, const Models& models)
        : config_(config), models_(models), mollifier_(config.epsilon, config.k_max) {
        if (!models_.modes || !models_.plan) throw std::invalid_argument("models are missing the mode set");
        if (models_.modes->k_max() != config.k_max) throw std::invalid_argument("models were built for a different k_max");
        config_.validate(models_.modes->size());
        n_ = config_.level(models_.modes->size());
        multipliers_ = wavevector_multipliers(*models_.plan, mollifier_);
        resolvent_k2_.resize(models_.modes->size());
        for (std::size_t l = 0; l < resolvent_k2_.size(); ++l) resolvent_k2_[l] = (*models_.modes)[l].k2;
    }

    const SimConfig& config() const noexcept { return config_; }
    const Models& models() const noexcept { return models_; }
    const MollifierTable& mollifier() const noexcept { return mollifier_; }
    std::size_t level() const noexcept { return n_; }

    SpectralField project_level(SpectralField u) const {
        for (std::size_t l = n_; l < u.size(); ++l) u[l] = 0.0;
        return u;
    }

    /// B_eps(u), zero when the nonlinearity is switched off.
    SpectralField nonlinear_term(const SpectralField& u) const {
        if (!config_.nonlinear) return SpectralField(models_.modes);
        std::vector<CVec3> adv, full;
        models_.plan->expand(u, adv, &multipliers_);
        models_.plan->expand(u, full);
        return models_.plan->advect(adv, full);
    }

    /// -B_eps(u) + f(t) - int G(t, u, i, z) nu(dz).
    SpectralField drift(double t, const SpectralField& u, int i) const {
        SpectralField d = config_.forcing.at(models_.modes, t);
        if (config_.nonlinear) d -= nonlinear_term(u);
        if (models_.jump.rate() > 0.0) d -= models_.jump.compensator_mean(t, u, i);
        return d;
    }

    SolverState step(const SolverState& s, double dt_eff, std::span<const cplx> dw) const {
        if (!(dt_eff > 0.0)) throw std::invalid_argument("step size must be positive");
        SpectralField rhs = s.u;
        SpectralField d = drift(s.t, s.u, s.regime);
        d *= dt_eff;
        rhs += d;
        if (!dw.empty()) rhs += models_.diffusion.apply(s.t, s.u, s.regime, dw);
        for (std::size_t l = 0; l < rhs.size(); ++l)
            rhs[l] = l < n_ ? rhs[l] / (1.0 + config_.nu * resolvent_k2_[l] * dt_eff) : cplx{0.0, 0.0};
        return {s.t + dt_eff, std::move(rhs), s.regime};
    }

    /// u <- u + Pi_n G(t, u-, i-, z).
    SolverState jump(const SolverState& s, double z) const {
        SpectralField g = project_level(models_.jump.eval(s.t, s.u, s.regime, z));
        SolverState out = s;
        out.u += g;
        return out;
    }

    static SolverState switch_to(const SolverState& s, int new_state) {
        SolverState out = s;
        out.regime = new_state;
        return out;
    }

    SpectralField initial_field(std::uint64_t path_seed) const {
        RngStream rng(stream_seed(path_seed, Stream::initial));
        const auto& spec = config_.initial;
        SpectralField u(models_.modes);
        if (spec.kind == InitialKind::mode) u[spec.mode - 1] = spec.amplitude;
        if (spec.kind == InitialKind::random) {
            for (std::size_t l = 0; l < u.size(); ++l) {
                const double sd = std::abs(spec.amplitude) * std::sqrt(0.5 * std::pow(double(l + 1), -spec.decay));
                const double re = rng.normal();
                const double im = rng.normal();
                u[l] = {sd * re, sd * im};
            }
        }
        if (spec.perturbation != 0.0) u[spec.perturbation_mode - 1] += spec.perturbation;
        if (spec.mollify) u = apply_mollifier(mollifier_, u);
        return project_level(std::move(u));
    }

    PathRecord run(const NoiseRealization& noise, const RecordOptions& opt = {},
                   const NodeObserver& observer = {}) const {
        if (noise.horizon() + 1e-12 < config_.horizon) throw std::invalid_argument("realization horizon is shorter than T");
        if (noise.modes() != models_.modes->size()) throw std::invalid_argument("realization was drawn for another mode set");
        const double ratio = config_.dt / noise.master_dt();
        const long m = std::lround(ratio);
        if (m < 1 || std::abs(ratio - double(m)) > 1e-9 * ratio)
            throw std::invalid_argument("the realization grid must divide dt");
        const long stride = m * config_.sample_stride();
        const long last_cell = grid_cells(config_.horizon, noise.master_dt());

        PathRecord rec;
        rec.run_id = opt.run_id;
        rec.path_id = opt.path_id;
        SolverState state{0.0, initial_field(noise.seed()), noise.chain().initial_state};
        long jumps = 0;
        auto record_sample = [&](long grid) {
            const double h2 = h_norm_sq(state.u);
            rec.samples.push_back({state.t, grid, h2, v_norm_sq(state.u), h2 * std::sqrt(h2), state.regime, jumps});
            if (opt.keep_sample_states) rec.sample_states.push_back(state.u.coeffs());
        };
        auto record_node = [&](NodeKind kind) {
            if (opt.keep_trajectory) rec.trajectory.push_back({state.t, state.regime, kind, state.u.coeffs()});
        };
        auto check = [&](const SolverState& s) {
            if (!s.u.all_finite() || h_norm_sq(s.u) > 1e300) throw BlowUpError(s.t, opt.path_id, s);
        };

        record_sample(0);
        record_node(NodeKind::start);
        if (observer) observer({NodeKind::start, state, state});

        std::vector<cplx> acc(noise.modes(), cplx{0.0, 0.0});
        double t_start = 0.0;
        for (std::size_t j = 0; j + 1 < noise.node_count(); ++j) {
            const auto inc = noise.increment(j);
            for (std::size_t l = 0; l < acc.size(); ++l) acc[l] += inc[l];
            const std::size_t node = j + 1;
            const long grid = noise.grid_index(node);
            const auto [eb, ee] = noise.events_at(node);
            const bool grid_stop = grid >= 0 && grid % m == 0;
            if (!grid_stop && eb == ee) continue;
            if (grid > last_cell) break;

            const double t_end = noise.time(node);
            SolverState next = step(state, t_end - t_start, acc);
            next.t = t_end;
            check(next);
            if (observer) observer({NodeKind::step, state, next, t_end - t_start, acc});
            state = std::move(next);
            record_node(NodeKind::step);
            std::fill(acc.begin(), acc.end(), cplx{0.0, 0.0});
            t_start = t_end;

            for (std::size_t e = eb; e < ee; ++e) {
                const auto& ev = noise.events()[e];
                if (ev.t > config_.horizon) break;
                SolverState after = ev.kind == NoiseEvent::Kind::jump ? jump(state, ev.mark)
                                                                      : switch_to(state, ev.state);
                const NodeKind kind = ev.kind == NoiseEvent::Kind::jump ? NodeKind::jump : NodeKind::chain_switch;
                if (kind == NodeKind::jump) {
                    check(after);
                    ++jumps;
                }
                if (observer) observer({kind, state, after, 0.0, {}, ev.mark});
                if (opt.keep_events)
                    rec.events.push_back({ev.t, kind, state.regime, after.regime, ev.mark, h_norm(state.u), h_norm(after.u)});
                state = std::move(after);
                record_node(kind);
            }
            if (grid >= 0 && grid % stride == 0) record_sample(grid);
            if (grid == last_cell) break;
        }
        rec.final_state = state;
        return rec;
    }

private:
    SimConfig config_;
    Models models_;
    MollifierTable mollifier_;
    std::size_t n_ = 0;
    std::vector<double> multipliers_;
    std::vector<double> resolvent_k2_;
};

/// Free-function forms of the stepper primitives.
inline SolverState step_between_events(const SolverState& s, double dt_eff, std::span<const cplx> dw,
                                       const SimConfig& config, const Models& models) {
    return Integrator(config, models).step(s, dt_eff, dw);
}

inline SolverState apply_jump(const SolverState& s, double z, const JumpModel& jump) {
    SolverState out = s;
    out.u += jump.eval(s.t, s.u, s.regime, z);
    return out;
}

inline SolverState apply_switch(const SolverState& s, int new_state) { return Integrator::switch_to(s, new_state); }

inline NoiseRealization realization_for(const Models& models, std::uint64_t seed, double horizon, double master_dt) {
    return make_realization(models.noise_source(), seed, horizon, master_dt);
}

inline PathRecord integrate_path(const SimConfig& config, const Models& models, const NoiseRealization& noise,
                                 const RecordOptions& opt = {}) {
    return Integrator(config, models).run(noise, opt);
}

struct CoupledRecord {
    PathRecord a;
    PathRecord b;
    std::vector<double> t;             // common sample times
    std::vector<double> w_h_norm_sq;   // |uA - uB|^2 at those times
};

/// Throws unless the configs differ only in u0, epsilon, n, dt or sampling.
inline void check_coupling_whitelist(const SimConfig& a, const SimConfig& b) {
    auto fail = [](const char* key) {
        throw std::invalid_argument(std::string("coupled configs differ outside {u0, epsilon, n, dt}: ") + key);
    };
    if (a.nu != b.nu) fail("nu");
    if (a.k_max != b.k_max) fail("k_max");
    if (a.horizon != b.horizon) fail("T");
    if (a.nonlinear != b.nonlinear) fail("nonlinear");
    if (!(a.forcing == b.forcing)) fail("forcing");
    if (a.seed != b.seed) fail("seed");
}

/// Pathwise difference of two records kept with sample states, on the
/// master-grid indices both of them sampled.
inline void coupled_difference(const PathRecord& a, const PathRecord& b, std::vector<double>& t,
                               std::vector<double>& w2) {
    t.clear();
    w2.clear();
    std::size_t i = 0, j = 0;
    while (i < a.samples.size() && j < b.samples.size()) {
        const long ga = a.samples[i].grid, gb = b.samples[j].grid;
        if (ga < gb) { ++i; continue; }
        if (gb < ga) { ++j; continue; }
        double s = 0.0;
        const auto& ua = a.sample_states[i];
        const auto& ub = b.sample_states[j];
        for (std::size_t l = 0; l < ua.size(); ++l) s += std::norm(ua[l] - ub[l]);
        t.push_back(a.samples[i].t);
        w2.push_back(s);
        ++i;
        ++j;
    }
}

inline CoupledRecord integrate_coupled(const SimConfig& config_a, const SimConfig& config_b, const Models& models,
                                       const NoiseRealization& noise, RecordOptions opt = {}) {
    check_coupling_whitelist(config_a, config_b);
    opt.keep_sample_states = true;
    CoupledRecord out;
    out.a = Integrator(config_a, models).run(noise, opt);
    out.b = Integrator(config_b, models).run(noise, opt);
    coupled_difference(out.a, out.b, out.t, out.w_h_norm_sq);
    return out;
}

/// Trapezoid rule over (t, y) samples.
inline double trapezoid(std::span<const double> t, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

}  // namespace snsm
