#pragma once

// One path's worth of driving noise: Wiener increments on a master grid,
// jump times with Gaussian marks, and a chain path.  Event times are
// inserted into the grid exactly; the cell increment is split at an event by
// sampling the Brownian bridge, so every run consuming the realization sees
// the same Brownian path regardless of its step size.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "snsm/noise.hpp"
#include "snsm/regime.hpp"
#include "snsm/rng.hpp"

namespace snsm {

enum class ChainMethod { gillespie, prm };

struct NoiseEvent {
    enum class Kind { chain_switch, jump };
    double t = 0.0;
    Kind kind = Kind::jump;
    int state = 0;     // state entered (switch only)
    double mark = 0.0; // z (jump only)

    bool operator==(const NoiseEvent&) const = default;
};

/// Everything needed to draw a realization.
struct NoiseSource {
    CovarianceSpectrum spectrum;
    double jump_rate = 0.0;
    GeneratorMatrix generator;
    IntervalTable intervals;
    ChainMethod chain_method = ChainMethod::gillespie;
    int initial_state = 0;
};

class NoiseRealization {
public:
    std::uint64_t seed() const noexcept { return seed_; }
    double horizon() const noexcept { return horizon_; }
    double master_dt() const noexcept { return dt_; }
    long master_cells() const noexcept { return cells_; }
    std::size_t modes() const noexcept { return modes_; }

    std::size_t node_count() const noexcept { return times_.size(); }
    double time(std::size_t j) const { return times_[j]; }
    /// Master grid index of node j, or -1 for an interior event node.
    long grid_index(std::size_t j) const { return grid_[j]; }
    /// Events attached to node j, as a half-open range into events().
    std::pair<std::size_t, std::size_t> events_at(std::size_t j) const {
        return {event_begin_[j], event_begin_[j + 1]};
    }
    const std::vector<NoiseEvent>& events() const noexcept { return events_; }
    const ChainPath& chain() const noexcept { return chain_; }

    /// Increment over [time(j), time(j+1)).
    std::span<const cplx> increment(std::size_t j) const {
        return {increments_.data() + j * modes_, modes_};
    }

    /// W(tb) - W(ta) for node times ta <= tb.
    std::vector<cplx> increment_between(double ta, double tb) const {
        auto ia = std::lower_bound(times_.begin(), times_.end(), ta);
        auto ib = std::lower_bound(times_.begin(), times_.end(), tb);
        if (ia == times_.end() || ib == times_.end() || *ia != ta || *ib != tb || ib < ia)
            throw std::invalid_argument("increment_between needs node times in order");
        std::vector<cplx> out(modes_, cplx{0.0, 0.0});
        for (auto j = std::size_t(ia - times_.begin()); j < std::size_t(ib - times_.begin()); ++j) {
            const auto inc = increment(j);
            for (std::size_t l = 0; l < modes_; ++l) out[l] += inc[l];
        }
        return out;
    }

    long jump_count() const {
        return std::count_if(events_.begin(), events_.end(),
                             [](const NoiseEvent& e) { return e.kind == NoiseEvent::Kind::jump; });
    }

    bool operator==(const NoiseRealization&) const = default;

private:
    friend NoiseRealization make_realization(const NoiseSource&, std::uint64_t, double, double);

    std::uint64_t seed_ = 0;
    double horizon_ = 0.0;
    double dt_ = 0.0;
    long cells_ = 0;
    std::size_t modes_ = 0;
    std::vector<double> times_;
    std::vector<long> grid_;
    std::vector<std::size_t> event_begin_;
    std::vector<NoiseEvent> events_;
    std::vector<cplx> increments_;
    ChainPath chain_;
};

/// Number of master cells for (horizon, dt); horizon must be a multiple of dt.
inline long grid_cells(double horizon, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(horizon >= dt)) throw std::invalid_argument("horizon must be >= dt");
    const double r = horizon / dt;
    const long n = std::lround(r);
    if (std::abs(r - double(n)) > 1e-9 * r) throw std::invalid_argument("dt must divide the horizon");
    return n;
}

/// The realization of path `path_seed`; streams are derived per purpose so
/// Wiener, jump and chain noise are independent and individually replayable.
inline NoiseRealization make_realization(const NoiseSource& src, std::uint64_t path_seed,
                                         double horizon, double master_dt) {
    NoiseRealization r;
    r.seed_ = path_seed;
    r.horizon_ = horizon;
    r.dt_ = master_dt;
    r.cells_ = grid_cells(horizon, master_dt);
    r.modes_ = src.spectrum.size();

    RngStream chain_rng(stream_seed(path_seed, Stream::chain));
    r.chain_ = src.chain_method == ChainMethod::prm
                   ? simulate_chain_prm(src.intervals, src.initial_state, horizon, chain_rng)
                   : simulate_chain_gillespie(src.generator, src.initial_state, horizon, chain_rng);

    std::vector<NoiseEvent> events;
    for (const auto& sw : r.chain_.switches)
        events.push_back({sw.t, NoiseEvent::Kind::chain_switch, sw.state, 0.0});
    if (src.jump_rate > 0.0) {
        RngStream jump_rng(stream_seed(path_seed, Stream::jumps));
        double t = 0.0;
        for (;;) {
            t += jump_rng.exponential(src.jump_rate);
            if (t >= horizon) break;
            events.push_back({t, NoiseEvent::Kind::jump, 0, jump_rng.normal()});
        }
    }
    // Switch before jump at equal times.
    std::stable_sort(events.begin(), events.end(), [](const NoiseEvent& a, const NoiseEvent& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.kind == NoiseEvent::Kind::chain_switch && b.kind == NoiseEvent::Kind::jump;
    });
    r.events_ = events;

    RngStream wiener(stream_seed(path_seed, Stream::wiener));
    RngStream bridge(stream_seed(path_seed, Stream::bridge));
    const auto& q = src.spectrum.values();
    const std::size_t M = r.modes_;

    r.times_.push_back(0.0);
    r.grid_.push_back(0);
    r.event_begin_.push_back(0);
    std::size_t next_event = 0;
    // Events at exactly t = 0 cannot occur (exponential waiting times).
    std::vector<cplx> rest(M), piece(M);
    for (long cell = 0; cell < r.cells_; ++cell) {
        const double a = cell * master_dt;
        const double b = cell + 1 == r.cells_ ? horizon : (cell + 1) * master_dt;
        const auto dw = sample_wiener_increment(src.spectrum, b - a, wiener);
        rest.assign(dw.begin(), dw.end());
        double cur = a;
        while (next_event < events.size() && events[next_event].t < b) {
            const double tau = events[next_event].t;
            if (tau > cur) {
                // Brownian bridge from (cur, 0) to (b, rest) evaluated at tau.
                const double frac = (tau - cur) / (b - cur);
                const double vfac = (tau - cur) * (b - tau) / (b - cur);
                for (std::size_t l = 0; l < M; ++l) {
                    const double sd = std::sqrt(0.5 * q[l] * vfac);
                    const double re = bridge.normal();
                    const double im = bridge.normal();
                    piece[l] = frac * rest[l] + cplx{sd * re, sd * im};
                    rest[l] -= piece[l];
                }
                r.increments_.insert(r.increments_.end(), piece.begin(), piece.end());
                r.times_.push_back(tau);
                r.grid_.push_back(-1);
                r.event_begin_.push_back(next_event);
                cur = tau;
            }
            ++next_event;
        }
        r.increments_.insert(r.increments_.end(), rest.begin(), rest.end());
        r.times_.push_back(b);
        r.grid_.push_back(cell + 1);
        r.event_begin_.push_back(next_event);
    }
    r.event_begin_.push_back(events.size());
    return r;
}

}  // namespace snsm
