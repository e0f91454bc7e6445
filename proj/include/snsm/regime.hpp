#pragma once

// Finite-state continuous-time Markov chain r(t) with generator Gamma.
//
// States are 0-based inside the library (0..m-1) and printed 1-based.  Two
// simulators are provided: Gillespie (holding time + jump chain) and the
// Poisson-random-measure representation, where a unit-rate Poisson point
// process on [0, T] x [0, Lambda) drives the chain through h(i, y).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "snsm/rng.hpp"

namespace snsm {

class GeneratorMatrix {
public:
    GeneratorMatrix() = default;

    /// Full row-major matrix; the diagonal must balance each row.
    GeneratorMatrix(int m, std::vector<double> gamma) : m_(m), gamma_(std::move(gamma)) {
        if (m < 1) throw std::invalid_argument("generator needs at least one state");
        if (gamma_.size() != std::size_t(m) * m)
            throw std::invalid_argument("generator must be an m x m matrix");
        for (int i = 0; i < m; ++i) {
            double off = 0.0, scale = 0.0;
            for (int j = 0; j < m; ++j) {
                const double g = (*this)(i, j);
                scale = std::max(scale, std::abs(g));
                if (i == j) continue;
                if (g < 0.0)
                    throw std::invalid_argument("negative off-diagonal generator entry gamma_" +
                                                std::to_string(i + 1) + std::to_string(j + 1));
                off += g;
            }
            if (std::abs((*this)(i, i) + off) > 1e-12 * std::max(1.0, scale))
                throw std::invalid_argument("generator row " + std::to_string(i + 1) +
                                            " does not sum to zero");
            gamma_[std::size_t(i) * m + i] = -off;
        }
    }

    /// Off-diagonal rates only; the diagonal is filled as minus the row sum.
    static GeneratorMatrix from_rates(int m, std::vector<double> gamma) {
        if (gamma.size() != std::size_t(m) * m)
            throw std::invalid_argument("generator must be an m x m matrix");
        for (int i = 0; i < m; ++i) {
            double off = 0.0;
            for (int j = 0; j < m; ++j)
                if (j != i) off += gamma[std::size_t(i) * m + j];
            gamma[std::size_t(i) * m + i] = -off;
        }
        return GeneratorMatrix(m, std::move(gamma));
    }

    int states() const noexcept { return m_; }
    double operator()(int i, int j) const { return gamma_[std::size_t(i) * m_ + j]; }
    double exit_rate(int i) const { return -(*this)(i, i); }
    const std::vector<double>& data() const noexcept { return gamma_; }

    /// Solves pi Gamma = 0, sum pi = 1 by Gaussian elimination.
    std::vector<double> stationary() const {
        const int m = m_;
        std::vector<double> a(std::size_t(m) * (m + 1), 0.0);
        // Equations: Gamma^T pi = 0 with the last row replaced by sum pi = 1.
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) a[r * (m + 1) + c] = (r == m - 1) ? 1.0 : (*this)(c, r);
            a[r * (m + 1) + m] = (r == m - 1) ? 1.0 : 0.0;
        }
        for (int col = 0; col < m; ++col) {
            int piv = col;
            for (int r = col + 1; r < m; ++r)
                if (std::abs(a[r * (m + 1) + col]) > std::abs(a[piv * (m + 1) + col])) piv = r;
            if (std::abs(a[piv * (m + 1) + col]) < 1e-300)
                throw std::runtime_error("generator has no unique stationary distribution");
            for (int c = 0; c <= m; ++c) std::swap(a[col * (m + 1) + c], a[piv * (m + 1) + c]);
            for (int r = 0; r < m; ++r) {
                if (r == col) continue;
                const double f = a[r * (m + 1) + col] / a[col * (m + 1) + col];
                for (int c = col; c <= m; ++c) a[r * (m + 1) + c] -= f * a[col * (m + 1) + c];
            }
        }
        std::vector<double> pi(m);
        for (int r = 0; r < m; ++r) pi[r] = a[r * (m + 1) + m] / a[r * (m + 1) + r];
        return pi;
    }

private:
    int m_ = 1;
    std::vector<double> gamma_{0.0};
};

/// Half-open intervals Delta_ij laid out consecutively in row-major order
/// (Delta_12, Delta_13, ..., Delta_21, ...).  Zero-length intervals are
/// omitted.
class IntervalTable {
public:
    struct Interval {
        int from;
        int to;
        double lo;
        double hi;
    };

    IntervalTable() = default;

    explicit IntervalTable(const GeneratorMatrix& g) : m_(g.states()) {
        row_begin_.assign(m_ + 1, 0);
        double cursor = 0.0;
        for (int i = 0; i < m_; ++i) {
            row_begin_[i] = intervals_.size();
            for (int j = 0; j < m_; ++j) {
                if (j == i) continue;
                const double len = g(i, j);
                if (len < 0.0) throw std::invalid_argument("negative off-diagonal generator entry");
                if (len == 0.0) continue;
                intervals_.push_back({i, j, cursor, cursor + len});
                cursor += len;
            }
        }
        row_begin_[m_] = intervals_.size();
        total_ = cursor;
    }

    double total_length() const noexcept { return total_; }
    const std::vector<Interval>& intervals() const noexcept { return intervals_; }
    bool empty() const noexcept { return intervals_.empty(); }

    /// j - i when y lies in Delta_ij for the current state i, otherwise 0.
    int h_eval(int i, double y) const {
        if (i < 0 || i >= m_) return 0;
        for (std::size_t k = row_begin_[i]; k < row_begin_[i + 1]; ++k) {
            const auto& iv = intervals_[k];
            if (y >= iv.lo && y < iv.hi) return iv.to - iv.from;
        }
        return 0;
    }

private:
    int m_ = 0;
    double total_ = 0.0;
    std::vector<Interval> intervals_;
    std::vector<std::size_t> row_begin_;
};

inline IntervalTable build_interval_table(const GeneratorMatrix& g) { return IntervalTable(g); }

/// Right-continuous step path.
struct ChainPath {
    struct Switch {
        double t;
        int state;  // state entered at t
        bool operator==(const Switch&) const = default;
    };

    int initial_state = 0;
    double horizon = 0.0;
    std::vector<Switch> switches;

    bool operator==(const ChainPath&) const = default;

    int state_at(double t) const {
        int s = initial_state;
        for (const auto& sw : switches) {
            if (sw.t > t) break;
            s = sw.state;
        }
        return s;
    }

    /// r(t-).
    int state_before(double t) const {
        int s = initial_state;
        for (const auto& sw : switches) {
            if (sw.t >= t) break;
            s = sw.state;
        }
        return s;
    }

    /// Fraction of [0, horizon) spent in `state`.
    double occupation(int state) const {
        double t = 0.0, occ = 0.0;
        int s = initial_state;
        for (const auto& sw : switches) {
            if (s == state) occ += sw.t - t;
            t = sw.t;
            s = sw.state;
        }
        if (s == state) occ += horizon - t;
        return occ / horizon;
    }
};

inline ChainPath simulate_chain_gillespie(const GeneratorMatrix& g, int r0, double horizon,
                                          RngStream& rng) {
    if (horizon <= 0.0) throw std::invalid_argument("horizon must be positive");
    ChainPath path{r0, horizon, {}};
    double t = 0.0;
    int i = r0;
    for (;;) {
        const double rate = g.exit_rate(i);
        if (rate <= 0.0) break;
        t += rng.exponential(rate);
        if (t >= horizon) break;
        double pick = rng.uniform() * rate;
        int next = -1;
        for (int j = 0; j < g.states(); ++j) {
            if (j == i) continue;
            const double gij = g(i, j);
            if (gij <= 0.0) continue;
            next = j;
            if (pick < gij) break;
            pick -= gij;
        }
        i = next;
        path.switches.push_back({t, i});
    }
    return path;
}

inline ChainPath simulate_chain_prm(const IntervalTable& table, int r0, double horizon,
                                    RngStream& rng) {
    if (horizon <= 0.0) throw std::invalid_argument("horizon must be positive");
    ChainPath path{r0, horizon, {}};
    const double lambda = table.total_length();
    if (lambda <= 0.0) return path;
    double t = 0.0;
    int i = r0;
    for (;;) {
        t += rng.exponential(lambda);
        if (t >= horizon) break;
        const double y = rng.uniform() * lambda;
        const int d = table.h_eval(i, y);
        if (d == 0) continue;
        i += d;
        path.switches.push_back({t, i});
    }
    return path;
}

struct GeneratorEstimate {
    int states = 0;
    std::vector<double> rate;            // m x m, off-diagonal estimates, diagonal balanced
    std::vector<double> standard_error;  // m x m
    std::vector<long long> transitions;  // m x m counts
    std::vector<double> occupation;      // total time per state
    std::vector<bool> has_data;          // per state

    double operator()(int i, int j) const { return rate[std::size_t(i) * states + j]; }
    double se(int i, int j) const { return standard_error[std::size_t(i) * states + j]; }
};

/// Rate MLE gamma_ij = N_ij / occupation_i with Poisson standard errors.
inline GeneratorEstimate empirical_generator(const std::vector<ChainPath>& paths, int m) {
    if (paths.size() < 100)
        throw std::invalid_argument("empirical generator needs at least 100 paths");
    GeneratorEstimate e;
    e.states = m;
    e.rate.assign(std::size_t(m) * m, 0.0);
    e.standard_error.assign(std::size_t(m) * m, 0.0);
    e.transitions.assign(std::size_t(m) * m, 0);
    e.occupation.assign(m, 0.0);
    e.has_data.assign(m, false);
    for (const auto& p : paths) {
        int s = p.initial_state;
        double t = 0.0;
        for (const auto& sw : p.switches) {
            e.occupation[s] += sw.t - t;
            e.transitions[std::size_t(s) * m + sw.state] += 1;
            s = sw.state;
            t = sw.t;
        }
        e.occupation[s] += p.horizon - t;
    }
    for (int i = 0; i < m; ++i) {
        e.has_data[i] = e.occupation[i] > 0.0;
        if (!e.has_data[i]) continue;
        double diag = 0.0;
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            const double n = double(e.transitions[std::size_t(i) * m + j]);
            e.rate[std::size_t(i) * m + j] = n / e.occupation[i];
            e.standard_error[std::size_t(i) * m + j] = std::sqrt(n) / e.occupation[i];
            diag -= n / e.occupation[i];
        }
        e.rate[std::size_t(i) * m + i] = diag;
    }
    return e;
}

/// Duration of the first sojourn in `state` for paths that start there;
/// sojourns still running at the horizon are dropped.
inline std::vector<double> first_holding_times(const std::vector<ChainPath>& paths, int state) {
    std::vector<double> out;
    for (const auto& p : paths) {
        if (p.initial_state != state) continue;
        if (!p.switches.empty()) out.push_back(p.switches.front().t);
    }
    return out;
}

/// Counts of one-step transitions i -> j over all paths (m x m).
inline std::vector<long long> transition_counts(const std::vector<ChainPath>& paths, int m) {
    std::vector<long long> c(std::size_t(m) * m, 0);
    for (const auto& p : paths) {
        int s = p.initial_state;
        for (const auto& sw : p.switches) {
            c[std::size_t(s) * m + sw.state] += 1;
            s = sw.state;
        }
    }
    return c;
}

}  // namespace snsm
