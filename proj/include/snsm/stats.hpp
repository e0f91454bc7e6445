#pragma once

// Small statistics toolbox for the Monte Carlo harness: order-insensitive
// reductions, standard errors, Kolmogorov-Smirnov and chi-square tests, and
// log-log order fits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace snsm::stats {

/// Pairwise (cascade) summation.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};

inline MeanSE mean_se(std::span<const double> x) {
    MeanSE r;
    r.count = x.size();
    if (x.empty()) return r;
    r.mean = pairwise_sum(x) / double(x.size());
    if (x.size() > 1) {
        std::vector<double> dev(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) dev[i] = (x[i] - r.mean) * (x[i] - r.mean);
        r.sd = std::sqrt(pairwise_sum(dev) / double(x.size() - 1));
        r.se = r.sd / std::sqrt(double(x.size()));
    }
    return r;
}

/// Kolmogorov survival function Q(lambda) = P(sqrt(n) D_n > lambda).
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // Theta-function form of the CDF converges fast for small lambda.
        const double c = -std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
        double s = 0.0;
        for (int j = 1; j <= 20; ++j) s += std::exp((2 * j - 1) * (2 * j - 1) * c);
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
    }
    double sum = 0.0, sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * sign * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-17) break;
        sign = -sign;
    }
    return std::clamp(sum, 0.0, 1.0);
}

struct KSResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample KS against a continuous CDF (Stephens' small-sample correction).
inline KSResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
    if (x.empty()) throw std::invalid_argument("KS test needs data");
    std::sort(x.begin(), x.end());
    const double n = double(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

inline KSResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs data");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size()), nb = double(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

inline double chi_square_survival(double x, int dof) {
    if (dof <= 0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

/// Goodness of fit of observed counts to expected probabilities; categories
/// with zero probability must have zero counts and are skipped.
inline ChiSquareResult chi_square_gof(std::span<const long long> observed,
                                      std::span<const double> probability) {
    ChiSquareResult r;
    double total = 0.0;
    for (auto c : observed) total += double(c);
    if (total == 0.0) return r;
    int cats = 0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        if (probability[k] <= 0.0) {
            if (observed[k] != 0) {
                r.statistic = INFINITY;
                r.p_value = 0.0;
                return r;
            }
            continue;
        }
        const double e = total * probability[k];
        r.statistic += (observed[k] - e) * (observed[k] - e) / e;
        ++cats;
    }
    r.dof = cats - 1;
    r.p_value = chi_square_survival(r.statistic, r.dof);
    return r;
}

/// Least-squares slope of log(err) against log(h): the observed order.
inline double order_fit(std::span<const double> h, std::span<const double> err) {
    if (h.size() != err.size() || h.size() < 2) throw std::invalid_argument("order fit needs >= 2 levels");
    double mx = 0.0, my = 0.0;
    const double n = double(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        mx += std::log(h[i]) / n;
        my += std::log(err[i]) / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double dx = std::log(h[i]) - mx;
        sxy += dx * (std::log(err[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace snsm::stats
