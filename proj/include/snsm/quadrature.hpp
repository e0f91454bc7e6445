#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace snsm {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(int n) {
    QuadratureRule r{std::vector<double>(n), std::vector<double>(n)};
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

/// Gauss-Hermite rule for E[f(Z)], Z ~ N(0, 1) (probabilists' weight).
inline QuadratureRule gauss_hermite_normal(int n) {
    // Physicists' nodes for weight exp(-x^2), then rescale.
    QuadratureRule r{std::vector<double>(n), std::vector<double>(n)};
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    double z = 0.0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(double(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * r.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * r.nodes[1];
        else
            z = 2.0 * z - r.nodes[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15) break;
        }
        r.nodes[i] = z;
        r.nodes[n - 1 - i] = -z;
        r.weights[i] = 2.0 / (pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    for (int i = 0; i < n; ++i) {
        r.nodes[i] *= std::sqrt(2.0);
        r.weights[i] /= std::sqrt(std::numbers::pi);
    }
    return r;
}

/// Adaptive Gauss-Legendre: a panel is accepted when its 15-point value and
/// the sum over its two halves agree to the panel's share of abs_tol.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol, int max_depth = 40) {
    static const QuadratureRule rule = gauss_legendre(15);
    auto panel = [&](double lo, double hi) {
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            s += rule.weights[i] * f(mid + half * rule.nodes[i]);
        return s * half;
    };
    struct Recurse {
        static double run(decltype(panel)& p, double lo, double hi, double whole, double tol,
                          int depth) {
            const double mid = 0.5 * (lo + hi);
            const double left = p(lo, mid), right = p(mid, hi);
            if (std::abs(left + right - whole) <= tol) return left + right;
            if (depth == 0) throw std::runtime_error("quadrature did not converge");
            return run(p, lo, mid, left, 0.5 * tol, depth - 1) +
                   run(p, mid, hi, right, 0.5 * tol, depth - 1);
        }
    };
    return Recurse::run(panel, a, b, panel(a, b), abs_tol, max_depth);
}

}  // namespace snsm
