#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "snsm/rng.hpp"
#include "snsm/spectral.hpp"

using namespace snsm;

namespace {

SpectralField random_field(const ModeSetPtr& m, RngStream& rng) {
    SpectralField f(m);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double re = rng.normal();
        const double im = rng.normal();
        f[i] = {re, im};
    }
    return f;
}

std::size_t index_of(const ModeSet& m, Wavevector k, int p) {
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i].k == k && m[i].polarization == p) return i + 1;
    return 0;
}

}  // namespace

TEST(ModeSet, KMaxOneHasThirteenWavevectors) {
    // Independent count: nonzero points of {-1,0,1}^3 halved.
    int nonzero = 0;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c) nonzero += (a || b || c);
    const ModeSet m(1);
    EXPECT_EQ(m.wavevectors().size(), std::size_t(nonzero / 2));
    EXPECT_EQ(m.size(), 26u);
}

TEST(ModeSet, EmptyBasisRejected) {
    EXPECT_THROW(ModeSet(0), std::invalid_argument);
    try {
        ModeSet bad(0);
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("empty basis"), std::string::npos);
    }
}

TEST(ModeSet, PolarizationsOfAxisVectorSpanTransversePlane) {
    const auto [e1, e2] = ModeSet::polarizations({1, 0, 0});
    EXPECT_NEAR(e1[0], 0.0, 1e-15);
    EXPECT_NEAR(e2[0], 0.0, 1e-15);
    EXPECT_NEAR(std::abs(e1[1] * e2[2] - e1[2] * e2[1]), 1.0, 1e-15);
}

TEST(ModeSet, CanonicalOrthonormalAndOrdered) {
    for (int km = 1; km <= 3; ++km) {
        const ModeSet m(km);
        std::set<Wavevector> seen;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto& e = m[i];
            EXPECT_TRUE(is_canonical(e.k));
            EXPECT_FALSE(seen.count({-e.k[0], -e.k[1], -e.k[2]}));
            seen.insert(e.k);
            const Vec3 kd{double(e.k[0]), double(e.k[1]), double(e.k[2])};
            EXPECT_NEAR(ModeSet::dot(e.e, e.e), 1.0, 1e-14);
            EXPECT_NEAR(ModeSet::dot(e.e, kd), 0.0, 1e-14);
            if (e.polarization == 2) {
                EXPECT_NEAR(ModeSet::dot(e.e, m[i - 1].e), 0.0, 1e-14);
            }
            if (i > 0) {
                const auto& p = m[i - 1];
                const bool ordered = p.k2 < e.k2 || (p.k2 == e.k2 && (p.k < e.k || (p.k == e.k && p.polarization < e.polarization)));
                EXPECT_TRUE(ordered);
            }
        }
        EXPECT_EQ(m.size(), std::size_t(((2 * km + 1) * (2 * km + 1) * (2 * km + 1) - 1)));
    }
}

TEST(Stokes, EigenvaluesAndZero) {
    const auto m = build_modes(2);
    const auto i100 = index_of(*m, {1, 0, 0}, 1);
    const auto i110 = index_of(*m, {1, 1, 0}, 1);
    auto u = SpectralField::unit_mode(m, i100);
    EXPECT_EQ(stokes_apply(u)[i100 - 1], cplx(1.0));
    auto w = SpectralField::unit_mode(m, i110);
    EXPECT_EQ(stokes_apply(w)[i110 - 1], cplx(2.0));
    const auto z = stokes_apply(SpectralField(m));
    EXPECT_EQ(h_norm_sq(z), 0.0);
}

TEST(Stokes, PairingEqualsVNormSquared) {
    const auto m = build_modes(3);
    RngStream rng(7);
    for (int r = 0; r < 20; ++r) {
        const auto u = random_field(m, rng);
        const double lhs = h_inner(stokes_apply(u), u);
        EXPECT_NEAR(lhs, v_norm_sq(u), 1e-12 * v_norm_sq(u));
    }
}

TEST(Norms, SingleModesAndMismatch) {
    const auto m = build_modes(2);
    const auto u = SpectralField::unit_mode(m, index_of(*m, {1, 0, 0}, 1));
    const auto r = norms_and_inner(u, u);
    EXPECT_DOUBLE_EQ(r.h_norm, 1.0);
    EXPECT_DOUBLE_EQ(r.v_norm, 1.0);
    EXPECT_DOUBLE_EQ(r.h_inner, 1.0);
    const auto w = SpectralField::unit_mode(m, index_of(*m, {2, 0, 0}, 2), 0.3);
    EXPECT_DOUBLE_EQ(v_norm(w), 2.0 * h_norm(w));
    const SpectralField other(build_modes(1));
    EXPECT_THROW(norms_and_inner(u, other), std::invalid_argument);
}

TEST(Norms, VNormByDirectSummationAndSymmetry) {
    const auto m = build_modes(2);
    RngStream rng(11);
    for (int r = 0; r < 20; ++r) {
        const auto u = random_field(m, rng);
        const auto v = random_field(m, rng);
        double direct = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const auto& k = m->entries()[i].k;
            direct += (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * (u[i].real() * u[i].real() + u[i].imag() * u[i].imag());
        }
        EXPECT_NEAR(v_norm_sq(u), direct, 1e-12 * direct);
        EXPECT_NEAR(h_inner(u, v), h_inner(v, u), 1e-12);
        EXPECT_NEAR(h_inner(u, u), h_norm_sq(u), 1e-12 * h_norm_sq(u));
    }
}

TEST(Project, IdentityIdempotenceContraction) {
    const auto m = build_modes(2);
    RngStream rng(3);
    for (int r = 0; r < 100; ++r) {
        const auto u = random_field(m, rng);
        const std::size_t n = 1 + std::size_t(rng.uniform() * double(m->size()));
        const auto p = project(u, n);
        EXPECT_EQ(project(p, n).coeffs(), p.coeffs());
        EXPECT_LE(h_norm(p), h_norm(u));
        EXPECT_LE(v_norm(p), v_norm(u));
    }
    const auto u = random_field(m, rng);
    EXPECT_EQ(project(u, m->size()).coeffs(), u.coeffs());
    EXPECT_THROW(project(u, 0), std::out_of_range);
    EXPECT_THROW(project(u, m->size() + 1), std::out_of_range);
}

TEST(ToPhysical, ZeroAliasingAndPlaneWave) {
    const auto m = build_modes(2);
    EXPECT_THROW(to_physical(SpectralField(m), 4), std::invalid_argument);
    for (const auto& v : to_physical(SpectralField(m), 5)) EXPECT_EQ(v, (Vec3{0.0, 0.0, 0.0}));

    const auto idx = index_of(*m, {1, 2, 0}, 2);
    const cplx c{0.3, -0.7};
    const auto u = SpectralField::unit_mode(m, idx, c);
    const int n = 6;
    const auto samples = to_physical(u, n);
    const auto& e = (*m)[idx - 1].e;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int cc = 0; cc < n; ++cc) {
                const double h = 2.0 * std::numbers::pi / n;
                const double ph = h * (1 * a + 2 * b);
                const double amp = std::sqrt(2.0) * (c.real() * std::cos(ph) - c.imag() * std::sin(ph));
                const auto& s = samples[(std::size_t(a) * n + b) * n + cc];
                for (int d = 0; d < 3; ++d) EXPECT_NEAR(s[d], amp * e[d], 1e-12);
            }
}

TEST(ToPhysical, ParsevalAndInnerProductByQuadrature) {
    const auto m = build_modes(2);
    RngStream rng(5);
    const auto u = random_field(m, rng);
    const auto v = random_field(m, rng);
    const int n = 9;  // exact for degree-4 trigonometric products
    const auto pu = to_physical(u, n);
    const auto pv = to_physical(v, n);
    double uu = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < pu.size(); ++i) {
        uu += ModeSet::dot(pu[i], pu[i]);
        uv += ModeSet::dot(pu[i], pv[i]);
    }
    uu /= double(pu.size());
    uv /= double(pu.size());
    EXPECT_NEAR(uu, h_norm_sq(u), 1e-10 * h_norm_sq(u));
    EXPECT_NEAR(uv, h_inner(u, v), 1e-10 * h_norm_sq(u));
}

TEST(ToPhysical, DivergenceFreeBySpectralDerivative) {
    // Divergence of each sampled plane wave vanishes since e is orthogonal to k;
    // check through a centred difference on a fine grid (second-order accurate).
    const auto m = build_modes(1);
    RngStream rng(9);
    const auto u = random_field(m, rng);
    const int n = 64;
    const auto p = to_physical(u, n);
    const double h = 2.0 * std::numbers::pi / n;
    double worst = 0.0, scale = 0.0;
    auto at = [&](int a, int b, int c) { return p[(std::size_t((a + n) % n) * n + (b + n) % n) * n + (c + n) % n]; };
    for (int a = 0; a < n; a += 7)
        for (int b = 0; b < n; b += 5)
            for (int c = 0; c < n; c += 3) {
                const double div = (at(a + 1, b, c)[0] - at(a - 1, b, c)[0] + at(a, b + 1, c)[1] - at(a, b - 1, c)[1] +
                                    at(a, b, c + 1)[2] - at(a, b, c - 1)[2]) / (2.0 * h);
                worst = std::max(worst, std::abs(div));
                scale = std::max(scale, std::sqrt(ModeSet::dot(at(a, b, c), at(a, b, c))));
            }
    EXPECT_LT(worst, 1e-2 * scale);
}

TEST(Linearity, PhysicalMapIsLinear) {
    const auto m = build_modes(1);
    RngStream rng(13);
    const auto u = random_field(m, rng);
    const auto v = random_field(m, rng);
    const auto pu = to_physical(u, 4), pv = to_physical(v, 4), ps = to_physical(u + 2.0 * v, 4);
    for (std::size_t i = 0; i < ps.size(); ++i)
        for (int d = 0; d < 3; ++d) EXPECT_NEAR(ps[i][d], pu[i][d] + 2.0 * pv[i][d], 1e-12);
}
