#pragma once

// Truncated divergence-free Fourier representation on the periodic torus
// [0, 2*pi)^3.
//
// A field is stored as one complex coefficient c per (k, p) entry, where k
// runs over canonical wavevectors (first nonzero component positive,
// |k|_inf <= k_max) and p in {1, 2} picks a unit polarization e^p_k
// orthogonal to k.  The physical field is
//
//     u(x) = sum_{k,p} sqrt(2) Re( c_{k,p} e^{i k.x} ) e^p_k ,
//
// so that the volume-averaged L^2 norm squared equals sum |c|^2.  All inner
// products and the trilinear form use the volume-averaged measure.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace snsm {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
using Wavevector = std::array<int, 3>;

inline int norm_sq(const Wavevector& k) { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }

inline bool is_canonical(const Wavevector& k) {
    for (int c : k) {
        if (c != 0) return c > 0;
    }
    return false;
}

struct ModeEntry {
    Wavevector k;
    int polarization;  // 1 or 2
    Vec3 e;            // unit, orthogonal to k
    int k2;            // |k|^2, the Stokes eigenvalue
};

class ModeSet {
public:
    explicit ModeSet(int k_max) : k_max_(k_max) {
        if (k_max < 1) throw std::invalid_argument("empty basis: k_max must be >= 1");
        std::vector<Wavevector> ks;
        for (int a = -k_max; a <= k_max; ++a)
            for (int b = -k_max; b <= k_max; ++b)
                for (int c = -k_max; c <= k_max; ++c) {
                    Wavevector k{a, b, c};
                    if (is_canonical(k)) ks.push_back(k);
                }
        std::sort(ks.begin(), ks.end(), [](const Wavevector& x, const Wavevector& y) {
            const int nx = norm_sq(x), ny = norm_sq(y);
            if (nx != ny) return nx < ny;
            return x < y;
        });
        wavevectors_ = ks;
        entries_.reserve(2 * ks.size());
        for (const auto& k : ks) {
            const auto [e1, e2] = polarizations(k);
            entries_.push_back({k, 1, e1, norm_sq(k)});
            entries_.push_back({k, 2, e2, norm_sq(k)});
        }
    }

    int k_max() const noexcept { return k_max_; }
    /// Number of (k, p) entries; the Galerkin dimension n ranges over 1..size().
    std::size_t size() const noexcept { return entries_.size(); }
    const ModeEntry& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<ModeEntry>& entries() const noexcept { return entries_; }
    /// Canonical wavevectors; entries 2w and 2w+1 belong to wavevectors()[w].
    const std::vector<Wavevector>& wavevectors() const noexcept { return wavevectors_; }

    bool same_as(const ModeSet& other) const noexcept {
        return this == &other || k_max_ == other.k_max_;
    }

    /// Orthonormal pair spanning the plane orthogonal to k.
    static std::pair<Vec3, Vec3> polarizations(const Wavevector& k) {
        const Vec3 kd{double(k[0]), double(k[1]), double(k[2])};
        const double kn = std::sqrt(double(norm_sq(k)));
        const Vec3 khat{kd[0] / kn, kd[1] / kn, kd[2] / kn};
        Vec3 ref{0.0, 0.0, 1.0};
        if (k[0] == 0 && k[1] == 0) ref = {0.0, 1.0, 0.0};
        Vec3 e1 = cross(khat, ref);
        const double n1 = std::sqrt(dot(e1, e1));
        for (auto& c : e1) c /= n1;
        Vec3 e2 = cross(khat, e1);
        return {e1, e2};
    }

    static Vec3 cross(const Vec3& a, const Vec3& b) {
        return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
    }
    static double dot(const Vec3& a, const Vec3& b) {
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    }

private:
    int k_max_;
    std::vector<Wavevector> wavevectors_;
    std::vector<ModeEntry> entries_;
};

using ModeSetPtr = std::shared_ptr<const ModeSet>;

inline ModeSetPtr build_modes(int k_max) { return std::make_shared<const ModeSet>(k_max); }

class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(ModeSetPtr modes)
        : modes_(std::move(modes)), coeffs_(modes_->size(), cplx{0.0, 0.0}) {}
    SpectralField(ModeSetPtr modes, std::vector<cplx> coeffs)
        : modes_(std::move(modes)), coeffs_(std::move(coeffs)) {
        if (coeffs_.size() != modes_->size())
            throw std::invalid_argument("coefficient count does not match mode set");
    }

    /// Unit (or scaled) coefficient at 1-based ordering index.
    static SpectralField unit_mode(ModeSetPtr modes, std::size_t index, cplx value = 1.0) {
        SpectralField f(std::move(modes));
        if (index < 1 || index > f.size()) throw std::out_of_range("mode index out of range");
        f.coeffs_[index - 1] = value;
        return f;
    }

    const ModeSet& modes() const { return *modes_; }
    const ModeSetPtr& modes_ptr() const noexcept { return modes_; }
    std::size_t size() const noexcept { return coeffs_.size(); }
    cplx& operator[](std::size_t i) { return coeffs_[i]; }
    const cplx& operator[](std::size_t i) const { return coeffs_[i]; }
    std::vector<cplx>& coeffs() noexcept { return coeffs_; }
    const std::vector<cplx>& coeffs() const noexcept { return coeffs_; }

    void check_same(const SpectralField& other) const {
        if (!modes_ || !other.modes_ || !modes_->same_as(*other.modes_))
            throw std::invalid_argument("fields live on mismatched mode sets");
    }

    SpectralField& operator+=(const SpectralField& o) {
        check_same(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        check_same(o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (auto& c : coeffs_) c *= s;
        return *this;
    }
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

    bool all_finite() const {
        return std::all_of(coeffs_.begin(), coeffs_.end(), [](const cplx& c) {
            return std::isfinite(c.real()) && std::isfinite(c.imag());
        });
    }

private:
    ModeSetPtr modes_;
    std::vector<cplx> coeffs_;
};

/// Stokes operator: multiplies entry (k, p) by |k|^2.
inline SpectralField stokes_apply(const SpectralField& u) {
    SpectralField out = u;
    const auto& m = u.modes();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= double(m[i].k2);
    return out;
}

inline double h_inner(const SpectralField& u, const SpectralField& v) {
    u.check_same(v);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] * std::conj(v[i])).real();
    return s;
}

inline double h_norm_sq(const SpectralField& u) {
    double s = 0.0;
    for (const auto& c : u.coeffs()) s += std::norm(c);
    return s;
}

inline double v_norm_sq(const SpectralField& u) {
    const auto& m = u.modes();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += m[i].k2 * std::norm(u[i]);
    return s;
}

/// V' norm squared, sum |c|^2 / |k|^2.
inline double vdual_norm_sq(const SpectralField& u) {
    const auto& m = u.modes();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += std::norm(u[i]) / m[i].k2;
    return s;
}

inline double h_norm(const SpectralField& u) { return std::sqrt(h_norm_sq(u)); }
inline double v_norm(const SpectralField& u) { return std::sqrt(v_norm_sq(u)); }

struct NormsAndInner {
    double h_norm;
    double v_norm;
    double h_inner;
};

inline NormsAndInner norms_and_inner(const SpectralField& u, const SpectralField& v) {
    u.check_same(v);
    return {h_norm(u), v_norm(u), h_inner(u, v)};
}

/// Galerkin projection onto the first n entries of the ordering.
inline SpectralField project(const SpectralField& u, std::size_t n) {
    if (n < 1 || n > u.size())
        throw std::out_of_range("projection level " + std::to_string(n) + " outside [1, " +
                                std::to_string(u.size()) + "]");
    SpectralField out = u;
    for (std::size_t i = n; i < out.size(); ++i) out[i] = 0.0;
    return out;
}

/// Point values on the uniform grid x_j = 2*pi*j/N, laid out with the z index
/// fastest: sample (a, b, c) sits at ((a*N) + b)*N + c.
inline std::vector<Vec3> to_physical(const SpectralField& u, int grid_points) {
    const int km = u.modes().k_max();
    if (grid_points < 2 * km + 1)
        throw std::invalid_argument("aliasing: grid_points must be >= 2*k_max+1");
    const int n = grid_points;
    const double h = 2.0 * std::numbers::pi / n;
    std::vector<Vec3> out(std::size_t(n) * n * n, Vec3{0.0, 0.0, 0.0});
    const auto& m = u.modes();
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] == cplx{0.0, 0.0}) continue;
        const auto& e = m[i];
        const cplx amp = std::sqrt(2.0) * u[i];
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    const double phase = h * (e.k[0] * a + e.k[1] * b + e.k[2] * c);
                    const double s = (amp * cplx{std::cos(phase), std::sin(phase)}).real();
                    auto& out_v = out[(std::size_t(a) * n + b) * n + c];
                    for (int d = 0; d < 3; ++d) out_v[d] += s * e.e[d];
                }
    }
    return out;
}

}  // namespace snsm
