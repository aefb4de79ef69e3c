#pragma once

/// @file linalg.hpp
/// @brief Fixed-size vectors and matrices for 2D/3D particle work.

#include <array>
#include <cmath>
#include <cstddef>

namespace stochflow {

template <int N>
struct Vec {
    std::array<double, N> v{};

    constexpr double& operator[](std::size_t i) { return v[i]; }
    constexpr double operator[](std::size_t i) const { return v[i]; }

    static constexpr Vec zero() { return Vec{}; }
    static constexpr Vec unit(int axis) {
        Vec e{};
        e.v[static_cast<std::size_t>(axis)] = 1.0;
        return e;
    }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < N; ++i) v[i] += o.v[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < N; ++i) v[i] -= o.v[i];
        return *this;
    }
    Vec& operator*=(double s) {
        for (int i = 0; i < N; ++i) v[i] *= s;
        return *this;
    }
    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(Vec a, double s) { return a *= s; }
    friend Vec operator*(double s, Vec a) { return a *= s; }
    friend Vec operator-(Vec a) { return a *= -1.0; }
    friend bool operator==(const Vec&, const Vec&) = default;
};

using Vec2 = Vec<2>;
using Vec3 = Vec<3>;

template <int N>
double dot(const Vec<N>& a, const Vec<N>& b) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <int N>
double norm(const Vec<N>& a) { return std::sqrt(dot(a, a)); }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]}};
}

/// (a², −a¹): the quarter turn used for W⊥ and ∇⊥.
inline Vec2 perp(const Vec2& a) { return {{a[1], -a[0]}}; }

/// Row-major square matrix; m(i, j) is row i, column j.
template <int N>
struct Mat {
    std::array<double, N * N> a{};

    constexpr double& operator()(int i, int j) { return a[static_cast<std::size_t>(i * N + j)]; }
    constexpr double operator()(int i, int j) const { return a[static_cast<std::size_t>(i * N + j)]; }

    static constexpr Mat identity() {
        Mat m{};
        for (int i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }
    static constexpr Mat zero() { return Mat{}; }
    static Mat diag(const Vec<N>& d) {
        Mat m{};
        for (int i = 0; i < N; ++i) m(i, i) = d[i];
        return m;
    }

    Mat& operator+=(const Mat& o) {
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += o.a[k];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        for (std::size_t k = 0; k < a.size(); ++k) a[k] -= o.a[k];
        return *this;
    }
    Mat& operator*=(double s) {
        for (auto& x : a) x *= s;
        return *this;
    }
    friend Mat operator+(Mat x, const Mat& y) { return x += y; }
    friend Mat operator-(Mat x, const Mat& y) { return x -= y; }
    friend Mat operator*(Mat x, double s) { return x *= s; }
    friend Mat operator*(double s, Mat x) { return x *= s; }
    friend bool operator==(const Mat&, const Mat&) = default;
};

using Mat2 = Mat<2>;
using Mat3 = Mat<3>;

template <int N>
Mat<N> operator*(const Mat<N>& x, const Mat<N>& y) {
    Mat<N> r{};
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) {
            const double xik = x(i, k);
            for (int j = 0; j < N; ++j) r(i, j) += xik * y(k, j);
        }
    return r;
}

template <int N>
Vec<N> operator*(const Mat<N>& m, const Vec<N>& x) {
    Vec<N> r{};
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) r[i] += m(i, j) * x[j];
    return r;
}

template <int N>
Mat<N> transpose(const Mat<N>& m) {
    Mat<N> t{};
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) t(i, j) = m(j, i);
    return t;
}

template <int N>
double trace(const Mat<N>& m) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += m(i, i);
    return s;
}

inline double det(const Mat2& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

inline double det(const Mat3& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

/// Adjugate (transposed cofactor matrix): adj(M)·M = det(M)·I.
inline Mat2 adjugate(const Mat2& m) {
    Mat2 r;
    r(0, 0) = m(1, 1);
    r(0, 1) = -m(0, 1);
    r(1, 0) = -m(1, 0);
    r(1, 1) = m(0, 0);
    return r;
}

inline Mat3 adjugate(const Mat3& m) {
    Mat3 r;
    r(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    r(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
    r(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
    r(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
    r(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
    r(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
    r(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
    r(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
    r(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return r;
}

/// Max absolute row sum.
template <int N>
double norm_inf(const Mat<N>& m) {
    double best = 0.0;
    for (int i = 0; i < N; ++i) {
        double row = 0.0;
        for (int j = 0; j < N; ++j) row += std::abs(m(i, j));
        if (row > best) best = row;
    }
    return best;
}

/// Matrix exponential by scaling and squaring around a degree-12 Taylor
/// polynomial. Accurate to a few ulps for the step-sized arguments used by
/// the Jacobian integrator; still correct (if slower) for larger ones.
template <int N>
Mat<N> expm(const Mat<N>& m) {
    const double nrm = norm_inf(m);
    int squarings = 0;
    if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
    const Mat<N> x = m * std::ldexp(1.0, -squarings);

    // Horner: I + x(I + x/2(I + x/3(...)))
    Mat<N> r = Mat<N>::identity();
    for (int k = 12; k >= 1; --k) r = Mat<N>::identity() + (x * r) * (1.0 / k);
    for (int s = 0; s < squarings; ++s) r = r * r;
    return r;
}

}  // namespace stochflow
