#include "doctest.h"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "stochflow/linalg.hpp"
#include "stochflow/rng.hpp"

using namespace stochflow;

namespace {

template <int N>
Mat<N> eigen_expm(const Mat<N>& a) {
    Eigen::Matrix<double, N, N> m;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) m(i, j) = a(i, j);
    const Eigen::Matrix<double, N, N> e = m.exp();
    Mat<N> r;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) r(i, j) = e(i, j);
    return r;
}

}  // namespace

TEST_CASE("expm matches Eigen on random matrices") {
    PhiloxStream rng({11, 0});
    for (int trial = 0; trial < 200; ++trial) {
        const double scale = trial < 100 ? 0.5 : 6.0;
        Mat3 a;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = scale * rng.normal();
        const Mat3 ours = expm(a), ref = eigen_expm(a);
        CHECK(norm_inf(ours - ref) <= 1e-11 * std::max(1.0, norm_inf(ref)));
    }
}

TEST_CASE("expm of a traceless matrix has unit determinant") {
    PhiloxStream rng({12, 0});
    for (int trial = 0; trial < 100; ++trial) {
        Mat3 a;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
        const double tr = trace(a) / 3.0;
        for (int i = 0; i < 3; ++i) a(i, i) -= tr;
        CHECK(std::abs(det(expm(a)) - 1.0) < 1e-12);
    }
}

TEST_CASE("adjugate is det times inverse") {
    Mat3 a;
    a(0, 0) = 2; a(0, 1) = 1; a(0, 2) = 0.5;
    a(1, 0) = -1; a(1, 1) = 3; a(1, 2) = 0.2;
    a(2, 0) = 0.3; a(2, 1) = 0.1; a(2, 2) = 1.5;
    const Mat3 p = a * adjugate(a);
    CHECK(norm_inf(p - Mat3::identity() * det(a)) < 1e-13);
    Mat2 b;
    b(0, 0) = 1; b(0, 1) = 2; b(1, 0) = 3; b(1, 1) = 4;
    CHECK(norm_inf(b * adjugate(b) - Mat2::identity() * det(b)) < 1e-14);
}

TEST_CASE("cross and perp conventions") {
    const Vec3 ex = Vec3::unit(0), ey = Vec3::unit(1), ez = Vec3::unit(2);
    CHECK(cross(ex, ey) == ez);
    const Vec2 v{{3.0, 4.0}};
    // perp(a) = (a1, −a0): perp of a gradient is ∇⊥.
    CHECK(perp(v)[0] == 4.0);
    CHECK(perp(v)[1] == -3.0);
}
