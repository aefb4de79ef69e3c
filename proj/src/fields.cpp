#include "stochflow/fields.hpp"

#include <cmath>
#include <numbers>

namespace stochflow::catalog {

namespace {

constexpr double kPi = std::numbers::pi;

// Azimuthal profile of a Gaussian core: u = f(q)·(−y, x) with q = r²,
// f(q) = Γ/(2πq)·(1 − e^{−q/a}); a = 0 is the point vortex.
struct CoreProfile {
    double circulation;
    double a;

    double f(double q) const {
        if (a <= 0.0) return circulation / (2.0 * kPi * q);
        const double z = q / a;
        if (z < 1e-4) return circulation / (2.0 * kPi * a) * (1.0 - z / 2.0 + z * z / 6.0);
        return circulation / (2.0 * kPi * q) * (-std::expm1(-z));
    }
    double df(double q) const {
        if (a <= 0.0) return -circulation / (2.0 * kPi * q * q);
        const double z = q / a;
        if (z < 1e-4) return circulation / (2.0 * kPi * a * a) * (-0.5 + z / 3.0 - z * z / 8.0);
        return circulation / (2.0 * kPi) * (std::expm1(-z) / (q * q) + std::exp(-z) / (a * q));
    }
    /// Stream function ψ(q) with ψ' = −f/2, zero at the center of a core:
    /// −Γ/(4π)·(ln z + E₁(z) + γ), z = q/a.
    double stream(const Vec2& d) const {
        const double q = dot(d, d);
        if (a <= 0.0) return -circulation / (4.0 * kPi) * std::log(q);
        const double z = q / a;
        const double g = z < 1e-2 ? z * (1.0 - z / 4.0 + z * z / 18.0 - z * z * z / 96.0)
                                  : std::log(z) - std::expint(-z) + std::numbers::egamma;
        return -circulation / (4.0 * kPi) * g;
    }
    Vec2 velocity(const Vec2& d) const {
        const double q = dot(d, d);
        if (q == 0.0) return {};
        const double fq = f(q);
        return {{-fq * d[1], fq * d[0]}};
    }
    Mat2 gradient(const Vec2& d) const {
        const double q = dot(d, d);
        Mat2 g;
        if (q == 0.0 && a <= 0.0) return g;
        const double fq = f(q);
        const double dfq = df(q);
        const double x = d[0], y = d[1];
        g(0, 0) = -2.0 * x * y * dfq;
        g(0, 1) = -fq - 2.0 * y * y * dfq;
        g(1, 0) = fq + 2.0 * x * x * dfq;
        g(1, 1) = 2.0 * x * y * dfq;
        return g;
    }
};

}  // namespace

VelocityField<2> lamb_oseen_velocity(double circulation, double nu, double t0, Vec2 center) {
    VelocityField<2> u;
    u.name = "lamb_oseen";
    u.value = [=](double t, const Vec2& x) { return CoreProfile{circulation, 4.0 * nu * (t0 + t)}.velocity(x - center); };
    u.gradient = [=](double t, const Vec2& x) { return CoreProfile{circulation, 4.0 * nu * (t0 + t)}.gradient(x - center); };
    u.stream = [=](double t, const Vec2& x) { return CoreProfile{circulation, 4.0 * nu * (t0 + t)}.stream(x - center); };
    return u;
}

VorticityField2 lamb_oseen_vorticity(double circulation, double nu, double t, Vec2 center) {
    const double a = 4.0 * nu * t;
    const double peak = circulation / (kPi * a);
    VorticityField2 w;
    w.name = "lamb_oseen";
    w.value = [=](const Vec2& x) { return peak * std::exp(-dot(x - center, x - center) / a); };
    w.gradient = [=](const Vec2& x) {
        const Vec2 d = x - center;
        return d * (-2.0 / a * peak * std::exp(-dot(d, d) / a));
    };
    w.support = Support<2>{center, 6.0 * std::sqrt(a)};
    return w;
}

double lamb_oseen_speed(double circulation, double nu, double t, double r) {
    return CoreProfile{circulation, 4.0 * nu * t}.f(r * r) * r;
}

double lamb_oseen_peak(double circulation, double nu, double t) { return circulation / (4.0 * kPi * nu * t); }

VelocityField<2> taylor_green_velocity(double nu) {
    VelocityField<2> u;
    u.name = "taylor_green";
    u.value = [nu](double t, const Vec2& x) {
        const double f = std::exp(-2.0 * nu * t);
        return Vec2{{std::cos(x[0]) * std::sin(x[1]) * f, -std::sin(x[0]) * std::cos(x[1]) * f}};
    };
    u.gradient = [nu](double t, const Vec2& x) {
        const double f = std::exp(-2.0 * nu * t);
        const double sx = std::sin(x[0]), cx = std::cos(x[0]), sy = std::sin(x[1]), cy = std::cos(x[1]);
        Mat2 g;
        g(0, 0) = -sx * sy * f;
        g(0, 1) = cx * cy * f;
        g(1, 0) = -cx * cy * f;
        g(1, 1) = sx * sy * f;
        return g;
    };
    u.stream = [nu](double t, const Vec2& x) { return -std::cos(x[0]) * std::cos(x[1]) * std::exp(-2.0 * nu * t); };
    return u;
}

VorticityField2 taylor_green_vorticity(double nu, double t) {
    const double f = -2.0 * std::exp(-2.0 * nu * t);
    VorticityField2 w;
    w.name = "taylor_green";
    w.value = [f](const Vec2& x) { return f * std::cos(x[0]) * std::cos(x[1]); };
    w.gradient = [f](const Vec2& x) {
        return Vec2{{-f * std::sin(x[0]) * std::cos(x[1]), -f * std::cos(x[0]) * std::sin(x[1])}};
    };
    return w;
}

VelocityField<3> abc_flow(double a, double b, double c) {
    VelocityField<3> u;
    u.name = "abc";
    u.value = [=](double, const Vec3& x) {
        return Vec3{{a * std::sin(x[2]) + c * std::cos(x[1]), b * std::sin(x[0]) + a * std::cos(x[2]),
                     c * std::sin(x[1]) + b * std::cos(x[0])}};
    };
    u.gradient = [=](double, const Vec3& x) {
        Mat3 g;
        g(0, 1) = -c * std::sin(x[1]);
        g(0, 2) = a * std::cos(x[2]);
        g(1, 0) = b * std::cos(x[0]);
        g(1, 2) = -a * std::sin(x[2]);
        g(2, 0) = -b * std::sin(x[0]);
        g(2, 1) = c * std::cos(x[1]);
        return g;
    };
    return u;
}

VectorField<3> fourier_mode(const Vec3& k, const Vec3& direction, double phase) {
    VectorField<3> f;
    f.name = "fourier_mode";
    f.value = [=](const Vec3& x) { return direction * std::cos(dot(k, x) + phase); };
    f.gradient = [=](const Vec3& x) {
        const double s = -std::sin(dot(k, x) + phase);
        Mat3 g;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) g(i, j) = direction[i] * k[j] * s;
        return g;
    };
    return f;
}

VorticityField2 blob_vorticity(const std::vector<VortexBlob>& blobs, const Domain<2>& domain) {
    VorticityField2 w;
    w.name = "vortex_blobs";
    w.value = [blobs, domain](const Vec2& x) {
        double s = 0.0;
        for (const auto& b : blobs) {
            if (b.radius <= 0.0) continue;
            const Vec2 d = domain.min_image(x - b.center);
            const double r2 = b.radius * b.radius;
            s += b.circulation / (kPi * r2) * std::exp(-dot(d, d) / r2);
        }
        return s;
    };
    w.gradient = [blobs, domain](const Vec2& x) {
        Vec2 g{};
        for (const auto& b : blobs) {
            if (b.radius <= 0.0) continue;
            const Vec2 d = domain.min_image(x - b.center);
            const double r2 = b.radius * b.radius;
            g += d * (-2.0 / r2 * b.circulation / (kPi * r2) * std::exp(-dot(d, d) / r2));
        }
        return g;
    };
    if (!domain.periodic() && !blobs.empty()) {
        Vec2 c{};
        for (const auto& b : blobs) c += b.center * (1.0 / static_cast<double>(blobs.size()));
        double reach = 0.0;
        for (const auto& b : blobs) reach = std::max(reach, norm(b.center - c) + 6.0 * b.radius);
        w.support = Support<2>{c, reach};
    }
    return w;
}

VelocityField<2> blob_velocity(const std::vector<VortexBlob>& blobs) {
    VelocityField<2> u;
    u.name = "vortex_blobs";
    u.value = [blobs](double, const Vec2& x) {
        Vec2 s{};
        for (const auto& b : blobs) s += CoreProfile{b.circulation, b.radius * b.radius}.velocity(x - b.center);
        return s;
    };
    u.gradient = [blobs](double, const Vec2& x) {
        Mat2 g{};
        for (const auto& b : blobs) g += CoreProfile{b.circulation, b.radius * b.radius}.gradient(x - b.center);
        return g;
    };
    u.stream = [blobs](double, const Vec2& x) {
        double s = 0.0;
        for (const auto& b : blobs) s += CoreProfile{b.circulation, b.radius * b.radius}.stream(x - b.center);
        return s;
    };
    return u;
}

VorticityField3 gaussian_tube_z(double circulation, double core, Vec2 center) {
    const double a = core * core;
    const double peak = circulation / (kPi * a);
    VorticityField3 w;
    w.name = "gaussian_tube_z";
    w.value = [=](const Vec3& x) {
        const double dx = x[0] - center[0], dy = x[1] - center[1];
        return Vec3{{0.0, 0.0, peak * std::exp(-(dx * dx + dy * dy) / a)}};
    };
    w.gradient = [=](const Vec3& x) {
        const double dx = x[0] - center[0], dy = x[1] - center[1];
        const double e = peak * std::exp(-(dx * dx + dy * dy) / a);
        Mat3 g;
        g(2, 0) = -2.0 * dx / a * e;
        g(2, 1) = -2.0 * dy / a * e;
        return g;
    };
    return w;
}

}  // namespace stochflow::catalog
