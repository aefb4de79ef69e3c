#pragma once

#include <algorithm>
#include <cmath>

#include "stochflow/linalg.hpp"

namespace stochflow {

enum class DomainKind { FreeSpace, Torus };

/// Flat computational domain: all of R^N, or the torus [0, L₁)×…×[0, L_N).
template <int N>
struct Domain {
    DomainKind kind = DomainKind::FreeSpace;
    Vec<N> period{};

    static Domain free_space() { return {}; }
    static Domain torus(double length) {
        Domain d;
        d.kind = DomainKind::Torus;
        for (int i = 0; i < N; ++i) d.period[i] = length;
        return d;
    }

    bool periodic() const { return kind == DomainKind::Torus; }

    /// Reduce coordinates to [0, L). Identity in free space.
    Vec<N> wrap(Vec<N> x) const {
        if (!periodic()) return x;
        for (int i = 0; i < N; ++i) {
            x[i] -= period[i] * std::floor(x[i] / period[i]);
            if (x[i] >= period[i]) x[i] = 0.0;  // -tiny wraps to L
        }
        return x;
    }

    /// Shortest representative of a displacement.
    Vec<N> min_image(Vec<N> d) const {
        if (!periodic()) return d;
        for (int i = 0; i < N; ++i) d[i] -= period[i] * std::round(d[i] / period[i]);
        return d;
    }

    /// Diameter-like length used to scale quadrature defaults.
    double scale() const {
        if (!periodic()) return 1.0;
        double m = 0.0;
        for (int i = 0; i < N; ++i) m = std::max(m, period[i]);
        return m;
    }
};

}  // namespace stochflow
