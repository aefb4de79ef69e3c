#pragma once

// Explicit finite-difference solver of the induction equation
//   ∂B = curl(u × B) + ν△B
// on the 2π-periodic cube: 4th-order central differences, classical RK4.
// Used as an independent oracle for the path-integral dynamo.

#include <array>
#include <functional>
#include <vector>

namespace oracle {

class FdInduction {
public:
    using V3 = std::array<double, 3>;

    using M3 = std::array<V3, 3>;  // rows: (i, j) = ∂u^i/∂x^j

    FdInduction(int n, double nu, std::function<V3(const V3&)> velocity, std::function<V3(const V3&)> b0);
    /// Advective form −(u·∇)B + (∇u)B + ν△B with the exact velocity gradient;
    /// needed when u itself is not periodic (e.g. a constant strain).
    FdInduction(int n, double nu, std::function<V3(const V3&)> velocity, std::function<M3(const V3&)> grad,
                std::function<V3(const V3&)> b0);

    /// Advances to time t with steps no larger than max_dt.
    void advance_to(double t, double max_dt);

    double time() const { return time_; }
    int size() const { return n_; }
    double spacing() const { return h_; }
    V3 at(int i, int j, int k) const;
    /// Mean of |B|² over every node.
    double mean_energy() const;

private:
    std::size_t idx(int i, int j, int k) const;
    void rhs(const std::vector<double>& b, std::vector<double>& out) const;

    int n_;
    double h_, nu_, time_ = 0.0;
    std::vector<double> u_;  // 3 components per node
    std::vector<double> gu_; // 9 per node, advective form only
    std::vector<double> b_;
};

}  // namespace oracle
