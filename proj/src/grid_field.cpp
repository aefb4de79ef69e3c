#include "stochflow/grid_field.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <memory>

#include "json.hpp"

namespace stochflow {

namespace {

std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error("grid file: cannot parse value '" + std::string(s) + "'");
    return v;
}

constexpr std::string_view kMagic = "stochflow-grid";

}  // namespace

template <int N>
void GridField<N>::write(std::ostream& os) const {
    nlohmann::ordered_json h;
    h["format"] = kMagic;
    h["version"] = 1;
    h["domain"] = kind_ == DomainKind::Torus ? "torus" : "free-space";
    h["dimension"] = N;
    std::vector<std::size_t> shape(shape_.begin(), shape_.end());
    h["shape"] = shape;
    h["order"] = "cubic";
    h["components"] = components_;
    std::vector<std::string> origin, spacing, period;
    for (int a = 0; a < N; ++a) {
        origin.push_back(shortest(origin_[a]));
        spacing.push_back(shortest(spacing_[a]));
        period.push_back(shortest(spacing_[a] * static_cast<double>(shape_[a])));
    }
    h["origin"] = origin;
    h["spacing"] = spacing;
    if (kind_ == DomainKind::Torus) h["period"] = period;
    os << "# " << h.dump() << '\n';
    for (std::size_t n = 0; n < node_count(); ++n) {
        for (int c = 0; c < components_; ++c) {
            if (c) os << ',';
            os << shortest(at(n, c));
        }
        os << '\n';
    }
}

template <int N>
GridField<N> GridField<N>::read(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw Error("grid file: missing header line");
    const auto h = nlohmann::json::parse(line.substr(2));
    if (h.at("format") != kMagic) throw Error("grid file: unknown format");
    if (h.at("dimension").get<int>() != N) throw DimensionError("grid file: dimension mismatch");
    if (h.at("order") != "cubic") throw Error("grid file: unsupported interpolation order");
    GridField g;
    g.kind_ = h.at("domain") == "torus" ? DomainKind::Torus : DomainKind::FreeSpace;
    g.components_ = h.at("components").get<int>();
    if (g.components_ < 1 || g.components_ > 8) throw Error("grid file: bad component count");
    const auto shape = h.at("shape").get<std::vector<std::size_t>>();
    const auto origin = h.at("origin").get<std::vector<std::string>>();
    const auto spacing = h.at("spacing").get<std::vector<std::string>>();
    for (int a = 0; a < N; ++a) {
        g.shape_[a] = shape.at(a);
        g.origin_[a] = parse_double(origin.at(a));
        g.spacing_[a] = parse_double(spacing.at(a));
    }
    g.values_.resize(g.node_count() * static_cast<std::size_t>(g.components_));
    std::size_t k = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            if (k >= g.values_.size()) throw Error("grid file: too many values");
            g.values_[k++] = parse_double(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
    }
    if (k != g.values_.size()) throw Error("grid file: expected " + std::to_string(g.values_.size()) + " values");
    return g;
}

template class GridField<2>;
template class GridField<3>;

namespace {

template <int N>
VelocityField<N> velocity_adapter(const GridField<N>& grid) {
    auto g = std::make_shared<const GridField<N>>(grid);
    VelocityField<N> u;
    u.name = "grid";
    u.value = [g](double, const Vec<N>& x) {
        Vec<N> v;
        g->interpolate(x, std::span<double>(v.v.data(), N), {});
        return v;
    };
    u.gradient = [g](double, const Vec<N>& x) {
        Vec<N> v;
        std::array<Vec<N>, N> gr;
        g->interpolate(x, std::span<double>(v.v.data(), N), gr);
        Mat<N> m;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) m(i, j) = gr[i][j];
        return m;
    };
    return u;
}

template <int N>
VelocityField<N> velocity_between_impl(const GridField<N>& a, double t0, const GridField<N>& b, double t1) {
    auto ua = velocity_adapter(a);
    auto ub = velocity_adapter(b);
    const double span = t1 - t0;
    VelocityField<N> u;
    u.name = "grid_interp_time";
    u.value = [=](double t, const Vec<N>& x) {
        const double w = span > 0.0 ? std::clamp((t - t0) / span, 0.0, 1.0) : 0.0;
        return (1.0 - w) * ua.value(t, x) + w * ub.value(t, x);
    };
    u.gradient = [=](double t, const Vec<N>& x) {
        const double w = span > 0.0 ? std::clamp((t - t0) / span, 0.0, 1.0) : 0.0;
        return (1.0 - w) * ua.gradient(t, x) + w * ub.gradient(t, x);
    };
    return u;
}

}  // namespace

VelocityField<2> velocity_from_grid(const GridField<2>& g) {
    if (g.components() != 2) throw DimensionError("velocity grid needs 2 components");
    auto u = velocity_adapter(g);
    return u;
}

VelocityField<3> velocity_from_grid(const GridField<3>& g) {
    if (g.components() != 3) throw DimensionError("velocity grid needs 3 components");
    return velocity_adapter(g);
}

VelocityField<2> velocity_between(const GridField<2>& a, double t0, const GridField<2>& b, double t1) {
    return velocity_between_impl(a, t0, b, t1);
}

VelocityField<3> velocity_between(const GridField<3>& a, double t0, const GridField<3>& b, double t1) {
    return velocity_between_impl(a, t0, b, t1);
}

ScalarField<2> scalar_from_grid(const GridField<2>& grid) {
    auto g = std::make_shared<const GridField<2>>(grid);
    ScalarField<2> f;
    f.name = "grid";
    f.value = [g](const Vec2& x) { return g->value(x, 0); };
    f.gradient = [g](const Vec2& x) {
        double v;
        Vec2 gr;
        g->interpolate(x, std::span<double>(&v, 1), std::span<Vec2>(&gr, 1));
        return gr;
    };
    if (grid.kind() == DomainKind::FreeSpace) {
        const Vec2 lo = grid.origin(), hi = grid.node(grid.node_count() - 1);
        f.support = Support<2>{(lo + hi) * 0.5, 0.5 * norm(hi - lo)};
    }
    return f;
}

VectorField<3> vector_from_grid(const GridField<3>& grid) {
    if (grid.components() != 3) throw DimensionError("vector grid needs 3 components");
    auto g = std::make_shared<const GridField<3>>(grid);
    VectorField<3> f;
    f.name = "grid";
    f.value = [g](const Vec3& x) {
        Vec3 v;
        g->interpolate(x, std::span<double>(v.v.data(), 3), {});
        return v;
    };
    f.gradient = [g](const Vec3& x) {
        Vec3 v;
        std::array<Vec3, 3> gr;
        g->interpolate(x, std::span<double>(v.v.data(), 3), gr);
        Mat3 m;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = gr[i][j];
        return m;
    };
    return f;
}

}  // namespace stochflow
