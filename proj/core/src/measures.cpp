#include "liberation/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <json.hpp>

namespace liberation {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_finite(double x) { return std::isfinite(x); }

}  // namespace

double DensityGrid::mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * values[i];
    return s;
}

void DensityGrid::validate() const {
    if (values.size() != nodes.size() || weights.size() != nodes.size())
        throw BadParameter("density grid: nodes/values/weights size mismatch");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!is_finite(nodes[i]) || nodes[i] <= 0.0 || nodes[i] >= 1.0)
            throw BadParameter("density grid: node outside (0,1)");
        if (i > 0 && nodes[i] <= nodes[i - 1])
            throw BadParameter("density grid: nodes not strictly increasing");
        if (!is_finite(values[i]) || values[i] < -1e-12)
            throw BadParameter("density grid: negative density value");
        if (!is_finite(weights[i]) || weights[i] < 0.0)
            throw BadParameter("density grid: invalid quadrature weight");
    }
}

std::vector<double> chebyshev_nodes(std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        // k = n-i gives increasing nodes
        const double theta = (2.0 * static_cast<double>(n - i) - 1.0) * kPi /
                             (2.0 * static_cast<double>(n));
        x[i] = 0.5 * (1.0 + std::cos(theta));
    }
    return x;
}

std::vector<double> chebyshev_weights(std::size_t n) {
    const auto x = chebyshev_nodes(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = kPi / static_cast<double>(n) * std::sqrt(x[i] * (1.0 - x[i]));
    return w;
}

std::vector<double> lobatto_interior_nodes(std::size_t n) {
    std::vector<double> x(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        const double theta = static_cast<double>(n - i) * kPi / static_cast<double>(n);
        x[i - 1] = 0.5 * (1.0 + std::cos(theta));
    }
    return x;
}

std::vector<double> lobatto_interior_weights(std::size_t n) {
    const auto x = lobatto_interior_nodes(n);
    std::vector<double> w(n - 1);
    for (std::size_t i = 0; i < n - 1; ++i)
        w[i] = kPi / static_cast<double>(n) * std::sqrt(x[i] * (1.0 - x[i]));
    return w;
}

namespace {

// Tries to interpret nodes[i..i+m) as the affine image of the m-point
// Chebyshev pattern on some [a,b]; on success writes the mapped weights.
bool match_chebyshev_block(std::span<const double> nodes, std::size_t i,
                           std::size_t m, std::vector<double>& w) {
    const auto c = chebyshev_nodes(m);
    const double c0 = c.front(), c1 = c.back();
    if (m < 4 || c1 == c0) return false;
    const double scale = (nodes[i + m - 1] - nodes[i]) / (c1 - c0);
    const double a = nodes[i] - scale * c0;
    if (scale <= 0.0) return false;
    for (std::size_t j = 0; j < m; ++j) {
        if (std::abs(nodes[i + j] - (a + scale * c[j])) > 1e-12) return false;
    }
    for (std::size_t j = 0; j < m; ++j)
        w[i + j] = scale * kPi / static_cast<double>(m) *
                   std::sqrt(c[j] * (1.0 - c[j]));
    return true;
}

std::vector<double> trapezoid_weights(std::span<const double> nodes) {
    const std::size_t n = nodes.size();
    std::vector<double> w(n, 0.0);
    if (n < 2) return w;
    w[0] = 0.5 * (nodes[1] - nodes[0]);
    for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (nodes[i + 1] - nodes[i - 1]);
    w[n - 1] = 0.5 * (nodes[n - 1] - nodes[n - 2]);
    return w;
}

}  // namespace

std::vector<double> reconstruct_weights(std::span<const double> nodes) {
    const std::size_t n = nodes.size();
    std::vector<double> w(n, 0.0);
    // greedy cover by (affine) Chebyshev blocks, longest first
    std::size_t i = 0;
    while (i < n) {
        bool matched = false;
        for (std::size_t m = n - i; m >= 4; --m) {
            if (match_chebyshev_block(nodes, i, m, w)) {
                i += m;
                matched = true;
                break;
            }
        }
        if (!matched) return trapezoid_weights(nodes);
    }
    return w;
}

void SpectralMeasure::validate() const {
    for (const auto& a : atoms) {
        if (!is_finite(a.location) || a.location < 0.0 || a.location > 1.0)
            throw BadParameter("atom location outside [0,1]");
        if (!is_finite(a.mass) || a.mass < 0.0) throw BadParameter("negative atom mass");
    }
    density.validate();
    if (!is_finite(total_mass(*this))) throw BadParameter("non-finite total mass");
}

double SpectralMeasure::atom_mass_at(double location, double tol) const {
    double s = 0.0;
    for (const auto& a : atoms)
        if (std::abs(a.location - location) <= tol) s += a.mass;
    return s;
}

void SpectralMeasure::add_atom(double location, double mass, double tol) {
    if (mass < kAtomDropTol) return;
    for (auto& a : atoms) {
        if (std::abs(a.location - location) <= tol) {
            a.mass += mass;
            return;
        }
    }
    atoms.push_back({location, mass});
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& u, const Atom& v) { return u.location < v.location; });
}

TraceParams TraceParams::from_traces(double alpha, double beta) {
    if (!(alpha > 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta <= 1.0))
        throw BadParameter("traces must lie in (0,1]");
    TraceParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.a = 2.0 * std::min(alpha, beta) - 1.0;
    p.b = std::abs(alpha - beta);
    p.alpha11 = std::max(alpha + beta - 1.0, 0.0);
    p.alpha00 = std::max(1.0 - alpha - beta, 0.0);
    p.alpha10 = std::max(alpha - beta, 0.0);
    p.alpha01 = std::max(beta - alpha, 0.0);
    return p;
}

double total_mass(const SpectralMeasure& m) {
    double s = m.density.mass();
    for (const auto& a : m.atoms) s += a.mass;
    return s;
}

std::vector<double> moments(const SpectralMeasure& m, int N) {
    if (N < 1) throw BadParameter("moment order must be >= 1");
    std::vector<double> g(static_cast<std::size_t>(N), 0.0);
    for (const auto& a : m.atoms) {
        double p = 1.0;
        for (int n = 0; n < N; ++n) {
            p *= a.location;
            g[static_cast<std::size_t>(n)] += a.mass * p;
        }
    }
    const auto& d = m.density;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double wv = d.weights[i] * d.values[i];
        double p = 1.0;
        for (int n = 0; n < N; ++n) {
            p *= d.nodes[i];
            g[static_cast<std::size_t>(n)] += wv * p;
        }
    }
    return g;
}

SplitResult split_static_atom(const SpectralMeasure& mu, const TraceParams& p,
                              double tol) {
    const double required = 1.0 - p.min_trace();
    SplitResult out;
    out.atom_mass = required;
    out.nu = mu;
    if (required <= kAtomDropTol) return out;

    double have = 0.0;
    for (const auto& a : out.nu.atoms)
        if (std::abs(a.location) <= 1e-9) have += a.mass;
    if (have < required - tol)
        throw MassDeficit("atom at 0 has mass " + std::to_string(have) +
                          ", need " + std::to_string(required));

    double to_remove = required;
    std::vector<Atom> kept;
    for (auto a : out.nu.atoms) {
        if (std::abs(a.location) <= 1e-9 && to_remove > 0.0) {
            const double take = std::min(a.mass, to_remove);
            a.mass -= take;
            to_remove -= take;
        }
        if (a.mass >= kAtomDropTol) kept.push_back(a);
    }
    out.nu.atoms = std::move(kept);
    return out;
}

Preset preset_from_name(const std::string& name) {
    if (name == "point") return Preset::point;
    if (name == "bernoulli") return Preset::bernoulli;
    if (name == "uniform") return Preset::uniform;
    if (name == "arcsine") return Preset::arcsine;
    if (name == "two_bump") return Preset::two_bump;
    throw BadParameter("unknown preset '" + name + "'");
}

namespace {

// Chebyshev block mapped to [a,b] carrying constant density of mass `mass`,
// rescaled so its quadrature mass is exact.
void append_uniform_block(DensityGrid& g, double a, double b, double mass,
                          std::size_t n) {
    const auto c = chebyshev_nodes(n);
    const auto w01 = chebyshev_weights(n);
    double wsum = std::accumulate(w01.begin(), w01.end(), 0.0);
    const double value = mass / ((b - a) * wsum);
    for (std::size_t i = 0; i < n; ++i) {
        g.nodes.push_back(a + (b - a) * c[i]);
        g.values.push_back(value);
        g.weights.push_back((b - a) * w01[i]);
    }
}

}  // namespace

SpectralMeasure preset(Preset name, const TraceParams& p, MeasureLevel level,
                       std::span<const double> extra, std::size_t grid_n) {
    if (grid_n < 4) throw BadParameter("preset grid too small");
    const double m = p.min_trace();
    SpectralMeasure out;
    switch (name) {
        case Preset::point: {
            if (extra.size() != 1) throw BadParameter("point preset needs {location}");
            const double x0 = extra[0];
            if (!(x0 >= 0.0 && x0 <= 1.0)) throw BadParameter("point location outside [0,1]");
            out.add_atom(x0, m);
            break;
        }
        case Preset::bernoulli: {
            if (!extra.empty()) throw BadParameter("bernoulli preset takes no extras");
            out.add_atom(1.0, m);
            break;
        }
        case Preset::uniform: {
            if (!extra.empty()) throw BadParameter("uniform preset takes no extras");
            const auto x = chebyshev_nodes(grid_n);
            const auto w = chebyshev_weights(grid_n);
            const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
            out.density.nodes = x;
            out.density.weights = w;
            out.density.values.assign(grid_n, m / wsum);
            break;
        }
        case Preset::arcsine: {
            if (!extra.empty()) throw BadParameter("arcsine preset takes no extras");
            const auto x = chebyshev_nodes(grid_n);
            const auto w = chebyshev_weights(grid_n);
            out.density.nodes = x;
            out.density.weights = w;
            out.density.values.resize(grid_n);
            // m / (pi sqrt(x(1-x))): quadrature mass is exact by construction
            for (std::size_t i = 0; i < grid_n; ++i)
                out.density.values[i] = m / (kPi * std::sqrt(x[i] * (1.0 - x[i])));
            break;
        }
        case Preset::two_bump: {
            if (extra.size() != 4) throw BadParameter("two_bump preset needs {a1,b1,a2,b2}");
            const double a1 = extra[0], b1 = extra[1], a2 = extra[2], b2 = extra[3];
            if (!(0.0 < a1 && a1 < b1 && b1 <= a2 && a2 < b2 && b2 < 1.0))
                throw BadParameter("two_bump intervals must satisfy 0<a1<b1<=a2<b2<1");
            const std::size_t half = grid_n / 2;
            append_uniform_block(out.density, a1, b1, 0.5 * m, half);
            append_uniform_block(out.density, a2, b2, 0.5 * m, grid_n - half);
            break;
        }
    }
    if (level == MeasureLevel::mu) out.add_atom(0.0, 1.0 - m);
    out.validate();
    return out;
}

std::string to_json(const SpectralMeasure& m) {
    nlohmann::json j;
    j["atoms"] = nlohmann::json::array();
    for (const auto& a : m.atoms) j["atoms"].push_back({{"x", a.location}, {"m", a.mass}});
    j["grid"] = {{"nodes", m.density.nodes},
                 {"values", m.density.values},
                 {"weights", m.density.weights}};
    return j.dump();
}

SpectralMeasure measure_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid measure JSON: ") + e.what(),
                         static_cast<std::size_t>(e.byte));
    }
    SpectralMeasure m;
    if (j.contains("atoms"))
        for (const auto& a : j["atoms"])
            m.atoms.push_back({a.at("x").get<double>(), a.at("m").get<double>()});
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        m.density.nodes = g.at("nodes").get<std::vector<double>>();
        m.density.values = g.at("values").get<std::vector<double>>();
        if (g.contains("weights"))
            m.density.weights = g.at("weights").get<std::vector<double>>();
        else
            m.density.weights = reconstruct_weights(m.density.nodes);
    }
    m.validate();
    return m;
}

}  // namespace liberation
