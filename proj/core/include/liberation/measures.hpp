#pragma once

// Finite positive measures on [0,1]: atoms plus a gridded density, with the
// quadrature rule attached to the grid.  The canonical grid is Chebyshev-Gauss,
// x_k = (1+cos theta_k)/2, whose weights absorb the (x(1-x))^{-1/2} edge
// behavior that the spectral densities in this problem family carry.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "liberation/errors.hpp"

namespace liberation {

// Masses below this threshold are treated as zero and dropped.
inline constexpr double kAtomDropTol = 1e-12;

struct Atom {
    double location = 0.0;  // in [0,1]
    double mass = 0.0;      // >= 0
};

// Density sampled on strictly increasing nodes in (0,1).  `weights[i]` is the
// quadrature weight of node i, so integral(f) = sum_i weights[i] f(nodes[i]).
struct DensityGrid {
    std::vector<double> nodes;
    std::vector<double> values;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
    bool empty() const { return nodes.empty(); }
    double mass() const;

    void validate() const;  // throws BadParameter on invariant violation
};

// Chebyshev-Gauss nodes on (0,1), increasing, with matching weights.
std::vector<double> chebyshev_nodes(std::size_t n);
std::vector<double> chebyshev_weights(std::size_t n);

// Interior Chebyshev-Lobatto nodes (n-1 points), interleaved with the Gauss
// nodes of any order; weights (pi/n) sqrt(x(1-x)) absorb the same edge factor.
std::vector<double> lobatto_interior_nodes(std::size_t n);
std::vector<double> lobatto_interior_weights(std::size_t n);

// Weight reconstruction for grids whose weights are not known: detects the
// Chebyshev pattern (global or affine sub-interval images) and falls back to
// composite trapezoid.
std::vector<double> reconstruct_weights(std::span<const double> nodes);

struct SpectralMeasure {
    std::vector<Atom> atoms;
    DensityGrid density;

    void validate() const;
    double atom_mass_at(double location, double tol = 1e-9) const;
    // Adds mass to an existing atom at `location` (within tol) or appends.
    void add_atom(double location, double mass, double tol = 1e-9);
};

// Trace data of the two projections and every derived flow parameter.
struct TraceParams {
    double alpha = 0.5;  // trace of p, in (0,1]
    double beta = 0.5;   // trace of q, in (0,1]
    double a = 0.0;      // 2 min{alpha,beta} - 1
    double b = 0.0;      // |alpha - beta|
    double alpha11 = 0.0, alpha10 = 0.0, alpha01 = 0.0, alpha00 = 0.0;

    static TraceParams from_traces(double alpha, double beta);
    double min_trace() const { return alpha < beta ? alpha : beta; }
    bool trace_half() const { return alpha == 0.5 && beta == 0.5; }
};

// total mass = sum of atom masses + quadrature of the density
double total_mass(const SpectralMeasure& m);

// moments[n-1] = integral of x^n dm(x), n = 1..N (atoms included)
std::vector<double> moments(const SpectralMeasure& m, int N);

// Removes the static atom (1 - min{alpha,beta}) delta_0.  Returns the shifted
// measure and the removed mass; throws MassDeficit if the atom at 0 is too
// small (tolerance `tol` on the missing mass).
struct SplitResult {
    SpectralMeasure nu;
    double atom_mass = 0.0;
};
SplitResult split_static_atom(const SpectralMeasure& mu, const TraceParams& p,
                              double tol = 1e-9);

enum class Preset { point, bernoulli, uniform, arcsine, two_bump };
enum class MeasureLevel { mu, nu };  // mass 1, or mass min{alpha,beta}

Preset preset_from_name(const std::string& name);

// Named initial measures, normalized to the mass dictated by `p` and `level`.
// extra: point -> {location}; two_bump -> {a1,b1,a2,b2}; others empty.
SpectralMeasure preset(Preset name, const TraceParams& p,
                       MeasureLevel level = MeasureLevel::nu,
                       std::span<const double> extra = {},
                       std::size_t grid_n = 512);

// JSON round trip:  {"atoms":[{"x":..,"m":..}],
//                    "grid":{"nodes":[..],"values":[..],"weights":[..]}}
// ("weights" is optional on input; reconstructed from the nodes if absent.)
std::string to_json(const SpectralMeasure& m);
SpectralMeasure measure_from_json(const std::string& text);

}  // namespace liberation
