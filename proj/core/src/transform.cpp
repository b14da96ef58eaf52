#include "liberation/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "liberation/format.hpp"

namespace liberation {

namespace {
constexpr double kPi = std::numbers::pi;
}

void EpsilonSchedule::validate() const {
    if (levels.empty()) throw BadParameter("epsilon schedule: no levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0)) throw BadParameter("epsilon schedule: level <= 0");
        if (i > 0 && !(levels[i] < levels[i - 1]))
            throw BadParameter("epsilon schedule: levels must strictly decrease");
    }
    if (order < 0) throw BadParameter("epsilon schedule: negative order");
}

Complex sqrt_z_zm1(Complex z) { return std::sqrt(z) * std::sqrt(z - 1.0); }

namespace {

// Exact transform of the piecewise-linear density through nodes
// (xs[i0..i1], vs[i0..i1]) extended constantly over the boundary half-cells
// [a, xs[i0]] and [xs[i1], b].  For z on the upper edge of the support this
// is the analytic continuation from above (PV plus i pi rho).
Complex cauchy_linear_window(std::span<const double> xs, std::span<const double> vs,
                             std::size_t i0, std::size_t i1, double a, double b,
                             Complex z) {
    auto segment = [&](double x0, double x1, double v0, double v1) {
        const double len = x1 - x0;
        if (len <= 0.0) return Complex(0.0, 0.0);
        const double slope = (v1 - v0) / len;
        const Complex lg = std::log((z - x0) / (z - x1));
        return (v0 + slope * (z - x0)) * lg - slope * len;
    };
    Complex s = segment(a, xs[i0], vs[i0], vs[i0]);
    for (std::size_t i = i0; i < i1; ++i)
        s += segment(xs[i], xs[i + 1], vs[i], vs[i + 1]);
    s += segment(xs[i1], b, vs[i1], vs[i1]);
    return s;
}

}  // namespace

Complex cauchy(const SpectralMeasure& m, Complex z, double pole_tol) {
    if (std::abs(z.imag()) <= pole_tol) {
        for (const auto& a : m.atoms)
            if (std::abs(z.real() - a.location) <= pole_tol && a.mass > 0.0)
                throw PoleAtZ("Cauchy transform evaluated at an atom");
    }
    Complex s = 0.0;
    for (const auto& a : m.atoms) s += a.mass / (z - a.location);
    const auto& d = m.density;
    const std::size_t n = d.size();
    if (n == 0) return s;

    // Near the grid the node-pole sum ripples once |Im z| drops under the
    // local spacing; a window around Re z then switches to the exact
    // piecewise-linear transform.  Far evaluations keep the pole sum, so
    // contour integrals reproduce the quadrature masses exactly.
    std::size_t lo = n, hi = n;
    if (n >= 8) {
        const double x = z.real();
        const auto it = std::lower_bound(d.nodes.begin(), d.nodes.end(), x);
        std::size_t k = static_cast<std::size_t>(it - d.nodes.begin());
        if (k == n) k = n - 1;
        if (k > 0 && x - d.nodes[k - 1] < d.nodes[k] - x) --k;
        // in-block spacing: the smaller neighbor gap ignores support gaps
        const double gap_next = (k + 1 < n) ? d.nodes[k + 1] - d.nodes[k] : 1.0;
        const double gap_prev = (k > 0) ? d.nodes[k] - d.nodes[k - 1] : 1.0;
        const double h = std::min(gap_prev, gap_next);
        if (std::abs(z.imag()) < 4.0 * h && std::abs(x - d.nodes[k]) <= 2.0 * h) {
            const double half_width = 16.0 * h;
            lo = k;
            while (lo > 0 && x - d.nodes[lo - 1] <= half_width &&
                   d.nodes[lo] - d.nodes[lo - 1] <= 6.0 * h)
                --lo;
            hi = k;
            while (hi + 1 < n && d.nodes[hi + 1] - x <= half_width &&
                   d.nodes[hi + 1] - d.nodes[hi] <= 6.0 * h)
                ++hi;
        }
    }
    if (lo == n) {
        for (std::size_t i = 0; i < n; ++i)
            s += d.weights[i] * d.values[i] / (z - d.nodes[i]);
        return s;
    }
    for (std::size_t i = 0; i < lo; ++i)
        s += d.weights[i] * d.values[i] / (z - d.nodes[i]);
    for (std::size_t i = hi + 1; i < n; ++i)
        s += d.weights[i] * d.values[i] / (z - d.nodes[i]);
    const double a = (lo == 0) ? d.nodes[0] - 0.5 * (d.nodes[1] - d.nodes[0])
                               : 0.5 * (d.nodes[lo - 1] + d.nodes[lo]);
    const double b = (hi + 1 == n)
                         ? d.nodes[n - 1] + 0.5 * (d.nodes[n - 1] - d.nodes[n - 2])
                         : 0.5 * (d.nodes[hi] + d.nodes[hi + 1]);
    Complex zz = z;
    if (z.imag() == 0.0) zz = Complex(z.real(), +0.0);  // upper-edge branch
    s += cauchy_linear_window(d.nodes, d.values, lo, hi, std::max(a, 0.0),
                              std::min(b, 1.0), zz);
    return s;
}

Complex shifted_G_series(const MomentVector& g, const TraceParams& p, Complex z,
                         double margin) {
    const double az = std::abs(z);
    if (!(az > 1.0 + margin))
        throw DomainError("shifted_G_series: |z| must exceed 1 + margin");
    const Complex invz = 1.0 / z;
    Complex s = p.min_trace() * invz;
    Complex pw = invz;
    for (double gn : g.g) {
        pw *= invz;
        s += gn * pw;
    }
    return s;
}

namespace {

// Neville evaluation at 0 of the polynomial through (xs[i], ys[i]).
double neville_at_zero(std::vector<double> xs, std::vector<double> ys) {
    const std::size_t n = xs.size();
    for (std::size_t k = 1; k < n; ++k)
        for (std::size_t i = 0; i + k < n; ++i)
            ys[i] = (xs[i + k] * ys[i] - xs[i] * ys[i + 1]) / (xs[i + k] - xs[i]);
    return ys[0];
}

}  // namespace

double stieltjes_density(const std::function<Complex(Complex)>& Geval, double x,
                         const EpsilonSchedule& sched, double neg_tol) {
    sched.validate();
    const std::size_t npts =
        std::min(sched.levels.size(), static_cast<std::size_t>(sched.order) + 1);
    std::vector<double> xs, ys;
    // use the smallest scheduled epsilons
    for (std::size_t i = sched.levels.size() - npts; i < sched.levels.size(); ++i) {
        const double eps = sched.levels[i];
        xs.push_back(eps);
        ys.push_back(-std::imag(Geval(Complex(x, eps))) / kPi);
    }
    const double val = neville_at_zero(std::move(xs), std::move(ys));
    if (val < -neg_tol)
        throw NegativeDensity("extrapolated density " + fmt17(val) + " at x = " + fmt17(x));
    return val;
}

double hilbert(const DensityGrid& rho, double x) {
    if (!(x > 0.0 && x < 1.0)) throw BadParameter("hilbert: x must lie in (0,1)");
    rho.validate();
    const auto& xs = rho.nodes;
    const auto& vs = rho.values;
    const auto& ws = rho.weights;
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;

    // density value at x by linear interpolation; zero outside the grid and
    // across gaps much wider than the local spacing (disjoint support blocks)
    double rx = 0.0;
    std::size_t skip = n;  // index to skip when x coincides with a node
    if (x >= xs.front() && x <= xs.back()) {
        const auto it = std::lower_bound(xs.begin(), xs.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - xs.begin());
        if (j < n && std::abs(xs[j] - x) <= 1e-14) {
            rx = vs[j];
            skip = j;
        } else if (j > 0 && j < n) {
            const double gap = xs[j] - xs[j - 1];
            double local = gap;
            if (j >= 2) local = std::min(local, xs[j - 1] - xs[j - 2]);
            if (j + 1 < n) local = std::min(local, xs[j + 1] - xs[j]);
            if (gap <= 6.0 * local) {
                const double w = (x - xs[j - 1]) / gap;
                rx = (1.0 - w) * vs[j - 1] + w * vs[j];
            }
        }
    }

    // the support block containing x (split at gaps well above the spacing)
    std::size_t iA = 0, iB = n - 1;
    {
        const auto it = std::lower_bound(xs.begin(), xs.end(), x);
        std::size_t k = static_cast<std::size_t>(it - xs.begin());
        if (k == n) k = n - 1;
        auto local = [&](std::size_t i) {
            double h = 1.0;
            if (i > 0) h = std::min(h, xs[i] - xs[i - 1]);
            if (i + 1 < n) h = std::min(h, xs[i + 1] - xs[i]);
            return h;
        };
        iA = k;
        while (iA > 0 && xs[iA] - xs[iA - 1] <= 6.0 * local(iA)) --iA;
        iB = k;
        while (iB + 1 < n && xs[iB + 1] - xs[iB] <= 6.0 * local(iB)) ++iB;
    }
    const bool full_support = xs[iA] < 0.02 && xs[iB] > 0.98;

    double sum = 0.0;
    if (full_support) {
        // Subtract a + b / sqrt(y(1-y)) matched at x and at a reference node.
        // Both terms have closed-form principal values over (0,1) -- the
        // arcsine kernel's vanishes -- and the model is exact for flat and
        // for arcsine-type densities, so the remainder loses both the pole
        // at y = x and the edge singularities.
        auto kern = [](double y) { return 1.0 / std::sqrt(y * (1.0 - y)); };
        const double kx = kern(x);
        std::size_t ref = n / 2;
        if (std::abs(kern(xs[ref]) - kx) < 1e-6) ref = n / 3;
        double a = rx, b = 0.0;
        if (std::abs(kern(xs[ref]) - kx) >= 1e-6) {
            b = (rx - vs[ref]) / (kx - kern(xs[ref]));
            a = rx - b * kx;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == skip) continue;
            sum += ws[i] * (vs[i] - a - b * kern(xs[i])) / (x - xs[i]);
        }
        sum += a * std::log(x / (1.0 - x));
    } else {
        // block-local constant model with its exact principal value
        const double A = (iA == 0 || xs[iA] - xs[iA - 1] > 6.0 * (xs[iA + 1] - xs[iA]))
                             ? std::max(0.0, xs[iA] - 0.5 * (xs[iA + 1] - xs[iA]))
                             : 0.0;
        const double B = std::min(1.0, xs[iB] + 0.5 * (xs[iB] - xs[iB - 1]));
        for (std::size_t i = 0; i < n; ++i) {
            if (i == skip) continue;
            const double model = (i >= iA && i <= iB) ? rx : 0.0;
            sum += ws[i] * (vs[i] - model) / (x - xs[i]);
        }
        if (rx != 0.0 && x > A && x < B) sum += rx * std::log((x - A) / (B - x));
    }
    return sum / kPi;
}

JacobiSupport jacobi_support(double alpha, double beta) {
    const double s0 = alpha + beta - 2.0 * alpha * beta;
    const double d = alpha * beta * (1.0 - alpha) * (1.0 - beta);
    const double r = 2.0 * std::sqrt(std::max(d, 0.0));
    return {s0 - r, s0 + r};
}

Complex steady_G(double alpha, double beta, Complex z) {
    const auto [rm, rp] = jacobi_support(alpha, beta);
    const Complex D = (z - rm) * (z - rp);
    if (std::abs(D) < 1e-14)
        throw BranchAmbiguity("steady_G: discriminant vanishes at a support edge");
    // sqrt(z-r_-) sqrt(z-r_+) is analytic off [r_-,r_+] and ~ +z at infinity,
    // which selects the branch with z G -> min{alpha,beta}
    const Complex sqrtD = std::sqrt(z - rm) * std::sqrt(z - rp);
    const TraceParams p = TraceParams::from_traces(alpha, beta);
    return (p.a * z + p.b + sqrtD) / (2.0 * z * (z - 1.0));
}

SpectralMeasure jacobi_limit(double alpha, double beta, std::size_t grid_n) {
    TraceParams p = TraceParams::from_traces(alpha, beta);
    auto [rm, rp] = jacobi_support(alpha, beta);
    // clip against negative round-off under the radical
    rm += 1e-12;
    rp -= 1e-12;
    SpectralMeasure out;
    const double atom0 = 1.0 - p.min_trace();
    const double atom1 = std::max(alpha + beta - 1.0, 0.0);
    out.add_atom(0.0, atom0);
    out.add_atom(1.0, atom1);

    const double len = rp - rm;
    if (len > 0.0) {
        const auto c = chebyshev_nodes(grid_n);
        const auto w01 = chebyshev_weights(grid_n);
        out.density.nodes.resize(grid_n);
        out.density.values.resize(grid_n);
        out.density.weights.resize(grid_n);
        for (std::size_t i = 0; i < grid_n; ++i) {
            const double x = rm + len * c[i];
            const double rad = std::max((rp - x) * (x - rm), 0.0);
            out.density.nodes[i] = x;
            out.density.values[i] = std::sqrt(rad) / (2.0 * kPi * x * (1.0 - x));
            out.density.weights[i] = len * w01[i];
        }
        // normalize the continuous part to its exact mass
        const double target = 1.0 - atom0 - atom1;
        const double got = out.density.mass();
        if (got > 0.0) {
            const double scale = target / got;
            for (auto& v : out.density.values) v *= scale;
        }
    }
    out.validate();
    return out;
}

Complex pde_residual(const std::function<Complex(double, Complex)>& Gfield, double t,
                     Complex z, const TraceParams& p, double h) {
    if (!(h > 0.0)) throw BadParameter("pde_residual: h must be > 0");
    auto bracket = [&](double tt, Complex zz) {
        const Complex G = Gfield(tt, zz);
        return zz * (zz - 1.0) * G * G - (p.a * zz + p.b) * G;
    };
    auto residual = [&](double hh) {
        const Complex dt = (Gfield(t + hh, z) - Gfield(t - hh, z)) / (2.0 * hh);
        const Complex dz = (bracket(t, z + hh) - bracket(t, z - hh)) / (2.0 * hh);
        return dt - dz;
    };
    const Complex r1 = residual(h);
    const Complex r2 = residual(0.5 * h);
    return (4.0 * r2 - r1) / 3.0;  // Richardson in h^2
}

double edge_velocity(double x, double Gval, const TraceParams& p) {
    return 2.0 * Gval * x * (1.0 - x) + p.a * x + p.b;
}

Complex contour_mass(const std::function<Complex(Complex)>& Geval, double center,
                     double radius, int n) {
    if (n < 64) throw BadParameter("contour_mass: need n >= 64");
    Complex acc = 0.0;
    for (int k = 0; k < n; ++k) {
        // offset keeps sample points off the real axis
        const double theta = 2.0 * kPi * (k + 0.5) / n;
        const Complex e(std::cos(theta), std::sin(theta));
        acc += Geval(center + radius * e) * e;
    }
    return acc * (radius / static_cast<double>(n));
}

void write_density_csv(std::ostream& os, std::span<const double> x,
                       std::span<const double> rho) {
    os << "x,rho\n";
    for (std::size_t i = 0; i < x.size(); ++i)
        os << fmt17(x[i]) << "," << fmt17(rho[i]) << "\n";
}

void write_field_csv(std::ostream& os, double t, std::span<const ComplexSample> samples) {
    os << "t,re_z,im_z,re_G,im_G\n";
    for (const auto& s : samples)
        os << fmt17(t) << "," << fmt17(s.z.real()) << "," << fmt17(s.z.imag()) << ","
           << fmt17(s.value.real()) << "," << fmt17(s.value.imag()) << "\n";
}

}  // namespace liberation
