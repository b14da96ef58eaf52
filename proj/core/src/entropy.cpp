#include "liberation/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "liberation/format.hpp"

namespace liberation {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// F(s) = int_0^s u (ln u - 1) du; F''(s) = ln s.  Double integrals of the log
// kernel over interval pairs reduce to four F evaluations.
double cellF(double s) { return s <= 0.0 ? 0.0 : 0.25 * s * s * (2.0 * std::log(s) - 3.0); }

// exact double integral of ln(v-u) over [a1,a2] x [b1,b2] with b1 >= a2
double log_kernel_cells(double a1, double a2, double b1, double b2) {
    return cellF(b2 - a1) - cellF(b1 - a1) - cellF(b2 - a2) + cellF(b1 - a2);
}

// exact double integral of ln(u+v) over [a1,a2] x [b1,b2] (u+v > 0)
double log_kernel_cells_sum(double a1, double a2, double b1, double b2) {
    return cellF(a2 + b2) - cellF(a1 + b2) - cellF(a2 + b1) + cellF(a1 + b1);
}

// Log energy in the theta variable for densities sampled on Chebyshev-type
// grids: with x = (1+cos theta)/2 the kernel factorizes as
//   ln|x-y| = ln|theta-phi| + ln(theta+phi) + ln(2pi-theta-phi) + S
// with S smooth, and g(theta) = rho(x) sin(theta)/2 is smooth up to the
// edges.  Cells are uniform in theta, singular kernel parts are integrated
// exactly over a near band, the smooth part by midpoint.
double log_energy_theta(const std::vector<double>& theta, const std::vector<double>& g,
                        const std::vector<double>& edges, double nominal_mass) {
    const std::size_t n = theta.size();
    std::vector<double> m(n);
    double msum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        m[k] = g[k] * (edges[k + 1] - edges[k]);
        msum += m[k];
    }
    if (msum <= 0.0) return 0.0;
    const double rescale = nominal_mass > 0.0 ? nominal_mass / msum : 1.0;
    for (auto& v : m) v *= rescale;

    constexpr double kTwoPi = 2.0 * kPi;
    constexpr std::size_t kBand = 8;
    auto smooth_part = [](double dth, double sth) {
        // u(d) = ln(sin(|d|/2)/(|d|/2)), w(s) = sin(s/2)/((s/2)((2pi-s)/2))
        const double ad = std::abs(dth);
        const double u = ad < 1e-8 ? -ad * ad / 24.0
                                   : std::log(std::sin(0.5 * ad) / (0.5 * ad));
        const double w = std::sin(0.5 * sth) / (0.25 * sth * (kTwoPi - sth));
        // the -3 ln 2 collects the 1/2 factors split off the three log terms
        return u + std::log(w) - 3.0 * std::log(2.0);
    };

    const double band_width = static_cast<double>(kBand) * kPi / static_cast<double>(n);
    double E = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (m[k] == 0.0) continue;
        for (std::size_t l = k; l < n; ++l) {
            if (m[l] == 0.0) continue;
            const double wk = edges[k + 1] - edges[k];
            const double wl = edges[l + 1] - edges[l];
            const double area = wk * wl;
            double K = smooth_part(theta[l] - theta[k], theta[k] + theta[l]);
            // ln|theta - phi|
            if (l == k) {
                K += std::log(wk) - 1.5;
            } else if (l - k <= kBand) {
                K += log_kernel_cells(edges[k], edges[k + 1], edges[l], edges[l + 1]) / area;
            } else {
                K += std::log(theta[l] - theta[k]);
            }
            // ln(theta + phi), singular toward the left corner
            if (theta[k] + theta[l] < 2.0 * band_width) {
                K += log_kernel_cells_sum(edges[k], edges[k + 1], edges[l], edges[l + 1]) / area;
            } else {
                K += std::log(theta[k] + theta[l]);
            }
            // ln(2pi - theta - phi), singular toward the right corner
            if (kTwoPi - theta[k] - theta[l] < 2.0 * band_width) {
                K += log_kernel_cells_sum(kPi - edges[k + 1], kPi - edges[k],
                                          kPi - edges[l + 1], kPi - edges[l]) / area;
            } else {
                K += std::log(kTwoPi - theta[k] - theta[l]);
            }
            E += (l == k ? 1.0 : 2.0) * m[k] * m[l] * K;
        }
    }
    return E;
}

// Recognizes the two canonical grids and produces the theta geometry.
bool theta_geometry(const DensityGrid& rho, std::vector<double>& theta,
                    std::vector<double>& g, std::vector<double>& edges) {
    const std::size_t c = rho.size();
    if (c < 8) return false;
    auto fill = [&](std::size_t n_rule, bool gauss) {
        theta.resize(c);
        g.resize(c);
        edges.resize(c + 1);
        const double d = kPi / static_cast<double>(n_rule);
        for (std::size_t i = 0; i < c; ++i) {
            // x increasing means theta decreasing; store in theta-increasing order
            const std::size_t j = c - 1 - i;
            theta[i] = gauss ? (static_cast<double>(i) + 0.5) * d
                             : (static_cast<double>(i) + 1.0) * d;
            g[i] = rho.values[j] * 0.5 * std::sin(theta[i]);
        }
        edges[0] = 0.0;
        edges[c] = kPi;
        for (std::size_t i = 1; i < c; ++i) edges[i] = 0.5 * (theta[i - 1] + theta[i]);
    };
    // Gauss pattern: c nodes of chebyshev_nodes(c)
    {
        const auto ref = chebyshev_nodes(c);
        bool ok = true;
        for (std::size_t i = 0; i < c && ok; ++i)
            ok = std::abs(rho.nodes[i] - ref[i]) <= 1e-12;
        if (ok) {
            fill(c, true);
            return true;
        }
    }
    // Lobatto interior pattern: c nodes of lobatto_interior_nodes(c+1)
    {
        const auto ref = lobatto_interior_nodes(c + 1);
        bool ok = true;
        for (std::size_t i = 0; i < c && ok; ++i)
            ok = std::abs(rho.nodes[i] - ref[i]) <= 1e-12;
        if (ok) {
            fill(c + 1, false);
            return true;
        }
    }
    return false;
}
}  // namespace

double log_energy(const DensityGrid& rho) {
    const std::size_t n = rho.size();
    if (n == 0) return 0.0;
    if (n == 1) return rho.mass() > 0.0 ? -kInf : 0.0;

    {
        std::vector<double> theta, g, edges;
        if (theta_geometry(rho, theta, g, edges))
            return log_energy_theta(theta, g, edges, rho.mass());
    }

    const auto& x = rho.nodes;
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = rho.weights[i] * rho.values[i];

    // contiguous cells around the nodes, edges at node midpoints; each cell
    // keeps its exact quadrature mass m_i
    std::vector<double> lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = (i == 0) ? std::max(0.0, x[0] - 0.5 * (x[1] - x[0]))
                         : 0.5 * (x[i - 1] + x[i]);
        hi[i] = (i + 1 == n) ? std::min(1.0, x[n - 1] + 0.5 * (x[n - 1] - x[n - 2]))
                             : 0.5 * (x[i] + x[i + 1]);
    }

    // the log kernel is integrated exactly over cell pairs within this band;
    // beyond it the midpoint value is accurate
    constexpr std::size_t kBand = 8;
    double E = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (m[i] == 0.0) continue;
        const double wi = hi[i] - lo[i];
        if (wi > 0.0) E += m[i] * m[i] * (std::log(wi) - 1.5);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (m[j] == 0.0) continue;
            double K;
            if (j - i <= kBand) {
                const double wj = hi[j] - lo[j];
                K = log_kernel_cells(lo[i], hi[i], lo[j], hi[j]) / (wi * wj);
            } else {
                K = std::log(x[j] - x[i]);
            }
            E += 2.0 * m[i] * m[j] * K;
        }
    }
    return E;
}

double chi_proj(const SpectralMeasure& nu_hat, const TraceParams& p,
                const EntropyConfig& cfg) {
    if (p.alpha00 * p.alpha11 > 0.0 || p.alpha10 * p.alpha01 > 0.0)
        throw GeneralPositionViolated("alpha_ij pattern admits no general position");
    for (const auto& a : nu_hat.atoms)
        if (a.mass > kAtomDropTol) return -kInf;

    const double sigma = log_energy(nu_hat.density);
    if (!std::isfinite(sigma)) return -kInf;

    double boundary = 0.0;
    const double c10 = 0.5 * (p.alpha10 + p.alpha01);
    const double c11 = 0.5 * (p.alpha11 + p.alpha00);
    if (c10 != 0.0 || c11 != 0.0) {
        const auto& d = nu_hat.density;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double wv = d.weights[i] * d.values[i];
            boundary += wv * (c10 * std::log(d.nodes[i]) + c11 * std::log(1.0 - d.nodes[i]));
        }
    }
    return 0.25 * sigma + boundary - cfg.C_const;
}

double fisher(const DensityGrid& rho_hat, const TraceParams& p) {
    rho_hat.validate();
    const std::size_t n = rho_hat.size();
    if (n == 0) return 0.0;
    const double c_x = p.alpha01 + p.alpha10;
    const double c_1mx = p.alpha00 + p.alpha11;

    std::vector<double> integrand(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rho_hat.nodes[i];
        double phi = kPi * hilbert(rho_hat, x);  // bare principal value
        if (c_x != 0.0) phi += c_x / x;
        if (c_1mx != 0.0) phi += c_1mx / (1.0 - x);
        integrand[i] = phi * phi * rho_hat.values[i] * x * (1.0 - x);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += rho_hat.weights[i] * integrand[i];

    // Cauchy criterion under edge trimming: for a convergent integral the
    // outermost cells contribute a vanishing share
    if (n >= 16) {
        double trimmed = 0.0;
        for (std::size_t i = 4; i + 4 < n; ++i)
            trimmed += rho_hat.weights[i] * integrand[i];
        if (std::abs(total - trimmed) > 0.02 * std::abs(total) + 1e-7)
            throw DivergentIntegral("fisher: edge cells dominate the quadrature");
    }
    return total;
}

namespace {

// Sweeps run on interior Lobatto nodes: interleaved with the Gauss nodes of
// the nu0 grid, so the subordinated point never collides with a quadrature
// pole of H_0.
std::vector<SweepRow> boundary_sweep(const SubordinationProblem& prob, double t,
                                     std::size_t grid_n) {
    SubordinationProblem q{prob.nu0, t};
    const auto xs = lobatto_interior_nodes(grid_n);
    return density_sweep(q, xs);
}

}  // namespace

SpectralMeasure nu_hat_at(const SubordinationProblem& prob, double t,
                          std::size_t grid_n) {
    const auto rows = boundary_sweep(prob, t, grid_n);
    SpectralMeasure m;
    m.density.nodes = lobatto_interior_nodes(grid_n);
    m.density.weights = lobatto_interior_weights(grid_n);
    m.density.values.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].converged)
            throw NoConvergence("nu_hat_at: sweep failed at x = " + fmt17(rows[i].x));
        m.density.values[i] = 2.0 * rows[i].rho;  // nu_hat = 2 nu_t
    }
    // the exact mass is 1; rescaling removes the open-rule end correction
    const double mass = m.density.mass();
    if (mass > 0.0)
        for (auto& v : m.density.values) v /= mass;
    return m;
}

double phi_star_at(const SubordinationProblem& prob, double t, std::size_t grid_n) {
    if (t == 0.0) {
        // t = 0 limit straight from the initial density; the boundary solve is
        // only resolvable once the subordinator lifts points above the node
        // spacing of the nu0 grid
        for (const auto& a : prob.nu0.atoms)
            if (a.mass > kAtomDropTol) return kInf;
        DensityGrid rho_hat = prob.nu0.density;
        for (auto& v : rho_hat.values) v *= 2.0;
        return fisher(rho_hat, TraceParams::from_traces(0.5, 0.5));
    }
    const auto rows = boundary_sweep(prob, t, grid_n);
    // (8/pi) int Im(H)^2 Re(H) / sqrt(x(1-x)) dx; the Chebyshev weights absorb
    // the edge factor exactly
    double acc = 0.0;
    for (const auto& r : rows) {
        if (!r.converged)
            throw NoConvergence("phi_star_at: sweep failed at x = " + fmt17(r.x));
        acc += r.H.imag() * r.H.imag() * r.H.real();
    }
    return std::max(0.0, 8.0 * acc / static_cast<double>(grid_n));
}

PhiProfile phi_profile(const SubordinationProblem& prob, std::span<const double> times,
                       std::size_t grid_n) {
    PhiProfile out;
    out.times.assign(times.begin(), times.end());
    out.values.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        out.values[i] = phi_star_at(prob, times[i], grid_n);
    return out;
}

IstarResult istar(const SubordinationProblem& prob, const EntropyConfig& cfg) {
    if (!(cfg.T_max > 0.0)) throw BadParameter("istar: T_max must be > 0");
    IstarResult out;
    out.truncated = cfg.t_min > 0.0;

    // geometric panels toward t_min resolve the fast early decay
    std::vector<double> edges;
    const double t0 = std::max(cfg.t_min, 0.0);
    for (double e : {0.0, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0,
                     6.0, 8.0, 12.0, 16.0, 20.0}) {
        const double scaled = t0 + e * (cfg.T_max - t0) / 20.0;
        if (edges.empty() || scaled > edges.back()) edges.push_back(scaled);
    }
    edges.back() = cfg.T_max;

    // First panel by trapezoid: its left endpoint (t = t_min, typically 0) is
    // evaluated without a boundary solve, the only regime where small-t sweeps
    // are not resolvable on the nu0 grid.  Remaining panels use 4-point
    // Gauss-Legendre, whose nodes stay clear of that regime.
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                 0.3399810435848563, 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                 0.6521451548625461, 0.3478548451374538};
    double integral = 0.0;
    {
        const double a = edges[0], b = edges[1];
        const double phi_a = phi_star_at(prob, a == t0 && t0 == 0.0 ? 0.0 : a, cfg.grid_n);
        out.profile.times.push_back(a);
        out.profile.values.push_back(phi_a);
        if (!std::isfinite(phi_a)) {
            // the time integral diverges at 0 for singular initial data
            out.integral = kInf;
            out.value = kInf;
            return out;
        }
        const double phi_b = phi_star_at(prob, b, cfg.grid_n);
        integral += 0.5 * (b - a) * (phi_a + phi_b);
        out.profile.times.push_back(b);
        out.profile.values.push_back(phi_b);
    }
    for (std::size_t k = 1; k + 1 < edges.size(); ++k) {
        const double a = edges[k], b = edges[k + 1];
        for (int q = 0; q < 4; ++q) {
            const double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
            const double phi = phi_star_at(prob, t, cfg.grid_n);
            integral += 0.5 * (b - a) * gw[q] * phi;
            out.profile.times.push_back(t);
            out.profile.values.push_back(phi);
        }
    }
    out.integral = 0.5 * integral;

    double tail = 0.0;
    if (cfg.tail_model == TailModel::exp_fit) {
        // linear fit of log phi* over the last decade of samples
        std::vector<double> ts, ls;
        for (std::size_t i = 0; i < out.profile.times.size(); ++i) {
            if (out.profile.times[i] >= 0.5 * cfg.T_max && out.profile.values[i] > 0.0) {
                ts.push_back(out.profile.times[i]);
                ls.push_back(std::log(out.profile.values[i]));
            }
        }
        const double phi_end = out.profile.values.empty() ? 0.0 : out.profile.values.back();
        if (phi_end > 1e-12 && ts.size() >= 3) {
            double st = 0, sl = 0, stt = 0, stl = 0;
            const auto nn = static_cast<double>(ts.size());
            for (std::size_t i = 0; i < ts.size(); ++i) {
                st += ts[i];
                sl += ls[i];
                stt += ts[i] * ts[i];
                stl += ts[i] * ls[i];
            }
            const double slope = (nn * stl - st * sl) / (nn * stt - st * st);
            const double icept = (sl - slope * st) / nn;
            if (slope >= -1e-12)
                throw TailDivergence("istar: fitted tail of phi* does not decay");
            tail = 0.5 * std::exp(icept + slope * cfg.T_max) / (-slope);
        }
    }
    out.tail = tail;
    out.value = out.integral + out.tail;
    return out;
}

DerivativeIdentity check_derivative_identity(const SubordinationProblem& prob, double t,
                                             double h, const EntropyConfig& cfg) {
    if (!(t > h && h > 0.0))
        throw BadParameter("check_derivative_identity: need t > h > 0");
    const TraceParams p = TraceParams::from_traces(0.5, 0.5);
    const double chi_plus = chi_proj(nu_hat_at(prob, t + h, cfg.grid_n), p, cfg);
    const double chi_minus = chi_proj(nu_hat_at(prob, t - h, cfg.grid_n), p, cfg);
    DerivativeIdentity out;
    out.lhs = (chi_plus - chi_minus) / (2.0 * h);
    out.rhs = 0.5 * phi_star_at(prob, t, cfg.grid_n);
    return out;
}

std::string report_json(const IstarResult& r, double chi_t0, double chi_inf) {
    nlohmann::json j;
    j["istar"] = r.value;
    j["chi_proj_t0"] = chi_t0;
    j["chi_proj_inf"] = chi_inf;
    j["ftc_gap"] = r.value - (chi_inf - chi_t0);
    j["profile"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.profile.times.size(); ++i)
        j["profile"].push_back({{"t", r.profile.times[i]}, {"phi", r.profile.values[i]}});
    return j.dump(2);
}

}  // namespace liberation
