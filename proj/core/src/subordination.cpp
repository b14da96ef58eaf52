#include "liberation/subordination.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "liberation/format.hpp"

namespace liberation {

namespace {
constexpr double kPi = std::numbers::pi;
const double kStripLeft = 0.5 * std::log(0.5);
}  // namespace

SubordinationProblem SubordinationProblem::make(SpectralMeasure nu0, double t,
                                                double mass_tol) {
    nu0.validate();
    const double mass = total_mass(nu0);
    if (std::abs(mass - 0.5) > mass_tol)
        throw BadParameter("subordination: nu0 must have mass 1/2, got " + fmt17(mass));
    if (!(t > 0.0)) throw BadParameter("subordination: t must be > 0");
    return {std::move(nu0), t};
}

Complex map_M(Complex w) {
    const Complex e = std::exp(2.0 * w);
    const Complex q = e + 0.5;
    return 0.5 * q * q / e;
}

Complex map_L(Complex z, bool edge) {
    if (z.imag() == 0.0 && !edge) {
        if (z.real() <= 0.0)
            throw BranchCut("map_L: z on (-infty,0] requires the edge flag");
        if (z.real() < 1.0 && z.real() > 0.0)
            throw BranchCut("map_L: z in (0,1) requires the edge flag");
    }
    Complex zz = z;
    if (edge && z.imag() == 0.0) zz = Complex(z.real(), +0.0);
    return 0.5 * std::log(zz - 0.5 + sqrt_z_zm1(zz));
}

bool in_strip(Complex w) {
    return w.real() > kStripLeft && w.imag() > 0.0 && w.imag() < 0.5 * kPi;
}

Complex H0_eval(const SpectralMeasure& nu0, Complex z) {
    return sqrt_z_zm1(z) * cauchy(nu0, z);
}

namespace {

// One damped Picard run at fixed (z, t); starts from `zeta`.
struct PicardOutcome {
    Complex zeta;
    int iterations = 0;
    bool converged = false;
};

PicardOutcome picard(const SpectralMeasure& nu0, Complex z, double t, Complex zeta0,
                     double tol, const SolverOptions& opts) {
    const Complex Lz = map_L(z, z.imag() == 0.0);
    PicardOutcome out{zeta0, 0, false};
    for (double lambda : opts.damping) {
        Complex zeta = out.zeta;
        Complex prev1 = zeta, prev2 = zeta;
        for (int it = 0; it < opts.max_iterations; ++it) {
            ++out.iterations;
            const Complex next = map_M(Lz + t * H0_eval(nu0, zeta));
            const double step = std::abs(next - zeta) / (1.0 + std::abs(next));
            prev2 = prev1;
            prev1 = zeta;
            zeta = (1.0 - lambda) * zeta + lambda * next;
            // round-off can push an essentially real iterate below the axis,
            // which would flip the branch of H_0
            if (zeta.imag() < 0.0 && zeta.imag() > -1e-10)
                zeta = Complex(zeta.real(), +0.0);
            if (!std::isfinite(zeta.real()) || !std::isfinite(zeta.imag())) break;
            if (step < tol) {
                out.zeta = zeta;
                out.converged = true;
                return out;
            }
            // Aitken extrapolation rescues the slow spirals near critical
            // points, where the iteration multiplier approaches the unit
            // circle; the convergence certificate still vets the result
            if (it >= 2 && it % 6 == 0) {
                const Complex d1 = prev1 - prev2;
                const Complex d2 = zeta - prev1;
                const Complex den = d2 - d1;
                if (std::abs(den) > 1e-14 * (std::abs(d1) + std::abs(d2))) {
                    const Complex cand = zeta - d2 * d2 / den;
                    if (std::isfinite(cand.real()) && std::isfinite(cand.imag()) &&
                        cand.imag() > -1e-10 &&
                        std::abs(cand - zeta) < 1e3 * std::abs(d2)) {
                        zeta = cand.imag() < 0.0 ? Complex(cand.real(), +0.0) : cand;
                        prev1 = zeta;
                        prev2 = zeta;
                    }
                }
            }
        }
        if (std::isfinite(zeta.real()) && std::isfinite(zeta.imag())) out.zeta = zeta;
    }
    return out;
}

SubordinationResult finish(const SpectralMeasure& nu0, Complex z, double t,
                           const PicardOutcome& po, double tol) {
    SubordinationResult r;
    r.z = z;
    r.f = po.zeta;
    r.H = H0_eval(nu0, po.zeta);
    r.iterations = po.iterations;
    r.converged = po.converged;
    if (r.converged) {
        // fixed-point certificate L(f) = L(z) + t H; an O(tol) uncertainty in
        // f maps to O(|L'(f)| tol) in L, which blows up near the edges
        const Complex LHS = map_L(r.f, std::abs(r.f.imag()) < 1e-300);
        const Complex RHS = map_L(z, z.imag() == 0.0) + t * r.H;
        const double dL = 0.5 / std::max(std::abs(sqrt_z_zm1(r.f)), 1e-12);
        if (std::abs(LHS - RHS) > 10.0 * std::max(tol, 1e-14) * (1.0 + std::abs(RHS) + dL))
            r.converged = false;
    }
    return r;
}

// Interior solve, optionally warm-started; t-continuation on failure.
SubordinationResult solve_interior(const SpectralMeasure& nu0, Complex z, double t,
                                   double tol, const SolverOptions& opts, Complex guess,
                                   int depth) {
    PicardOutcome po = picard(nu0, z, t, guess, tol, opts);
    if (!po.converged && depth < opts.t_continuation_depth) {
        const auto half = solve_interior(nu0, z, 0.5 * t, tol, opts, z, depth + 1);
        po = picard(nu0, z, t, half.f, tol, opts);
    }
    return finish(nu0, z, t, po, tol);
}

}  // namespace

SubordinationResult solve_subordinator(const SubordinationProblem& prob, Complex z,
                                       double tol, const SolverOptions& opts) {
    if (!(tol > 0.0)) throw BadParameter("solve_subordinator: tol must be > 0");
    if (z.imag() > 0.0) return solve_interior(prob.nu0, z, prob.t, tol, opts, z, 0);
    if (z.imag() < 0.0)
        throw BadParameter("solve_subordinator: need Im z >= 0");
    const double x = z.real();
    if (!(x > 0.0 && x < 1.0))
        throw BadParameter("solve_subordinator: boundary points must lie in (0,1)");

    // continuation in eps down to the boundary, warm-starting the iterate
    Complex zeta = Complex(x, opts.eps_levels.front());
    SubordinationResult r;
    for (double eps : opts.eps_levels) {
        const Complex zeps(x, eps);
        r = solve_interior(prob.nu0, zeps, prob.t, tol, opts, zeta, 0);
        zeta = r.f;
    }
    // final boundary pass at z = x + i0 (upper-edge branch of L)
    PicardOutcome po = picard(prob.nu0, Complex(x, 0.0), prob.t, zeta, tol, opts);
    if (!po.converged) po = {r.f, po.iterations, r.converged};
    auto out = finish(prob.nu0, Complex(x, 0.0), prob.t, po, tol);
    // keep the iterate in the closed upper half-plane
    if (out.f.imag() < 0.0 && out.f.imag() > -1e-12)
        out.f = Complex(out.f.real(), 0.0);
    return out;
}

const SubordinationResult& require_converged(const SubordinationResult& r) {
    if (!r.converged)
        throw NoConvergence("subordinator did not converge at z = " + fmt17(r.z.real()) +
                            " + " + fmt17(r.z.imag()) + "i (last f = " +
                            fmt17(r.f.real()) + " + " + fmt17(r.f.imag()) + "i)");
    return r;
}

bool in_omega(const SubordinationProblem& prob, Complex w) {
    if (!(w.imag() > 0.0)) throw BadParameter("in_omega: need Im w > 0");
    return in_strip(map_L(w) - prob.t * H0_eval(prob.nu0, w));
}

double density_at(const SubordinationProblem& prob, double x, const SolverOptions& opts) {
    if (!(x > 0.0 && x < 1.0)) throw BadParameter("density_at: x must lie in (0,1)");
    const auto r = solve_subordinator(prob, Complex(x, 0.0), opts.tol, opts);
    require_converged(r);
    const double rho = r.H.real() / (kPi * std::sqrt(x * (1.0 - x)));
    return std::max(rho, 0.0);
}

std::vector<SweepRow> density_sweep(const SubordinationProblem& prob,
                                    std::span<const double> xs,
                                    const SolverOptions& opts) {
    std::vector<SweepRow> rows(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        SweepRow row;
        row.x = x;
        const auto r = solve_subordinator(prob, Complex(x, 0.0), opts.tol, opts);
        row.converged = r.converged;
        row.H = r.H;
        row.rho = r.converged
                      ? std::max(r.H.real() / (kPi * std::sqrt(x * (1.0 - x))), 0.0)
                      : 0.0;
        rows[i] = row;
    }
    return rows;
}

Complex evolved_G(const SubordinationProblem& prob, Complex z, const SolverOptions& opts) {
    if (z.imag() < 0.0) return std::conj(evolved_G(prob, std::conj(z), opts));
    const auto r = solve_subordinator(prob, z, opts.tol, opts);
    require_converged(r);
    return r.H / sqrt_z_zm1(z.imag() == 0.0 ? Complex(z.real(), +0.0) : z);
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << "x,rho_t,re_H,im_H,converged\n";
    for (const auto& r : rows)
        os << fmt17(r.x) << "," << fmt17(r.rho) << "," << fmt17(r.H.real()) << ","
           << fmt17(r.H.imag()) << "," << (r.converged ? 1 : 0) << "\n";
}

}  // namespace liberation
