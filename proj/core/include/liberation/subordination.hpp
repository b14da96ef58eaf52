#pragma once

// Trace-1/2 subordination: the flow of H(t,z) = sqrt(z) sqrt(z-1) G(t,z) is
// H_t = H_0 o f_t with the subordinator f_t(z) = M[L(z) + t H_t(z)], solved
// pointwise by damped Picard iteration with continuation in eps and t.

#include <complex>
#include <vector>

#include "liberation/measures.hpp"
#include "liberation/transform.hpp"

namespace liberation {

struct SubordinationProblem {
    SpectralMeasure nu0;  // mass 1/2, support in [0,1]
    double t = 0.0;       // > 0

    static SubordinationProblem make(SpectralMeasure nu0, double t,
                                     double mass_tol = 1e-10);
};

struct SubordinationResult {
    Complex z;
    Complex f;       // f_t(z)
    Complex H;       // H_t(z) = H_0(f_t(z))
    int iterations = 0;
    bool converged = false;
};

struct SolverOptions {
    double tol = 1e-12;
    int max_iterations = 500;             // per (lambda, eps) level
    std::vector<double> damping{1.0, 0.5, 0.25, 0.125, 0.0625};
    std::vector<double> eps_levels{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    int t_continuation_depth = 4;         // halvings of t for warm starts
};

// M(w) = 1/2 e^{-2w} (e^{2w} + 1/2)^2, entire, i pi periodic
Complex map_M(Complex w);

// L(z) = 1/2 ln(z - 1/2 + sqrt(z) sqrt(z-1)), analytic on C - (-infty, 1];
// maps C_+ onto the strip S = { u > 1/2 ln 1/2, 0 < v < pi/2 }.
// `edge` resolves real z in [0,1] as a limit from C_+.
Complex map_L(Complex z, bool edge = false);

bool in_strip(Complex w);  // strict membership in S

// H_0(z) = sqrt(z) sqrt(z-1) Cauchy(nu0, z); tends to 1/2 at infinity.
Complex H0_eval(const SpectralMeasure& nu0, Complex z);

// Solves zeta = M(L(z) + t H_0(zeta)).  For real z in (0,1) the point is
// approached along x + i eps with warm-started iterates; when that fails the
// solve restarts from a smaller t.  A non-converged result carries the last
// iterate with converged = false.
SubordinationResult solve_subordinator(const SubordinationProblem& prob, Complex z,
                                       double tol = 1e-12,
                                       const SolverOptions& opts = {});

// Throws NoConvergence unless r.converged.
const SubordinationResult& require_converged(const SubordinationResult& r);

// Membership in Omega_t = { w in C_+ : L(w) - t H_0(w) in S }.
bool in_omega(const SubordinationProblem& prob, Complex w);

// rho_t(x) = (1/pi) Re H_t(x) / sqrt(x(1-x)) from the boundary solve.
double density_at(const SubordinationProblem& prob, double x,
                  const SolverOptions& opts = {});

// Boundary sweep over `xs`; rows are (x, rho_t, Re H, Im H, converged).
struct SweepRow {
    double x = 0.0;
    double rho = 0.0;
    Complex H;
    bool converged = false;
};
std::vector<SweepRow> density_sweep(const SubordinationProblem& prob,
                                    std::span<const double> xs,
                                    const SolverOptions& opts = {});

// G_t(z) on either half-plane via the subordinator and Schwarz reflection.
Complex evolved_G(const SubordinationProblem& prob, Complex z,
                  const SolverOptions& opts = {});

// CSV: x,rho_t,re_H,im_H,converged
void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

}  // namespace liberation
