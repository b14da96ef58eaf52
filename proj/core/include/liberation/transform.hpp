#pragma once

// Cauchy-transform evaluation and inversion.  Branch convention throughout:
// sqrt(z)*sqrt(z-1) with principal square roots, analytic on C - [0,1] and
// equal to i sqrt(x(1-x)) on the upper edge of (0,1).

#include <complex>
#include <functional>
#include <vector>

#include "liberation/measures.hpp"
#include "liberation/moment_flow.hpp"

namespace liberation {

using Complex = std::complex<double>;

struct ComplexSample {
    Complex z;
    Complex value;
};

// Discretization of the eps -> 0 limit in the Stieltjes inversion formula.
struct EpsilonSchedule {
    std::vector<double> levels{1e-2, 5e-3, 2.5e-3};  // strictly decreasing, > 0
    int order = 2;                                   // polynomial extrapolation order

    void validate() const;
};

Complex sqrt_z_zm1(Complex z);  // sqrt(z) sqrt(z-1), principal branches

// G_m(z) = sum_a mass/(z-loc) + quadrature of density/(z-x).
// Throws PoleAtZ when z sits on a real atom within `pole_tol`.
Complex cauchy(const SpectralMeasure& m, Complex z, double pole_tol = 1e-12);

// Shifted transform from moments: min{alpha,beta}/z + sum_n g_n z^{-n-1}.
// Requires |z| > 1 + margin; the truncation tail is <= |z|^{-N-1}/(|z|-1).
Complex shifted_G_series(const MomentVector& g, const TraceParams& p, Complex z,
                         double margin = 0.05);

// Richardson-extrapolated -1/pi Im G(x + i eps) as eps -> 0.  Throws
// NegativeDensity if the extrapolated value is below -neg_tol.
double stieltjes_density(const std::function<Complex(Complex)>& Geval, double x,
                         const EpsilonSchedule& sched = {}, double neg_tol = 1e-6);

// Principal value (1/pi) int rho(y)/(x-y) dy on (0,1), by singularity
// subtraction against the node values (exact for constant densities).
double hilbert(const DensityGrid& rho, double x);

// Steady-state shifted transform: the root of
//   z(z-1) G^2 - (a z + b) G = m(1-m),  m = min{alpha,beta},
// with z G -> m at infinity.  Throws BranchAmbiguity near the support edges.
Complex steady_G(double alpha, double beta, Complex z);

struct JacobiSupport {
    double r_minus = 0.0;
    double r_plus = 1.0;
};
JacobiSupport jacobi_support(double alpha, double beta);

// The large-time limit measure at mu level: static atoms at 0 and 1 plus the
// density sqrt((r_+ - x)(x - r_-)) / (2 pi x (1-x)) on [r_-, r_+].
SpectralMeasure jacobi_limit(double alpha, double beta, std::size_t grid_n = 512);

// Central-difference residual of d/dt G = d/dz [z(z-1)G^2 - (az+b)G],
// Richardson-improved over step sizes h and h/2.
Complex pde_residual(const std::function<Complex(double, Complex)>& Gfield, double t,
                     Complex z, const TraceParams& p, double h = 1e-4);

// Support-edge speed: 2 G x(1-x) + a x + b  (G real at a support edge).
double edge_velocity(double x, double Gval, const TraceParams& p);

// Trapezoidal (1/2pi i) contour integral of Geval over the circle
// |z - center| = radius; real part ~ enclosed mass for real measures.
Complex contour_mass(const std::function<Complex(Complex)>& Geval, double center,
                     double radius, int n = 256);

// CSV writers (x,rho) and (t,re_z,im_z,re_G,im_G).
void write_density_csv(std::ostream& os, std::span<const double> x,
                       std::span<const double> rho);
void write_field_csv(std::ostream& os, double t, std::span<const ComplexSample> samples);

}  // namespace liberation
