#pragma once

// Logarithmic energy, projection free entropy, liberation Fisher information,
// and mutual free information along the trace-1/2 flow.
//
// Conventions (pinned by the derivative identity d/dt chi = phi*/2 and the
// integrated unification identity): chi_proj uses (1/4) Sigma, and the Fisher
// integrand uses the un-normalized principal value p.v. int rho(y)/(x-y) dy.

#include <string>
#include <vector>

#include "liberation/measures.hpp"
#include "liberation/subordination.hpp"

namespace liberation {

enum class TailModel { exp_fit, drop };

struct EntropyConfig {
    double C_const = 0.0;   // additive chi_proj constant; convention-dependent
    double T_max = 20.0;    // horizon for the i* time integral
    TailModel tail_model = TailModel::exp_fit;
    double t_min = 0.0;     // lower cutoff, for singular initial data
    std::size_t grid_n = 512;  // boundary-sweep resolution
};

struct PhiProfile {
    std::vector<double> times;   // increasing
    std::vector<double> values;  // phi* at each time, >= 0
};

// Sigma(rho) = double integral of ln|u-v| rho(u) rho(v); the diagonal and
// adjacent quadrature cells use the analytic integral of the log kernel.
// Returns -infinity for (near-)atomic grids.
double log_energy(const DensityGrid& rho);

// chi_proj(nu_hat) = (1/4) Sigma + ((a10+a01)/2) int log x + ((a11+a00)/2)
// int log(1-x) - C.  nu_hat must have mass 1; atomic input gives -infinity.
// Throws GeneralPositionViolated if the alpha_ij pattern is inconsistent.
double chi_proj(const SpectralMeasure& nu_hat, const TraceParams& p,
                const EntropyConfig& cfg = {});

// phi* = int phi(x)^2 rho_hat(x) x(1-x) dx with
// phi = p.v. int rho_hat(y)/(x-y) dy + (a01+a10)/x + (a00+a11)/(1-x).
// Throws DivergentIntegral when edge cells dominate under trimming.
double fisher(const DensityGrid& rho_hat, const TraceParams& p);

// The mass-1 measure nu_hat^t = 2 nu_t from a boundary sweep at time t.
SpectralMeasure nu_hat_at(const SubordinationProblem& prob, double t,
                          std::size_t grid_n = 512);

// phi*(t) evaluated from boundary values of H_t:
//   phi*(t) = (8/pi) int Im(H)^2 Re(H) / sqrt(x(1-x)) dx.
double phi_star_at(const SubordinationProblem& prob, double t,
                   std::size_t grid_n = 512);

PhiProfile phi_profile(const SubordinationProblem& prob,
                       std::span<const double> times, std::size_t grid_n = 512);

struct IstarResult {
    double value = 0.0;     // integral + tail
    double integral = 0.0;  // (1/2) int_{t_min}^{T_max} phi* dt
    double tail = 0.0;      // estimated (1/2) int_{T_max}^inf
    bool truncated = false; // true when t_min > 0 was applied
    PhiProfile profile;
};

// i* = (1/2) int_0^inf phi*(t) dt, integrated over (t_min, T_max] plus the
// tail model.  Throws TailDivergence when exp_fit finds a non-decaying tail.
IstarResult istar(const SubordinationProblem& prob, const EntropyConfig& cfg = {});

// lhs = [chi(t+h) - chi(t-h)] / 2h,  rhs = phi*(t)/2;  requires t > h > 0.
struct DerivativeIdentity {
    double lhs = 0.0;
    double rhs = 0.0;
};
DerivativeIdentity check_derivative_identity(const SubordinationProblem& prob,
                                             double t, double h,
                                             const EntropyConfig& cfg = {});

// Report JSON: {"istar":..,"chi_proj_t0":..,"chi_proj_inf":..,"ftc_gap":..,
//               "profile":[{"t":..,"phi":..}]}
std::string report_json(const IstarResult& r, double chi_t0, double chi_inf);

}  // namespace liberation
