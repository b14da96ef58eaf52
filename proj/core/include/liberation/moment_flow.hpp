#pragma once

// The closed hierarchy of moment ODEs for g_n(t) = tau[(q p_t q)^n].  Because
// the derivative of g_n involves g_1..g_n only, truncation at any order is
// exact, not an approximation.  Also hosts Biane's closed-form moments of the
// free unitary Brownian motion.

#include <functional>
#include <ostream>
#include <vector>

#include "liberation/measures.hpp"

namespace liberation {

struct MomentVector {
    std::vector<double> g;  // g[n-1] = g_n, n = 1..N
    double g0 = 1.0;        // convention: g_0 = alpha + beta, never integrated

    int order() const { return static_cast<int>(g.size()); }

    static MomentVector from_measure(const SpectralMeasure& m, int N,
                                     const TraceParams& p);
};

struct FlowState {
    double time = 0.0;
    MomentVector moments;
    TraceParams params;
};

// Right-hand side of the hierarchy:
//   g_1' = -g_1 + alpha beta
//   g_2' = -2 g_2 + 2(alpha+beta) g_1 - 2 g_1^2
//   g_n' = -n g_n + n(alpha+beta) g_{n-1}
//          - n sum_{j=1}^{n-1} g_j g_{n-j} + n sum_{j=2}^{n-1} g_{j-1} g_{n-j}
std::vector<double> moment_rhs(const MomentVector& g, const TraceParams& p);

// Compact form g_n' = -n [ g_n - sum_{j=1}^{n-1} (g_{j-1} - g_j) g_{n-j} ]
// with g_0 = alpha+beta; agrees with moment_rhs to roundoff.
std::vector<double> moment_rhs_compact(const MomentVector& g, const TraceParams& p);

// Adaptive Dormand-Prince 5(4) with PI step control.  Throws StepFailure if
// the controller underflows.  `observer`, when set, is called once per
// accepted step (including the initial and final states).
MomentVector evolve_moments(
    const MomentVector& g0, double t, const TraceParams& p, double tol = 1e-10,
    const std::function<void(const FlowState&)>& observer = nullptr);

// g_1(t) = g_1(0) e^{-t} + alpha beta (1 - e^{-t})
double g1_closed_form(double g1_0, double t, const TraceParams& p);

// tau(u_t^k) = e^{-kt/2} sum_{j=0}^{k-1} (-t)^j / j! binom(k, j+1) k^{j-1}
double fubm_moment(int k, double t);

// CSV trajectory: header "t,g1,...,gN", one row per observed state.
void write_trajectory_csv(std::ostream& os, const std::vector<FlowState>& states);

}  // namespace liberation
