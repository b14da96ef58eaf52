#include "liberation/moment_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "liberation/format.hpp"

namespace liberation {

MomentVector MomentVector::from_measure(const SpectralMeasure& m, int N,
                                        const TraceParams& p) {
    MomentVector v;
    v.g = moments(m, N);
    v.g0 = p.alpha + p.beta;
    return v;
}

std::vector<double> moment_rhs(const MomentVector& mv, const TraceParams& p) {
    const auto& g = mv.g;
    const int N = mv.order();
    std::vector<double> d(static_cast<std::size_t>(N), 0.0);
    const double ab = p.alpha * p.beta;
    const double s = p.alpha + p.beta;
    if (N >= 1) d[0] = -g[0] + ab;
    if (N >= 2) d[1] = -2.0 * g[1] + 2.0 * s * g[0] - 2.0 * g[0] * g[0];
    for (int n = 3; n <= N; ++n) {
        double s1 = 0.0;  // sum_{j=1}^{n-1} g_j g_{n-j}
        for (int j = 1; j <= n - 1; ++j) s1 += g[j - 1] * g[n - j - 1];
        double s2 = 0.0;  // sum_{j=2}^{n-1} g_{j-1} g_{n-j}
        for (int j = 2; j <= n - 1; ++j) s2 += g[j - 2] * g[n - j - 1];
        d[n - 1] = -n * g[n - 1] + n * s * g[n - 2] - n * s1 + n * s2;
    }
    return d;
}

std::vector<double> moment_rhs_compact(const MomentVector& mv, const TraceParams& p) {
    const auto& g = mv.g;
    const int N = mv.order();
    const double g0 = mv.g0;
    std::vector<double> d(static_cast<std::size_t>(N), 0.0);
    if (N >= 1) d[0] = -g[0] + p.alpha * p.beta;
    for (int n = 2; n <= N; ++n) {
        double acc = 0.0;
        for (int j = 1; j <= n - 1; ++j) {
            const double gjm1 = (j == 1) ? g0 : g[j - 2];
            acc += (gjm1 - g[j - 1]) * g[n - j - 1];
        }
        d[n - 1] = -n * (g[n - 1] - acc);
    }
    return d;
}

namespace {

// Dormand-Prince 5(4) coefficients
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

MomentVector evolve_moments(const MomentVector& g0, double t, const TraceParams& p,
                            double tol,
                            const std::function<void(const FlowState&)>& observer) {
    if (!(tol > 0.0)) throw BadParameter("evolve_moments: tol must be > 0");
    if (t < 0.0) throw BadParameter("evolve_moments: time must be >= 0");
    MomentVector state = g0;
    state.g0 = p.alpha + p.beta;
    if (observer) observer({0.0, state, p});
    if (t == 0.0) return state;

    const std::size_t n = state.g.size();
    double time = 0.0;
    double h = std::min(t, 0.1);
    double prev_err = 1.0;  // PI controller memory
    auto f = [&](const std::vector<double>& y) {
        MomentVector tmp;
        tmp.g = y;
        tmp.g0 = state.g0;
        return moment_rhs(tmp, p);
    };

    std::vector<double> y = state.g;
    auto k1 = f(y);

    while (time < t) {
        h = std::min(h, t - time);
        if (h < 1e-14 * std::max(1.0, t))
            throw StepFailure("evolve_moments: step size underflow (tol too tight)");

        std::vector<double> y2 = y;
        axpy(y2, h * a21, k1);
        auto k2 = f(y2);

        std::vector<double> y3 = y;
        axpy(y3, h * a31, k1);
        axpy(y3, h * a32, k2);
        auto k3 = f(y3);

        std::vector<double> y4 = y;
        axpy(y4, h * a41, k1);
        axpy(y4, h * a42, k2);
        axpy(y4, h * a43, k3);
        auto k4 = f(y4);

        std::vector<double> y5 = y;
        axpy(y5, h * a51, k1);
        axpy(y5, h * a52, k2);
        axpy(y5, h * a53, k3);
        axpy(y5, h * a54, k4);
        auto k5 = f(y5);

        std::vector<double> y6 = y;
        axpy(y6, h * a61, k1);
        axpy(y6, h * a62, k2);
        axpy(y6, h * a63, k3);
        axpy(y6, h * a64, k4);
        axpy(y6, h * a65, k5);
        auto k6 = f(y6);

        std::vector<double> ynew = y;
        axpy(ynew, h * b1, k1);
        axpy(ynew, h * b3, k3);
        axpy(ynew, h * b4, k4);
        axpy(ynew, h * b5, k5);
        axpy(ynew, h * b6, k6);
        auto k7 = f(ynew);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                   e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = tol * (1.0 + std::abs(ynew[i]));
            err = std::max(err, std::abs(ei) / sc);
        }

        if (err <= 1.0) {
            time += h;
            y = std::move(ynew);
            k1 = std::move(k7);  // FSAL
            if (observer) {
                MomentVector mv;
                mv.g = y;
                mv.g0 = state.g0;
                observer({time, mv, p});
            }
            // PI controller (orders 5/4)
            const double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) *
                               std::pow(std::max(prev_err, 1e-10), 0.4 / 5.0);
            h *= std::clamp(fac, 0.2, 5.0);
            prev_err = std::max(err, 1e-10);
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -1.0 / 5.0));
        }
    }
    state.g = std::move(y);
    return state;
}

double g1_closed_form(double g1_0, double t, const TraceParams& p) {
    const double e = std::exp(-t);
    return g1_0 * e + p.alpha * p.beta * (1.0 - e);
}

double fubm_moment(int k, double t) {
    if (k < 1) throw BadParameter("fubm_moment: k must be >= 1");
    if (t < 0.0) throw BadParameter("fubm_moment: t must be >= 0");
    // e^{-kt/2} sum_{j=0}^{k-1} (-t)^j / j! * binom(k, j+1) * k^{j-1},
    // terms built by the ratio term_j / term_{j-1} = (-t)/j * (k-j)/(j+1) * k
    double term = 1.0;  // j=0: binom(k,1) k^{-1} = 1
    double sum = term;
    for (int j = 1; j <= k - 1; ++j) {
        term *= (-t) / j * (static_cast<double>(k - j) / (j + 1)) * k;
        sum += term;
    }
    return std::exp(-0.5 * k * t) * sum;
}

void write_trajectory_csv(std::ostream& os, const std::vector<FlowState>& states) {
    if (states.empty()) return;
    const int N = states.front().moments.order();
    os << "t";
    for (int n = 1; n <= N; ++n) os << ",g" << n;
    os << "\n";
    for (const auto& s : states) {
        os << fmt17(s.time);
        for (double v : s.moments.g) os << "," << fmt17(v);
        os << "\n";
    }
}

}  // namespace liberation
