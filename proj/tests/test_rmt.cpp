#include <doctest.h>

#include <cmath>
#include <complex>

#include "liberation/moment_flow.hpp"
#include "liberation/rmt.hpp"

using namespace liberation;

namespace {

double eigen_residual(const HermitianMatrix& A, const EigenResult& e) {
    double r = 0.0;
    for (int j = 0; j < A.n; ++j)
        for (int i = 0; i < A.n; ++i) {
            std::complex<double> s = 0.0;
            for (int k = 0; k < A.n; ++k) s += A(i, k) * e.vectors(k, j);
            s -= e.values[static_cast<std::size_t>(j)] * e.vectors(i, j);
            r = std::max(r, std::abs(s));
        }
    return r;
}

// characteristic-polynomial roots of a 3x3 Hermitian matrix (trigonometric
// form of the real cubic)
std::array<double, 3> cubic_eigen_oracle(const HermitianMatrix& A) {
    const double a11 = A(0, 0).real(), a22 = A(1, 1).real(), a33 = A(2, 2).real();
    const std::complex<double> a12 = A(0, 1), a13 = A(0, 2), a23 = A(1, 2);
    const double tr = a11 + a22 + a33;
    const double q = tr / 3.0;
    const double p2 = std::norm(a12) + std::norm(a13) + std::norm(a23);
    const double b11 = a11 - q, b22 = a22 - q, b33 = a33 - q;
    const double p = std::sqrt((b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * p2) / 6.0);
    if (p == 0.0) return {q, q, q};
    // det(B/p) for Hermitian B = A - q I:
    //   d1 d2 d3 - d1|m23|^2 - d2|m13|^2 - d3|m12|^2 + 2 Re(m12 m23 conj(m13))
    const std::complex<double> m12 = a12 / p, m13 = a13 / p, m23 = a23 / p;
    const double d1 = b11 / p, d2 = b22 / p, d3 = b33 / p;
    const double det = d1 * d2 * d3 - d1 * std::norm(m23) - d2 * std::norm(m13) -
                       d3 * std::norm(m12) + 2.0 * std::real(m12 * m23 * std::conj(m13));
    const double r = 0.5 * det;
    const double phi = std::acos(std::clamp(r, -1.0, 1.0)) / 3.0;
    std::array<double, 3> lam{q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0),
                              q + 2.0 * p * std::cos(phi - 2.0 * M_PI / 3.0),
                              q + 2.0 * p * std::cos(phi)};
    std::sort(lam.begin(), lam.end());
    return lam;
}

}  // namespace

TEST_CASE("RngStream determinism") {
    RngStream a(7, 3), b(7, 3), c(7, 4);
    bool same = true, diff = false;
    for (int i = 0; i < 100; ++i) {
        const double va = a.gaussian();
        same = same && (va == b.gaussian());
        diff = diff || (va != c.gaussian());
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("gue_increment") {
    SUBCASE("zero time gives the zero matrix") {
        RngStream rng(1, 1);
        const auto X = gue_increment(8, 0.0, rng);
        for (const auto& v : X.a) CHECK(v == std::complex<double>(0.0, 0.0));
    }
    SUBCASE("hermitian by construction") {
        RngStream rng(1, 2);
        CHECK(hermiticity_error(gue_increment(16, 0.3, rng)) == 0.0);
    }
    SUBCASE("normalized trace of the square estimates dt") {
        const int d = 64, samples = 1000;
        const double dt = 0.01;
        double acc = 0.0, acc2 = 0.0;
        for (int s = 0; s < samples; ++s) {
            RngStream rng(99, static_cast<std::uint64_t>(s));
            const auto X = gue_increment(d, dt, rng);
            double tr2 = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) tr2 += std::norm(X(i, j));
            tr2 /= d;
            acc += tr2;
            acc2 += tr2 * tr2;
        }
        const double mean = acc / samples;
        const double sd = std::sqrt((acc2 / samples - mean * mean) / samples);
        CHECK(std::abs(mean - dt) <= 4.0 * sd + 1e-6);
    }
    SUBCASE("identical streams reproduce the draw") {
        RngStream r1(5, 9), r2(5, 9);
        const auto X1 = gue_increment(12, 0.5, r1);
        const auto X2 = gue_increment(12, 0.5, r2);
        CHECK(X1.a == X2.a);
    }
}

TEST_CASE("haar_unitary") {
    SUBCASE("unitarity residual") {
        RngStream rng(3, 1);
        CHECK(unitarity_error(haar_unitary(32, rng)) <= 1e-12);
    }
    SUBCASE("d = 1 is a uniform phase") {
        RngStream rng(3, 2);
        const auto U = haar_unitary(1, rng);
        CHECK(std::abs(std::abs(U(0, 0)) - 1.0) <= 1e-14);
    }
    SUBCASE("E|U_11|^2 = 1/d") {
        const int d = 16, samples = 2000;
        double acc = 0.0, acc2 = 0.0;
        for (int s = 0; s < samples; ++s) {
            RngStream rng(123, static_cast<std::uint64_t>(s));
            const auto U = haar_unitary(d, rng);
            const double v = std::norm(U(0, 0));
            acc += v;
            acc2 += v * v;
        }
        const double mean = acc / samples;
        const double sd = std::sqrt((acc2 / samples - mean * mean) / samples);
        CHECK(std::abs(mean - 1.0 / d) <= 4.0 * sd);
    }
}

TEST_CASE("hermitian_eigen") {
    SUBCASE("diagonal input") {
        HermitianMatrix D(3);
        D(0, 0) = 3.0;
        D(1, 1) = 1.0;
        D(2, 2) = 2.0;
        const auto e = hermitian_eigen(D);
        CHECK(e.values[0] == doctest::Approx(1.0));
        CHECK(e.values[1] == doctest::Approx(2.0));
        CHECK(e.values[2] == doctest::Approx(3.0));
    }
    SUBCASE("symmetric two by two") {
        HermitianMatrix A(2);
        A(0, 1) = 1.0;
        A(1, 0) = 1.0;
        const auto e = hermitian_eigen(A);
        CHECK(e.values[0] == doctest::Approx(-1.0));
        CHECK(e.values[1] == doctest::Approx(1.0));
    }
    SUBCASE("random Hermitian certification at d = 128") {
        RngStream rng(17, 1);
        const auto A = gue_increment(128, 1.0, rng);
        const auto e = hermitian_eigen(A);
        CHECK(eigen_residual(A, e) <= 1e-10 * 128);
        CHECK(unitarity_error(e.vectors) <= 1e-10 * 128);
        for (std::size_t i = 1; i < e.values.size(); ++i)
            CHECK(e.values[i] >= e.values[i - 1]);
    }
    SUBCASE("3x3 matches the characteristic polynomial roots") {
        for (int rep = 0; rep < 20; ++rep) {
            RngStream rng(900 + rep, 0);
            const auto A = gue_increment(3, 1.0, rng);
            const auto e = hermitian_eigen(A);
            const auto lam = cubic_eigen_oracle(A);
            for (int i = 0; i < 3; ++i)
                CHECK(std::abs(e.values[static_cast<std::size_t>(i)] - lam[static_cast<std::size_t>(i)]) <= 1e-12);
        }
    }
}

TEST_CASE("evolve_ubm") {
    SUBCASE("t = 0 is the identity") {
        RngStream rng(2, 2);
        const auto U = evolve_ubm(8, 0.0, 4, rng);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                CHECK(U(i, j) == std::complex<double>(i == j ? 1.0 : 0.0, 0.0));
    }
    SUBCASE("unitarity is preserved along the path") {
        RngStream rng(2, 3);
        const auto U = evolve_ubm(48, 1.0, 25, rng);
        CHECK(unitarity_error(U) <= 1e-10 * 48);
    }
    SUBCASE("weak first-order approach to the limiting trace") {
        // |E tr U_t - e^{-t/2}| = O(dt) (plus the O(1/d^2) finite-d bias)
        const int d = 48, trials = 200;
        const double t = 1.0, exact = fubm_moment(1, t);
        for (int steps : {6, 24}) {
            double acc = 0.0;
            for (int s = 0; s < trials; ++s) {
                RngStream rng(555, static_cast<std::uint64_t>(steps * 1000 + s));
                acc += mean_trace_power(evolve_ubm(d, t, steps, rng), 1);
            }
            const double mean = acc / trials;
            const double stat = 4.0 / (d * std::sqrt(static_cast<double>(trials)));
            CHECK(std::abs(mean - exact) <= 0.2 * (t / steps) + stat);
        }
    }
}

TEST_CASE("empirical_angle_measure") {
    const auto p = TraceParams::from_traces(0.5, 0.5);
    SUBCASE("t = 0 with equal coupling is the two-point law") {
        const auto r = empirical_angle_measure(32, p, 0.0, 1, 3, Coupling::equal, 7);
        CHECK(r.measure.atom_mass_at(0.0) == doctest::Approx(0.5));
        CHECK(r.measure.atom_mass_at(1.0) == doctest::Approx(0.5));
        for (auto c : r.bin_counts) CHECK(c == 0);
    }
    SUBCASE("moments approach the hierarchy at moderate size") {
        const auto r = empirical_angle_measure(64, p, 1.0, 25, 8, Coupling::equal, 11);
        MomentVector g0;
        g0.g0 = 1.0;
        g0.g.assign(16, 0.5);
        const auto g = evolve_moments(g0, 1.0, p, 1e-10);
        const auto emp = moments(r.measure, 4);
        for (int n = 1; n <= 4; ++n)
            CHECK(std::abs(emp[n - 1] - g.g[n - 1]) <= 0.05);  // d = 64 fluctuations
    }
    SUBCASE("bitwise determinism regardless of threading") {
        EmpiricalOptions serial;
        serial.threads = 1;
        EmpiricalOptions pooled;
        pooled.threads = 4;
        const auto a = empirical_angle_measure(24, p, 0.4, 6, 5, Coupling::equal, 13, serial);
        const auto b = empirical_angle_measure(24, p, 0.4, 6, 5, Coupling::equal, 13, pooled);
        CHECK(a.bin_counts == b.bin_counts);
        CHECK(a.atom0_count == b.atom0_count);
        CHECK(a.atom1_count == b.atom1_count);
        CHECK(a.mean_trace_u == b.mean_trace_u);
    }
    SUBCASE("haar_free coupling reproduces the general-position mass at 1") {
        const auto p2 = TraceParams::from_traces(0.7, 0.8);
        const auto r = empirical_angle_measure(64, p2, 1.0, 20, 6, Coupling::haar_free, 5);
        // max{alpha + beta - 1, 0} = 0.5
        CHECK(atom_mass_at_one(r.measure, 1e-6) == doctest::Approx(0.5).epsilon(0.12));
    }
}

TEST_CASE("atom_mass_at_one") {
    const std::vector<double> ones{1.0, 1.0, 1.0};
    CHECK(atom_mass_at_one(ones, 1e-8) == 1.0);
    const std::vector<double> mixed{0.0, 0.5, 1.0, 1.0 - 1e-9};
    CHECK(atom_mass_at_one(mixed, 1e-8) == doctest::Approx(0.5));
    const std::vector<double> bad{1.5};
    CHECK_THROWS_AS((void)atom_mass_at_one(bad, 1e-8), BadParameter);
}

TEST_CASE("histogram CSV and atoms sidecar") {
    const auto p = TraceParams::from_traces(0.5, 0.5);
    const auto r = empirical_angle_measure(16, p, 0.5, 4, 2, Coupling::equal, 3);
    std::ostringstream os;
    write_histogram_csv(os, r);
    CHECK(os.str().rfind("bin_left,bin_right,count\n", 0) == 0);
    const std::string sidecar = atoms_sidecar_json(r);
    CHECK(sidecar.find("atoms") != std::string::npos);
}
