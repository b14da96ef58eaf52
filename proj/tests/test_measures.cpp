#include <doctest.h>

#include <cmath>
#include <random>

#include "liberation/measures.hpp"
#include "liberation/transform.hpp"

using namespace liberation;

namespace {

// beta-integral oracle for the arcsine moments: the mass-m arcsine law on
// [0,1] has n-th moment m * binom(2n,n) / 4^n
double arcsine_moment(double mass, int n) {
    double b = 1.0;
    for (int k = 1; k <= n; ++k) b *= (2.0 * k - 1.0) / (2.0 * k);  // binom(2n,n)/4^n
    return mass * b;
}

TraceParams half() { return TraceParams::from_traces(0.5, 0.5); }

}  // namespace

TEST_CASE("total_mass: atoms, scaled arcsine, empty") {
    SpectralMeasure m;
    m.add_atom(0.0, 0.5);
    m.add_atom(1.0, 0.5);
    CHECK(total_mass(m) == doctest::Approx(1.0).epsilon(1e-15));

    const auto arc = preset(Preset::arcsine, half(), MeasureLevel::nu);
    CHECK(total_mass(arc) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK(total_mass(SpectralMeasure{}) == 0.0);
}

TEST_CASE("moments of atoms and the arcsine preset") {
    SpectralMeasure d1;
    d1.add_atom(1.0, 0.5);
    auto g = moments(d1, 3);
    CHECK(g[0] == doctest::Approx(0.5));
    CHECK(g[1] == doctest::Approx(0.5));
    CHECK(g[2] == doctest::Approx(0.5));

    const auto arc = preset(Preset::arcsine, half(), MeasureLevel::nu);
    g = moments(arc, 2);
    CHECK(g[0] == doctest::Approx(arcsine_moment(0.5, 1)).epsilon(1e-12));  // 0.25
    CHECK(g[1] == doctest::Approx(arcsine_moment(0.5, 2)).epsilon(1e-12));  // 0.1875
    CHECK(arcsine_moment(0.5, 1) == doctest::Approx(0.25));
    CHECK(arcsine_moment(0.5, 2) == doctest::Approx(0.1875));

    SpectralMeasure bern;
    bern.add_atom(0.0, 0.5);
    bern.add_atom(1.0, 0.5);
    g = moments(bern, 2);
    CHECK(g[0] == doctest::Approx(0.5));
    CHECK(g[1] == doctest::Approx(0.5));
}

TEST_CASE("moments are nonincreasing in the order for measures on [0,1]") {
    for (auto name : {Preset::uniform, Preset::arcsine, Preset::bernoulli}) {
        const auto m = preset(name, half(), MeasureLevel::mu);
        const auto g = moments(m, 12);
        for (std::size_t n = 1; n < g.size(); ++n) CHECK(g[n] <= g[n - 1] + 1e-14);
    }
}

TEST_CASE("split_static_atom") {
    SUBCASE("exact bernoulli split") {
        SpectralMeasure mu;
        mu.add_atom(0.0, 0.5);
        mu.add_atom(1.0, 0.5);
        const auto s = split_static_atom(mu, half());
        CHECK(s.atom_mass == doctest::Approx(0.5));
        CHECK(s.nu.atoms.size() == 1);
        CHECK(s.nu.atoms[0].location == 1.0);
        CHECK(total_mass(s.nu) == doctest::Approx(0.5));
    }
    SUBCASE("jacobi limit at (0.3, 0.6) sheds mass 0.7") {
        const auto p = TraceParams::from_traces(0.3, 0.6);
        const auto mu = jacobi_limit(0.3, 0.6);
        const auto s = split_static_atom(mu, p);
        CHECK(s.atom_mass == doctest::Approx(0.7));  // 1 - min{0.3, 0.6}
        CHECK(total_mass(s.nu) == doctest::Approx(0.3).epsilon(1e-10));
    }
    SUBCASE("missing atom raises MassDeficit") {
        const auto mu = preset(Preset::uniform, half(), MeasureLevel::nu);  // no atom at 0
        CHECK_THROWS_AS((void)split_static_atom(mu, half()), MassDeficit);
    }
    SUBCASE("split then re-add reproduces the input") {
        const auto mu = preset(Preset::arcsine, half(), MeasureLevel::mu);
        auto s = split_static_atom(mu, half());
        s.nu.add_atom(0.0, s.atom_mass);
        CHECK(s.nu.atoms.size() == mu.atoms.size());
        for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
            CHECK(std::abs(s.nu.atoms[i].location - mu.atoms[i].location) <= 1e-14);
            CHECK(std::abs(s.nu.atoms[i].mass - mu.atoms[i].mass) <= 1e-14);
        }
        for (std::size_t i = 0; i < mu.density.size(); ++i)
            CHECK(std::abs(s.nu.density.values[i] - mu.density.values[i]) <= 1e-14);
    }
}

TEST_CASE("presets") {
    SUBCASE("bernoulli at mu level is the two-point measure") {
        const auto m = preset(Preset::bernoulli, half(), MeasureLevel::mu);
        CHECK(m.atom_mass_at(0.0) == doctest::Approx(0.5));
        CHECK(m.atom_mass_at(1.0) == doctest::Approx(0.5));
        CHECK(m.density.empty());
    }
    SUBCASE("arcsine density values match the closed form") {
        const auto m = preset(Preset::arcsine, half(), MeasureLevel::nu);
        for (std::size_t i = 0; i < m.density.size(); i += 37) {
            const double x = m.density.nodes[i];
            const double want = 1.0 / (2.0 * M_PI * std::sqrt(x * (1.0 - x)));
            CHECK(m.density.values[i] == doctest::Approx(want).epsilon(1e-12));
        }
    }
    SUBCASE("uniform density is flat at min-trace level") {
        const auto m = preset(Preset::uniform, half(), MeasureLevel::nu);
        for (std::size_t i = 0; i < m.density.size(); i += 61)
            CHECK(m.density.values[i] == doctest::Approx(0.5).epsilon(1e-5));
    }
    SUBCASE("two_bump splits the mass equally between the bumps") {
        const double extra[] = {0.1, 0.2, 0.7, 0.8};
        const auto m = preset(Preset::two_bump, half(), MeasureLevel::nu, extra);
        double left = 0.0;
        for (std::size_t i = 0; i < m.density.size(); ++i)
            if (m.density.nodes[i] < 0.5) left += m.density.weights[i] * m.density.values[i];
        CHECK(left == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(total_mass(m) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("malformed extras raise BadParameter") {
        CHECK_THROWS_AS((void)preset(Preset::point, half(), MeasureLevel::nu), BadParameter);
        const double bad[] = {0.4, 0.2};
        CHECK_THROWS_AS((void)preset(Preset::two_bump, half(), MeasureLevel::nu, bad),
                        BadParameter);
    }
    SUBCASE("every preset has unit mass at mu level") {
        const auto p = TraceParams::from_traces(0.3, 0.6);
        const double pt[] = {0.4};
        const double tb[] = {0.1, 0.2, 0.7, 0.8};
        CHECK(total_mass(preset(Preset::point, p, MeasureLevel::mu, pt)) ==
              doctest::Approx(1.0).epsilon(1e-10));
        CHECK(total_mass(preset(Preset::bernoulli, p, MeasureLevel::mu)) ==
              doctest::Approx(1.0).epsilon(1e-10));
        CHECK(total_mass(preset(Preset::uniform, p, MeasureLevel::mu)) ==
              doctest::Approx(1.0).epsilon(1e-10));
        CHECK(total_mass(preset(Preset::arcsine, p, MeasureLevel::mu)) ==
              doctest::Approx(1.0).epsilon(1e-10));
        CHECK(total_mass(preset(Preset::two_bump, p, MeasureLevel::mu, tb)) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("total_mass is additive under concatenation") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(0.01, 0.99);
    SpectralMeasure a = preset(Preset::uniform, half(), MeasureLevel::nu);
    SpectralMeasure b;
    for (int i = 0; i < 5; ++i) b.add_atom(uni(rng), uni(rng));
    SpectralMeasure both = a;
    for (const auto& at : b.atoms) both.add_atom(at.location, at.mass);
    CHECK(total_mass(both) == doctest::Approx(total_mass(a) + total_mass(b)).epsilon(1e-14));
}

TEST_CASE("JSON round trip is bit exact") {
    const double tb[] = {0.1, 0.2, 0.7, 0.8};
    for (const auto& m :
         {preset(Preset::arcsine, half(), MeasureLevel::mu),
          preset(Preset::two_bump, half(), MeasureLevel::nu, tb)}) {
        const std::string once = to_json(m);
        const auto back = measure_from_json(once);
        CHECK(to_json(back) == once);
        // bitwise identity of the payloads
        REQUIRE(back.density.size() == m.density.size());
        for (std::size_t i = 0; i < m.density.size(); ++i) {
            CHECK(back.density.nodes[i] == m.density.nodes[i]);
            CHECK(back.density.values[i] == m.density.values[i]);
            CHECK(back.density.weights[i] == m.density.weights[i]);
        }
    }
}

TEST_CASE("weight reconstruction from bare nodes") {
    SUBCASE("global Chebyshev pattern is recognized") {
        const auto nodes = chebyshev_nodes(128);
        const auto w = reconstruct_weights(nodes);
        const auto want = chebyshev_weights(128);
        for (std::size_t i = 0; i < w.size(); ++i)
            CHECK(w[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
    SUBCASE("two_bump sub-blocks are recognized") {
        const double tb[] = {0.1, 0.2, 0.7, 0.8};
        const auto m = preset(Preset::two_bump, half(), MeasureLevel::nu, tb, 128);
        const auto w = reconstruct_weights(m.density.nodes);
        for (std::size_t i = 0; i < w.size(); ++i)
            CHECK(w[i] == doctest::Approx(m.density.weights[i]).epsilon(1e-10));
    }
    SUBCASE("irregular nodes fall back to trapezoid") {
        const std::vector<double> nodes{0.1, 0.2, 0.4, 0.5, 0.9};
        const auto w = reconstruct_weights(nodes);
        CHECK(w[0] == doctest::Approx(0.05));
        CHECK(w[2] == doctest::Approx(0.15));
        CHECK(w[4] == doctest::Approx(0.2));
    }
}

TEST_CASE("TraceParams derived quantities") {
    const auto p = TraceParams::from_traces(0.3, 0.6);
    CHECK(p.a == doctest::Approx(2 * 0.3 - 1.0));
    CHECK(p.b == doctest::Approx(0.3));
    CHECK(p.alpha11 == 0.0);
    CHECK(p.alpha00 == doctest::Approx(0.1));
    CHECK(p.alpha10 == 0.0);
    CHECK(p.alpha01 == doctest::Approx(0.3));
    CHECK_THROWS_AS((void)TraceParams::from_traces(0.0, 0.5), BadParameter);
    CHECK_THROWS_AS((void)TraceParams::from_traces(0.5, 1.2), BadParameter);
}
