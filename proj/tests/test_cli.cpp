#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "cli.hpp"
#include "liberation/measures.hpp"

using namespace liberation;
namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<const char*> args) {
    std::vector<const char*> argv{"libflow"};
    argv.insert(argv.end(), args.begin(), args.end());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("libflow_test_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

TraceParams half() { return TraceParams::from_traces(0.5, 0.5); }

}  // namespace

TEST_CASE("parse_measure_spec") {
    SUBCASE("bare preset names") {
        const auto m = cli::parse_measure_spec("bernoulli", half(), MeasureLevel::mu);
        CHECK(m.atom_mass_at(0.0) == doctest::Approx(0.5));
        CHECK(m.atom_mass_at(1.0) == doctest::Approx(0.5));
    }
    SUBCASE("parameterized presets") {
        const auto m =
            cli::parse_measure_spec("two_bump:0.1,0.2,0.7,0.8", half(), MeasureLevel::nu);
        CHECK(total_mass(m) == doctest::Approx(0.5).epsilon(1e-10));
        const auto pt = cli::parse_measure_spec("point:0.25", half(), MeasureLevel::nu);
        CHECK(pt.atom_mass_at(0.25) == doctest::Approx(0.5));
    }
    SUBCASE("file round trip with level normalization") {
        TempDir tmp;
        const auto nu = preset(Preset::arcsine, half(), MeasureLevel::nu);
        const auto path = tmp.path / "init.json";
        std::ofstream(path) << to_json(nu);
        const auto mu =
            cli::parse_measure_spec("file:" + path.string(), half(), MeasureLevel::mu);
        CHECK(total_mass(mu) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(mu.atom_mass_at(0.0) == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("parse errors carry a position") {
        CHECK_THROWS_AS(
            (void)cli::parse_measure_spec("two_bump:0.1,oops", half(), MeasureLevel::nu),
            ParseError);
        try {
            (void)cli::parse_measure_spec("two_bump:0.1,oops", half(), MeasureLevel::nu);
        } catch (const ParseError& e) {
            CHECK(e.position == 13);
        }
        CHECK_THROWS_AS((void)cli::parse_measure_spec("nosuch", half(), MeasureLevel::nu),
                        BadParameter);
    }
}

TEST_CASE("evolve command writes the trajectory with provenance") {
    TempDir tmp;
    const auto out = (tmp.path / "traj.csv").string();
    const int rc = run_cli({"evolve", "--alpha", "0.5", "--beta", "0.5", "--init",
                            "bernoulli", "--t", "0:0.5:1", "--order", "4", "--out",
                            out.c_str()});
    CHECK(rc == 0);
    const std::string text = slurp(out);
    CHECK(text.rfind("# libflow", 0) == 0);
    CHECK(text.find("t,g1,g2,g3,g4\n") != std::string::npos);
    CHECK(slurp(out + ".status.json").find("\"ok\": true") != std::string::npos);
}

TEST_CASE("validation failures exit with code 2") {
    TempDir tmp;
    const auto out = (tmp.path / "x.csv").string();
    CHECK(run_cli({"evolve", "--init", "nosuch", "--out", out.c_str()}) == 2);
    CHECK(run_cli({"evolve"}) == 2);  // missing --out
    CHECK(run_cli({"density", "--alpha", "0.4", "--beta", "0.5", "--out", out.c_str()}) == 2);
}

TEST_CASE("rmt command is deterministic given the seed") {
    TempDir tmp;
    const auto out1 = (tmp.path / "h1.csv").string();
    const auto out2 = (tmp.path / "h2.csv").string();
    auto args = [&](const std::string& out) {
        return std::vector<const char*>{"libflow", "rmt",     "--d",    "16",
                                        "--t",     "0.5",     "--steps", "4",
                                        "--trials", "3",      "--seed", "7",
                                        "--out",   out.c_str()};
    };
    auto a1 = args(out1);
    CHECK(cli::run(static_cast<int>(a1.size()), a1.data()) == 0);
    auto a2 = args(out2);
    CHECK(cli::run(static_cast<int>(a2.size()), a2.data()) == 0);
    // identical apart from the provenance line naming the output path
    auto body = [](const std::string& text) { return text.substr(text.find('\n')); };
    CHECK(body(slurp(out1)) == body(slurp(out2)));
    CHECK(slurp(out1 + ".atoms.json") == slurp(out2 + ".atoms.json"));
}

TEST_CASE("crosscheck command validates the moment series against the solver") {
    TempDir tmp;
    const auto out = (tmp.path / "cc.json").string();
    const int rc = run_cli({"crosscheck", "--init", "bernoulli", "--t", "0.4", "--points",
                            "6", "--order", "48", "--grid", "128", "--out", out.c_str()});
    CHECK(rc == 0);
    const auto text = slurp(out);
    CHECK(text.find("max_abs_diff") != std::string::npos);
    const double got = std::stod(text.substr(text.find("max_abs_diff") + 15));
    CHECK(got <= 1e-8);
}

TEST_CASE("config file supplies defaults that flags override") {
    TempDir tmp;
    const auto cfg = (tmp.path / "run.cfg").string();
    const auto out = (tmp.path / "traj.csv").string();
    std::ofstream(cfg) << "order=3\ninit=bernoulli\nout=" << out << "\nt=0:0.5:1\n";
    const int rc = run_cli({"evolve", "--config", cfg.c_str(), "--order", "5"});
    CHECK(rc == 0);
    CHECK(slurp(out).find("t,g1,g2,g3,g4,g5\n") != std::string::npos);
}
