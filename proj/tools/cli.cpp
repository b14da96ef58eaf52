#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "liberation/entropy.hpp"
#include "liberation/format.hpp"
#include "liberation/moment_flow.hpp"
#include "liberation/rmt.hpp"
#include "liberation/subordination.hpp"
#include "liberation/transform.hpp"
#include "liberation/version.hpp"

namespace liberation::cli {

namespace {

std::vector<double> parse_number_list(const std::string& text, std::size_t base_pos) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const char* first = text.data() + pos;
        const char* last = text.data() + comma;
        double v = 0.0;
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last)
            throw ParseError("bad number '" + text.substr(pos, comma - pos) + "'",
                             base_pos + pos);
        out.push_back(v);
        if (comma == text.size()) break;
        pos = comma + 1;
    }
    return out;
}

// "t" | "t1,t2,..." | "start:step:stop"
std::vector<double> parse_time_grid(const std::string& text) {
    if (text.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::size_t pos = 0;
        while (true) {
            const std::size_t colon = std::min(text.find(':', pos), text.size());
            auto sub = parse_number_list(text.substr(pos, colon - pos), pos);
            parts.insert(parts.end(), sub.begin(), sub.end());
            if (colon == text.size()) break;
            pos = colon + 1;
        }
        if (parts.size() != 3 || parts[1] <= 0.0 || parts[2] < parts[0])
            throw ParseError("time grid must be start:step:stop", 0);
        std::vector<double> ts;
        for (double t = parts[0]; t <= parts[2] + 1e-12 * std::max(1.0, parts[2]);
             t += parts[1])
            ts.push_back(t);
        return ts;
    }
    return parse_number_list(text, 0);
}

std::string provenance_line(const Scenario& sc, const std::string& name) {
    std::string line = "# libflow " + std::string(kVersion) + " " + name;
    for (const auto& [k, v] : sc.params) line += " --" + k + " " + v;
    return line;
}

nlohmann::json provenance_json(const Scenario& sc, const std::string& name) {
    nlohmann::json j;
    j["command"] = name;
    j["version"] = kVersion;
    j["flags"] = sc.params;
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw BadParameter("cannot open output file '" + path + "'");
    os << content;
}

void write_status(const std::string& out_path, bool ok,
                  const std::vector<std::string>& warnings) {
    nlohmann::json j;
    j["ok"] = ok;
    j["warnings"] = warnings;
    write_file(out_path + ".status.json", j.dump(2) + "\n");
}

// Flat key=value defaults: keys already present as flags keep their command
// line values, everything else is appended as synthesized flags.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream is(path);
    if (!is) throw BadParameter("cannot open config file '" + path + "'");
    std::vector<std::string> merged = args;
    std::string line;
    while (std::getline(is, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key == "config") continue;
        const std::string flag = "--" + key;
        bool present = false;
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        if (!present) {
            merged.push_back(flag);
            merged.push_back(value);
        }
    }
    return merged;
}

}  // namespace

SpectralMeasure parse_measure_spec(const std::string& text, const TraceParams& p,
                                   MeasureLevel level, std::size_t grid_n) {
    if (text.empty()) throw ParseError("empty measure spec", 0);
    SpectralMeasure m;
    if (text.rfind("file:", 0) == 0) {
        const std::string path = text.substr(5);
        std::ifstream is(path);
        if (!is) throw ParseError("cannot open measure file '" + path + "'", 5);
        std::stringstream ss;
        ss << is.rdbuf();
        m = measure_from_json(ss.str());
        // normalize the file's level to the requested one
        const double mass = total_mass(m);
        const double min_trace = p.min_trace();
        const double tol = 1e-6;
        if (level == MeasureLevel::nu) {
            if (std::abs(mass - 1.0) <= tol)
                m = split_static_atom(m, p, tol).nu;
            else if (std::abs(mass - min_trace) > tol)
                throw BadParameter("measure file mass " + fmt17(mass) +
                                   " matches neither level");
        } else {
            if (std::abs(mass - min_trace) <= tol)
                m.add_atom(0.0, 1.0 - min_trace);
            else if (std::abs(mass - 1.0) > tol)
                throw BadParameter("measure file mass " + fmt17(mass) +
                                   " matches neither level");
        }
        return m;
    }
    const std::size_t colon = text.find(':');
    const std::string name = text.substr(0, colon);
    std::vector<double> extra;
    if (colon != std::string::npos)
        extra = parse_number_list(text.substr(colon + 1), colon + 1);
    return preset(preset_from_name(name), p, level, extra, grid_n);
}

namespace {

struct CommonFlags {
    double alpha = 0.5;
    double beta = 0.5;
    std::string init = "uniform";
    std::string out;
    std::size_t grid = 512;
};

void add_common(CLI::App* cmd, CommonFlags& c, bool with_init = true) {
    cmd->add_option("--config", "key=value defaults file (flags take precedence)");
    cmd->add_option("--alpha", c.alpha, "trace of p");
    cmd->add_option("--beta", c.beta, "trace of q");
    if (with_init) cmd->add_option("--init", c.init, "initial measure spec");
    cmd->add_option("--out", c.out, "output path")->required();
    cmd->add_option("--grid", c.grid, "grid resolution");
}

Scenario make_scenario(Command command, const CLI::App* cmd) {
    Scenario sc{command, {}};
    for (const auto* opt : cmd->get_options()) {
        if (!opt->results().empty() && opt->get_name().size() > 2)
            sc.params[opt->get_name().substr(2)] = opt->results().front();
    }
    return sc;
}

int run_evolve(const CommonFlags& c, const std::string& tspec, int order, double tol,
               const Scenario& sc) {
    const auto p = TraceParams::from_traces(c.alpha, c.beta);
    const auto mu = parse_measure_spec(c.init, p, MeasureLevel::mu, c.grid);
    const auto ts = parse_time_grid(tspec);
    auto g = MomentVector::from_measure(mu, order, p);
    std::vector<FlowState> states;
    double t_prev = 0.0;
    for (double t : ts) {
        if (t < t_prev) throw BadParameter("time grid must be nondecreasing");
        g = evolve_moments(g, t - t_prev, p, tol);
        t_prev = t;
        states.push_back({t, g, p});
    }
    std::ostringstream os;
    os << provenance_line(sc, "evolve") << "\n";
    write_trajectory_csv(os, states);
    write_file(c.out, os.str());
    write_status(c.out, true, {});
    return 0;
}

int run_density(const CommonFlags& c, double t, const Scenario& sc) {
    const auto p = TraceParams::from_traces(c.alpha, c.beta);
    if (!p.trace_half()) throw BadParameter("density requires alpha = beta = 1/2");
    const auto nu0 = parse_measure_spec(c.init, p, MeasureLevel::nu, c.grid);
    const auto prob = SubordinationProblem::make(nu0, t);
    const auto xs = lobatto_interior_nodes(c.grid);
    const auto rows = density_sweep(prob, xs);
    std::ostringstream os;
    os << provenance_line(sc, "density") << "\n";
    write_sweep_csv(os, rows);
    write_file(c.out, os.str());
    bool ok = true;
    std::vector<std::string> warnings;
    for (const auto& r : rows)
        if (!r.converged) {
            ok = false;
            warnings.push_back("no convergence at x = " + fmt17(r.x));
        }
    write_status(c.out, ok, warnings);
    return ok ? 0 : 3;
}

int run_jacobi(const CommonFlags& c, const std::string& density_out, const Scenario& sc) {
    const auto m = jacobi_limit(c.alpha, c.beta, c.grid);
    nlohmann::json j = nlohmann::json::parse(to_json(m));
    j["provenance"] = provenance_json(sc, "jacobi");
    write_file(c.out, j.dump() + "\n");
    if (!density_out.empty()) {
        std::ostringstream os;
        os << provenance_line(sc, "jacobi") << "\n";
        write_density_csv(os, m.density.nodes, m.density.values);
        write_file(density_out, os.str());
    }
    write_status(c.out, true, {});
    return 0;
}

int run_entropy(const CommonFlags& c, const Scenario& sc) {
    const auto p = TraceParams::from_traces(c.alpha, c.beta);
    const auto nu = parse_measure_spec(c.init, p, MeasureLevel::nu, c.grid);
    SpectralMeasure nu_hat = nu;
    const double mass = total_mass(nu_hat);
    if (mass <= 0.0) throw BadParameter("entropy: empty measure");
    for (auto& a : nu_hat.atoms) a.mass /= mass;
    for (auto& v : nu_hat.density.values) v /= mass;
    nlohmann::json j;
    j["chi_proj"] = chi_proj(nu_hat, p);
    j["fisher"] = nu_hat.atoms.empty() ? fisher(nu_hat.density, p)
                                       : std::numeric_limits<double>::infinity();
    j["provenance"] = provenance_json(sc, "entropy");
    write_file(c.out, j.dump(2) + "\n");
    write_status(c.out, true, {});
    return 0;
}

int run_unify(const CommonFlags& c, double tmax, double tmin, const Scenario& sc) {
    const auto p = TraceParams::from_traces(c.alpha, c.beta);
    if (!p.trace_half()) throw BadParameter("unify requires alpha = beta = 1/2");
    const auto nu0 = parse_measure_spec(c.init, p, MeasureLevel::nu, c.grid);
    const auto prob = SubordinationProblem::make(nu0, std::max(tmax, 1e-3));
    EntropyConfig cfg;
    cfg.T_max = tmax;
    cfg.t_min = tmin;
    cfg.grid_n = c.grid;
    const auto res = istar(prob, cfg);
    // chi at t0 from the initial data, chi at infinity from the steady state
    SpectralMeasure nu_hat0 = nu0;
    for (auto& v : nu_hat0.density.values) v *= 2.0;
    for (auto& a : nu_hat0.atoms) a.mass *= 2.0;
    const double chi0 = chi_proj(nu_hat0, p, cfg);
    SpectralMeasure arcs = preset(Preset::arcsine, p, MeasureLevel::nu, {}, c.grid);
    for (auto& v : arcs.density.values) v *= 2.0;
    const double chi_inf = chi_proj(arcs, p, cfg);
    nlohmann::json j = nlohmann::json::parse(report_json(res, chi0, chi_inf));
    j["provenance"] = provenance_json(sc, "unify");
    write_file(c.out, j.dump(2) + "\n");
    std::vector<std::string> warnings;
    if (res.truncated) warnings.push_back("profile truncated at t_min = " + fmt17(tmin));
    write_status(c.out, true, warnings);
    return 0;
}

int run_rmt(const CommonFlags& c, double t, int d, int steps, int trials,
            const std::string& coupling, std::uint64_t seed, const Scenario& sc) {
    const auto p = TraceParams::from_traces(c.alpha, c.beta);
    Coupling cp;
    if (coupling == "equal")
        cp = Coupling::equal;
    else if (coupling == "haar_free")
        cp = Coupling::haar_free;
    else
        throw BadParameter("coupling must be equal or haar_free");
    if (steps <= 0) steps = std::max(1, static_cast<int>(std::ceil(100.0 * t)));
    const auto res = empirical_angle_measure(d, p, t, steps, trials, cp, seed);
    std::ostringstream os;
    os << provenance_line(sc, "rmt") << "\n";
    write_histogram_csv(os, res);
    write_file(c.out, os.str());
    write_file(c.out + ".atoms.json", atoms_sidecar_json(res) + "\n");
    write_status(c.out, true, {});
    return 0;
}

int run_crosscheck(const CommonFlags& c, double t, int order, int points, double radius,
                   const Scenario& sc) {
    const auto p = TraceParams::from_traces(c.alpha, c.beta);
    if (!p.trace_half()) throw BadParameter("crosscheck requires alpha = beta = 1/2");
    if (radius <= 1.05) throw BadParameter("crosscheck radius must exceed 1.05");
    const auto nu0 = parse_measure_spec(c.init, p, MeasureLevel::nu, c.grid);
    const auto prob = SubordinationProblem::make(nu0, t);

    const auto mu = parse_measure_spec(c.init, p, MeasureLevel::mu, c.grid);
    auto g = MomentVector::from_measure(mu, order, p);
    g = evolve_moments(g, t, p, 1e-12);

    double worst = 0.0;
    bool ok = true;
    std::vector<std::string> warnings;
    nlohmann::json samples = nlohmann::json::array();
    for (int k = 0; k < points; ++k) {
        const double th = std::numbers::pi * (k + 0.5) / points;
        const Complex z = radius * Complex(std::cos(th), std::sin(th));
        const auto r = solve_subordinator(prob, z, 1e-13);
        if (!r.converged) {
            ok = false;
            warnings.push_back("no convergence at z = " + fmt17(z.real()) + "+" +
                               fmt17(z.imag()) + "i");
            continue;
        }
        const Complex Hs = sqrt_z_zm1(z) * shifted_G_series(g, p, z);
        const double diff = std::abs(r.H - Hs);
        worst = std::max(worst, diff);
        samples.push_back({{"re_z", z.real()}, {"im_z", z.imag()}, {"abs_diff", diff}});
    }
    nlohmann::json j;
    j["max_abs_diff"] = worst;
    j["samples"] = samples;
    j["provenance"] = provenance_json(sc, "crosscheck");
    write_file(c.out, j.dump(2) + "\n");
    write_status(c.out, ok, warnings);
    return ok ? 0 : 3;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"spectral-measure flow of the operator-valued angle under free liberation"};
    app.require_subcommand(1);

    CommonFlags c_evolve, c_density, c_jacobi, c_entropy, c_unify, c_rmt, c_cross;
    std::string tspec = "1";
    int order = 64;
    double tol = 1e-10;
    auto* evolve = app.add_subcommand("evolve", "integrate the moment hierarchy");
    add_common(evolve, c_evolve);
    evolve->add_option("--t", tspec, "time grid start:step:stop or list");
    evolve->add_option("--order", order, "truncation order N");
    evolve->add_option("--tol", tol, "local error tolerance");

    double t_density = 1.0;
    auto* density = app.add_subcommand("density", "boundary density via subordination");
    add_common(density, c_density);
    density->add_option("--t", t_density, "time");

    std::string density_out;
    auto* jacobi = app.add_subcommand("jacobi", "large-time limit measure");
    add_common(jacobi, c_jacobi, false);
    jacobi->add_option("--density-out", density_out, "also write x,rho CSV");

    auto* entropy = app.add_subcommand("entropy", "chi_proj and Fisher of a measure");
    add_common(entropy, c_entropy);

    double tmax = 20.0, tmin = 0.0;
    auto* unify = app.add_subcommand("unify", "mutual information report");
    add_common(unify, c_unify);
    unify->add_option("--tmax", tmax, "integration horizon");
    unify->add_option("--tmin", tmin, "lower cutoff for singular data");

    double t_rmt = 1.0;
    int d = 256, steps = 0, trials = 20;
    std::string coupling = "equal";
    std::uint64_t seed = 1;
    auto* rmt = app.add_subcommand("rmt", "random-matrix histogram of Q U_t P U_t^* Q");
    add_common(rmt, c_rmt, false);
    rmt->add_option("--t", t_rmt, "time");
    rmt->add_option("--d", d, "matrix dimension");
    rmt->add_option("--steps", steps, "Euler steps (default 100 t)");
    rmt->add_option("--trials", trials, "independent trials");
    rmt->add_option("--coupling", coupling, "equal | haar_free");
    rmt->add_option("--seed", seed, "RNG seed");

    double t_cross = 0.5, radius = 2.0;
    int cross_order = 64, cross_points = 20;
    auto* cross = app.add_subcommand("crosscheck", "subordination vs moment series");
    add_common(cross, c_cross);
    cross->add_option("--t", t_cross, "time");
    cross->add_option("--order", cross_order, "moment order");
    cross->add_option("--points", cross_points, "sample points on the arc");
    cross->add_option("--radius", radius, "arc radius (must exceed 1)");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = merge_config(args);
        // CLI11 consumes reversed argument vectors
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
        if (evolve->parsed())
            return run_evolve(c_evolve, tspec, order, tol,
                              make_scenario(Command::evolve, evolve));
        if (density->parsed())
            return run_density(c_density, t_density,
                               make_scenario(Command::density, density));
        if (jacobi->parsed())
            return run_jacobi(c_jacobi, density_out, make_scenario(Command::jacobi, jacobi));
        if (entropy->parsed())
            return run_entropy(c_entropy, make_scenario(Command::entropy, entropy));
        if (unify->parsed())
            return run_unify(c_unify, tmax, tmin, make_scenario(Command::unify, unify));
        if (rmt->parsed())
            return run_rmt(c_rmt, t_rmt, d, steps, trials, coupling, seed,
                           make_scenario(Command::rmt, rmt));
        if (cross->parsed())
            return run_crosscheck(c_cross, t_cross, cross_order, cross_points, radius,
                                  make_scenario(Command::crosscheck, cross));
        return 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace liberation::cli
