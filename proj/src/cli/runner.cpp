#include "phonoloc/cli/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "phonoloc/errors.hpp"
#include "phonoloc/linalg.hpp"

#ifndef PHONOLOC_VERSION
#define PHONOLOC_VERSION "0.0.0"
#endif

namespace phonoloc::cli {

namespace {

using disorder::DisorderModel;

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }

chain::ChainParams sized(const RunConfig& c, std::size_t n) {
    auto p = c.chain;
    p.n_ions = n;
    return p;
}

DisorderModel make_model(const RunConfig& c, const std::string& kind, std::size_t n) {
    if (kind == "product") return DisorderModel::product(n, c.disorder.p);
    if (kind == "dimer") return DisorderModel::dimer_bell(n);
    if (kind == "clean") return DisorderModel::clean(n, static_cast<std::uint8_t>(c.disorder.value));
    return disorder::load_explicit(c.disorder.file);
}

Json fit_json(const dynamics::LocalizationFit& f) {
    Json j = {{"valid", f.valid},
              {"xi", f.valid ? Json(f.xi) : Json(nullptr)},
              {"slope", f.slope},
              {"intercept", f.intercept},
              {"r_squared", f.r_squared},
              {"n_points", f.n_points},
              {"window", {f.fit_window.min_distance, f.fit_window.max_distance}},
              {"window_shrunk", f.window_shrunk}};
    if (!f.diagnostic.empty()) j["diagnostic"] = f.diagnostic;
    return j;
}

std::vector<double> default_times(double t_final) {
    constexpr int steps = 50;
    std::vector<double> times;
    for (int i = 0; i <= steps; ++i) times.push_back(t_final * i / steps);
    return times;
}

OutputSet run_modes(const RunConfig& c, std::ostream& log) {
    log << "modes: N=" << c.chain.n_ions << ", beta=" << c.chain.beta << "\n";
    const auto coupling = chain::build_coupling_matrix(c.chain, c.hopping_range);
    const auto modes = chain::diagonalize_modes(coupling, c.chain);
    const auto local = chain::local_mode_params(c.chain, c.hopping_range);

    CsvTable spectrum({{"mode", ""}, {"omega", "omega_t"}, {"mode_eigenvalue", ""}, {"parity", ""}});
    CsvTable vectors({{"site", ""}, {"mode", ""}, {"amplitude", ""}});
    for (Eigen::Index n = 0; n < modes.frequencies.size(); ++n) {
        spectrum.row({num(std::size_t(n)), num(modes.frequencies(n)), num(modes.mode_eigenvalues(n)),
                      std::to_string(linalg::mirror_parity(modes.wavefunctions.col(n)))});
        for (Eigen::Index j = 0; j < modes.wavefunctions.rows(); ++j) {
            vectors.row({num(std::size_t(j)), num(std::size_t(n)), num(modes.wavefunctions(j, n))});
        }
    }
    CsvTable sites({{"site", ""}, {"onsite", "omega_t"}});
    for (Eigen::Index j = 0; j < local.onsite.size(); ++j) sites.row({num(std::size_t(j)), num(local.onsite(j))});

    Json summary = {{"t", local.t}, {"omega_max", modes.frequencies.maxCoeff()}, {"omega_min", modes.frequencies.minCoeff()}};
    OutputSet out;
    if (c.laser) {
        const chain::LaserParams laser{c.laser->rabi, c.laser->lamb_dicke, c.laser->detuning};
        const auto eff = chain::effective_couplings(laser, modes);
        CsvTable det({{"mode", ""}, {"detuning", "omega_t"}});
        for (Eigen::Index n = 0; n < eff.mode_detunings.size(); ++n) det.row({num(std::size_t(n)), num(eff.mode_detunings(n))});
        out.add_csv("mode_detunings.csv", det);
        summary["F"] = laser.coupling();
        summary["U"] = eff.U;
        summary["J"] = eff.J;
        summary["max_drive_ratio"] = eff.max_drive_ratio;
        summary["laser_warnings"] = eff.warnings;
        for (const auto& w : eff.warnings) log << "warning: " << w << "\n";
    }
    out.add_csv("modes.csv", spectrum);
    out.add_csv("wavefunctions.csv", vectors);
    out.add_csv("local_modes.csv", sites);
    out.add_json("summary.json", summary);
    return out;
}

OutputSet run_dynamics(const RunConfig& c, std::ostream& log) {
    const std::size_t n = c.chain.n_ions;
    const auto local = chain::local_mode_params(c.chain, c.hopping_range);
    const auto model = make_model(c, c.disorder.model, n);
    const double U = c.disorder.U_over_t.front() * c.t();
    const std::size_t source = c.dynamics.source.value_or(dynamics::center_site(n));
    const double t_final = c.dynamics.t_final.value_or(dynamics::default_final_time(c.chain));
    const auto times = c.dynamics.times.empty() ? default_times(t_final) : c.dynamics.times;

    log << "dynamics: N=" << n << ", U/t=" << c.disorder.U_over_t.front() << ", " << times.size() << " times\n";
    const auto series = dynamics::average_density_series(model, local, U, source, times, c.sampling);

    CsvTable density({{"time", "1/omega_t"}, {"site", ""}, {"mean_n", ""}, {"stderr", ""}});
    CsvTable spread({{"time", "1/omega_t"}, {"variance", "sites^2"}, {"total", ""}});
    for (const auto& p : series) {
        for (Eigen::Index j = 0; j < p.values.size(); ++j) {
            density.row({num(p.time), num(std::size_t(j)), num(p.values(j)), num(p.std_error(j))});
        }
        spread.row({num(p.time), num(dynamics::spatial_variance(p)), num(p.total())});
    }
    OutputSet out;
    out.add_csv("density.csv", density);
    out.add_csv("spread.csv", spread);
    out.add_json("summary.json", {{"source", source},
                                  {"U", U},
                                  {"n_samples", series.front().n_samples},
                                  {"exact", series.front().exact}});
    return out;
}

OutputSet run_localization(const RunConfig& c, std::ostream& log) {
    const std::size_t n = c.chain.n_ions;
    const auto local = chain::local_mode_params(c.chain, c.hopping_range);
    const auto model = make_model(c, c.disorder.model, n);
    const double U = c.disorder.U_over_t.front() * c.t();
    const std::size_t source = c.dynamics.source.value_or(dynamics::center_site(n));
    const double t_final = c.dynamics.t_final.value_or(dynamics::default_final_time(c.chain));

    log << "localization: N=" << n << ", U/t=" << c.disorder.U_over_t.front() << ", t_f=" << t_final << ", "
        << c.sampling.n_samples << " samples\n";
    const auto profile = dynamics::average_density(model, local, U, source, t_final, c.sampling);

    dynamics::FitOptions opts;
    opts.window = c.fit.window;
    opts.floor_fraction = c.fit.floor_fraction;
    opts.ceiling_fraction = c.fit.ceiling_fraction;
    opts.min_points = c.fit.min_points;
    const auto fit = dynamics::fit_localization_length(profile, source, opts);
    if (fit.valid) {
        log << "xi = " << fit.xi << " sites (r^2 = " << fit.r_squared << ")\n";
    } else {
        log << "fit rejected: " << fit.diagnostic << "\n";
    }

    CsvTable table({{"site", ""}, {"distance", "sites"}, {"mean_n", ""}, {"stderr", ""}});
    for (std::size_t j = 0; j < n; ++j) {
        const auto d = j > source ? j - source : source - j;
        table.row({num(j), num(d), num(profile.values(Eigen::Index(j))), num(profile.std_error(Eigen::Index(j)))});
    }
    OutputSet out;
    out.add_csv("profile.csv", table);
    out.add_json("summary.json", {{"source", source},
                                  {"t_final", t_final},
                                  {"U", U},
                                  {"n_samples", profile.n_samples},
                                  {"exact", profile.exact},
                                  {"spatial_variance", dynamics::spatial_variance(profile)},
                                  {"fit", fit_json(fit)}});
    return out;
}

spectroscopy::SpectrumRequest request_for(const RunConfig& c) {
    spectroscopy::SpectrumRequest req;
    req.sideband = c.spectrum.sideband;
    req.nbar = c.spectrum.nbar;
    req.kernel = c.spectrum.kernel;
    req.gamma = c.spectrum.gamma_over_t * c.t();
    req.bins = c.spectrum.bins;
    if (c.spectrum.lo) req.grid = spectroscopy::FrequencyGrid{*c.spectrum.lo, *c.spectrum.hi, c.spectrum.bins};
    return req;
}

OutputSet run_spectrum(const RunConfig& c, std::ostream& log) {
    const std::size_t n = c.chain.n_ions;
    const auto local = chain::local_mode_params(c.chain, c.hopping_range);
    const auto model = make_model(c, c.disorder.model, n);
    const auto req = request_for(c);

    CsvTable table({{"U_over_t", ""}, {"omega_offset", "omega_t"}, {"intensity", "S0/omega_t"}});
    Json runs = Json::array();
    for (double u : c.disorder.U_over_t) {
        log << "spectrum: N=" << n << ", U/t=" << u << "\n";
        const auto s = spectroscopy::fluorescence_spectrum(model, local, u * c.t(), req, c.sampling);
        for (Eigen::Index i = 0; i < s.frequencies.size(); ++i) {
            table.row({num(u), num(s.frequencies(i)), num(s.intensities(i))});
        }
        runs.push_back({{"U_over_t", u},
                        {"prefactor", s.prefactor},
                        {"total_weight", s.total_weight},
                        {"weight_outside", s.weight_outside},
                        {"integrated", s.integrated()},
                        {"gamma", s.gamma},
                        {"n_samples", s.n_samples},
                        {"exact", s.exact}});
    }
    OutputSet out;
    out.add_csv("spectrum.csv", table);
    out.add_json("summary.json", {{"runs", runs}});
    return out;
}

OutputSet run_com_scaling(const RunConfig& c, std::ostream& log) {
    CsvTable table({{"U_over_t", ""},
                    {"n_ions", ""},
                    {"weight", ""},
                    {"stderr", ""},
                    {"integrated_weight", ""},
                    {"modes_in_window", ""},
                    {"ordered_reference", ""},
                    {"analytic", ""}});
    Json warnings = Json::array();
    for (double u : c.disorder.U_over_t) {
        const double U = u * c.t();
        const double window = c.com.window_over_t ? *c.com.window_over_t * c.t() : (U != 0.0 ? std::abs(U) : 1e-3 * c.t());
        for (auto n : c.com.n_values) {
            log << "com-scaling: U/t=" << u << ", N=" << n << "\n";
            const auto params = sized(c, n);
            const auto local = chain::local_mode_params(params, c.hopping_range);
            const auto model = make_model(c, c.disorder.model, n);
            const auto peak = spectroscopy::com_peak_weight(model, local, U, c.sampling, window, c.com.analytic);
            const double reference = model.second_moments().sum() / static_cast<double>(n);
            for (const auto& w : peak.warnings) {
                log << "warning: N=" << n << ": " << w << "\n";
                warnings.push_back({{"U_over_t", u}, {"n_ions", n}, {"warning", w}});
            }
            table.row({num(u), num(n), num(peak.weight), num(peak.std_error), num(peak.integrated_weight),
                       num(peak.mean_modes_in_window), num(reference), peak.analytic ? "1" : "0"});
        }
    }
    OutputSet out;
    out.add_csv("com_scaling.csv", table);
    out.add_json("summary.json", {{"warnings", warnings}});
    return out;
}

OutputSet run_ldos(const RunConfig& c, std::ostream& log) {
    const std::size_t n = c.chain.n_ions;
    const auto local = chain::local_mode_params(c.chain, c.hopping_range);
    const double U = c.disorder.U_over_t.front() * c.t();
    const std::size_t site = c.ldos.site.value_or(dynamics::center_site(n));
    const auto models = c.ldos.models.empty() ? std::vector<std::string>{c.disorder.model} : c.ldos.models;
    auto req = request_for(c);
    // One grid for every model so the columns line up.
    if (!req.grid) req.grid = spectroscopy::default_grid(local, U, req.bins);

    CsvTable table({{"model", ""}, {"omega_offset", "omega_t"}, {"rho", "1/omega_t"}});
    Json runs = Json::array();
    for (const auto& kind : models) {
        log << "ldos: " << kind << ", N=" << n << ", site " << site << "\n";
        const auto s = spectroscopy::ldos(make_model(c, kind, n), local, U, site, req, c.sampling);
        for (Eigen::Index i = 0; i < s.frequencies.size(); ++i) table.row({kind, num(s.frequencies(i)), num(s.intensities(i))});
        runs.push_back({{"model", kind}, {"total_weight", s.total_weight}, {"n_samples", s.n_samples}, {"exact", s.exact}});
    }
    OutputSet out;
    out.add_csv("ldos.csv", table);

    if (!c.ldos.pr_sizes.empty()) {
        CsvTable pr({{"model", ""}, {"n_ions", ""}, {"participation", "sites"}, {"stderr", "sites"}});
        for (const auto& kind : models) {
            for (auto size : c.ldos.pr_sizes) {
                log << "participation: " << kind << ", N=" << size << "\n";
                const auto l = chain::local_mode_params(sized(c, size), c.hopping_range);
                const auto stats = spectroscopy::weighted_mode_participation(make_model(c, kind, size), l, U,
                                                                             c.ldos.pr_fraction, c.sampling);
                pr.row({kind, num(size), num(stats.mean), num(stats.std_error)});
            }
        }
        out.add_csv("participation.csv", pr);
    }
    out.add_json("summary.json", {{"site", site}, {"U", U}, {"runs", runs}});
    return out;
}

OutputSet run_manybody(const RunConfig& c, std::ostream& log) {
    const std::size_t n = c.chain.n_ions;
    const std::size_t m = c.manybody.n_bosons ? c.manybody.n_bosons : n;
    const auto local = chain::local_mode_params(c.chain, c.hopping_range);
    const double U = c.disorder.U_over_t.front() * c.t();
    const double u_int = c.manybody.U_int_over_t * c.t();
    manybody::SolverOptions opts;
    opts.solver = c.manybody.solver;

    log << "manybody: N=" << n << ", M=" << m << ", U/t=" << c.disorder.U_over_t.front()
        << ", U_int/t=" << c.manybody.U_int_over_t << "\n";
    const disorder::OnsiteEnergies clean_eps{local.onsite};
    const auto clean = manybody::sector_energies(clean_eps, local, u_int, m, c.manybody.max_occ, opts);
    auto basis = std::make_shared<const manybody::FockBasis>(n, m, c.manybody.max_occ);
    const auto gs = manybody::ground_state(manybody::build_bose_hubbard(basis, clean_eps, local, u_int), opts);

    const auto model = make_model(c, c.disorder.model, n);
    const auto stats = manybody::compressibility_proxy(model, local, U, u_int, m, c.sampling, c.manybody.max_occ, opts);

    CsvTable density({{"site", ""}, {"n_clean", ""}});
    for (Eigen::Index j = 0; j < gs.density.size(); ++j) density.row({num(std::size_t(j)), num(gs.density(j))});
    CsvTable gaps({{"realization", ""}, {"gap", "omega_t"}, {"kappa", "1/omega_t"}, {"weight", ""}});
    std::size_t below = 0;
    for (std::size_t k = 0; k < stats.gaps.size(); ++k) {
        const double g = stats.gaps[k];
        gaps.row({num(k), num(g), num(g > 0.0 ? 2.0 / g : INFINITY), num(stats.weights[k])});
        if (g < clean.charge_gap()) ++below;
    }
    OutputSet out;
    out.add_csv("ground_density.csv", density);
    out.add_csv("gaps.csv", gaps);
    out.add_json("summary.json", {{"n_bosons", m},
                                  {"U", U},
                                  {"U_int", u_int},
                                  {"clean", {{"energies", {clean.lower, clean.middle, clean.upper}},
                                             {"gap", clean.charge_gap()},
                                             {"kappa", clean.kappa()}}},
                                  {"disordered", {{"mean_gap", stats.mean_gap},
                                                  {"gap_stderr", stats.gap_std_error},
                                                  {"median_gap", stats.median_gap},
                                                  {"median_kappa", stats.median_kappa},
                                                  {"below_clean", below},
                                                  {"n_samples", stats.n_samples},
                                                  {"exact", stats.exact}}}});
    log << "clean gap " << clean.charge_gap() << ", disordered median gap " << stats.median_gap << "\n";
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

}  // namespace

std::string tool_version() { return PHONOLOC_VERSION; }

void apply(RunConfig& config, const Overrides& o) {
    if (o.seed) config.sampling.seed = *o.seed;
    if (o.samples) {
        if (*o.samples < 1) throw ConfigError("--samples must be at least 1");
        config.sampling.n_samples = *o.samples;
    }
    if (o.threads) config.sampling.threads = std::max(1U, *o.threads);
    if (o.out) config.out = *o.out;
}

OutputSet compute(const RunConfig& c, std::ostream& log) {
    for (const auto& w : c.warnings) log << "warning: " << w << "\n";
    if (c.experiment == "modes") return run_modes(c, log);
    if (c.experiment == "dynamics") return run_dynamics(c, log);
    if (c.experiment == "localization") return run_localization(c, log);
    if (c.experiment == "spectrum") return run_spectrum(c, log);
    if (c.experiment == "com-scaling") return run_com_scaling(c, log);
    if (c.experiment == "ldos") return run_ldos(c, log);
    if (c.experiment == "manybody") return run_manybody(c, log);
    throw ConfigError("unknown experiment '" + c.experiment + "'");
}

Json manifest_header(const RunConfig& c, double wall_seconds) {
    return {{"manifest_version", 1},
            {"tool", "phonoloc"},
            {"version", tool_version()},
            {"experiment", c.experiment},
            {"config", to_json(c)},
            {"threads", c.sampling.threads},
            {"timestamp", utc_timestamp()},
            {"wall_time_s", wall_seconds},
            {"warnings", c.warnings}};
}

int run(const RunConfig& c, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    OutputSet outputs;
    try {
        outputs = compute(c, log);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        log << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        log << "compute error: " << e.what() << "\n";
        return kExitCompute;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
        outputs.commit(c.out, manifest_header(c, wall));
    } catch (const std::exception& e) {
        log << "i/o error: " << e.what() << "\n";
        return kExitIo;
    }
    log << "wrote " << outputs.names().size() << " file(s) and manifest.json to " << c.out.string() << " in "
        << std::fixed << std::setprecision(2) << wall << " s\n";
    return 0;
}

int validate(const RunConfig& c, std::ostream& out) {
    Json derived;
    const double t = c.t();
    derived["t"] = t;
    derived["U"] = c.disorder.U_over_t.size() == 1 ? Json(c.disorder.U_over_t.front() * t) : Json(c.disorder.U_over_t);
    derived["t_final_default"] = dynamics::default_final_time(c.chain);
    std::vector<std::string> warnings = c.warnings;
    auto physical = [&](double x) { return x * *c.omega_t_hz / c.chain.omega_t; };
    if (c.laser) {
        const chain::LaserParams laser{c.laser->rabi, c.laser->lamb_dicke, c.laser->detuning};
        const double F = laser.coupling();
        derived["F"] = F;
        derived["U_laser"] = -F * F / laser.detuning;
        derived["J"] = (F / laser.detuning) * (F / laser.detuning) * c.chain.beta * c.chain.omega_t;
        try {
            const auto modes = chain::diagonalize_modes(chain::build_coupling_matrix(c.chain, c.hopping_range), c.chain);
            const auto eff = chain::effective_couplings(laser, modes);
            derived["max_drive_ratio"] = eff.max_drive_ratio;
            for (const auto& w : eff.warnings) warnings.push_back(w);
        } catch (const phonoloc::Error& e) {
            out << "error: " << e.what() << "\n";
            return kExitCompute;
        }
    }
    if (c.omega_t_hz) {
        Json hz = {{"omega_t", *c.omega_t_hz}, {"t", physical(t)}};
        if (c.laser) {
            hz["U_laser"] = physical(derived["U_laser"].get<double>());
            hz["J"] = physical(derived["J"].get<double>());
        }
        derived["hz"] = hz;
    }
    Json report = {{"config", to_json(c)}, {"derived", derived}, {"warnings", warnings}};
    out << report.dump(2) << "\n";
    if (c.omega_t_hz) {
        out << "t = " << physical(t) / 1e3 << " kHz";
        if (c.laser) {
            out << ", |U| = " << std::abs(physical(derived["U_laser"].get<double>())) / 1e3 << " kHz"
                << ", J = " << physical(derived["J"].get<double>()) / 1e3 << " kHz";
        }
        out << "\n";
    }
    for (const auto& w : warnings) out << "warning: " << w << "\n";
    return 0;
}

}  // namespace phonoloc::cli
