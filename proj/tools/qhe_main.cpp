// qhe: command-line front end for the Otto-engine simulator. Subcommands
// cover the four scenario families (simulate, iv, readout, ramsey); every
// run writes a manifest so outputs can be reproduced byte for byte.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qhe/csv.hpp"
#include "qhe/errors.hpp"
#include "qhe/lindblad.hpp"
#include "qhe/nis.hpp"
#include "qhe/params.hpp"
#include "qhe/ramsey.hpp"
#include "qhe/readout.hpp"
#include "qhe/thermo.hpp"
#include "qhe/version.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitData = 4;

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::string& config_path, std::uint64_t seed,
                    const qhe::Config* config) {
    json manifest{{"command", command},
                  {"config_path", config_path},
                  {"seed", seed},
                  {"output_dir", out_dir.string()},
                  {"tool_version", qhe::kVersion}};
    if (config) {
        std::ostringstream hash;
        hash << std::hex << qhe::config_hash(*config);
        manifest["config_hash"] = hash.str();
    }
    std::ofstream out(out_dir / "manifest.json");
    if (!out) throw qhe::DataError("cannot write manifest in '" + out_dir.string() + "'");
    out << manifest.dump(2) << '\n';
}

qhe::Config load_or_default(const std::string& config_path) {
    if (config_path.empty()) return qhe::Config{};
    return qhe::load_config(config_path);
}

struct SimulateArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<int> cycles;
    std::optional<std::uint64_t> seed;
    std::optional<double> detuning; // rad/ns, converted to phi_ac
    std::optional<std::string> method;
};

int run_simulate(const SimulateArgs& args) {
    qhe::Config config = load_or_default(args.config_path);
    if (args.cycles) config.schedule.n_cycles = *args.cycles;
    if (args.seed) config.simulation.seed = *args.seed;
    if (args.method) config.simulation.method = qhe::method_from_string(*args.method);
    if (args.detuning) {
        config.schedule.phi_ac = qhe::flux_amplitude_for_detuning(*args.detuning, config.device);
    }
    qhe::validate(config);

    const fs::path out_dir(args.out_dir);
    fs::create_directories(out_dir);

    const qhe::Trajectory trajectory = qhe::simulate(config);
    const qhe::ThermoReport report = qhe::analyze(trajectory, config);

    qhe::write_trajectory_csv(trajectory, (out_dir / "trajectory.csv").string());
    qhe::write_spectrum_csv(trajectory, (out_dir / "spectrum.csv").string());
    qhe::write_thermo_json(report, (out_dir / "thermo.json").string());

    const auto energies =
        qhe::derive_transmon_energies(config.device.omega_ge0, config.device.alpha);
    const qhe::RateTable rates(config.device, config.schedule, energies);
    std::ofstream rate_csv(out_dir / "rates.csv");
    rate_csv << "stroke,m,n,V_delta_over_e,gamma_down_per_ns,gamma_up_per_ns\n";
    for (const auto& row : rates.export_rows()) {
        rate_csv << row.stroke << ',' << row.m << ',' << row.n << ','
                 << qhe::format_double(row.V) << ',' << qhe::format_double(row.gamma_down)
                 << ',' << qhe::format_double(row.gamma_up) << '\n';
    }

    qhe::save_config(config, (out_dir / "config_resolved.json").string());
    write_manifest(out_dir, "simulate", args.config_path, config.simulation.seed, &config);
    std::cout << "simulate: wrote " << trajectory.size() << " samples over "
              << config.schedule.n_cycles << " cycles to " << out_dir.string() << "\n";
    return kExitOk;
}

struct IvArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::string curve_path; // optional import; otherwise synthesize
    double span = 20.0;     // |eV| range in units of Delta
    int points = 601;
    bool extract = true;
};

int run_iv(const IvArgs& args) {
    const qhe::Config config = load_or_default(args.config_path);
    const fs::path out_dir(args.out_dir);
    fs::create_directories(out_dir);

    qhe::IvCurve curve;
    if (!args.curve_path.empty()) {
        const qhe::CsvTable table = qhe::read_csv(args.curve_path);
        const int cv = table.column("V_delta_over_e");
        const int ci = table.column("I_nA");
        if (cv < 0 || ci < 0) {
            throw qhe::DataError("IV CSV must have columns V_delta_over_e and I_nA");
        }
        if (table.rows.empty()) throw qhe::DataError("IV CSV has no rows");
        for (const auto& row : table.rows) {
            curve.voltage_uV.push_back(row[cv] * config.device.Delta);
            curve.current_nA.push_back(row[ci]);
        }
        curve.T_N = config.device.T_N;
    } else {
        curve = qhe::synth_iv_curve(config.device.Delta, config.device.R_T,
                                    config.device.gamma_D, config.device.T_N, args.span,
                                    args.points);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < curve.voltage_uV.size(); ++i) {
            rows.push_back({curve.voltage_uV[i] / config.device.Delta, curve.current_nA[i]});
        }
        qhe::write_csv((out_dir / "iv.csv").string(), {"V_delta_over_e", "I_nA"}, rows);
    }

    if (args.extract) {
        const qhe::JunctionExtraction extraction = qhe::extract_junction_params(curve);
        json j{{"Delta_ueV", extraction.Delta_hat},
               {"R_T_kohm", extraction.R_T_hat},
               {"gamma_D", extraction.gamma_D_hat},
               {"ohmic_rms_nA", extraction.ohmic_rms}};
        std::ofstream out(out_dir / "extraction.json");
        out << j.dump(2) << '\n';
        std::cout << "iv: Delta = " << extraction.Delta_hat
                  << " ueV, R_T = " << extraction.R_T_hat
                  << " kOhm, gamma_D = " << extraction.gamma_D_hat << "\n";
    }
    write_manifest(out_dir, "iv", args.config_path, 0, nullptr);
    return kExitOk;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str()) {
            throw qhe::DataError(std::string("cannot parse ") + what + " entry '" + cell + "'");
        }
        values.push_back(v);
    }
    return values;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superconducting quantum Otto engine simulator"};
    app.set_version_flag("--version", qhe::kVersion);
    app.require_subcommand(1);

    // simulate
    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Run the engine and write trajectory, "
                                                   "spectrum, rates, and thermo reports");
    cmd_sim->add_option("--config", sim.config_path, "JSON config (defaults when omitted)");
    cmd_sim->add_option("--out", sim.out_dir, "Output directory");
    int cycles = 0;
    std::uint64_t seed = 0;
    double detuning = 0.0;
    std::string method;
    cmd_sim->add_option("--cycles", cycles, "Override schedule.n_cycles")
        ->check(CLI::PositiveNumber);
    cmd_sim->add_option("--seed", seed, "Override simulation.seed");
    cmd_sim->add_option("--detuning", detuning,
                        "Target detuning (rad/ns, negative); sets schedule.phi_ac");
    cmd_sim->add_option("--method", method, "Integration path: pauli|full");

    // iv
    IvArgs iv;
    auto* cmd_iv = app.add_subcommand("iv", "Synthesize or import an NIS IV curve and "
                                            "extract junction parameters");
    cmd_iv->add_option("--config", iv.config_path, "JSON config (defaults when omitted)");
    cmd_iv->add_option("--out", iv.out_dir, "Output directory");
    cmd_iv->add_option("--curve", iv.curve_path, "Import IV CSV instead of synthesizing");
    cmd_iv->add_option("--span", iv.span, "Synthesis span, |eV| <= span*Delta");
    cmd_iv->add_option("--points", iv.points, "Synthesis sample count");
    cmd_iv->add_flag("--no-extract", "Skip parameter extraction");

    // readout with nested subcommands
    auto* cmd_readout = app.add_subcommand("readout", "Readout-chain emulation");
    cmd_readout->require_subcommand(1);
    std::string ro_model_path, ro_out = "out", ro_shots_path, ro_counts, ro_matrix_path;
    std::string ro_populations = "0.5,0.3,0.15,0.05";
    long ro_n = 10000;
    long ro_samples = 1000000;
    std::uint64_t ro_seed = 1;
    double ro_radius = 1.0;
    auto* ro_sample = cmd_readout->add_subcommand("sample", "Draw IQ shots from a GMM");
    ro_sample->add_option("--model", ro_model_path, "GMM model JSON (built-in default)");
    ro_sample->add_option("--populations", ro_populations, "Comma-separated populations");
    ro_sample->add_option("--n", ro_n, "Number of shots");
    ro_sample->add_option("--seed", ro_seed, "RNG seed");
    ro_sample->add_option("--out", ro_out, "Output directory");
    auto* ro_fit = cmd_readout->add_subcommand("fit", "Fit a GMM to shots by EM");
    ro_fit->add_option("--shots", ro_shots_path, "Shots CSV")->required();
    ro_fit->add_option("--model", ro_model_path, "Calibration model for initial centroids");
    ro_fit->add_option("--out", ro_out, "Output directory");
    auto* ro_matrix = cmd_readout->add_subcommand("matrix", "Monte Carlo correction matrix");
    ro_matrix->add_option("--model", ro_model_path, "GMM model JSON (built-in default)");
    ro_matrix->add_option("--radius", ro_radius, "Mahalanobis boundary radius");
    ro_matrix->add_option("--samples", ro_samples, "Draws per component");
    ro_matrix->add_option("--seed", ro_seed, "RNG seed");
    ro_matrix->add_option("--out", ro_out, "Output directory");
    auto* ro_correct = cmd_readout->add_subcommand("correct", "De-bias ellipse counts");
    ro_correct->add_option("--counts", ro_counts, "Comma-separated raw counts")->required();
    ro_correct->add_option("--matrix", ro_matrix_path, "Correction matrix JSON")->required();
    ro_correct->add_option("--out", ro_out, "Output directory");

    // ramsey
    auto* cmd_ramsey = app.add_subcommand("ramsey", "Detuning-vs-amplitude sweep from "
                                                    "synthetic Ramsey fringes");
    std::string ra_config, ra_out = "out";
    qhe::SweepOptions sweep;
    cmd_ramsey->add_option("--config", ra_config, "JSON config (defaults when omitted)");
    cmd_ramsey->add_option("--out", ra_out, "Output directory");
    cmd_ramsey->add_option("--tau", sweep.tau, "Flux-pulse length, ns");
    cmd_ramsey->add_option("--phases", sweep.n_phases, "Phase points per fringe");
    cmd_ramsey->add_option("--noise", sweep.noise_sigma, "Gaussian noise sigma");
    cmd_ramsey->add_option("--seed", sweep.seed, "RNG seed");
    cmd_ramsey->add_option("--max-amplitude", sweep.max_amplitude, "Sweep end, Phi_0");
    cmd_ramsey->add_option("--amplitudes", sweep.n_amplitudes, "Sweep point count");

    try {
        app.parse(argc, argv);

        if (cmd_sim->parsed()) {
            if (cmd_sim->count("--cycles")) sim.cycles = cycles;
            if (cmd_sim->count("--seed")) sim.seed = seed;
            if (cmd_sim->count("--detuning")) sim.detuning = detuning;
            if (cmd_sim->count("--method")) sim.method = method;
            return run_simulate(sim);
        }
        if (cmd_iv->parsed()) {
            iv.extract = cmd_iv->count("--no-extract") == 0;
            return run_iv(iv);
        }
        if (cmd_readout->parsed()) {
            const fs::path out_dir(ro_out);
            fs::create_directories(out_dir);
            const qhe::GmmModel model = ro_model_path.empty()
                                            ? qhe::default_readout_model()
                                            : qhe::load_model(ro_model_path);
            if (ro_sample->parsed()) {
                const auto populations = parse_list(ro_populations, "population");
                const qhe::ShotSet shots =
                    qhe::sample_shots(populations, model, ro_n, ro_seed);
                qhe::write_shots_csv(shots, (out_dir / "shots.csv").string());
                write_manifest(out_dir, "readout sample", ro_model_path, ro_seed, nullptr);
                std::cout << "readout sample: wrote " << shots.size() << " shots\n";
            } else if (ro_fit->parsed()) {
                qhe::ShotSet shots = qhe::read_shots_csv(ro_shots_path);
                std::vector<Eigen::Vector2d> centroids;
                for (const auto& c : model.components) centroids.push_back(c.mean);
                const qhe::EmResult result = qhe::fit_gmm(shots, model.size(), centroids);
                qhe::save_model(result.model, (out_dir / "model_fitted.json").string());
                write_manifest(out_dir, "readout fit", ro_shots_path, 0, nullptr);
                std::cout << "readout fit: " << result.log_likelihoods.size()
                          << " EM iterations, converged = " << result.converged << "\n";
            } else if (ro_matrix->parsed()) {
                const qhe::CorrectionMatrix correction =
                    qhe::correction_matrix(model, ro_radius, ro_samples, ro_seed);
                std::ofstream out(out_dir / "matrix.json");
                out << qhe::correction_to_json(correction) << '\n';
                write_manifest(out_dir, "readout matrix", ro_model_path, ro_seed, nullptr);
                std::cout << "readout matrix: condition number "
                          << correction.condition_number << "\n";
            } else if (ro_correct->parsed()) {
                const auto counts = parse_list(ro_counts, "count");
                std::ifstream in(ro_matrix_path);
                if (!in) throw qhe::DataError("cannot open matrix '" + ro_matrix_path + "'");
                std::ostringstream buffer;
                buffer << in.rdbuf();
                const qhe::CorrectionMatrix correction =
                    qhe::correction_from_json(buffer.str());
                const qhe::CorrectedPopulations corrected =
                    qhe::corrected_populations(counts, correction);
                json j{{"populations", corrected.populations},
                       {"clamped", corrected.clamped}};
                std::ofstream out(out_dir / "populations.json");
                out << j.dump(2) << '\n';
                std::cout << "readout correct: " << j["populations"].dump() << "\n";
            }
            return kExitOk;
        }
        if (cmd_ramsey->parsed()) {
            const qhe::Config config = load_or_default(ra_config);
            const fs::path out_dir(ra_out);
            fs::create_directories(out_dir);
            const auto points = qhe::detuning_sweep(config.device, sweep);
            std::vector<std::vector<double>> rows;
            for (const auto& p : points) {
                rows.push_back({p.flux_amplitude, p.detuning, p.aliased ? 1.0 : 0.0});
            }
            qhe::write_csv((out_dir / "detuning_sweep.csv").string(),
                           {"flux_amplitude", "detuning_radns", "aliased_flag"}, rows);
            write_manifest(out_dir, "ramsey", ra_config, sweep.seed, nullptr);
            std::cout << "ramsey: wrote " << rows.size() << " sweep points\n";
            return kExitOk;
        }
        return kExitConfig;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        app.exit(e);
        return kExitConfig;
    } catch (const qhe::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qhe::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const qhe::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}
