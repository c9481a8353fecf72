#include "qhe/params.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qhe/errors.hpp"
#include "qhe/transmon.hpp"

namespace qhe {

namespace {

using nlohmann::json;

void require(bool condition, const std::string& message) {
    if (!condition) throw ConfigError(message);
}

void check_known_keys(const json& object, const std::string& scope,
                      const std::set<std::string>& allowed) {
    for (auto it = object.begin(); it != object.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("unknown key '" + scope + "." + it.key() + "'");
        }
    }
}

template <typename T>
void read_field(const json& object, const std::string& scope, const std::string& key,
                T& out) {
    if (!object.contains(key)) return;
    try {
        out = object.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("invalid value for '" + scope + "." + key + "'");
    }
}

} // namespace

void validate(const DeviceParams& p) {
    require(p.omega_ge0 > 0.0, "device.omega_ge0 must be positive");
    require(p.alpha < 0.0, "device.alpha must be negative (transmon regime)");
    require(p.omega_aux > 0.0, "device.omega_aux must be positive");
    require(p.omega_r > 0.0, "device.omega_r must be positive");
    require(p.R_T > 0.0, "device.R_T must be positive");
    require(p.Delta > 0.0, "device.Delta must be positive");
    require(p.gamma_D > 0.0 && p.gamma_D < 1.0, "device.gamma_D must lie in (0, 1)");
    require(p.Z_aux >= 0.0, "device.Z_aux must be non-negative");
    require(p.g_coupling >= 0.0, "device.g_coupling must be non-negative");
    require(p.T_N > 0.0, "device.T_N must be positive");
    require(p.gamma_eg0 >= 0.0, "device.gamma_eg0 must be non-negative");
    require(p.n_levels >= 2 && p.n_levels <= 6, "device.n_levels must lie in [2, 6]");
    for (int m = 1; m < p.n_levels; ++m) {
        if (p.omega_ge0 + p.alpha * (m - 1) <= 0.0) {
            std::ostringstream msg;
            msg << "device: transition " << m << "<->" << m - 1
                << " has non-positive frequency; omega_ge0 + alpha*(m-1) must stay positive";
            throw ConfigError(msg.str());
        }
    }
}

DerivedTransmonEnergies derive_transmon_energies(double omega_ge0, double alpha) {
    if (alpha >= 0.0) throw ConfigError("derive_transmon_energies: alpha must be negative");
    if (omega_ge0 <= 0.0) throw ConfigError("derive_transmon_energies: omega_ge0 must be positive");
    DerivedTransmonEnergies energies;
    energies.E_C = -kHbar * alpha;
    const double numerator = kHbar * omega_ge0 + energies.E_C;
    energies.E_J_max = numerator * numerator / (8.0 * energies.E_C);
    if (energies.E_J_max / energies.E_C < 20.0) {
        std::ostringstream msg;
        msg << "derived E_J_max/E_C = " << energies.E_J_max / energies.E_C
            << " below the transmon-regime bound of 20";
        throw ConfigError(msg.str());
    }
    return energies;
}

double reconstruct_omega_ge0(const DerivedTransmonEnergies& e) {
    return (std::sqrt(8.0 * e.E_C * e.E_J_max) - e.E_C) / kHbar;
}

std::string to_string(PrepDrive drive) {
    switch (drive) {
        case PrepDrive::idle: return "idle";
        case PrepDrive::heating: return "heating";
        case PrepDrive::cooling: return "cooling";
    }
    return "idle";
}

PrepDrive prep_drive_from_string(const std::string& name) {
    if (name == "idle") return PrepDrive::idle;
    if (name == "heating") return PrepDrive::heating;
    if (name == "cooling") return PrepDrive::cooling;
    throw ConfigError("schedule.prep_drive must be one of idle|heating|cooling, got '" +
                      name + "'");
}

void validate(const CycleSchedule& s) {
    require(s.tau_p > 0.0, "schedule.tau_p must be positive");
    require(s.tau_1 > 0.0, "schedule.tau_1 must be positive");
    require(s.tau_2 > 0.0, "schedule.tau_2 must be positive");
    require(s.tau_3 > 0.0, "schedule.tau_3 must be positive");
    require(s.tau_4 > 0.0, "schedule.tau_4 must be positive");
    require(std::abs(s.tau_1 - s.tau_3) <= 1e-9 * std::max(s.tau_1, s.tau_3),
            "schedule.tau_1 and schedule.tau_3 must be equal (symmetric ramps)");
    require(s.square_period > 0.0, "schedule.square_period must be positive");
    const double per2 = s.tau_2 / s.square_period;
    const double per4 = s.tau_4 / s.square_period;
    require(std::abs(per2 - std::round(per2)) < 1e-9,
            "schedule.square_period must divide evenly into tau_2");
    require(std::abs(per4 - std::round(per4)) < 1e-9,
            "schedule.square_period must divide evenly into tau_4");
    require(s.A_h >= 0.0, "schedule.A_h must be non-negative");
    require(s.A_c >= 0.0, "schedule.A_c must be non-negative");
    require(std::abs(s.phi_dc) < 0.5, "schedule.phi_dc must satisfy |phi_dc| < 0.5");
    require(std::abs(s.phi_dc + s.phi_ac) < 0.5,
            "schedule.phi_dc + phi_ac must stay out of the half-flux region (|.| < 0.5)");
    require(s.n_cycles >= 1, "schedule.n_cycles must be at least 1");
}

std::string to_string(IntegrationMethod method) {
    return method == IntegrationMethod::pauli ? "pauli" : "full";
}

IntegrationMethod method_from_string(const std::string& name) {
    if (name == "pauli") return IntegrationMethod::pauli;
    if (name == "full") return IntegrationMethod::full;
    throw ConfigError("simulation.method must be pauli|full, got '" + name + "'");
}

void validate(const SimulationSettings& s) {
    require(s.dt > 0.0, "simulation.dt must be positive");
    require(s.dt <= 1.0, "simulation.dt must be at most 1 ns");
    require(s.sample_stride >= 1, "simulation.sample_stride must be at least 1");
    if (s.initial_state.kind == InitialStateKind::custom) {
        require(!s.initial_state.populations.empty(),
                "simulation.initial_state.populations required for kind 'custom'");
        double sum = 0.0;
        for (double p : s.initial_state.populations) {
            require(p >= 0.0, "simulation.initial_state.populations must be non-negative");
            sum += p;
        }
        require(std::abs(sum - 1.0) < 1e-6,
                "simulation.initial_state.populations must sum to 1");
    }
    if (s.initial_state.kind == InitialStateKind::gibbs &&
        s.initial_state.temperature == 0.0) {
        throw ConfigError("simulation.initial_state.temperature must be positive");
    }
}

void validate(const Config& config) {
    validate(config.device);
    validate(config.schedule);
    validate(config.simulation);
    if (config.simulation.initial_state.kind == InitialStateKind::custom) {
        require(static_cast<int>(config.simulation.initial_state.populations.size()) ==
                    config.device.n_levels,
                "simulation.initial_state.populations length must equal device.n_levels");
    }
    // The detuned plateau must itself be a valid transmon configuration.
    const auto energies = derive_transmon_energies(config.device.omega_ge0, config.device.alpha);
    const double omega_b =
        transition_frequency(config.schedule.phi_dc + config.schedule.phi_ac, energies);
    for (int m = 1; m < config.device.n_levels; ++m) {
        if (omega_b + config.device.alpha * (m - 1) <= 0.0) {
            throw ConfigError(
                "schedule.phi_ac detunes the transmon past the point where all "
                "adjacent transitions stay positive");
        }
    }
}

namespace {

json device_to_json(const DeviceParams& p) {
    return json{{"omega_ge0", p.omega_ge0}, {"alpha", p.alpha},
                {"omega_aux", p.omega_aux}, {"omega_r", p.omega_r},
                {"R_T", p.R_T},             {"Delta", p.Delta},
                {"gamma_D", p.gamma_D},     {"Z_aux", p.Z_aux},
                {"g_coupling", p.g_coupling}, {"T_N", p.T_N},
                {"gamma_eg0", p.gamma_eg0}, {"n_levels", p.n_levels}};
}

json schedule_to_json(const CycleSchedule& s) {
    return json{{"tau_p", s.tau_p},   {"tau_1", s.tau_1},
                {"tau_2", s.tau_2},   {"tau_3", s.tau_3},
                {"tau_4", s.tau_4},   {"phi_dc", s.phi_dc},
                {"phi_ac", s.phi_ac}, {"A_h", s.A_h},
                {"A_c", s.A_c},       {"square_period", s.square_period},
                {"n_cycles", s.n_cycles}, {"prep_drive", to_string(s.prep_drive)}};
}

json simulation_to_json(const SimulationSettings& s) {
    json initial{{"kind", s.initial_state.kind == InitialStateKind::gibbs    ? "gibbs"
                          : s.initial_state.kind == InitialStateKind::ground ? "ground"
                                                                             : "custom"}};
    if (s.initial_state.temperature > 0.0) initial["temperature"] = s.initial_state.temperature;
    if (s.initial_state.kind == InitialStateKind::custom) {
        initial["populations"] = s.initial_state.populations;
    }
    return json{{"dt", s.dt},
                {"sample_stride", s.sample_stride},
                {"seed", s.seed},
                {"method", to_string(s.method)},
                {"initial_state", initial}};
}

DeviceParams device_from_json(const json& object) {
    DeviceParams p;
    check_known_keys(object, "device",
                     {"omega_ge0", "alpha", "omega_aux", "omega_r", "R_T", "Delta",
                      "gamma_D", "Z_aux", "g_coupling", "T_N", "gamma_eg0", "n_levels"});
    read_field(object, "device", "omega_ge0", p.omega_ge0);
    read_field(object, "device", "alpha", p.alpha);
    read_field(object, "device", "omega_aux", p.omega_aux);
    read_field(object, "device", "omega_r", p.omega_r);
    read_field(object, "device", "R_T", p.R_T);
    read_field(object, "device", "Delta", p.Delta);
    read_field(object, "device", "gamma_D", p.gamma_D);
    read_field(object, "device", "Z_aux", p.Z_aux);
    read_field(object, "device", "g_coupling", p.g_coupling);
    read_field(object, "device", "T_N", p.T_N);
    read_field(object, "device", "gamma_eg0", p.gamma_eg0);
    read_field(object, "device", "n_levels", p.n_levels);
    return p;
}

CycleSchedule schedule_from_json(const json& object) {
    CycleSchedule s;
    check_known_keys(object, "schedule",
                     {"tau_p", "tau_1", "tau_2", "tau_3", "tau_4", "phi_dc", "phi_ac",
                      "A_h", "A_c", "square_period", "n_cycles", "prep_drive"});
    read_field(object, "schedule", "tau_p", s.tau_p);
    read_field(object, "schedule", "tau_1", s.tau_1);
    read_field(object, "schedule", "tau_2", s.tau_2);
    read_field(object, "schedule", "tau_3", s.tau_3);
    read_field(object, "schedule", "tau_4", s.tau_4);
    read_field(object, "schedule", "phi_dc", s.phi_dc);
    read_field(object, "schedule", "phi_ac", s.phi_ac);
    read_field(object, "schedule", "A_h", s.A_h);
    read_field(object, "schedule", "A_c", s.A_c);
    read_field(object, "schedule", "square_period", s.square_period);
    read_field(object, "schedule", "n_cycles", s.n_cycles);
    if (object.contains("prep_drive")) {
        s.prep_drive = prep_drive_from_string(object.at("prep_drive").get<std::string>());
    }
    return s;
}

SimulationSettings simulation_from_json(const json& object) {
    SimulationSettings s;
    check_known_keys(object, "simulation",
                     {"dt", "sample_stride", "seed", "method", "initial_state"});
    read_field(object, "simulation", "dt", s.dt);
    read_field(object, "simulation", "sample_stride", s.sample_stride);
    read_field(object, "simulation", "seed", s.seed);
    if (object.contains("method")) {
        s.method = method_from_string(object.at("method").get<std::string>());
    }
    if (object.contains("initial_state")) {
        const json& initial = object.at("initial_state");
        check_known_keys(initial, "simulation.initial_state",
                         {"kind", "temperature", "populations"});
        std::string kind = "gibbs";
        read_field(initial, "simulation.initial_state", "kind", kind);
        if (kind == "gibbs") s.initial_state.kind = InitialStateKind::gibbs;
        else if (kind == "ground") s.initial_state.kind = InitialStateKind::ground;
        else if (kind == "custom") s.initial_state.kind = InitialStateKind::custom;
        else throw ConfigError("simulation.initial_state.kind must be gibbs|ground|custom");
        read_field(initial, "simulation.initial_state", "temperature",
                   s.initial_state.temperature);
        read_field(initial, "simulation.initial_state", "populations",
                   s.initial_state.populations);
    }
    return s;
}

} // namespace

Config config_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    check_known_keys(root, "config", {"device", "schedule", "simulation"});
    Config config;
    if (root.contains("device")) config.device = device_from_json(root.at("device"));
    if (root.contains("schedule")) config.schedule = schedule_from_json(root.at("schedule"));
    if (root.contains("simulation")) {
        config.simulation = simulation_from_json(root.at("simulation"));
    }
    validate(config);
    return config;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_text(buffer.str());
}

std::string config_to_json_text(const Config& config) {
    json root{{"device", device_to_json(config.device)},
              {"schedule", schedule_to_json(config.schedule)},
              {"simulation", simulation_to_json(config.simulation)}};
    return root.dump(2);
}

void save_config(const Config& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file '" + path + "'");
    out << config_to_json_text(config) << '\n';
}

std::uint64_t config_hash(const Config& config) {
    const std::string text = config_to_json_text(config);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

double flux_amplitude_for_detuning(double target_detuning, const DeviceParams& params) {
    validate(params);
    if (target_detuning > 0.0) {
        throw ConfigError("flux_amplitude_for_detuning: target detuning must be <= 0");
    }
    if (target_detuning == 0.0) return 0.0;

    const auto energies = derive_transmon_energies(params.omega_ge0, params.alpha);
    const double omega_dc = transition_frequency(0.0, energies);

    // The detuned plateau must remain a valid transmon configuration: every
    // adjacent transition up to n_levels stays positive. That caps how far the
    // frequency may be pulled down and keeps the search inside |phi| < 0.5.
    const double omega_floor = -params.alpha * (params.n_levels - 2) + 1e-9;
    const double omega_target = omega_dc + target_detuning;
    if (omega_target <= omega_floor) {
        std::ostringstream msg;
        msg << "unreachable detuning " << target_detuning
            << " rad/ns: detuned transition frequency " << omega_target
            << " would drop below the validity floor " << omega_floor;
        throw ConfigError(msg.str());
    }

    // Find the flux where omega_ge crosses omega_floor; bisect inside [0, hi].
    double hi = 0.5 - 1e-12;
    {
        double lo_edge = 0.0;
        double hi_edge = hi;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo_edge + hi_edge);
            if (transition_frequency(mid, energies) > omega_floor) lo_edge = mid;
            else hi_edge = mid;
        }
        hi = lo_edge;
    }

    double lo = 0.0;
    // omega_ge is strictly decreasing on [0, 0.5), so f(phi) = omega(phi) -
    // omega_target crosses zero exactly once inside [lo, hi].
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double detuning = transition_frequency(mid, energies) - omega_dc;
        if (detuning > target_detuning) lo = mid;
        else hi = mid;
        if (std::abs(detuning - target_detuning) < 1e-12 && i > 40) break;
    }
    const double phi_ac = 0.5 * (lo + hi);
    const double achieved = transition_frequency(phi_ac, energies) - omega_dc;
    if (std::abs(achieved - target_detuning) > 1e-10) {
        std::ostringstream msg;
        msg << "flux_amplitude_for_detuning: bisection residual "
            << std::abs(achieved - target_detuning) << " rad/ns exceeds 1e-10";
        throw NumericalError(msg.str());
    }
    return phi_ac;
}

} // namespace qhe
