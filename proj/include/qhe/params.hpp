#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qhe/constants.hpp"

namespace qhe {

// Static device parameters. Frequencies are angular (rad/ns); R_T in kOhm,
// Delta in ueV, Z_aux in Ohm, temperatures in mK, rates in 1/ns.
//
// The sample parameters (omega_*, alpha, R_T, Delta, gamma_D) are measured
// quantities; Z_aux, g_coupling, T_N and gamma_eg0 are bath parameters that
// are not directly measured and carry calibrated defaults (see README).
struct DeviceParams {
    double omega_ge0 = 2.0 * kPi * 4.047;  // sweet-spot g<->e transition
    double alpha = -2.0 * kPi * 0.279;     // anharmonicity, negative
    double omega_aux = 2.0 * kPi * 4.670;  // auxiliary (reset) resonator
    double omega_r = 2.0 * kPi * 7.436;    // readout resonator, informational
    double R_T = 25.7;                     // NIS tunneling resistance
    double Delta = 186.0;                  // superconducting gap
    double gamma_D = 4.0e-3;               // Dynes parameter
    double Z_aux = 35.0;                   // auxiliary resonator impedance
    double g_coupling = 2.0 * kPi * 0.040; // transmon-auxiliary coupling
    double T_N = 200.0;                    // normal-metal / intrinsic bath
    double gamma_eg0 = 1.0e-4;             // intrinsic e->g decay
    int n_levels = 6;                      // truncation dimension, 2..6
};

void validate(const DeviceParams& params);

struct DerivedTransmonEnergies {
    double E_C = 0.0;     // charging energy, ueV
    double E_J_max = 0.0; // maximum Josephson energy, ueV
};

// E_C = -hbar*alpha, E_J_max from inverting the transmon dispersion at the
// sweet spot. Rejects alpha >= 0 and enforces E_J_max/E_C >= 20.
DerivedTransmonEnergies derive_transmon_energies(double omega_ge0, double alpha);

// Sweet-spot frequency reconstructed from the derived energies; inverse of
// derive_transmon_energies to 1e-9 relative.
double reconstruct_omega_ge0(const DerivedTransmonEnergies& energies);

enum class PrepDrive { idle, heating, cooling };

std::string to_string(PrepDrive drive);
PrepDrive prep_drive_from_string(const std::string& name);

// Stroke timings and drive amplitudes for preparation plus the Otto cycles.
// Times in ns, fluxes in Phi_0, QCR amplitudes in Delta/e.
struct CycleSchedule {
    double tau_p = 200.0;
    double tau_1 = 50.0;
    double tau_2 = 300.0;
    double tau_3 = 50.0;
    double tau_4 = 200.0;
    double phi_dc = 0.0;
    double phi_ac = 0.0876756; // default reproduces -2*pi*82.4 MHz detuning
    double A_h = 2.16;
    double A_c = 1.08;
    double square_period = 100.0;
    int n_cycles = 3;
    PrepDrive prep_drive = PrepDrive::idle;

    double tau_cyc() const { return tau_1 + tau_2 + tau_3 + tau_4; }
    double t_A() const { return tau_p; }
    double t_B() const { return tau_p + tau_1; }
    double t_C() const { return tau_p + tau_1 + tau_2; }
    double t_D() const { return tau_p + tau_1 + tau_2 + tau_3; }
    double total_time() const { return tau_p + n_cycles * tau_cyc(); }
};

void validate(const CycleSchedule& schedule);

enum class IntegrationMethod { pauli, full };

std::string to_string(IntegrationMethod method);
IntegrationMethod method_from_string(const std::string& name);

enum class InitialStateKind { gibbs, ground, custom };

struct InitialStateSpec {
    InitialStateKind kind = InitialStateKind::gibbs;
    double temperature = -1.0; // mK; <= 0 means "use device T_N"
    std::vector<double> populations; // only for kind == custom
};

struct SimulationSettings {
    double dt = 0.02;          // integrator step, ns
    int sample_stride = 50;    // steps between trajectory samples
    std::uint64_t seed = 12345;
    IntegrationMethod method = IntegrationMethod::pauli;
    InitialStateSpec initial_state;
};

void validate(const SimulationSettings& settings);

struct Config {
    DeviceParams device;
    CycleSchedule schedule;
    SimulationSettings simulation;
};

void validate(const Config& config);

// JSON round trip. Top-level keys are `device`, `schedule`, `simulation`;
// field names match the structs above and unknown keys are rejected.
Config load_config(const std::string& path);
Config config_from_json_text(const std::string& text);
std::string config_to_json_text(const Config& config);
void save_config(const Config& config, const std::string& path);

// FNV-1a over the canonical JSON serialization; recorded in run manifests.
std::uint64_t config_hash(const Config& config);

// Smallest flux-pulse amplitude (in Phi_0, > 0) whose plateau reproduces the
// requested negative detuning of the g<->e transition. Root-found by
// bisection on the branch where the detuned transmon still has all adjacent
// transitions positive for the configured n_levels; targets outside that
// branch raise ConfigError (unreachable detuning).
double flux_amplitude_for_detuning(double target_detuning, const DeviceParams& params);

} // namespace qhe
