#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qhe/lindblad.hpp"

namespace qhe {

// E = sum_m hbar * omega_m * p_m (ueV). Rejects unnormalized populations.
double internal_energy(const std::vector<double>& populations,
                       const std::vector<double>& omega_m);

struct StrokeIntegral {
    double W = 0.0; // ueV, work done on the system
    double Q = 0.0; // ueV, heat supplied to the system
};

// Path integrals W = Int sum hbar p dw and Q = Int sum hbar w dp over the
// sampled window [t0, t1]. Consecutive samples are paired with mean
// populations against d(omega) and mean frequencies against d(p), which makes
// W + Q = E(t1) - E(t0) an exact discrete identity.
StrokeIntegral integrate_stroke(const Trajectory& trajectory, double t0, double t1);

struct IdealCycleResult {
    double W_tot = 0.0; // ueV
    double Q_abs = 0.0; // ueV
};

// Closed forms for the ideal cycle (populations frozen on adiabats,
// frequencies frozen on isochores) from the endpoint populations at A and C
// and the plateau frequencies at A and B.
IdealCycleResult ideal_cycle_analysis(const std::vector<double>& populations_A,
                                      const std::vector<double>& populations_C,
                                      double omega_ge_A, double omega_ge_B, double alpha);

struct PowerEfficiency {
    double P = 0.0;    // eV/s
    double eta = 0.0;  // dimensionless; meaningful only when eta_defined
    bool eta_defined = false;
};

// P = -W_tot/tau_cyc, eta = -W_tot/Q_abs. Work is extracted for W_tot < 0.
// Q_abs <= 0 leaves eta undefined (flag, not an error).
PowerEfficiency power_efficiency(double W_tot, double Q_abs, double tau_cyc_ns);

// 1 - omega_min/omega_max.
double otto_efficiency(double omega_min, double omega_max);

// 1 - T_c/T_h from two reservoir temperatures (mK).
double carnot_efficiency(double T_cold, double T_hot);

struct TempFit {
    double temperature = 0.0; // mK
    double residual = 0.0;    // weighted RMS of ln p
    bool defined = false;     // false for inverted / single-level distributions
};

// Weighted least squares of ln p_m against -E_m/(kB T) with weights p_m and
// free normalization; populations below 1e-6 are excluded.
TempFit effective_temperature(const std::vector<double>& populations,
                              const std::vector<double>& omega_m);

struct EffectiveTemperatureSeries {
    std::vector<double> times;    // ns
    std::vector<double> T_eff;    // mK; NaN where undefined
    std::vector<double> residual;
    std::vector<bool> defined;
};

EffectiveTemperatureSeries effective_temperature_series(const Trajectory& trajectory);

struct CycleReport {
    int cycle = 0;
    double W_o = 0.0;  // expansion work (AB), ueV
    double Q_c = 0.0;  // cooling heat (BC), ueV
    double W_i = 0.0;  // compression work (CD), ueV
    double Q_h = 0.0;  // heating heat (DA), ueV
    double W_tot = 0.0;
    double Q_abs = 0.0;
    double P = 0.0;    // eV/s
    double eta = 0.0;
    bool eta_defined = false;
    double eta_otto = 0.0;
    double closure_residual = 0.0; // Delta E - sum(W) - sum(Q) over the cycle, ueV
    double T_eff_end = 0.0;        // mK at the cycle end; NaN when undefined
};

struct SaturationFit {
    double tau_sat_us = 0.0;
    double T_inf_mK = 0.0;
    double amplitude_mK = 0.0;
    double rms_mK = 0.0;
    double window_start_ns = 0.0;
    double window_end_ns = 0.0;
};

// Nonlinear least squares of T(t) = T_inf - A exp(-t / tau_sat): a log-spaced
// tau scan with linear (T_inf, A) solves, refined by golden section. Needs
// >= 4 points and a non-constant series.
SaturationFit fit_saturation(const std::vector<double>& times_ns,
                             const std::vector<double>& temperatures_mK);

struct ThermoReport {
    std::vector<CycleReport> cycles;
    double tau_cyc_ns = 0.0;
    double omega_ge_A = 0.0;
    double omega_ge_B = 0.0;
    double eta_otto = 0.0;
    std::optional<SaturationFit> saturation_max; // fitted on per-cycle maxima
    std::optional<SaturationFit> saturation_min; // fitted on per-cycle minima
};

ThermoReport analyze(const Trajectory& trajectory, const Config& config);

std::string thermo_report_to_json(const ThermoReport& report);
void write_thermo_json(const ThermoReport& report, const std::string& path);

} // namespace qhe
