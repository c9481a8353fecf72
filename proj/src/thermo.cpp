#include "qhe/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "qhe/constants.hpp"
#include "qhe/errors.hpp"

namespace qhe {

double internal_energy(const std::vector<double>& populations,
                       const std::vector<double>& omega_m) {
    if (populations.size() != omega_m.size()) {
        throw DataError("internal_energy: populations and frequencies differ in length");
    }
    double sum = 0.0;
    double energy = 0.0;
    for (std::size_t m = 0; m < populations.size(); ++m) {
        sum += populations[m];
        energy += kHbar * omega_m[m] * populations[m];
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg << "internal_energy: populations sum to " << sum << " (expected 1 within 1e-6)";
        throw DataError(msg.str());
    }
    return energy;
}

StrokeIntegral integrate_stroke(const Trajectory& trajectory, double t0, double t1) {
    if (t1 <= t0) throw DataError("integrate_stroke: empty window");
    const std::size_t i0 = trajectory.index_at(t0);
    const std::size_t i1 = trajectory.index_at(t1);
    if (i1 <= i0) throw DataError("integrate_stroke: window contains fewer than 2 samples");
    StrokeIntegral result;
    for (std::size_t i = i0; i < i1; ++i) {
        const auto& p0 = trajectory.populations[i];
        const auto& p1 = trajectory.populations[i + 1];
        const auto& w0 = trajectory.omega_m[i];
        const auto& w1 = trajectory.omega_m[i + 1];
        for (std::size_t m = 0; m < p0.size(); ++m) {
            const double mean_p = 0.5 * (p0[m] + p1[m]);
            const double mean_w = 0.5 * (w0[m] + w1[m]);
            result.W += kHbar * mean_p * (w1[m] - w0[m]);
            result.Q += kHbar * mean_w * (p1[m] - p0[m]);
        }
    }
    return result;
}

IdealCycleResult ideal_cycle_analysis(const std::vector<double>& populations_A,
                                      const std::vector<double>& populations_C,
                                      double omega_ge_A, double omega_ge_B, double alpha) {
    if (populations_A.size() != populations_C.size()) {
        throw DataError("ideal_cycle_analysis: population vectors differ in length");
    }
    double sum_m_dp = 0.0;
    double sum_anharm_dp = 0.0;
    for (std::size_t m = 0; m < populations_A.size(); ++m) {
        const double dp = populations_A[m] - populations_C[m];
        sum_m_dp += static_cast<double>(m) * dp;
        sum_anharm_dp += static_cast<double>(m) * (static_cast<double>(m) - 1.0) * dp;
    }
    IdealCycleResult result;
    result.W_tot = -kHbar * omega_ge_A * (1.0 - omega_ge_B / omega_ge_A) * sum_m_dp;
    result.Q_abs = kHbar * omega_ge_A * sum_m_dp + 0.5 * kHbar * alpha * sum_anharm_dp;
    return result;
}

PowerEfficiency power_efficiency(double W_tot, double Q_abs, double tau_cyc_ns) {
    if (tau_cyc_ns <= 0.0) throw ConfigError("power_efficiency: tau_cyc must be positive");
    PowerEfficiency out;
    out.P = -W_tot / tau_cyc_ns * kUevPerNsToEvPerS;
    if (Q_abs > 0.0) {
        out.eta = -W_tot / Q_abs;
        out.eta_defined = true;
    }
    return out;
}

double otto_efficiency(double omega_min, double omega_max) {
    if (!(omega_min > 0.0) || omega_min > omega_max) {
        throw ConfigError("otto_efficiency: need 0 < omega_min <= omega_max");
    }
    return 1.0 - omega_min / omega_max;
}

double carnot_efficiency(double T_cold, double T_hot) {
    if (!(T_cold > 0.0) || !(T_hot > 0.0)) {
        throw ConfigError("carnot_efficiency: temperatures must be positive");
    }
    return 1.0 - T_cold / T_hot;
}

TempFit effective_temperature(const std::vector<double>& populations,
                              const std::vector<double>& omega_m) {
    constexpr double kFloor = 1e-6;
    TempFit fit;
    std::vector<double> energy, logp, weight;
    for (std::size_t m = 0; m < populations.size(); ++m) {
        if (populations[m] > kFloor) {
            energy.push_back(kHbar * omega_m[m]);
            logp.push_back(std::log(populations[m]));
            weight.push_back(populations[m]);
        }
    }
    if (energy.size() < 2) return fit; // single-level distribution: undefined

    // Weighted LSQ of ln p = c - E/(kB T): slope b and intercept c.
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < energy.size(); ++i) {
        sw += weight[i];
        swx += weight[i] * energy[i];
        swy += weight[i] * logp[i];
        swxx += weight[i] * energy[i] * energy[i];
        swxy += weight[i] * energy[i] * logp[i];
    }
    const double denom = sw * swxx - swx * swx;
    if (std::abs(denom) < 1e-300) return fit;
    const double slope = (sw * swxy - swx * swy) / denom;
    if (slope >= 0.0) return fit; // non-decaying populations: inverted, undefined
    const double intercept = (swy - slope * swx) / sw;

    fit.temperature = -1.0 / (kBoltzmann * slope);
    double ss = 0.0;
    for (std::size_t i = 0; i < energy.size(); ++i) {
        const double r = logp[i] - (intercept + slope * energy[i]);
        ss += weight[i] * r * r;
    }
    fit.residual = std::sqrt(ss / sw);
    fit.defined = true;
    return fit;
}

EffectiveTemperatureSeries effective_temperature_series(const Trajectory& trajectory) {
    EffectiveTemperatureSeries series;
    series.times = trajectory.times;
    series.T_eff.reserve(trajectory.size());
    series.residual.reserve(trajectory.size());
    series.defined.reserve(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        const TempFit fit =
            effective_temperature(trajectory.populations[i], trajectory.omega_m[i]);
        series.T_eff.push_back(fit.defined ? fit.temperature
                                           : std::numeric_limits<double>::quiet_NaN());
        series.residual.push_back(fit.residual);
        series.defined.push_back(fit.defined);
    }
    return series;
}

SaturationFit fit_saturation(const std::vector<double>& times_ns,
                             const std::vector<double>& temperatures_mK) {
    const std::size_t n = times_ns.size();
    if (n < 4 || temperatures_mK.size() != n) {
        throw DataError("fit_saturation: need at least 4 (t, T) points");
    }
    double t_min = times_ns.front(), t_max = times_ns.front();
    double T_lo = temperatures_mK.front(), T_hi = temperatures_mK.front();
    for (std::size_t i = 0; i < n; ++i) {
        t_min = std::min(t_min, times_ns[i]);
        t_max = std::max(t_max, times_ns[i]);
        T_lo = std::min(T_lo, temperatures_mK[i]);
        T_hi = std::max(T_hi, temperatures_mK[i]);
    }
    if (T_hi - T_lo < 1e-9 * std::max(1.0, std::abs(T_hi))) {
        throw NumericalError("fit_saturation: constant series, tau_sat unidentifiable");
    }

    // For fixed tau the model T_inf - A e^{-t/tau} is linear in (T_inf, A).
    const auto sse_for_tau = [&](double tau, double* T_inf_out, double* A_out) {
        double s1 = 0, sb = 0, sy = 0, sbb = 0, sby = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double b = -std::exp(-times_ns[i] / tau);
            s1 += 1.0;
            sb += b;
            sy += temperatures_mK[i];
            sbb += b * b;
            sby += b * temperatures_mK[i];
        }
        const double denom = s1 * sbb - sb * sb;
        if (std::abs(denom) < 1e-300) return std::numeric_limits<double>::infinity();
        const double A = (s1 * sby - sb * sy) / denom;
        const double T_inf = (sy - A * sb) / s1;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double model = T_inf - A * std::exp(-times_ns[i] / tau);
            ss += (temperatures_mK[i] - model) * (temperatures_mK[i] - model);
        }
        if (T_inf_out) *T_inf_out = T_inf;
        if (A_out) *A_out = A;
        return ss;
    };

    const double span = t_max - t_min;
    double best_tau = 0.0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 240; ++k) {
        const double tau = span * 1e-3 * std::pow(1e4, k / 239.0); // span/1000 .. 10*span
        const double ss = sse_for_tau(tau, nullptr, nullptr);
        if (ss < best_sse) {
            best_sse = ss;
            best_tau = tau;
        }
    }

    // Golden-section refinement around the grid minimum.
    double lo = best_tau / 1.6, hi = best_tau * 1.6;
    const double golden = 0.61803398874989484820;
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double f1 = sse_for_tau(x1, nullptr, nullptr);
    double f2 = sse_for_tau(x2, nullptr, nullptr);
    for (int iter = 0; iter < 120; ++iter) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = sse_for_tau(x1, nullptr, nullptr);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = sse_for_tau(x2, nullptr, nullptr);
        }
    }
    const double tau = 0.5 * (lo + hi);

    SaturationFit fit;
    double T_inf = 0.0, A = 0.0;
    const double ss = sse_for_tau(tau, &T_inf, &A);
    // A constant-compatible fit (amplitude indistinguishable from zero)
    // leaves tau meaningless.
    if (std::abs(A) < 1e-9 * std::max(1.0, std::abs(T_inf))) {
        throw NumericalError("fit_saturation: amplitude ~ 0, tau_sat unidentifiable");
    }
    fit.tau_sat_us = tau * 1e-3;
    fit.T_inf_mK = T_inf;
    fit.amplitude_mK = A;
    fit.rms_mK = std::sqrt(ss / n);
    fit.window_start_ns = t_min;
    fit.window_end_ns = t_max;
    return fit;
}

ThermoReport analyze(const Trajectory& trajectory, const Config& config) {
    const CycleSchedule& s = config.schedule;
    const auto energies = derive_transmon_energies(config.device.omega_ge0, config.device.alpha);

    ThermoReport report;
    report.tau_cyc_ns = s.tau_cyc();
    report.omega_ge_A = transition_frequency(s.phi_dc, energies);
    report.omega_ge_B = transition_frequency(s.phi_dc + s.phi_ac, energies);
    report.eta_otto = otto_efficiency(report.omega_ge_B, report.omega_ge_A);

    const EffectiveTemperatureSeries temp_series = effective_temperature_series(trajectory);

    std::vector<double> max_times, max_temps, min_times, min_temps;
    for (int cycle = 1; cycle <= s.n_cycles; ++cycle) {
        const double base = s.tau_p + (cycle - 1) * s.tau_cyc();
        const double tA = base;
        const double tB = base + s.tau_1;
        const double tC = tB + s.tau_2;
        const double tD = tC + s.tau_3;
        const double tEnd = base + s.tau_cyc();

        const StrokeIntegral ab = integrate_stroke(trajectory, tA, tB);
        const StrokeIntegral bc = integrate_stroke(trajectory, tB, tC);
        const StrokeIntegral cd = integrate_stroke(trajectory, tC, tD);
        const StrokeIntegral da = integrate_stroke(trajectory, tD, tEnd);

        CycleReport cr;
        cr.cycle = cycle;
        cr.W_o = ab.W;
        cr.Q_c = bc.Q;
        cr.W_i = cd.W;
        cr.Q_h = da.Q;
        cr.W_tot = ab.W + cd.W;
        cr.Q_abs = da.Q;
        const PowerEfficiency pe = power_efficiency(cr.W_tot, cr.Q_abs, s.tau_cyc());
        cr.P = pe.P;
        cr.eta = pe.eta;
        cr.eta_defined = pe.eta_defined;
        cr.eta_otto = report.eta_otto;
        const double dE = trajectory.mean_energy[trajectory.index_at(tEnd)] -
                          trajectory.mean_energy[trajectory.index_at(tA)];
        cr.closure_residual =
            dE - (ab.W + ab.Q + bc.W + bc.Q + cd.W + cd.Q + da.W + da.Q);

        // Per-cycle effective-temperature extrema for the saturation fits.
        const std::size_t iA = trajectory.index_at(tA);
        const std::size_t iEnd = trajectory.index_at(tEnd);
        double tmax = -std::numeric_limits<double>::infinity();
        double tmin = std::numeric_limits<double>::infinity();
        double at_max = tA, at_min = tA;
        for (std::size_t i = iA; i <= iEnd; ++i) {
            if (!temp_series.defined[i]) continue;
            if (temp_series.T_eff[i] > tmax) {
                tmax = temp_series.T_eff[i];
                at_max = trajectory.times[i];
            }
            if (temp_series.T_eff[i] < tmin) {
                tmin = temp_series.T_eff[i];
                at_min = trajectory.times[i];
            }
        }
        if (std::isfinite(tmax)) {
            max_times.push_back(at_max);
            max_temps.push_back(tmax);
            min_times.push_back(at_min);
            min_temps.push_back(tmin);
        }
        cr.T_eff_end = temp_series.defined[iEnd]
                           ? temp_series.T_eff[iEnd]
                           : std::numeric_limits<double>::quiet_NaN();
        report.cycles.push_back(cr);
    }

    if (max_times.size() >= 4) {
        try {
            report.saturation_max = fit_saturation(max_times, max_temps);
            report.saturation_min = fit_saturation(min_times, min_temps);
        } catch (const NumericalError&) {
            // Saturation fit is reported only when identifiable.
        }
    }
    return report;
}

namespace {

nlohmann::json cycle_to_json(const CycleReport& cr) {
    nlohmann::json j{{"cycle", cr.cycle},
                     {"W_o_ueV", cr.W_o},
                     {"Q_c_ueV", cr.Q_c},
                     {"W_i_ueV", cr.W_i},
                     {"Q_h_ueV", cr.Q_h},
                     {"W_tot_ueV", cr.W_tot},
                     {"Q_abs_ueV", cr.Q_abs},
                     {"P_eV_per_s", cr.P},
                     {"eta_otto", cr.eta_otto},
                     {"closure_residual_ueV", cr.closure_residual}};
    if (cr.eta_defined) j["eta"] = cr.eta;
    else j["eta"] = nullptr;
    if (std::isfinite(cr.T_eff_end)) j["T_eff_end_mK"] = cr.T_eff_end;
    else j["T_eff_end_mK"] = nullptr;
    return j;
}

nlohmann::json saturation_to_json(const SaturationFit& fit) {
    return nlohmann::json{{"tau_sat_us", fit.tau_sat_us},
                          {"T_inf_mK", fit.T_inf_mK},
                          {"amplitude_mK", fit.amplitude_mK},
                          {"rms_mK", fit.rms_mK},
                          {"window_start_ns", fit.window_start_ns},
                          {"window_end_ns", fit.window_end_ns}};
}

} // namespace

std::string thermo_report_to_json(const ThermoReport& report) {
    nlohmann::json root;
    root["tau_cyc_ns"] = report.tau_cyc_ns;
    root["omega_ge_A_radns"] = report.omega_ge_A;
    root["omega_ge_B_radns"] = report.omega_ge_B;
    root["eta_otto"] = report.eta_otto;
    root["cycles"] = nlohmann::json::array();
    for (const auto& cr : report.cycles) root["cycles"].push_back(cycle_to_json(cr));
    if (!report.cycles.empty()) {
        // Summary mirrors the per-cycle table for the first and last cycles.
        const CycleReport& first = report.cycles.front();
        root["summary"] = {{"Q_abs_ueV", first.Q_abs},
                           {"W_tot_ueV", first.W_tot},
                           {"P_eV_per_s", first.P},
                           {"eta", first.eta_defined ? nlohmann::json(first.eta)
                                                     : nlohmann::json(nullptr)},
                           {"eta_otto", first.eta_otto}};
        const CycleReport& last = report.cycles.back();
        root["last_cycle"] = cycle_to_json(last);
    }
    if (report.saturation_max) root["saturation_max"] = saturation_to_json(*report.saturation_max);
    if (report.saturation_min) root["saturation_min"] = saturation_to_json(*report.saturation_min);
    return root.dump(2);
}

void write_thermo_json(const ThermoReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write thermo report '" + path + "'");
    out << thermo_report_to_json(report) << '\n';
}

} // namespace qhe
