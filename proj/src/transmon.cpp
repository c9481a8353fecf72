#include "qhe/transmon.hpp"

#include <cmath>
#include <sstream>

#include "qhe/errors.hpp"

namespace qhe {

std::string to_string(Stroke stroke) {
    switch (stroke) {
        case Stroke::prep: return "prep";
        case Stroke::AB: return "AB";
        case Stroke::BC: return "BC";
        case Stroke::CD: return "CD";
        case Stroke::DA: return "DA";
    }
    return "prep";
}

std::vector<Segment> build_segments(const CycleSchedule& s) {
    std::vector<Segment> segments;
    segments.push_back({Stroke::prep, 0, 0.0, s.tau_p});
    double t = s.tau_p;
    for (int cycle = 1; cycle <= s.n_cycles; ++cycle) {
        segments.push_back({Stroke::AB, cycle, t, t + s.tau_1});
        t += s.tau_1;
        segments.push_back({Stroke::BC, cycle, t, t + s.tau_2});
        t += s.tau_2;
        segments.push_back({Stroke::CD, cycle, t, t + s.tau_3});
        t += s.tau_3;
        segments.push_back({Stroke::DA, cycle, t, t + s.tau_4});
        t += s.tau_4;
    }
    return segments;
}

Segment segment_at(double t, const CycleSchedule& s) {
    const double total = s.total_time();
    if (t < 0.0 || t > total + 1e-9) {
        std::ostringstream msg;
        msg << "time " << t << " ns outside the simulated window [0, " << total << "]";
        throw ConfigError(msg.str());
    }
    if (t < s.tau_p) return {Stroke::prep, 0, 0.0, s.tau_p};
    double u = t - s.tau_p;
    int cycle = static_cast<int>(std::floor(u / s.tau_cyc())) + 1;
    if (cycle > s.n_cycles) cycle = s.n_cycles; // t == total_time lands in the last stroke
    u -= (cycle - 1) * s.tau_cyc();
    const double base = s.tau_p + (cycle - 1) * s.tau_cyc();
    if (u < s.tau_1) return {Stroke::AB, cycle, base, base + s.tau_1};
    if (u < s.tau_1 + s.tau_2) return {Stroke::BC, cycle, base + s.tau_1, base + s.tau_1 + s.tau_2};
    if (u < s.tau_1 + s.tau_2 + s.tau_3) {
        return {Stroke::CD, cycle, base + s.tau_1 + s.tau_2, base + s.tau_1 + s.tau_2 + s.tau_3};
    }
    return {Stroke::DA, cycle, base + s.tau_1 + s.tau_2 + s.tau_3, base + s.tau_cyc()};
}

double external_flux(double t, const CycleSchedule& s) {
    const double total = s.total_time();
    if (t < 0.0 || t > total + 1e-9) {
        std::ostringstream msg;
        msg << "time " << t << " ns outside the simulated window [0, " << total << "]";
        throw ConfigError(msg.str());
    }
    if (t < s.tau_p) return s.phi_dc;
    // Fold into one cycle; the drive is tau_cyc-periodic after preparation.
    double u = std::fmod(t - s.tau_p, s.tau_cyc());
    const double ramp_rate = kPi / (2.0 * s.tau_1); // tau_1 = tau_3 = pi/(2*omega)
    if (u < s.tau_1) {
        const double sine = std::sin(ramp_rate * u);
        return s.phi_dc + s.phi_ac * sine * sine;
    }
    if (u < s.tau_1 + s.tau_2) return s.phi_dc + s.phi_ac;
    if (u < s.tau_1 + s.tau_2 + s.tau_3) {
        const double sine = std::sin(ramp_rate * (u - s.tau_1 - s.tau_2) + kPi / 2.0);
        return s.phi_dc + s.phi_ac * sine * sine;
    }
    return s.phi_dc;
}

double transition_frequency(double phi_ext, const DerivedTransmonEnergies& energies) {
    if (std::abs(phi_ext) >= 0.5) {
        std::ostringstream msg;
        msg << "flux " << phi_ext << " Phi_0 lies in the half-flux region (|phi| >= 0.5) "
               "where E_J ~ 0 invalidates the dispersion";
        throw ConfigError(msg.str());
    }
    const double ej = energies.E_J_max * std::abs(std::cos(kPi * phi_ext));
    return (std::sqrt(8.0 * energies.E_C * ej) - energies.E_C) / kHbar;
}

std::vector<double> eigenfrequencies(double omega_ge, double alpha, int n_levels) {
    if (n_levels < 2 || n_levels > 6) {
        throw ConfigError("eigenfrequencies: n_levels must lie in [2, 6]");
    }
    std::vector<double> omega(n_levels);
    for (int m = 0; m < n_levels; ++m) {
        omega[m] = omega_ge * m + 0.5 * alpha * (m * m - m);
    }
    return omega;
}

Eigen::MatrixXcd hamiltonian(double t, const DeviceParams& params,
                             const DerivedTransmonEnergies& energies,
                             const CycleSchedule& schedule) {
    const double phi = external_flux(t, schedule);
    const double omega_ge = transition_frequency(phi, energies);
    const auto omega = eigenfrequencies(omega_ge, params.alpha, params.n_levels);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(params.n_levels, params.n_levels);
    for (int m = 0; m < params.n_levels; ++m) h(m, m) = omega[m];
    return h;
}

SpectrumSample spectrum_at(double t, const DeviceParams& params,
                           const DerivedTransmonEnergies& energies,
                           const CycleSchedule& schedule) {
    SpectrumSample sample;
    sample.t = t;
    sample.phi_ext = external_flux(t, schedule);
    sample.omega_ge = transition_frequency(sample.phi_ext, energies);
    sample.omega_m = eigenfrequencies(sample.omega_ge, params.alpha, params.n_levels);
    return sample;
}

} // namespace qhe
