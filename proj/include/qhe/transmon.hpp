#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qhe/params.hpp"

namespace qhe {

enum class Stroke { prep, AB, BC, CD, DA };

std::string to_string(Stroke stroke);

// One contiguous segment of the drive schedule: the preparation window or a
// single stroke of a specific cycle.
struct Segment {
    Stroke stroke = Stroke::prep;
    int cycle = 0;   // 1-based; 0 for preparation
    double t0 = 0.0; // ns, inclusive
    double t1 = 0.0; // ns, exclusive (except for the final segment)
};

std::vector<Segment> build_segments(const CycleSchedule& schedule);

// Segment containing time t; throws ConfigError outside the simulated window.
Segment segment_at(double t, const CycleSchedule& schedule);

// Piecewise flux drive: constant Phi_DC through preparation, then per cycle a
// sin^2 ramp to Phi_DC + Phi_AC, a plateau, the mirrored ramp back, and a
// plateau at Phi_DC. Continuous everywhere; periodic with tau_cyc after t_A.
double external_flux(double t, const CycleSchedule& schedule);

// Flux-dependent g<->e angular frequency from the transmon dispersion with
// E_J(phi) = E_J_max * |cos(pi * phi)|, phi in units of Phi_0. The half-flux
// point sits at phi = 0.5 where E_J vanishes; |phi| >= 0.5 is rejected.
double transition_frequency(double phi_ext, const DerivedTransmonEnergies& energies);

// omega_m = m*omega_ge + (alpha/2)(m^2 - m) for m = 0..n_levels-1.
std::vector<double> eigenfrequencies(double omega_ge, double alpha, int n_levels);

// Truncated transmon Hamiltonian at time t, diagonal in the instantaneous
// eigenbasis. Entries are angular frequencies (rad/ns); energies are
// hbar * diagonal. Off-diagonals are exactly zero.
Eigen::MatrixXcd hamiltonian(double t, const DeviceParams& params,
                             const DerivedTransmonEnergies& energies,
                             const CycleSchedule& schedule);

struct SpectrumSample {
    double t = 0.0;
    double phi_ext = 0.0;
    double omega_ge = 0.0;
    std::vector<double> omega_m;
};

SpectrumSample spectrum_at(double t, const DeviceParams& params,
                           const DerivedTransmonEnergies& energies,
                           const CycleSchedule& schedule);

} // namespace qhe
