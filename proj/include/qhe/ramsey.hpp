#pragma once

#include <cstdint>
#include <vector>

#include "qhe/params.hpp"

namespace qhe {

// Modified Ramsey fringe: A * cos(delta_omega * tau + phi) * exp(-tau/T2) + C.
double fringe_model(double phi, double delta_omega, double tau, double T2,
                    double amplitude, double offset);

struct RamseyFringe {
    std::vector<double> phases;     // rad, should span >= 2*pi
    std::vector<double> amplitudes; // readout units
    double tau = 50.0;              // flux-pulse length, ns
};

struct FringeFit {
    double phase = 0.0;        // fitted phase offset in (-pi, pi]
    double delta_omega = 0.0;  // phase / tau, rad/ns; determined mod 2*pi/tau
    double amplitude = 0.0;    // > 0 by convention
    double offset = 0.0;
    bool aliased = true;       // a single fringe never resolves the branch
    double rms = 0.0;
};

// Linear least squares on the basis {cos(phi), sin(phi), 1}. The decaying
// envelope only rescales the amplitude, so T2 is not fitted. Flat fringes
// raise DataError.
FringeFit fit_fringe(const RamseyFringe& fringe);

struct SweepPoint {
    double flux_amplitude = 0.0; // Phi_0
    double detuning = 0.0;       // rad/ns, continuity-unwrapped
    bool aliased = false;        // raw fit left the principal window, or the
                                 // unwrap refused to follow a jump
};

struct SweepOptions {
    double tau = 50.0;        // ns
    int n_phases = 64;        // phase points over [0, 2*pi)
    double T2 = 10000.0;      // ns, envelope only
    double noise_sigma = 0.0; // readout units
    std::uint64_t seed = 0;
    double max_amplitude = 0.12; // Phi_0
    int n_amplitudes = 121;
};

// Emulates the flux-pulse calibration: for each amplitude, synthesize a
// fringe at the true detuning from the transmon dispersion, fit it, and
// unwrap the fitted phases by continuity across the sweep. A phase step
// larger than pi/2 between adjacent amplitudes marks the remaining points
// as refused rather than extrapolated.
std::vector<SweepPoint> detuning_sweep(const DeviceParams& params, const SweepOptions& options);

} // namespace qhe
