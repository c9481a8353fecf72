#include "qhe/ramsey.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "qhe/constants.hpp"
#include "qhe/errors.hpp"
#include "qhe/rng.hpp"
#include "qhe/transmon.hpp"

namespace qhe {

double fringe_model(double phi, double delta_omega, double tau, double T2,
                    double amplitude, double offset) {
    if (T2 <= 0.0) throw ConfigError("fringe_model: T2 must be positive");
    return amplitude * std::cos(delta_omega * tau + phi) * std::exp(-tau / T2) + offset;
}

FringeFit fit_fringe(const RamseyFringe& fringe) {
    const std::size_t n = fringe.phases.size();
    if (n < 8 || fringe.amplitudes.size() != n) {
        throw DataError("fit_fringe: need >= 8 matching phase/amplitude points");
    }
    double lo = fringe.phases.front(), hi = fringe.phases.front();
    for (double p : fringe.phases) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    // 2*pi minus one typical grid spacing still identifies the phase.
    if (hi - lo < 2.0 * kPi * (1.0 - 2.0 / static_cast<double>(n))) {
        throw DataError("fit_fringe: phases must span at least 2*pi");
    }

    // A cos(theta + phi) = (A cos theta) cos(phi) - (A sin theta) sin(phi):
    // linear in (a, b, C) on the basis {cos, sin, 1}.
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        design(i, 0) = std::cos(fringe.phases[i]);
        design(i, 1) = std::sin(fringe.phases[i]);
        design(i, 2) = 1.0;
        y(i) = fringe.amplitudes[i];
    }
    const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(y);
    const double a = coef(0);
    const double b = coef(1);

    FringeFit fit;
    fit.amplitude = std::hypot(a, b);
    fit.offset = coef(2);
    const double y_scale = std::max(1.0e-300, std::abs(y.maxCoeff() - y.minCoeff()));
    if (fit.amplitude < 1e-9 * y_scale) {
        throw DataError("fit_fringe: flat fringe, phase is undefined");
    }
    fit.phase = std::atan2(-b, a);
    fit.delta_omega = fringe.tau > 0.0 ? fit.phase / fringe.tau : 0.0;
    fit.aliased = true;
    fit.rms = std::sqrt((design * coef - y).squaredNorm() / static_cast<double>(n));
    return fit;
}

std::vector<SweepPoint> detuning_sweep(const DeviceParams& params, const SweepOptions& options) {
    validate(params);
    if (options.n_amplitudes < 2) throw ConfigError("detuning_sweep: need >= 2 amplitudes");
    const auto energies = derive_transmon_energies(params.omega_ge0, params.alpha);
    const double omega0 = transition_frequency(0.0, energies);

    RandomStream noise(options.seed, 0);
    std::vector<SweepPoint> sweep;
    sweep.reserve(options.n_amplitudes);

    double prev_unwrapped = 0.0;
    bool refused = false;
    for (int k = 0; k < options.n_amplitudes; ++k) {
        const double flux = options.max_amplitude * static_cast<double>(k) /
                            static_cast<double>(options.n_amplitudes - 1);
        SweepPoint point;
        point.flux_amplitude = flux;
        if (std::abs(flux) >= 0.5) {
            point.aliased = true;
            sweep.push_back(point);
            continue;
        }
        const double true_detuning = transition_frequency(flux, energies) - omega0;

        RamseyFringe fringe;
        fringe.tau = options.tau;
        fringe.phases.reserve(options.n_phases);
        fringe.amplitudes.reserve(options.n_phases);
        for (int i = 0; i < options.n_phases; ++i) {
            const double phi = 2.0 * kPi * static_cast<double>(i) /
                               static_cast<double>(options.n_phases);
            double value = fringe_model(phi, true_detuning, options.tau, options.T2, 1.0, 0.0);
            if (options.noise_sigma > 0.0) value += options.noise_sigma * noise.gaussian();
            fringe.phases.push_back(phi);
            fringe.amplitudes.push_back(value);
        }
        const FringeFit fit = fit_fringe(fringe);

        // Continuity unwrap: pick the 2*pi branch closest to the previous
        // amplitude's unwrapped phase. The sweep starts from zero detuning.
        const double branch = std::round((prev_unwrapped - fit.phase) / (2.0 * kPi));
        const double unwrapped = fit.phase + 2.0 * kPi * branch;
        const double step = std::abs(unwrapped - prev_unwrapped);
        if (step > kPi / 2.0) refused = true; // ambiguous jump; stop following
        point.detuning = unwrapped / options.tau;
        point.aliased = refused || std::abs(unwrapped) > kPi;
        prev_unwrapped = unwrapped;
        sweep.push_back(point);
    }
    return sweep;
}

} // namespace qhe
