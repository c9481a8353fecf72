#pragma once

#include <functional>
#include <vector>

namespace qhe {

struct QuadratureSettings {
    double abs_tol = 1e-12;
    double rel_tol = 1e-8;
    int max_depth = 48;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    long evaluations = 0;
};

// Adaptive Gauss-Kronrod (G7/K15) on [a, b]. Throws NumericalError when the
// requested tolerance is not reached within max_depth bisections.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b,
                                    const QuadratureSettings& settings = {});

// Same integral split at interior breakpoints (sorted, clipped to [a, b]).
// Integrands here have sharp features at known locations (gap edges, Fermi
// steps), so panel boundaries are placed on them up front.
QuadratureResult integrate_with_breakpoints(const std::function<double(double)>& f,
                                            double a, double b,
                                            std::vector<double> breakpoints,
                                            const QuadratureSettings& settings = {});

} // namespace qhe
