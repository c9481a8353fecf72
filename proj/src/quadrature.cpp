#include "qhe/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qhe/errors.hpp"

namespace qhe {

namespace {

// 15-point Kronrod extension of the 7-point Gauss rule, positive abscissae.
constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000,
};
constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
};
// Gauss weights for the shared nodes (indices 1, 3, 5, 7 above).
constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
};

struct PanelEstimate {
    double kronrod;
    double error;
};

PanelEstimate gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                            long& evaluations) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double kronrod = 0.0;
    double gauss = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double offset = half * kKronrodNodes[i];
        double fsum;
        if (i == 7) {
            fsum = f(center);
            ++evaluations;
        } else {
            fsum = f(center - offset) + f(center + offset);
            evaluations += 2;
        }
        kronrod += kKronrodWeights[i] * fsum;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * fsum;
    }
    kronrod *= half;
    gauss *= half;
    return {kronrod, std::abs(kronrod - gauss)};
}

} // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b,
                                    const QuadratureSettings& settings) {
    QuadratureResult result;
    if (a == b) return result;

    struct Interval {
        double a, b;
        int depth;
    };
    std::vector<Interval> stack{{a, b, 0}};
    const double total_len = std::abs(b - a);

    // First pass estimate of the integral magnitude for the relative target.
    long evals = 0;
    const PanelEstimate whole = gauss_kronrod(f, a, b, evals);
    const double scale = std::abs(whole.kronrod);

    while (!stack.empty()) {
        Interval iv = stack.back();
        stack.pop_back();
        const PanelEstimate est = gauss_kronrod(f, iv.a, iv.b, evals);
        const double len = std::abs(iv.b - iv.a);
        const double local_tol =
            std::max(settings.abs_tol, settings.rel_tol * scale) * (len / total_len);
        if (est.error <= local_tol || len <= 1e-14 * total_len) {
            result.value += est.kronrod;
            result.error_estimate += est.error;
            continue;
        }
        if (iv.depth >= settings.max_depth) {
            std::ostringstream msg;
            msg << "quadrature did not converge on [" << iv.a << ", " << iv.b
                << "] after depth " << iv.depth << " (error estimate " << est.error
                << ", tolerance " << local_tol << ", " << evals << " evaluations)";
            throw NumericalError(msg.str());
        }
        const double mid = 0.5 * (iv.a + iv.b);
        stack.push_back({iv.a, mid, iv.depth + 1});
        stack.push_back({mid, iv.b, iv.depth + 1});
    }
    result.evaluations = evals;
    return result;
}

QuadratureResult integrate_with_breakpoints(const std::function<double(double)>& f,
                                            double a, double b,
                                            std::vector<double> breakpoints,
                                            const QuadratureSettings& settings) {
    breakpoints.push_back(a);
    breakpoints.push_back(b);
    std::sort(breakpoints.begin(), breakpoints.end());
    QuadratureResult total;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const double lo = std::clamp(breakpoints[i], a, b);
        const double hi = std::clamp(breakpoints[i + 1], a, b);
        if (hi - lo <= 0.0) continue;
        const QuadratureResult part = integrate_adaptive(f, lo, hi, settings);
        total.value += part.value;
        total.error_estimate += part.error_estimate;
        total.evaluations += part.evaluations;
    }
    return total;
}

} // namespace qhe
