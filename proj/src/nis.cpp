#include "qhe/nis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "qhe/errors.hpp"

namespace qhe {

double fermi(double energy, double temperature) {
    const double x = energy / (kBoltzmann * temperature);
    if (x > 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

double normalized_dos(double eps, double Delta, double gamma_D) {
    const std::complex<double> z(eps, gamma_D * Delta);
    const std::complex<double> w = z / std::sqrt(z * z - Delta * Delta);
    return std::abs(w.real());
}

double iv_current(double v, double T_N, double Delta, double gamma_D,
                  const QuadratureSettings& quad) {
    if (T_N <= 0.0) throw ConfigError("iv_current: T_N must be positive");
    const double ev = v * Delta; // bias energy in ueV
    const double kT = kBoltzmann * T_N;
    const double bound = std::max({Delta, std::abs(ev), 4.0 * kT}) * 12.0;
    const auto integrand = [&](double eps) {
        return normalized_dos(eps, Delta, gamma_D) *
               (fermi(eps - ev, T_N) - fermi(eps + ev, T_N));
    };
    const std::vector<double> breaks{-Delta, -std::abs(ev), 0.0, std::abs(ev), Delta};
    const auto result = integrate_with_breakpoints(integrand, -bound, bound, breaks, quad);
    return result.value / (2.0 * Delta);
}

IvCurve synth_iv_curve(double Delta, double R_T_kohm, double gamma_D, double T_N,
                       double v_max_over_delta, int n_points) {
    if (n_points < 2) throw ConfigError("synth_iv_curve: need at least 2 points");
    IvCurve curve;
    curve.T_N = T_N;
    curve.voltage_uV.reserve(n_points);
    curve.current_nA.reserve(n_points);
    // uV / kOhm = nA, so the physical current is I_norm * Delta / R_T.
    for (int i = 0; i < n_points; ++i) {
        const double v = -v_max_over_delta +
                         2.0 * v_max_over_delta * static_cast<double>(i) / (n_points - 1);
        curve.voltage_uV.push_back(v * Delta);
        curve.current_nA.push_back(iv_current(v, T_N, Delta, gamma_D) * Delta / R_T_kohm);
    }
    return curve;
}

namespace {

// Least-squares line through (x, y); returns {slope, intercept}.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw DataError("degenerate abscissae in line fit");
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    return {slope, intercept};
}

// Outward scan for the first sample with |I| >= theta * slope * |V|, then
// linear interpolation to the crossing voltage. direction = +1 or -1.
double threshold_crossing(const IvCurve& curve, double slope, double theta, int direction) {
    const auto& V = curve.voltage_uV;
    const auto& I = curve.current_nA;
    const std::size_t n = V.size();
    // Start from the sample closest to V = 0.
    std::size_t start = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(V[i]) < std::abs(V[start])) start = i;
    }
    auto excess = [&](std::size_t i) { return std::abs(I[i]) - theta * slope * std::abs(V[i]); };
    std::size_t prev = start;
    for (std::size_t step = 1;; ++step) {
        const long idx = static_cast<long>(start) + direction * static_cast<long>(step);
        if (idx < 0 || idx >= static_cast<long>(n)) {
            throw DataError("IV curve never crosses the subgap-edge threshold; "
                            "curve too narrow or flat");
        }
        const std::size_t i = static_cast<std::size_t>(idx);
        if (excess(i) >= 0.0) {
            const double f0 = excess(prev);
            const double f1 = excess(i);
            const double w = (f1 - f0) != 0.0 ? -f0 / (f1 - f0) : 1.0;
            return V[prev] + w * (V[i] - V[prev]);
        }
        prev = i;
    }
}

} // namespace

JunctionExtraction extract_junction_params(const IvCurve& curve, double theta) {
    const std::size_t n = curve.voltage_uV.size();
    if (n < 20 || curve.current_nA.size() != n) {
        throw DataError("extract_junction_params: need a consistent curve with >= 20 samples");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (curve.voltage_uV[i] <= curve.voltage_uV[i - 1]) {
            throw DataError("extract_junction_params: voltages must be strictly increasing");
        }
    }
    if (theta <= 0.0 || theta >= 1.0) {
        throw ConfigError("extract_junction_params: theta must lie in (0, 1)");
    }

    const double v_max = std::max(std::abs(curve.voltage_uV.front()),
                                  std::abs(curve.voltage_uV.back()));

    // Provisional Ohmic slope from the outer 20% of each branch.
    auto branch_fit = [&](double lo_abs) {
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(curve.voltage_uV[i]) >= lo_abs) {
                xs.push_back(curve.voltage_uV[i]);
                ys.push_back(curve.current_nA[i]);
            }
        }
        if (xs.size() < 4) throw DataError("extract_junction_params: too few Ohmic samples");
        return fit_line(xs, ys);
    };
    double slope = branch_fit(0.8 * v_max).first;
    if (!(slope > 0.0)) {
        throw DataError("extract_junction_params: non-positive Ohmic slope (flat curve?)");
    }

    // Threshold crossings against the line through the origin. The ideal BCS
    // branch sqrt(V^2 - Delta^2)/R_T meets theta*V/R_T at Delta/sqrt(1-theta^2),
    // hence the closed-form correction below.
    double Delta_hat = 0.0;
    for (int iteration = 0; iteration < 2; ++iteration) {
        const double v_plus = threshold_crossing(curve, slope, theta, +1);
        const double v_minus = threshold_crossing(curve, slope, theta, -1);
        Delta_hat = 0.5 * (v_plus - v_minus) * std::sqrt(1.0 - theta * theta);
        if (Delta_hat <= 0.0) throw DataError("extract_junction_params: negative gap estimate");
        // Refit the Ohmic slope on |eV| >= 2*Delta_hat and repeat once.
        const auto fit = branch_fit(2.0 * Delta_hat);
        slope = fit.first;
    }

    const auto ohmic = branch_fit(2.0 * Delta_hat);
    double ss = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(curve.voltage_uV[i]) >= 2.0 * Delta_hat) {
            const double r = curve.current_nA[i] - (ohmic.first * curve.voltage_uV[i] + ohmic.second);
            ss += r * r;
            ++count;
        }
    }

    // Subgap slope over |eV| <= 0.2*Delta_hat.
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(curve.voltage_uV[i]) <= 0.2 * Delta_hat) {
            xs.push_back(curve.voltage_uV[i]);
            ys.push_back(curve.current_nA[i]);
        }
    }
    if (xs.size() < 3) throw DataError("extract_junction_params: too few subgap samples");
    const double subgap_slope = fit_line(xs, ys).first;
    if (!(subgap_slope > 0.0)) {
        throw DataError("extract_junction_params: non-positive subgap slope");
    }

    JunctionExtraction out;
    out.R_T_hat = 1.0 / ohmic.first; // nA/uV -> kOhm
    out.ohmic_rms = count > 0 ? std::sqrt(ss / count) : 0.0;
    out.Delta_hat = Delta_hat;
    const double ratio = subgap_slope / ohmic.first; // = R_T / R_subgap ~ n_S(0)
    if (ratio >= 1.0) throw DataError("extract_junction_params: subgap slope exceeds Ohmic slope");
    // n_S(0) = gamma/sqrt(1+gamma^2); invert for gamma.
    out.gamma_D_hat = ratio / std::sqrt(1.0 - ratio * ratio);
    return out;
}

double TunnelingRateFn::operator()(double energy) const {
    const double kT = kBoltzmann * T_N;
    const double bound = span_mult * std::max({Delta, 4.0 * kT, std::abs(energy)});
    const auto integrand = [&](double eps) {
        return normalized_dos(eps, Delta, gamma_D) * fermi(eps - energy, T_N) *
               fermi(-eps, T_N);
    };
    const std::vector<double> breaks{-Delta, 0.0, Delta, energy};
    const auto result = integrate_with_breakpoints(integrand, -bound, bound, breaks, quad);
    return result.value / kPlanck;
}

double forward_tunneling_rate(double energy, const TunnelingRateFn& fn) {
    return fn(energy);
}

double qcr_voltage(double t, const CycleSchedule& s) {
    const Segment seg = segment_at(t, s);
    double amplitude = 0.0;
    switch (seg.stroke) {
        case Stroke::prep:
            amplitude = s.prep_drive == PrepDrive::heating   ? s.A_h
                        : s.prep_drive == PrepDrive::cooling ? s.A_c
                                                             : 0.0;
            break;
        case Stroke::BC: amplitude = s.A_c; break;
        case Stroke::DA: amplitude = s.A_h; break;
        case Stroke::AB:
        case Stroke::CD: return 0.0;
    }
    if (amplitude == 0.0) return 0.0;
    const double local = t - seg.t0;
    const double phase = std::fmod(local, s.square_period) / s.square_period;
    return phase < 0.5 ? amplitude : -amplitude;
}

PairRates qcr_rates(int n_lower, double omega_mn, double V, const DeviceParams& params,
                    const TunnelingRateFn& fn) {
    if (n_lower < 0) throw ConfigError("qcr_rates: lower level index must be >= 0");
    const double detune = omega_mn - params.omega_aux;
    if (std::abs(detune) < 1e-6) {
        std::ostringstream msg;
        msg << "qcr_rates: |omega_mn - omega_aux| = " << std::abs(detune)
            << " rad/ns; the dispersive approximation breaks down at resonance";
        throw NumericalError(msg.str());
    }
    // R_T is stored in kOhm, Z_aux in Ohm.
    const double prefactor = kPi * params.Z_aux / (params.R_T * 1e3) *
                             params.g_coupling * params.g_coupling * (n_lower + 1) /
                             (detune * detune);
    const double ev = V * params.Delta;
    const double hw = kHbar * omega_mn;
    PairRates rates;
    rates.down = prefactor * (fn(ev + hw) + fn(-ev + hw));
    rates.up = prefactor * (fn(ev - hw) + fn(-ev - hw));
    return rates;
}

PairRateBreakdown total_rates(int n_lower, double omega_mn, double V,
                              const DeviceParams& params, const TunnelingRateFn& fn) {
    PairRateBreakdown rates;
    const double x = kHbar * omega_mn / (kBoltzmann * params.T_N);
    const double n_be = 1.0 / std::expm1(x);
    rates.down_intrinsic = params.gamma_eg0 * (n_lower + 1) * (n_be + 1.0);
    rates.up_intrinsic = params.gamma_eg0 * (n_lower + 1) * n_be;
    const PairRates qcr = qcr_rates(n_lower, omega_mn, V, params, fn);
    rates.down_qcr = qcr.down;
    rates.up_qcr = qcr.up;
    return rates;
}

RateTable::Context RateTable::make_context(double omega_ge, double v_abs) const {
    Context ctx;
    ctx.omega_ge = omega_ge;
    ctx.v_abs = v_abs;
    ctx.pairs.resize(n_pairs_);
    for (int pair = 0; pair < n_pairs_; ++pair) {
        const double omega_mn = omega_ge + params_.alpha * pair;
        ctx.pairs[pair] = total_rates(pair, omega_mn, v_abs, params_, fn_);
    }
    return ctx;
}

RateTable::RateTable(const DeviceParams& params, const CycleSchedule& schedule,
                     const DerivedTransmonEnergies& energies)
    : params_(params), schedule_(schedule), energies_(energies) {
    fn_.Delta = params.Delta;
    fn_.gamma_D = params.gamma_D;
    fn_.T_N = params.T_N;
    n_pairs_ = params.n_levels - 1;
    omega_ge_A_ = transition_frequency(schedule.phi_dc, energies);
    omega_ge_B_ = transition_frequency(schedule.phi_dc + schedule.phi_ac, energies);

    const double v_prep = schedule.prep_drive == PrepDrive::heating   ? schedule.A_h
                          : schedule.prep_drive == PrepDrive::cooling ? schedule.A_c
                                                                      : 0.0;
    ctx_prep_ = make_context(omega_ge_A_, v_prep);
    ctx_A_off_ = make_context(omega_ge_A_, 0.0);
    ctx_B_off_ = make_context(omega_ge_B_, 0.0);
    ctx_BC_ = make_context(omega_ge_B_, schedule.A_c);
    ctx_DA_ = make_context(omega_ge_A_, schedule.A_h);

    for (const Context* ctx : {&ctx_prep_, &ctx_A_off_, &ctx_B_off_, &ctx_BC_, &ctx_DA_}) {
        for (const auto& pair : ctx->pairs) {
            max_total_rate_ = std::max({max_total_rate_, pair.down(), pair.up()});
        }
    }
}

void RateTable::rates_at(double t, std::vector<PairRateBreakdown>& out) const {
    rates_in_segment(segment_at(t, schedule_), t, out);
}

void RateTable::rates_in_segment(const Segment& seg, double t,
                                 std::vector<PairRateBreakdown>& out) const {
    switch (seg.stroke) {
        case Stroke::prep: out = ctx_prep_.pairs; return;
        case Stroke::BC: out = ctx_BC_.pairs; return;
        case Stroke::DA: out = ctx_DA_.pairs; return;
        case Stroke::AB:
        case Stroke::CD: break;
    }
    // Flux ramp: V = 0. Intrinsic rates follow the instantaneous frequency
    // exactly; the (tiny) QCR V = 0 part is interpolated linearly in omega
    // between the two plateau evaluations.
    const double phi = external_flux(t, schedule_);
    const double omega_ge = transition_frequency(phi, energies_);
    const double span = omega_ge_A_ - omega_ge_B_;
    const double w = span != 0.0 ? (omega_ge - omega_ge_B_) / span : 0.0;
    out.resize(n_pairs_);
    for (int pair = 0; pair < n_pairs_; ++pair) {
        const double omega_mn = omega_ge + params_.alpha * pair;
        PairRateBreakdown& rates = out[pair];
        const double x = kHbar * omega_mn / (kBoltzmann * params_.T_N);
        const double n_be = 1.0 / std::expm1(x);
        rates.down_intrinsic = params_.gamma_eg0 * (pair + 1) * (n_be + 1.0);
        rates.up_intrinsic = params_.gamma_eg0 * (pair + 1) * n_be;
        const auto& lo = ctx_B_off_.pairs[pair];
        const auto& hi = ctx_A_off_.pairs[pair];
        rates.down_qcr = lo.down_qcr + w * (hi.down_qcr - lo.down_qcr);
        rates.up_qcr = lo.up_qcr + w * (hi.up_qcr - lo.up_qcr);
    }
}

std::vector<RateTable::ExportRow> RateTable::export_rows() const {
    std::vector<ExportRow> rows;
    const auto emit = [&](const std::string& stroke, const Context& ctx) {
        for (int pair = 0; pair < n_pairs_; ++pair) {
            rows.push_back({stroke, pair + 1, pair, ctx.v_abs, ctx.pairs[pair].down(),
                            ctx.pairs[pair].up()});
        }
    };
    emit("prep", ctx_prep_);
    emit("AB", ctx_A_off_);
    emit("BC", ctx_BC_);
    emit("CD", ctx_B_off_);
    emit("DA", ctx_DA_);
    return rows;
}

} // namespace qhe
