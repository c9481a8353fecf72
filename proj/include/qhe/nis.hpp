#pragma once

#include <string>
#include <vector>

#include "qhe/params.hpp"
#include "qhe/quadrature.hpp"
#include "qhe/transmon.hpp"

namespace qhe {

// Fermi-Dirac occupation at energy e (ueV) and temperature T (mK).
double fermi(double energy, double temperature);

// Dynes-broadened BCS density of states, normalized to 1 far above the gap.
double normalized_dos(double eps, double Delta, double gamma_D);

// DC current through the NIS junction at bias v (units of Delta/e),
// normalized to Delta/(e*R_T). Odd in v; adaptive quadrature to abs_tol.
double iv_current(double v, double T_N, double Delta, double gamma_D,
                  const QuadratureSettings& quad = {1e-10, 1e-9, 48});

// Physical IV samples: voltage in uV, current in nA.
struct IvCurve {
    std::vector<double> voltage_uV;
    std::vector<double> current_nA;
    double T_N = 0.0; // mK, informational
};

IvCurve synth_iv_curve(double Delta, double R_T_kohm, double gamma_D, double T_N,
                       double v_max_over_delta = 20.0, int n_points = 601);

struct JunctionExtraction {
    double Delta_hat = 0.0;   // ueV
    double R_T_hat = 0.0;     // kOhm
    double gamma_D_hat = 0.0;
    double ohmic_rms = 0.0;   // residual of the high-bias linear fit, nA
};

// Recovers (Delta, R_T, gamma_D) from an IV curve:
//  - R_T from the regression slope of the Ohmic branches over |eV| >= 2*Delta_hat,
//  - Delta from the two threshold crossings |I| = theta * |V|/R_T, corrected by
//    the BCS crossing position sqrt(1 - theta^2),
//  - gamma_D from the subgap/ohmic resistance ratio, inverted through
//    n_S(0) = gamma/sqrt(1 + gamma^2).
JunctionExtraction extract_junction_params(const IvCurve& curve, double theta = 0.5);

// Normalized forward quasiparticle tunneling rate (1/ns),
// F(E) = (1/h) Int n_S(eps) f(eps - E) [1 - f(eps)] d eps with both Fermi
// factors at T_N.
struct TunnelingRateFn {
    double Delta = 186.0;
    double gamma_D = 4.0e-3;
    double T_N = 200.0;
    double span_mult = 12.0; // integration span in multiples of max(Delta, 4kT, |E|)
    QuadratureSettings quad{1e-12, 1e-8, 48};

    double operator()(double energy) const;
};

double forward_tunneling_rate(double energy, const TunnelingRateFn& fn);

// Signed QCR bias at time t (Delta/e): a net-zero square wave of amplitude
// A_c during BC, A_h during DA, zero during ramps; during preparation the
// amplitude follows prep_drive.
double qcr_voltage(double t, const CycleSchedule& schedule);

struct PairRates {
    double down = 0.0; // emission m -> m-1, 1/ns
    double up = 0.0;   // absorption m-1 -> m, 1/ns
};

// QCR-induced rates for the adjacent pair with lower level n (upper m = n+1)
// at transition frequency omega_mn and bias magnitude V (Delta/e). Exactly
// invariant under V -> -V via the tau = +-1 sum.
PairRates qcr_rates(int n_lower, double omega_mn, double V, const DeviceParams& params,
                    const TunnelingRateFn& fn);

// Intrinsic (Bose-Einstein at T_N) plus QCR contributions.
struct PairRateBreakdown {
    double down_intrinsic = 0.0;
    double up_intrinsic = 0.0;
    double down_qcr = 0.0;
    double up_qcr = 0.0;
    double down() const { return down_intrinsic + down_qcr; }
    double up() const { return up_intrinsic + up_qcr; }
};

PairRateBreakdown total_rates(int n_lower, double omega_mn, double V,
                              const DeviceParams& params, const TunnelingRateFn& fn);

// Precomputed transition rates for every (stroke, adjacent pair). Plateau
// strokes carry constant rates; along the flux ramps the QCR part (V = 0
// there) is interpolated linearly in the instantaneous omega_mn between the
// two plateau values while the intrinsic part is evaluated exactly.
class RateTable {
public:
    RateTable(const DeviceParams& params, const CycleSchedule& schedule,
              const DerivedTransmonEnergies& energies);

    // Rates for all adjacent pairs at time t (pair index = lower level n).
    void rates_at(double t, std::vector<PairRateBreakdown>& out) const;

    // Same, but with the stroke context pinned; integrator stages at a
    // segment's right edge must not pick up the next stroke's drive.
    void rates_in_segment(const Segment& segment, double t,
                          std::vector<PairRateBreakdown>& out) const;

    double max_total_rate() const { return max_total_rate_; }
    int n_pairs() const { return n_pairs_; }

    struct ExportRow {
        std::string stroke;
        int m = 0;
        int n = 0;
        double V = 0.0;
        double gamma_down = 0.0;
        double gamma_up = 0.0;
    };
    std::vector<ExportRow> export_rows() const;

private:
    struct Context {
        double omega_ge = 0.0;
        double v_abs = 0.0;
        std::vector<PairRateBreakdown> pairs;
    };

    Context make_context(double omega_ge, double v_abs) const;

    DeviceParams params_;
    CycleSchedule schedule_;
    DerivedTransmonEnergies energies_;
    TunnelingRateFn fn_;
    int n_pairs_ = 0;
    double omega_ge_A_ = 0.0;
    double omega_ge_B_ = 0.0;
    Context ctx_prep_;    // preparation plateau
    Context ctx_A_off_;   // phi_dc plateau, V = 0 (ramp endpoint)
    Context ctx_B_off_;   // detuned plateau, V = 0 (ramp endpoint)
    Context ctx_BC_;      // detuned plateau, V = A_c
    Context ctx_DA_;      // phi_dc plateau, V = A_h
    double max_total_rate_ = 0.0;
};

} // namespace qhe
