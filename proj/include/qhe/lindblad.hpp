#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhe/nis.hpp"
#include "qhe/params.hpp"
#include "qhe/transmon.hpp"

namespace qhe {

// Gibbs populations at temperature T (mK) for levels with angular
// frequencies omega_m (rad/ns).
std::vector<double> gibbs_populations(double temperature, const std::vector<double>& omega_m);

Eigen::MatrixXcd density_from_populations(const std::vector<double>& populations);

// Sum of adjacent-pair jump dissipators applied to rho:
// sum_n Gamma_down D(|n><n+1|) rho + Gamma_up D(|n+1><n|) rho
// with D(O) rho = O rho O^dag - {O^dag O, rho}/2. Hermitian and traceless.
Eigen::MatrixXcd dissipator_apply(const Eigen::MatrixXcd& rho,
                                  const std::vector<PairRateBreakdown>& rates);

// Full right-hand side -i [diag(omega), rho] + dissipators. The Hamiltonian
// enters as angular frequencies, so no hbar division appears.
Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho,
                              const std::vector<double>& omega_m,
                              const std::vector<PairRateBreakdown>& rates);

struct StepContext {
    const DeviceParams* params = nullptr;
    const DerivedTransmonEnergies* energies = nullptr;
    const CycleSchedule* schedule = nullptr;
    const RateTable* rates = nullptr;
    const Segment* segment = nullptr; // pinned stroke for boundary stages
};

// One classical RK4 step of the master equation. The result is
// re-Hermitized; the trace is renormalized (and counted) when it drifts
// beyond 1e-12; populations below -1e-6 raise NumericalError.
void step(Eigen::MatrixXcd& rho, double t, double dt, const StepContext& ctx,
          long* renormalizations = nullptr);

struct Trajectory {
    int n_levels = 0;
    std::vector<double> times;                      // ns
    std::vector<std::vector<double>> populations;   // [sample][level]
    std::vector<std::vector<double>> omega_m;       // rad/ns, [sample][level]
    std::vector<double> omega_ge;                   // rad/ns
    std::vector<double> phi_ext;                    // Phi_0
    std::vector<double> v_qcr;                      // Delta/e, signed
    std::vector<double> mean_energy;                // ueV
    std::vector<Stroke> stroke;
    long trace_renormalizations = 0;

    std::size_t size() const { return times.size(); }
    // Index of the sample at time t (within 1e-6 ns); throws if absent.
    std::size_t index_at(double t) const;
};

// Integrates preparation plus n_cycles and samples every sample_stride steps
// plus every stroke boundary. Deterministic: identical config gives a
// bit-identical trajectory. The default path integrates the populations
// directly (the dynamics never generate coherences from diagonal states);
// method = full propagates the density matrix and agrees to 1e-9.
Trajectory simulate(const Config& config);

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path);
void write_spectrum_csv(const Trajectory& trajectory, const std::string& path);

} // namespace qhe
