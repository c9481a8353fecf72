#include "qhe/lindblad.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qhe/constants.hpp"
#include "qhe/csv.hpp"
#include "qhe/errors.hpp"

namespace qhe {

std::vector<double> gibbs_populations(double temperature, const std::vector<double>& omega_m) {
    if (temperature <= 0.0) throw ConfigError("gibbs_populations: temperature must be positive");
    std::vector<double> p(omega_m.size());
    double z = 0.0;
    for (std::size_t m = 0; m < omega_m.size(); ++m) {
        p[m] = std::exp(-kHbar * omega_m[m] / (kBoltzmann * temperature));
        z += p[m];
    }
    for (double& value : p) value /= z;
    return p;
}

Eigen::MatrixXcd density_from_populations(const std::vector<double>& populations) {
    const int dim = static_cast<int>(populations.size());
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    for (int m = 0; m < dim; ++m) rho(m, m) = populations[m];
    return rho;
}

Eigen::MatrixXcd dissipator_apply(const Eigen::MatrixXcd& rho,
                                  const std::vector<PairRateBreakdown>& rates) {
    const int dim = static_cast<int>(rho.rows());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 0; n + 1 < dim; ++n) {
        const int m = n + 1;
        const double down = rates[n].down();
        const double up = rates[n].up();
        // Lowering |n><m|: O rho O^dag = rho_mm |n><n|; O^dag O = |m><m|.
        out(n, n) += down * rho(m, m).real();
        out.row(m) -= 0.5 * down * rho.row(m);
        out.col(m) -= 0.5 * down * rho.col(m);
        // Raising |m><n|: O rho O^dag = rho_nn |m><m|; O^dag O = |n><n|.
        out(m, m) += up * rho(n, n).real();
        out.row(n) -= 0.5 * up * rho.row(n);
        out.col(n) -= 0.5 * up * rho.col(n);
    }
    return out;
}

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho,
                              const std::vector<double>& omega_m,
                              const std::vector<PairRateBreakdown>& rates) {
    const int dim = static_cast<int>(rho.rows());
    Eigen::MatrixXcd out = dissipator_apply(rho, rates);
    const std::complex<double> minus_i(0.0, -1.0);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            if (i == j) continue;
            out(i, j) += minus_i * (omega_m[i] - omega_m[j]) * rho(i, j);
        }
    }
    return out;
}

namespace {

struct RhsEvaluator {
    const StepContext& ctx;
    mutable std::vector<PairRateBreakdown> rates;
    mutable std::vector<double> omega;

    void prepare(double t) const {
        const double phi = external_flux(t, *ctx.schedule);
        const double omega_ge = transition_frequency(phi, *ctx.energies);
        omega = eigenfrequencies(omega_ge, ctx.params->alpha, ctx.params->n_levels);
        if (ctx.segment) {
            ctx.rates->rates_in_segment(*ctx.segment, t, rates);
        } else {
            ctx.rates->rates_at(t, rates);
        }
    }

    Eigen::MatrixXcd operator()(const Eigen::MatrixXcd& rho, double t) const {
        prepare(t);
        return lindblad_rhs(rho, omega, rates);
    }
};

} // namespace

void step(Eigen::MatrixXcd& rho, double t, double dt, const StepContext& ctx,
          long* renormalizations) {
    if (dt <= 0.0) throw ConfigError("step: dt must be positive");
    const RhsEvaluator rhs{ctx, {}, {}};
    const Eigen::MatrixXcd k1 = rhs(rho, t);
    const Eigen::MatrixXcd k2 = rhs(rho + 0.5 * dt * k1, t + 0.5 * dt);
    const Eigen::MatrixXcd k3 = rhs(rho + 0.5 * dt * k2, t + 0.5 * dt);
    const Eigen::MatrixXcd k4 = rhs(rho + dt * k3, t + dt);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double trace = rho.trace().real();
    if (std::abs(trace - 1.0) > 1e-12) {
        rho /= trace;
        if (renormalizations) ++(*renormalizations);
    }
    for (int m = 0; m < rho.rows(); ++m) {
        if (rho(m, m).real() < -1e-6) {
            std::ostringstream msg;
            msg << "integrator instability at t = " << t + dt << " ns: population of level "
                << m << " reached " << rho(m, m).real() << "; reduce simulation.dt";
            throw NumericalError(msg.str());
        }
    }
}

std::size_t Trajectory::index_at(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (std::abs(times[i] - t) < 1e-6) return i;
    }
    std::ostringstream msg;
    msg << "no trajectory sample at t = " << t << " ns";
    throw DataError(msg.str());
}

namespace {

// Pauli (population-only) right-hand side: the model's Hamiltonian is
// diagonal and the jump operators connect adjacent levels, so diagonal
// states stay diagonal and the populations obey a classical rate equation.
void pauli_rhs(const std::vector<double>& p, const std::vector<PairRateBreakdown>& rates,
               std::vector<double>& dp) {
    const int dim = static_cast<int>(p.size());
    std::fill(dp.begin(), dp.end(), 0.0);
    for (int n = 0; n + 1 < dim; ++n) {
        const int m = n + 1;
        const double flow_down = rates[n].down() * p[m];
        const double flow_up = rates[n].up() * p[n];
        dp[n] += flow_down - flow_up;
        dp[m] += flow_up - flow_down;
    }
}

std::vector<double> initial_populations(const Config& config,
                                        const std::vector<double>& omega0) {
    const InitialStateSpec& spec = config.simulation.initial_state;
    switch (spec.kind) {
        case InitialStateKind::ground: {
            std::vector<double> p(omega0.size(), 0.0);
            p[0] = 1.0;
            return p;
        }
        case InitialStateKind::custom: return spec.populations;
        case InitialStateKind::gibbs:
        default: {
            const double T = spec.temperature > 0.0 ? spec.temperature : config.device.T_N;
            return gibbs_populations(T, omega0);
        }
    }
}

struct Recorder {
    const Config& config;
    const DerivedTransmonEnergies& energies;
    Trajectory& trajectory;

    void operator()(double t, const Segment& segment, const std::vector<double>& p) const {
        const SpectrumSample spectrum =
            spectrum_at(t, config.device, energies, config.schedule);
        trajectory.times.push_back(t);
        trajectory.populations.push_back(p);
        trajectory.omega_m.push_back(spectrum.omega_m);
        trajectory.omega_ge.push_back(spectrum.omega_ge);
        trajectory.phi_ext.push_back(spectrum.phi_ext);
        trajectory.v_qcr.push_back(qcr_voltage(t, config.schedule));
        double energy = 0.0;
        for (std::size_t m = 0; m < p.size(); ++m) energy += kHbar * spectrum.omega_m[m] * p[m];
        trajectory.mean_energy.push_back(energy);
        trajectory.stroke.push_back(segment.stroke);
    }
};

} // namespace

Trajectory simulate(const Config& config) {
    validate(config);
    const auto energies = derive_transmon_energies(config.device.omega_ge0, config.device.alpha);
    const RateTable rate_table(config.device, config.schedule, energies);

    const double dt0 = config.simulation.dt;
    if (rate_table.max_total_rate() * dt0 > 0.01) {
        std::ostringstream msg;
        msg << "simulation.dt = " << dt0 << " ns violates max(Gamma)*dt < 0.01 with "
            << "max rate " << rate_table.max_total_rate() << " /ns";
        throw ConfigError(msg.str());
    }

    Trajectory trajectory;
    trajectory.n_levels = config.device.n_levels;
    const Recorder record{config, energies, trajectory};

    const auto segments = build_segments(config.schedule);
    const auto omega0 =
        eigenfrequencies(transition_frequency(external_flux(0.0, config.schedule), energies),
                         config.device.alpha, config.device.n_levels);
    std::vector<double> p = initial_populations(config, omega0);
    if (static_cast<int>(p.size()) != config.device.n_levels) {
        throw ConfigError("initial populations length must equal device.n_levels");
    }

    const bool full = config.simulation.method == IntegrationMethod::full;
    Eigen::MatrixXcd rho;
    if (full) rho = density_from_populations(p);

    record(0.0, segments.front(), p);

    std::vector<PairRateBreakdown> rates;
    std::vector<double> dp1(p.size()), dp2(p.size()), dp3(p.size()), dp4(p.size());
    std::vector<double> stage(p.size());

    for (const Segment& segment : segments) {
        const double length = segment.t1 - segment.t0;
        const long n_steps = std::max(1L, static_cast<long>(std::ceil(length / dt0 - 1e-12)));
        const double dt = length / static_cast<double>(n_steps);
        StepContext ctx{&config.device, &energies, &config.schedule, &rate_table, &segment};
        for (long k = 0; k < n_steps; ++k) {
            const double t = segment.t0 + k * dt;
            if (full) {
                step(rho, t, dt, ctx, &trajectory.trace_renormalizations);
                for (std::size_t m = 0; m < p.size(); ++m) p[m] = rho(m, m).real();
            } else {
                const auto eval = [&](double at, const std::vector<double>& state,
                                      std::vector<double>& deriv) {
                    rate_table.rates_in_segment(segment, at, rates);
                    pauli_rhs(state, rates, deriv);
                };
                eval(t, p, dp1);
                for (std::size_t m = 0; m < p.size(); ++m) stage[m] = p[m] + 0.5 * dt * dp1[m];
                eval(t + 0.5 * dt, stage, dp2);
                for (std::size_t m = 0; m < p.size(); ++m) stage[m] = p[m] + 0.5 * dt * dp2[m];
                eval(t + 0.5 * dt, stage, dp3);
                for (std::size_t m = 0; m < p.size(); ++m) stage[m] = p[m] + dt * dp3[m];
                eval(t + dt, stage, dp4);
                for (std::size_t m = 0; m < p.size(); ++m) {
                    p[m] += (dt / 6.0) * (dp1[m] + 2.0 * dp2[m] + 2.0 * dp3[m] + dp4[m]);
                }
            }
            const bool boundary = (k + 1 == n_steps);
            if (boundary || (k + 1) % config.simulation.sample_stride == 0) {
                if (!boundary) {
                    record(t + dt, segment, p);
                } else {
                    record(segment.t1, segment, p);
                }
            }
        }
    }
    return trajectory;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trajectory CSV '" + path + "'");
    out << "t_ns,stroke,phi_ext,v_qcr_delta_over_e";
    for (int m = 0; m < trajectory.n_levels; ++m) out << ",p_" << m;
    out << ",omega_ge_radns,energy_ueV\n";
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        out << format_double(trajectory.times[i]) << ',' << to_string(trajectory.stroke[i])
            << ',' << format_double(trajectory.phi_ext[i]) << ','
            << format_double(trajectory.v_qcr[i]);
        for (int m = 0; m < trajectory.n_levels; ++m) {
            out << ',' << format_double(trajectory.populations[i][m]);
        }
        out << ',' << format_double(trajectory.omega_ge[i]) << ','
            << format_double(trajectory.mean_energy[i]) << '\n';
    }
}

void write_spectrum_csv(const Trajectory& trajectory, const std::string& path) {
    std::vector<std::string> header{"t_ns", "phi_ext", "omega_ge_radns"};
    for (int m = 0; m < trajectory.n_levels; ++m) {
        header.push_back("omega_" + std::to_string(m) + "_radns");
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        std::vector<double> row{trajectory.times[i], trajectory.phi_ext[i],
                                trajectory.omega_ge[i]};
        for (int m = 0; m < trajectory.n_levels; ++m) row.push_back(trajectory.omega_m[i][m]);
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

} // namespace qhe
