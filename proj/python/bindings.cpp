// qhesim: Python bindings over the C++ core. The module exposes the main
// operations (engine simulation plus the NIS, readout, and Ramsey helpers);
// configs cross the boundary as JSON-compatible dicts.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "qhe/lindblad.hpp"
#include "qhe/nis.hpp"
#include "qhe/params.hpp"
#include "qhe/ramsey.hpp"
#include "qhe/readout.hpp"
#include "qhe/thermo.hpp"
#include "qhe/version.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

qhe::Config config_from_object(const py::object& obj) {
    if (obj.is_none()) return qhe::Config{};
    const py::object dumps = py::module_::import("json").attr("dumps");
    const std::string text = py::cast<std::string>(dumps(obj));
    return qhe::config_from_json_text(text);
}

py::object json_to_py(const std::string& text) {
    const py::object loads = py::module_::import("json").attr("loads");
    return loads(text);
}

py::dict trajectory_to_dict(const qhe::Trajectory& trajectory) {
    const long n = static_cast<long>(trajectory.size());
    const int levels = trajectory.n_levels;
    py::array_t<double> times(n), omega_ge(n), phi_ext(n), v_qcr(n), energy(n);
    py::array_t<double> populations({n, static_cast<long>(levels)});
    py::array_t<double> omega_m({n, static_cast<long>(levels)});
    auto t = times.mutable_unchecked<1>();
    auto w = omega_ge.mutable_unchecked<1>();
    auto phi = phi_ext.mutable_unchecked<1>();
    auto v = v_qcr.mutable_unchecked<1>();
    auto e = energy.mutable_unchecked<1>();
    auto p = populations.mutable_unchecked<2>();
    auto wm = omega_m.mutable_unchecked<2>();
    py::list stroke;
    for (long i = 0; i < n; ++i) {
        t(i) = trajectory.times[i];
        w(i) = trajectory.omega_ge[i];
        phi(i) = trajectory.phi_ext[i];
        v(i) = trajectory.v_qcr[i];
        e(i) = trajectory.mean_energy[i];
        for (int m = 0; m < levels; ++m) {
            p(i, m) = trajectory.populations[i][m];
            wm(i, m) = trajectory.omega_m[i][m];
        }
        stroke.append(qhe::to_string(trajectory.stroke[i]));
    }
    py::dict out;
    out["times_ns"] = times;
    out["populations"] = populations;
    out["omega_m_radns"] = omega_m;
    out["omega_ge_radns"] = omega_ge;
    out["phi_ext"] = phi_ext;
    out["v_qcr_delta_over_e"] = v_qcr;
    out["energy_ueV"] = energy;
    out["stroke"] = stroke;
    return out;
}

py::dict model_to_dict(const qhe::GmmModel& model) {
    return py::cast<py::dict>(json_to_py(qhe::model_to_json(model)));
}

qhe::GmmModel model_from_object(const py::object& obj) {
    if (obj.is_none()) return qhe::default_readout_model();
    const py::object dumps = py::module_::import("json").attr("dumps");
    return qhe::model_from_json(py::cast<std::string>(dumps(obj)));
}

} // namespace

PYBIND11_MODULE(qhesim, m) {
    m.doc() = "Superconducting quantum Otto engine simulator";
    m.attr("__version__") = qhe::kVersion;

    py::register_exception<qhe::ConfigError>(m, "QheConfigError", PyExc_ValueError);
    py::register_exception<qhe::NumericalError>(m, "QheNumericalError", PyExc_ArithmeticError);
    py::register_exception<qhe::DataError>(m, "QheDataError", PyExc_ValueError);

    m.def("default_config", []() {
        return json_to_py(qhe::config_to_json_text(qhe::Config{}));
    }, "Calibrated default configuration as a dict");

    m.def("validate_config", [](const py::object& config) {
        config_from_object(config);
    }, py::arg("config"), "Raise on any invalid or unknown configuration field");

    m.def("simulate", [](const py::object& config) {
        const qhe::Config cfg = config_from_object(config);
        const qhe::Trajectory trajectory = qhe::simulate(cfg);
        const qhe::ThermoReport report = qhe::analyze(trajectory, cfg);
        py::dict out;
        out["trajectory"] = trajectory_to_dict(trajectory);
        out["thermo"] = json_to_py(qhe::thermo_report_to_json(report));
        return out;
    }, py::arg("config") = py::none(),
       "Integrate the master equation and return the trajectory and thermo report");

    m.def("flux_amplitude_for_detuning", [](double detuning, const py::object& config) {
        return qhe::flux_amplitude_for_detuning(detuning, config_from_object(config).device);
    }, py::arg("detuning_radns"), py::arg("config") = py::none());

    m.def("transition_frequency", [](double phi_ext, const py::object& config) {
        const qhe::Config cfg = config_from_object(config);
        const auto energies =
            qhe::derive_transmon_energies(cfg.device.omega_ge0, cfg.device.alpha);
        return qhe::transition_frequency(phi_ext, energies);
    }, py::arg("phi_ext"), py::arg("config") = py::none());

    m.def("eigenfrequencies", &qhe::eigenfrequencies,
          py::arg("omega_ge"), py::arg("alpha"), py::arg("n_levels"));

    m.def("otto_efficiency", &qhe::otto_efficiency, py::arg("omega_min"), py::arg("omega_max"));
    m.def("carnot_efficiency", &qhe::carnot_efficiency, py::arg("T_cold"), py::arg("T_hot"));

    m.def("internal_energy", &qhe::internal_energy,
          py::arg("populations"), py::arg("omega_m"));

    m.def("effective_temperature", [](const std::vector<double>& populations,
                                      const std::vector<double>& omega_m) {
        const qhe::TempFit fit = qhe::effective_temperature(populations, omega_m);
        py::dict out;
        out["defined"] = fit.defined;
        out["temperature_mK"] = fit.temperature;
        out["residual"] = fit.residual;
        return out;
    }, py::arg("populations"), py::arg("omega_m"));

    m.def("normalized_dos", &qhe::normalized_dos,
          py::arg("eps_ueV"), py::arg("Delta_ueV"), py::arg("gamma_D"));

    m.def("iv_current", [](double v, double T_N, double Delta, double gamma_D) {
        return qhe::iv_current(v, T_N, Delta, gamma_D);
    }, py::arg("v_delta_over_e"), py::arg("T_N_mK"), py::arg("Delta_ueV"), py::arg("gamma_D"),
       "NIS current normalized to Delta/(e*R_T)");

    m.def("forward_tunneling_rate", [](double energy, double Delta, double gamma_D, double T_N) {
        qhe::TunnelingRateFn fn;
        fn.Delta = Delta;
        fn.gamma_D = gamma_D;
        fn.T_N = T_N;
        return fn(energy);
    }, py::arg("energy_ueV"), py::arg("Delta_ueV"), py::arg("gamma_D"), py::arg("T_N_mK"));

    m.def("extract_junction_params", [](const std::vector<double>& voltage_uV,
                                        const std::vector<double>& current_nA) {
        qhe::IvCurve curve;
        curve.voltage_uV = voltage_uV;
        curve.current_nA = current_nA;
        const qhe::JunctionExtraction ex = qhe::extract_junction_params(curve);
        py::dict out;
        out["Delta_ueV"] = ex.Delta_hat;
        out["R_T_kohm"] = ex.R_T_hat;
        out["gamma_D"] = ex.gamma_D_hat;
        return out;
    }, py::arg("voltage_uV"), py::arg("current_nA"));

    m.def("default_readout_model", []() { return model_to_dict(qhe::default_readout_model()); });

    m.def("sample_shots", [](const std::vector<double>& populations, const py::object& model,
                             long n, std::uint64_t seed) {
        const qhe::ShotSet shots = qhe::sample_shots(populations, model_from_object(model), n, seed);
        return py::cast(Eigen::MatrixXd(shots.points));
    }, py::arg("populations"), py::arg("model") = py::none(), py::arg("n") = 10000,
       py::arg("seed") = 1);

    m.def("fit_gmm", [](const Eigen::MatrixXd& points, int k,
                        const std::vector<std::pair<double, double>>& init_means) {
        if (points.cols() != 2) throw qhe::DataError("shots must be an (n, 2) array");
        qhe::ShotSet shots;
        shots.points = points;
        std::vector<Eigen::Vector2d> means;
        for (const auto& [x, y] : init_means) means.emplace_back(x, y);
        const qhe::EmResult result = qhe::fit_gmm(shots, k, means);
        py::dict out;
        out["model"] = model_to_dict(result.model);
        out["log_likelihoods"] = result.log_likelihoods;
        out["converged"] = result.converged;
        return out;
    }, py::arg("points"), py::arg("k"), py::arg("init_means"));

    m.def("count_in_ellipse", [](const Eigen::MatrixXd& points, const py::object& model,
                                 double r) {
        qhe::ShotSet shots;
        shots.points = points;
        return qhe::count_in_ellipse(shots, model_from_object(model), r);
    }, py::arg("points"), py::arg("model") = py::none(), py::arg("r") = 1.0);

    m.def("correction_matrix", [](const py::object& model, double r, long n_samples,
                                  std::uint64_t seed) {
        const qhe::CorrectionMatrix c =
            qhe::correction_matrix(model_from_object(model), r, n_samples, seed);
        py::dict out;
        out["M"] = py::cast(Eigen::MatrixXd(c.M));
        out["condition_number"] = c.condition_number;
        return out;
    }, py::arg("model") = py::none(), py::arg("r") = 1.0, py::arg("n_samples") = 1000000,
       py::arg("seed") = 1);

    m.def("corrected_populations", [](const std::vector<double>& counts,
                                      const Eigen::MatrixXd& M) {
        qhe::CorrectionMatrix correction;
        correction.M = M;
        correction.n_samples = 0;
        const qhe::CorrectedPopulations out = qhe::corrected_populations(counts, correction);
        py::dict result;
        result["populations"] = out.populations;
        result["clamped"] = out.clamped;
        return result;
    }, py::arg("counts"), py::arg("M"));

    m.def("fringe_model", &qhe::fringe_model, py::arg("phi"), py::arg("delta_omega"),
          py::arg("tau"), py::arg("T2"), py::arg("amplitude"), py::arg("offset"));

    m.def("fit_fringe", [](const std::vector<double>& phases,
                           const std::vector<double>& amplitudes, double tau) {
        qhe::RamseyFringe fringe;
        fringe.phases = phases;
        fringe.amplitudes = amplitudes;
        fringe.tau = tau;
        const qhe::FringeFit fit = qhe::fit_fringe(fringe);
        py::dict out;
        out["phase"] = fit.phase;
        out["delta_omega"] = fit.delta_omega;
        out["amplitude"] = fit.amplitude;
        out["offset"] = fit.offset;
        out["aliased"] = fit.aliased;
        return out;
    }, py::arg("phases"), py::arg("amplitudes"), py::arg("tau"));
}
