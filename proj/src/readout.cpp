#include "qhe/readout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "qhe/constants.hpp"
#include "qhe/csv.hpp"
#include "qhe/errors.hpp"

namespace qhe {

void validate(const GmmModel& model) {
    if (model.components.empty()) throw DataError("GMM model has no components");
    if (model.labels.size() != model.components.size()) {
        throw DataError("GMM model labels and components differ in length");
    }
    double weight_sum = 0.0;
    for (const auto& c : model.components) {
        if (c.weight < 0.0) throw DataError("GMM component weight is negative");
        weight_sum += c.weight;
        if (std::abs(c.cov(0, 1) - c.cov(1, 0)) > 1e-12 * std::abs(c.cov(0, 0))) {
            throw DataError("GMM covariance is not symmetric");
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c.cov);
        if (es.eigenvalues().minCoeff() <= 0.0) {
            throw DataError("GMM covariance is not positive definite");
        }
    }
    if (std::abs(weight_sum - 1.0) > 1e-12) {
        throw DataError("GMM weights must sum to 1");
    }
}

GmmModel default_readout_model() {
    GmmModel model;
    model.labels = {"g", "e", "f", "hij"};
    model.components.resize(4);
    model.components[0].mean << 0.0, 0.0;
    model.components[1].mean << 2.45, 0.30;
    model.components[2].mean << 4.60, 1.30;
    model.components[3].mean << 6.30, 3.00;
    model.components[0].cov << 1.00, 0.10, 0.10, 0.90;
    model.components[1].cov << 1.10, -0.05, -0.05, 1.00;
    model.components[2].cov << 0.95, 0.08, 0.08, 1.05;
    model.components[3].cov << 1.20, 0.15, 0.15, 1.10;
    for (auto& c : model.components) c.weight = 0.25;
    return model;
}

GmmModel separated_readout_model(double spacing_sigma) {
    GmmModel model = default_readout_model();
    for (int i = 0; i < 4; ++i) {
        model.components[i].mean = Eigen::Vector2d(spacing_sigma * i, 0.0);
        model.components[i].cov = Eigen::Matrix2d::Identity();
    }
    return model;
}

namespace {

Eigen::Matrix2d cholesky_2x2(const Eigen::Matrix2d& cov) {
    Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
    L(0, 0) = std::sqrt(cov(0, 0));
    L(1, 0) = cov(1, 0) / L(0, 0);
    const double rest = cov(1, 1) - L(1, 0) * L(1, 0);
    if (rest <= 0.0) throw DataError("GMM covariance is not positive definite");
    L(1, 1) = std::sqrt(rest);
    return L;
}

Eigen::Vector2d draw_from(const GaussComponent& component, const Eigen::Matrix2d& chol,
                          RandomStream& stream) {
    const double z0 = stream.gaussian();
    const double z1 = stream.gaussian();
    return component.mean + chol * Eigen::Vector2d(z0, z1);
}

} // namespace

ShotSet sample_shots(const std::vector<double>& populations, const GmmModel& model,
                     long n, std::uint64_t seed) {
    validate(model);
    if (static_cast<int>(populations.size()) != model.size()) {
        throw DataError("sample_shots: populations length must match the model");
    }
    double sum = 0.0;
    for (double p : populations) {
        if (p < 0.0) throw DataError("sample_shots: negative population");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("sample_shots: populations must sum to 1");
    if (n <= 0) throw DataError("sample_shots: n must be positive");

    std::vector<double> cumulative(populations.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < populations.size(); ++i) {
        acc += populations[i];
        cumulative[i] = acc;
    }
    cumulative.back() = 1.0;

    std::vector<Eigen::Matrix2d> chol;
    chol.reserve(model.size());
    for (const auto& c : model.components) chol.push_back(cholesky_2x2(c.cov));

    RandomStream label_stream(seed, 0);
    std::vector<RandomStream> point_streams;
    point_streams.reserve(model.size());
    for (int c = 0; c < model.size(); ++c) point_streams.emplace_back(seed, 1 + c);

    ShotSet shots;
    shots.seed = seed;
    shots.points.resize(n, 2);
    for (long k = 0; k < n; ++k) {
        const int label = label_stream.categorical(cumulative);
        const Eigen::Vector2d x =
            draw_from(model.components[label], chol[label], point_streams[label]);
        shots.points(k, 0) = x(0);
        shots.points(k, 1) = x(1);
    }
    return shots;
}

namespace {

struct ComponentCache {
    Eigen::Matrix2d inv;
    double log_norm; // -log(2*pi) - 0.5*log|cov|
};

ComponentCache cache_component(const GaussComponent& c) {
    const double det = c.cov(0, 0) * c.cov(1, 1) - c.cov(0, 1) * c.cov(1, 0);
    if (det <= 0.0) throw DataError("GMM covariance is not positive definite");
    ComponentCache cache;
    cache.inv << c.cov(1, 1), -c.cov(0, 1), -c.cov(1, 0), c.cov(0, 0);
    cache.inv /= det;
    cache.log_norm = -std::log(2.0 * kPi) - 0.5 * std::log(det);
    return cache;
}

double mahalanobis2(const Eigen::Vector2d& x, const GaussComponent& c,
                    const ComponentCache& cache) {
    const Eigen::Vector2d d = x - c.mean;
    return d.dot(cache.inv * d);
}

} // namespace

EmResult fit_gmm(const ShotSet& shots, int k, const std::vector<Eigen::Vector2d>& init_means,
                 const EmOptions& options) {
    const long n = shots.size();
    if (k < 1) throw DataError("fit_gmm: k must be at least 1");
    if (n < 100L * k) throw DataError("fit_gmm: need at least 100 shots per component");
    if (static_cast<int>(init_means.size()) < k) {
        throw DataError("fit_gmm: need k initial centroids");
    }

    // Data scale for the covariance floor.
    Eigen::Vector2d data_mean = Eigen::Vector2d::Zero();
    for (long i = 0; i < n; ++i) data_mean += shots.points.row(i).transpose();
    data_mean /= static_cast<double>(n);
    Eigen::Matrix2d data_cov = Eigen::Matrix2d::Zero();
    for (long i = 0; i < n; ++i) {
        const Eigen::Vector2d d = shots.points.row(i).transpose() - data_mean;
        data_cov += d * d.transpose();
    }
    data_cov /= static_cast<double>(n);
    const double scale = 0.5 * data_cov.trace();
    const double floor = options.cov_floor_rel * scale;

    EmResult result;
    result.model.components.resize(k);
    for (int c = 0; c < k; ++c) {
        result.model.components[c].weight = 1.0 / k;
        result.model.components[c].mean = init_means[c];
        result.model.components[c].cov = data_cov;
    }

    Eigen::MatrixXd resp(n, k);
    std::vector<ComponentCache> caches(k);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        for (int c = 0; c < k; ++c) caches[c] = cache_component(result.model.components[c]);

        // E step with log-sum-exp.
        double ll = 0.0;
        for (long i = 0; i < n; ++i) {
            const Eigen::Vector2d x = shots.points.row(i).transpose();
            double max_log = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const auto& comp = result.model.components[c];
                const double logp = std::log(std::max(comp.weight, 1e-300)) +
                                    caches[c].log_norm -
                                    0.5 * mahalanobis2(x, comp, caches[c]);
                resp(i, c) = logp;
                max_log = std::max(max_log, logp);
            }
            double denom = 0.0;
            for (int c = 0; c < k; ++c) denom += std::exp(resp(i, c) - max_log);
            const double log_denom = max_log + std::log(denom);
            for (int c = 0; c < k; ++c) resp(i, c) = std::exp(resp(i, c) - log_denom);
            ll += log_denom;
        }
        result.log_likelihoods.push_back(ll);

        // M step.
        for (int c = 0; c < k; ++c) {
            const double nc = resp.col(c).sum();
            auto& comp = result.model.components[c];
            comp.weight = nc / static_cast<double>(n);
            Eigen::Vector2d mean = Eigen::Vector2d::Zero();
            for (long i = 0; i < n; ++i) mean += resp(i, c) * shots.points.row(i).transpose();
            mean /= std::max(nc, 1e-300);
            Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
            for (long i = 0; i < n; ++i) {
                const Eigen::Vector2d d = shots.points.row(i).transpose() - mean;
                cov += resp(i, c) * (d * d.transpose());
            }
            cov /= std::max(nc, 1e-300);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
            if (es.eigenvalues().minCoeff() < floor) {
                Eigen::Vector2d fixed = es.eigenvalues().cwiseMax(floor);
                cov = es.eigenvectors() * fixed.asDiagonal() * es.eigenvectors().transpose();
                result.covariance_floored = true;
            }
            comp.mean = mean;
            comp.cov = cov;
        }

        if (iter > 0 && std::abs(ll - prev_ll) <= options.rel_tol * std::abs(ll)) {
            result.converged = true;
            prev_ll = ll;
            break;
        }
        prev_ll = ll;
    }

    // Match components back to the calibration centroids, nearest first; for
    // the 4-state readout the unmatched component is the high-lying catchall.
    std::vector<int> order;
    std::vector<bool> used(k, false);
    const int n_match = std::min(k, static_cast<int>(init_means.size()));
    for (int target = 0; target < n_match; ++target) {
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (used[c]) continue;
            const double dist = (result.model.components[c].mean - init_means[target]).norm();
            if (dist < best_dist) {
                best_dist = dist;
                best = c;
            }
        }
        used[best] = true;
        order.push_back(best);
    }
    for (int c = 0; c < k; ++c) {
        if (!used[c]) order.push_back(c);
    }
    std::vector<GaussComponent> reordered(k);
    for (int c = 0; c < k; ++c) reordered[c] = result.model.components[order[c]];
    result.model.components = std::move(reordered);
    if (k == 4) {
        result.model.labels = {"g", "e", "f", "hij"};
    } else {
        result.model.labels.clear();
        for (int c = 0; c < k; ++c) result.model.labels.push_back("c" + std::to_string(c));
    }
    return result;
}

std::vector<long> count_in_ellipse(const ShotSet& shots, const GmmModel& model, double r) {
    if (r <= 0.0) throw DataError("count_in_ellipse: radius must be positive");
    validate(model);
    const double r2 = r * r;
    std::vector<ComponentCache> caches;
    caches.reserve(model.size());
    for (const auto& c : model.components) caches.push_back(cache_component(c));
    std::vector<long> counts(model.size(), 0);
    for (long i = 0; i < shots.size(); ++i) {
        const Eigen::Vector2d x = shots.points.row(i).transpose();
        for (int j = 0; j < model.size(); ++j) {
            if (mahalanobis2(x, model.components[j], caches[j]) <= r2) ++counts[j];
        }
    }
    return counts;
}

CorrectionMatrix correction_matrix(const GmmModel& model, double r, long n_samples,
                                   std::uint64_t seed) {
    validate(model);
    if (n_samples < 100000) {
        throw DataError("correction_matrix: n_samples must be at least 1e5");
    }
    if (r <= 0.0) throw DataError("correction_matrix: radius must be positive");
    const int k = model.size();
    const double r2 = r * r;

    std::vector<ComponentCache> caches;
    std::vector<Eigen::Matrix2d> chol;
    for (const auto& c : model.components) {
        caches.push_back(cache_component(c));
        chol.push_back(cholesky_2x2(c.cov));
    }

    CorrectionMatrix correction;
    correction.M = Eigen::MatrixXd::Zero(k, k);
    correction.n_samples = n_samples;
    correction.radius = r;

    // One RNG stream per source component; safe to parallelize over i.
    for (int i = 0; i < k; ++i) {
        RandomStream stream(seed, i);
        Eigen::VectorXd inside = Eigen::VectorXd::Zero(k);
        for (long draw = 0; draw < n_samples; ++draw) {
            const Eigen::Vector2d x = draw_from(model.components[i], chol[i], stream);
            for (int j = 0; j < k; ++j) {
                if (mahalanobis2(x, model.components[j], caches[j]) <= r2) inside(j) += 1.0;
            }
        }
        correction.M.row(i) = inside.transpose() / static_cast<double>(n_samples);
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(correction.M);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 1e-12 * smax) {
        std::ostringstream msg;
        msg << "correction matrix is singular (smallest singular value " << smin << ")";
        throw DataError(msg.str());
    }
    correction.condition_number = smax / smin;
    return correction;
}

CorrectedPopulations corrected_populations(const std::vector<double>& counts,
                                           const CorrectionMatrix& correction) {
    const int k = static_cast<int>(correction.M.rows());
    if (static_cast<int>(counts.size()) != k) {
        throw DataError("corrected_populations: counts length must match the matrix");
    }
    Eigen::VectorXd raw(k);
    for (int j = 0; j < k; ++j) raw(j) = counts[j];
    // E[counts_j] = sum_i N_i M(i, j), so the de-biasing solve uses M^T.
    const Eigen::VectorXd corrected = correction.M.transpose().partialPivLu().solve(raw);
    const double total = corrected.sum();
    if (total <= 0.0) throw DataError("corrected_populations: non-positive corrected total");

    CorrectedPopulations out;
    out.populations.resize(k);
    for (int j = 0; j < k; ++j) {
        double p = corrected(j) / total;
        if (p < -0.02) {
            std::ostringstream msg;
            msg << "corrected population " << j << " is " << p
                << "; counts are inconsistent with the correction matrix";
            throw DataError(msg.str());
        }
        if (p < 0.0) {
            p = 0.0;
            out.clamped = true;
        }
        out.populations[j] = p;
    }
    double sum = 0.0;
    for (double p : out.populations) sum += p;
    for (double& p : out.populations) p /= sum;
    return out;
}

namespace {

nlohmann::json component_to_json(const GaussComponent& c) {
    return nlohmann::json{
        {"weight", c.weight},
        {"mean", {c.mean(0), c.mean(1)}},
        {"cov", {{c.cov(0, 0), c.cov(0, 1)}, {c.cov(1, 0), c.cov(1, 1)}}}};
}

GaussComponent component_from_json(const nlohmann::json& j) {
    GaussComponent c;
    c.weight = j.at("weight").get<double>();
    c.mean(0) = j.at("mean").at(0).get<double>();
    c.mean(1) = j.at("mean").at(1).get<double>();
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) c.cov(a, b) = j.at("cov").at(a).at(b).get<double>();
    }
    return c;
}

} // namespace

std::string model_to_json(const GmmModel& model) {
    nlohmann::json root;
    root["labels"] = model.labels;
    root["components"] = nlohmann::json::array();
    for (const auto& c : model.components) root["components"].push_back(component_to_json(c));
    return root.dump(2);
}

GmmModel model_from_json(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("GMM model is not valid JSON: ") + e.what());
    }
    GmmModel model;
    try {
        model.labels = root.at("labels").get<std::vector<std::string>>();
        for (const auto& j : root.at("components")) {
            model.components.push_back(component_from_json(j));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed GMM model JSON: ") + e.what());
    }
    validate(model);
    return model;
}

void save_model(const GmmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file '" + path + "'");
    out << model_to_json(model) << '\n';
}

GmmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return model_from_json(buffer.str());
}

std::string correction_to_json(const CorrectionMatrix& correction) {
    nlohmann::json root;
    root["n_samples"] = correction.n_samples;
    root["radius"] = correction.radius;
    root["condition_number"] = correction.condition_number;
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < correction.M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < correction.M.cols(); ++j) row.push_back(correction.M(i, j));
        rows.push_back(row);
    }
    root["M"] = rows;
    return root.dump(2);
}

CorrectionMatrix correction_from_json(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("correction matrix is not valid JSON: ") + e.what());
    }
    CorrectionMatrix correction;
    try {
        correction.n_samples = root.at("n_samples").get<long>();
        correction.radius = root.at("radius").get<double>();
        correction.condition_number = root.value("condition_number", 0.0);
        const auto& rows = root.at("M");
        const int k = static_cast<int>(rows.size());
        correction.M.resize(k, k);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) correction.M(i, j) = rows.at(i).at(j).get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed correction matrix JSON: ") + e.what());
    }
    return correction;
}

void write_shots_csv(const ShotSet& shots, const std::string& path) {
    std::vector<std::vector<double>> rows;
    rows.reserve(shots.size());
    for (long i = 0; i < shots.size(); ++i) {
        rows.push_back({shots.points(i, 0), shots.points(i, 1)});
    }
    write_csv(path, {"I", "Q"}, rows);
}

ShotSet read_shots_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int ci = table.column("I");
    const int cq = table.column("Q");
    if (ci < 0 || cq < 0) throw DataError("shots CSV must have columns I and Q");
    if (table.rows.empty()) throw DataError("shots CSV has no rows");
    ShotSet shots;
    shots.points.resize(static_cast<long>(table.rows.size()), 2);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        shots.points(static_cast<long>(i), 0) = table.rows[i][ci];
        shots.points(static_cast<long>(i), 1) = table.rows[i][cq];
    }
    return shots;
}

} // namespace qhe
