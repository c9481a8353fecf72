#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhe/rng.hpp"

namespace qhe {

struct GaussComponent {
    double weight = 0.25;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

// Mixture of 2D Gaussians over the IQ plane. For the readout chain the
// components are ordered and labeled g, e, f, hij.
struct GmmModel {
    std::vector<GaussComponent> components;
    std::vector<std::string> labels;

    int size() const { return static_cast<int>(components.size()); }
};

void validate(const GmmModel& model);

// Paper-style default geometry: a chain g-e-f-hij with ~2.4 sigma spacing
// between neighbors and mildly anisotropic covariances.
GmmModel default_readout_model();

// Same layout with the chain stretched so that components barely overlap.
GmmModel separated_readout_model(double spacing_sigma = 20.0);

struct ShotSet {
    Eigen::Matrix<double, Eigen::Dynamic, 2> points;
    std::uint64_t seed = 0;

    long size() const { return points.rows(); }
};

// n IQ shots: component labels are drawn from `populations` on RNG stream 0
// of `seed`, the point for a label-c shot from stream 1 + c. The split keeps
// results independent of any per-component parallelization.
ShotSet sample_shots(const std::vector<double>& populations, const GmmModel& model,
                     long n, std::uint64_t seed);

struct EmOptions {
    int max_iterations = 500;
    double rel_tol = 1e-8;          // relative log-likelihood change
    double cov_floor_rel = 1e-10;   // eigenvalue floor relative to data scale
};

struct EmResult {
    GmmModel model;
    std::vector<double> log_likelihoods; // one per iteration
    bool converged = false;
    bool covariance_floored = false;
};

// Expectation-maximization for a k-component 2D mixture. Initial means come
// from `init_means` (calibration centroids); components are matched back to
// those centroids afterwards, nearest first, and for k = 4 the leftover
// component is labeled hij.
EmResult fit_gmm(const ShotSet& shots, int k, const std::vector<Eigen::Vector2d>& init_means,
                 const EmOptions& options = {});

// Shots with Mahalanobis distance <= r of component j, for every j. A shot
// inside several ellipses counts for each of them.
std::vector<long> count_in_ellipse(const ShotSet& shots, const GmmModel& model, double r);

struct CorrectionMatrix {
    Eigen::MatrixXd M;          // M(i, j) = P(inside ellipse j | sampled from i)
    long n_samples = 0;         // Monte Carlo draws per component
    double radius = 1.0;
    double condition_number = 0.0;
};

// Monte Carlo estimate of the ellipse-count response: n_samples draws from
// each component (stream i of `seed`), counted against every boundary
// ellipse of radius r.
CorrectionMatrix correction_matrix(const GmmModel& model, double r, long n_samples,
                                   std::uint64_t seed);

struct CorrectedPopulations {
    std::vector<double> populations;
    bool clamped = false; // small negative components were clamped to zero
};

// De-biased populations from raw ellipse counts: solves M^T N = N_tilde
// (component i contributes M(i,j) of its shots to ellipse count j), clamps
// small negatives (> -0.02 of the total) and renormalizes. Larger negatives
// indicate a model/data mismatch and raise DataError.
CorrectedPopulations corrected_populations(const std::vector<double>& counts,
                                           const CorrectionMatrix& correction);

std::string model_to_json(const GmmModel& model);
GmmModel model_from_json(const std::string& text);
void save_model(const GmmModel& model, const std::string& path);
GmmModel load_model(const std::string& path);

std::string correction_to_json(const CorrectionMatrix& correction);
CorrectionMatrix correction_from_json(const std::string& text);

void write_shots_csv(const ShotSet& shots, const std::string& path);
ShotSet read_shots_csv(const std::string& path);

} // namespace qhe
