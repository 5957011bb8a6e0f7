#pragma once

#include "brainform/dsp.hpp"
#include "brainform/types.hpp"

#include <Eigen/Dense>
#include "json.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace brainform {

using FeatureVector = Eigen::VectorXd;

struct FeatureConfig {
  std::size_t bins_per_channel{15};
};

// Channel-wise bin averaging: each channel's samples are split into m
// contiguous bins whose sizes differ by at most one, bins concatenated
// channel-major. Throws ConfigError when m is zero or exceeds the epoch length.
FeatureVector featurize(const Epoch& epoch, std::size_t bins_per_channel);

struct LdaModel {
  Eigen::VectorXd weights;
  double bias{0.0};
  Eigen::VectorXd mean_target;
  Eigen::VectorXd mean_nontarget;
  Eigen::MatrixXd pooled_cov_reg;
  double gamma{1.0};
  double prior_target{0.5};
  double prior_nontarget{0.5};
  FeatureConfig features;

  std::size_t dim() const { return static_cast<std::size_t>(weights.size()); }
  double score(const FeatureVector& x) const;
};

// Shrinkage LDA. Pooled covariance uses per-class centering with n - 2
// degrees of freedom; it is blended toward (trace/d) * I by gamma.
LdaModel fit_lda(std::span<const FeatureVector> features, std::span<const Label> labels,
                 double gamma);

// P(Target | x): logistic of the decision score.
double predict_posterior(const LdaModel& model, const FeatureVector& x);

enum class Grade { Red, Yellow, Green };

std::string_view to_string(Grade g);
Grade grade_from_string(std::string_view s);

// Red below 0.80, Green above 0.90, Yellow in between (both ends inclusive).
Grade grade_for(double cv_accuracy);

struct CalibrationReport {
  double cv_accuracy{0.0};
  Grade grade{Grade::Red};
  std::size_t n_target{0};
  std::size_t n_nontarget{0};
  std::size_t folds{0};
};

// Stratified k-fold cross-validation scored by balanced accuracy on each
// held-out fold, averaged over folds. Fold assignment is a seeded shuffle
// within each class.
CalibrationReport cross_validate(std::span<const FeatureVector> features,
                                 std::span<const Label> labels, double gamma, std::size_t folds,
                                 std::uint64_t seed);

void to_json(nlohmann::json& j, const LdaModel& m);
void from_json(const nlohmann::json& j, LdaModel& m);
void to_json(nlohmann::json& j, const CalibrationReport& r);
void from_json(const nlohmann::json& j, CalibrationReport& r);

}  // namespace brainform
