#include "brainform/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace brainform {

FeatureVector featurize(const Epoch& epoch, std::size_t bins_per_channel) {
  const std::size_t len = epoch.length;
  if (bins_per_channel == 0 || bins_per_channel > len) {
    throw ConfigError("bins per channel (" + std::to_string(bins_per_channel) +
                      ") must be in [1, " + std::to_string(len) + "]");
  }
  FeatureVector out(static_cast<Eigen::Index>(kNumChannels * bins_per_channel));
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const auto samples = epoch.channel(ch);
    for (std::size_t b = 0; b < bins_per_channel; ++b) {
      const std::size_t lo = b * len / bins_per_channel;
      const std::size_t hi = (b + 1) * len / bins_per_channel;
      double sum = 0.0;
      for (std::size_t i = lo; i < hi; ++i) sum += samples[i];
      out[static_cast<Eigen::Index>(ch * bins_per_channel + b)] = sum / static_cast<double>(hi - lo);
    }
  }
  return out;
}

double LdaModel::score(const FeatureVector& x) const {
  if (x.size() != weights.size()) {
    throw InputError("feature dimension " + std::to_string(x.size()) +
                     " does not match model dimension " + std::to_string(weights.size()));
  }
  return weights.dot(x) + bias;
}

LdaModel fit_lda(std::span<const FeatureVector> features, std::span<const Label> labels,
                 double gamma) {
  if (features.size() != labels.size()) {
    throw InputError("features and labels differ in length");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("shrinkage gamma must lie in [0, 1]");
  if (features.empty() || features.front().size() == 0) {
    throw ConfigError("feature dimension must be positive");
  }
  const Eigen::Index d = features.front().size();

  Eigen::VectorXd sum_t = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sum_n = Eigen::VectorXd::Zero(d);
  std::size_t n_t = 0;
  std::size_t n_n = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) throw InputError("feature vectors differ in dimension");
    if (labels[i] == Label::Target) {
      sum_t += features[i];
      ++n_t;
    } else if (labels[i] == Label::NonTarget) {
      sum_n += features[i];
      ++n_n;
    } else {
      throw InputError("training labels must be Target or NonTarget");
    }
  }
  if (n_t == 0 || n_n == 0) throw TrainingError("both classes are required to fit LDA");

  LdaModel m;
  m.gamma = gamma;
  m.mean_target = sum_t / static_cast<double>(n_t);
  m.mean_nontarget = sum_n / static_cast<double>(n_n);
  const double n = static_cast<double>(n_t + n_n);
  m.prior_target = static_cast<double>(n_t) / n;
  m.prior_nontarget = static_cast<double>(n_n) / n;

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Eigen::VectorXd c =
        features[i] - (labels[i] == Label::Target ? m.mean_target : m.mean_nontarget);
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  scatter = scatter.selfadjointView<Eigen::Lower>();
  const double dof = std::max(n - 2.0, 1.0);
  const Eigen::MatrixXd cov = scatter / dof;

  const double nu = cov.trace() / static_cast<double>(d);
  m.pooled_cov_reg = (1.0 - gamma) * cov;
  m.pooled_cov_reg.diagonal().array() += gamma * nu;

  const Eigen::VectorXd delta = m.mean_target - m.mean_nontarget;
  Eigen::LLT<Eigen::MatrixXd> llt(m.pooled_cov_reg);
  if (llt.info() != Eigen::Success) {
    throw TrainingError("regularized covariance is not positive definite");
  }
  m.weights = llt.solve(delta);
  const Eigen::VectorXd mid = 0.5 * (m.mean_target + m.mean_nontarget);
  m.bias = -m.weights.dot(mid) + std::log(m.prior_target / m.prior_nontarget);
  return m;
}

double predict_posterior(const LdaModel& model, const FeatureVector& x) {
  const double s = model.score(x);
  // Evaluated on the side that cannot overflow.
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

std::string_view to_string(Grade g) {
  switch (g) {
    case Grade::Red: return "red";
    case Grade::Yellow: return "yellow";
    case Grade::Green: return "green";
  }
  return "red";
}

Grade grade_from_string(std::string_view s) {
  if (s == "red") return Grade::Red;
  if (s == "yellow") return Grade::Yellow;
  if (s == "green") return Grade::Green;
  throw ParseError("unknown calibration grade '" + std::string(s) + "'");
}

Grade grade_for(double cv_accuracy) {
  if (cv_accuracy < 0.80) return Grade::Red;
  if (cv_accuracy <= 0.90) return Grade::Yellow;
  return Grade::Green;
}

CalibrationReport cross_validate(std::span<const FeatureVector> features,
                                 std::span<const Label> labels, double gamma, std::size_t folds,
                                 std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
  if (features.size() != labels.size()) throw InputError("features and labels differ in length");

  std::vector<std::size_t> targets;
  std::vector<std::size_t> nontargets;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == Label::Target ? targets : nontargets).push_back(i);
  }
  if (targets.size() < folds || nontargets.size() < folds) {
    throw CalibrationError("too few epochs to stratify " + std::to_string(folds) + " folds (" +
                           std::to_string(targets.size()) + " target, " +
                           std::to_string(nontargets.size()) + " non-target)");
  }

  std::mt19937_64 rng(seed);
  std::shuffle(targets.begin(), targets.end(), rng);
  std::shuffle(nontargets.begin(), nontargets.end(), rng);
  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t k = 0; k < targets.size(); ++k) fold_of[targets[k]] = k % folds;
  for (std::size_t k = 0; k < nontargets.size(); ++k) fold_of[nontargets[k]] = k % folds;

  double acc_sum = 0.0;
  std::vector<FeatureVector> train_x;
  std::vector<Label> train_y;
  for (std::size_t f = 0; f < folds; ++f) {
    train_x.clear();
    train_y.clear();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (fold_of[i] != f) {
        train_x.push_back(features[i]);
        train_y.push_back(labels[i]);
      }
    }
    const LdaModel model = fit_lda(train_x, train_y, gamma);
    std::size_t hit_t = 0, n_t = 0, hit_n = 0, n_n = 0;
    // Balanced accuracy weighs both classes equally, so the boundary drops the prior term.
    const double log_prior = std::log(model.prior_target / model.prior_nontarget);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (fold_of[i] != f) continue;
      const bool predicted_target = model.score(features[i]) - log_prior >= 0.0;
      if (labels[i] == Label::Target) {
        ++n_t;
        hit_t += predicted_target ? 1 : 0;
      } else {
        ++n_n;
        hit_n += predicted_target ? 0 : 1;
      }
    }
    acc_sum += 0.5 * (static_cast<double>(hit_t) / static_cast<double>(n_t) +
                      static_cast<double>(hit_n) / static_cast<double>(n_n));
  }

  CalibrationReport r;
  r.cv_accuracy = acc_sum / static_cast<double>(folds);
  r.grade = grade_for(r.cv_accuracy);
  r.n_target = targets.size();
  r.n_nontarget = nontargets.size();
  r.folds = folds;
  return r;
}

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw ParseError(std::string("model field '") + field + "' must be an array");
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

const nlohmann::json& require(const nlohmann::json& j, const char* field) {
  if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'");
  return j.at(field);
}

}  // namespace

void to_json(nlohmann::json& j, const LdaModel& m) {
  const auto d = m.pooled_cov_reg.rows();
  std::vector<double> cov(static_cast<std::size_t>(d * d));
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) cov[static_cast<std::size_t>(r * d + c)] = m.pooled_cov_reg(r, c);
  }
  j = nlohmann::json{{"weights", vec_to_json(m.weights)},
                     {"bias", m.bias},
                     {"mean_target", vec_to_json(m.mean_target)},
                     {"mean_nontarget", vec_to_json(m.mean_nontarget)},
                     {"pooled_cov_reg", cov},
                     {"gamma", m.gamma},
                     {"priors", {m.prior_target, m.prior_nontarget}},
                     {"bins_per_channel", m.features.bins_per_channel}};
}

void from_json(const nlohmann::json& j, LdaModel& m) {
  try {
    m.weights = vec_from_json(require(j, "weights"), "weights");
    m.bias = require(j, "bias").get<double>();
    m.mean_target = vec_from_json(require(j, "mean_target"), "mean_target");
    m.mean_nontarget = vec_from_json(require(j, "mean_nontarget"), "mean_nontarget");
    m.gamma = require(j, "gamma").get<double>();
    const auto priors = require(j, "priors").get<std::vector<double>>();
    if (priors.size() != 2) throw ParseError("field 'priors' must hold two values");
    m.prior_target = priors[0];
    m.prior_nontarget = priors[1];
    m.features.bins_per_channel = require(j, "bins_per_channel").get<std::size_t>();
    const auto cov = require(j, "pooled_cov_reg").get<std::vector<double>>();
    const auto d = m.weights.size();
    if (static_cast<Eigen::Index>(cov.size()) != d * d) {
      throw ParseError("field 'pooled_cov_reg' has wrong size");
    }
    m.pooled_cov_reg = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                      Eigen::RowMajor>>(cov.data(), d, d);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const CalibrationReport& r) {
  j = nlohmann::json{{"cv_accuracy", r.cv_accuracy},
                     {"grade", std::string(to_string(r.grade))},
                     {"n_target", r.n_target},
                     {"n_nontarget", r.n_nontarget},
                     {"folds", r.folds}};
}

void from_json(const nlohmann::json& j, CalibrationReport& r) {
  try {
    r.cv_accuracy = require(j, "cv_accuracy").get<double>();
    r.grade = grade_from_string(require(j, "grade").get<std::string>());
    r.n_target = require(j, "n_target").get<std::size_t>();
    r.n_nontarget = require(j, "n_nontarget").get<std::size_t>();
    r.folds = require(j, "folds").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed calibration report: ") + e.what());
  }
}

}  // namespace brainform
