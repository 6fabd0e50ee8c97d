#pragma once

#include <span>
#include <vector>

#include "abstain_al/criteria.hpp"
#include "abstain_al/types.hpp"

namespace abstain_al {

/// Logistic regression with an independent N(0, prior_variance) prior on every
/// weight and on the intercept.
struct LinearModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double prior_variance = 0.5;
};

struct BinarySample {
  SparseFeatures features;
  int target = 0;
};

using DesignMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct FitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
};

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= 0) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(z)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

DesignMatrix make_design(std::span<const BinarySample> samples, Index dimension);

/// Regularised log-likelihood sum_j log Bern(t_j | sigmoid(w.x_j + b)) - (|w|^2 + b^2) / (2 sigma^2).
double map_objective(const LinearModel& model, const DesignMatrix& x, const Eigen::VectorXd& targets);

/// Gradient of map_objective; the last entry is the intercept component.
Eigen::VectorXd map_gradient(const LinearModel& model, const DesignMatrix& x,
                             const Eigen::VectorXd& targets);

/// MAP estimate by damped Newton steps with conjugate-gradient inner solves.
/// Stops at gradient norm <= options.gradient_tolerance or the iteration cap.
/// `warm_start`, when given, only changes the starting point.
LinearModel fit_map(const DesignMatrix& x, const Eigen::VectorXd& targets, double prior_variance,
                    const LinearModel* warm_start = nullptr, const FitOptions& options = {});

LinearModel fit_map(std::span<const BinarySample> samples, Index dimension, double prior_variance,
                    const FitOptions& options = {});

double predict_proba(const LinearModel& model, const SparseFeatures& x);

/// MAP plugin posterior: a label model (one logistic model for binary labels,
/// one-vs-rest for more) and an abstention model, both refit from scratch on
/// every observation.
class PluginBelief final : public Belief {
 public:
  PluginBelief(LabelSpace labels, Index dimension, double label_prior_variance = 0.5,
               double abstain_prior_variance = 0.5, FitOptions options = {});

  std::unique_ptr<Belief> clone() const override;
  int num_labels() const override { return labels_.size(); }
  Eigen::VectorXd predictive_pmf(const Example& x) const override;
  double estimated_rate(const Example& x) const override;
  void observe_label(const Example& x, Label y) override;
  void observe_abstain(const Example& x) override;

  /// (example index, label) for every labeled query.
  const std::vector<std::pair<Index, Label>>& label_observations() const noexcept { return label_obs_; }
  /// (example index, z) for every query; z = 1 when abstained.
  const std::vector<std::pair<Index, int>>& abstain_observations() const noexcept { return abstain_obs_; }
  const std::vector<LinearModel>& label_models() const noexcept { return label_models_; }
  const LinearModel& abstain_model() const noexcept { return abstain_model_; }

 private:
  void refit_labels();
  void refit_abstain();

  LabelSpace labels_;
  Index dimension_;
  double label_prior_variance_;
  double abstain_prior_variance_;
  FitOptions options_;

  std::vector<std::pair<Index, Label>> label_obs_;
  std::vector<std::pair<Index, int>> abstain_obs_;
  std::vector<SparseFeatures> label_features_;
  std::vector<SparseFeatures> abstain_features_;
  std::vector<LinearModel> label_models_;
  LinearModel abstain_model_;
};

/// Rate estimate fit once on the pool's full abstention pattern (z = 1 abstains)
/// and never refit. An empty pattern gives the prior mode 0.5.
RateFn fixed_rate_estimator(std::span<const BinarySample> pattern, Index dimension,
                            double prior_variance);

}  // namespace abstain_al
