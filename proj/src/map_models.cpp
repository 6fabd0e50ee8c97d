#include "abstain_al/map_models.hpp"

#include <cmath>
#include <vector>

namespace abstain_al {
namespace {

struct Problem {
  const DesignMatrix& x;
  const Eigen::VectorXd& targets;
  double inv_var;

  Eigen::VectorXd margins(const Eigen::VectorXd& w, double b) const {
    Eigen::VectorXd z = x * w;
    z.array() += b;
    return z;
  }

  double objective(const Eigen::VectorXd& w, double b) const {
    const Eigen::VectorXd z = margins(w, b);
    double ll = 0.0;
    for (Index j = 0; j < z.size(); ++j) ll += targets[j] * z[j] - softplus(z[j]);
    return ll - 0.5 * inv_var * (w.squaredNorm() + b * b);
  }

  // Gradient (w part, then intercept) and the curvature weights p(1 - p).
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, double b, Eigen::VectorXd* curvature) const {
    const Eigen::VectorXd z = margins(w, b);
    Eigen::VectorXd resid(z.size());
    if (curvature) curvature->resize(z.size());
    for (Index j = 0; j < z.size(); ++j) {
      const double p = sigmoid(z[j]);
      resid[j] = targets[j] - p;
      if (curvature) (*curvature)[j] = p * (1.0 - p);
    }
    Eigen::VectorXd g(w.size() + 1);
    g.head(w.size()) = x.transpose() * resid - inv_var * w;
    g[w.size()] = resid.sum() - inv_var * b;
    return g;
  }

  // (X^T D X + I / sigma^2) v over the stacked (w, b) coordinates.
  Eigen::VectorXd curvature_times(const Eigen::VectorXd& d, const Eigen::VectorXd& v) const {
    const Index dim = v.size() - 1;
    Eigen::VectorXd u = x * v.head(dim);
    u.array() += v[dim];
    u.array() *= d.array();
    Eigen::VectorXd out(v.size());
    out.head(dim) = x.transpose() * u + inv_var * v.head(dim);
    out[dim] = u.sum() + inv_var * v[dim];
    return out;
  }
};

Eigen::VectorXd conjugate_gradient(const Problem& prob, const Eigen::VectorXd& d, const Eigen::VectorXd& rhs,
                                   double tolerance, Index max_iter) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd r = rhs;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  for (Index it = 0; it < max_iter && std::sqrt(rr) > tolerance; ++it) {
    const Eigen::VectorXd hp = prob.curvature_times(d, p);
    const double alpha = rr / p.dot(hp);
    s += alpha * p;
    r -= alpha * hp;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return s;
}

}  // namespace

DesignMatrix make_design(std::span<const BinarySample> samples, Index dimension) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    for (SparseFeatures::InnerIterator it(samples[j].features); it; ++it) {
      if (!std::isfinite(it.value())) throw Error("bad_input", "non-finite feature value");
      if (it.index() < dimension) triplets.emplace_back(static_cast<Index>(j), it.index(), it.value());
    }
  }
  DesignMatrix x(static_cast<Index>(samples.size()), dimension);
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

double map_objective(const LinearModel& model, const DesignMatrix& x, const Eigen::VectorXd& targets) {
  return Problem{x, targets, 1.0 / model.prior_variance}.objective(model.weights, model.intercept);
}

Eigen::VectorXd map_gradient(const LinearModel& model, const DesignMatrix& x, const Eigen::VectorXd& targets) {
  return Problem{x, targets, 1.0 / model.prior_variance}.gradient(model.weights, model.intercept, nullptr);
}

LinearModel fit_map(const DesignMatrix& x, const Eigen::VectorXd& targets, double prior_variance,
                    const LinearModel* warm_start, const FitOptions& options) {
  if (!(prior_variance > 0) || !std::isfinite(prior_variance)) {
    throw Error("bad_input", "prior variance must be positive");
  }
  if (targets.size() != x.rows()) throw Error("bad_input", "target count mismatch");
  for (Index j = 0; j < targets.size(); ++j) {
    if (targets[j] != 0.0 && targets[j] != 1.0) throw Error("bad_input", "targets must be 0 or 1");
  }
  for (Index k = 0; k < x.nonZeros(); ++k) {
    if (!std::isfinite(x.valuePtr()[k])) throw Error("bad_input", "non-finite feature value");
  }

  const Index dim = x.cols();
  LinearModel model;
  model.prior_variance = prior_variance;
  model.weights = Eigen::VectorXd::Zero(dim);
  if (warm_start) {
    const Index n = std::min(dim, warm_start->weights.size());
    model.weights.head(n) = warm_start->weights.head(n);
    model.intercept = warm_start->intercept;
  }
  if (x.rows() == 0) {
    model.weights.setZero();
    model.intercept = 0.0;
    return model;
  }

  const Problem prob{x, targets, 1.0 / prior_variance};
  Eigen::VectorXd curvature;
  double obj = prob.objective(model.weights, model.intercept);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd g = prob.gradient(model.weights, model.intercept, &curvature);
    const double gnorm = g.norm();
    if (gnorm <= options.gradient_tolerance) break;

    const Eigen::VectorXd step =
        conjugate_gradient(prob, curvature, g, std::min(0.1, gnorm) * gnorm, 2 * (dim + 1));
    const double slope = g.dot(step);

    double alpha = 1.0;
    for (int halving = 0; halving < 40; ++halving, alpha *= 0.5) {
      const Eigen::VectorXd w = model.weights + alpha * step.head(dim);
      const double b = model.intercept + alpha * step[dim];
      const double cand = prob.objective(w, b);
      // Near the optimum the objective change drops below rounding; fall back
      // to the gradient norm there.
      const bool flat = std::abs(cand - obj) <= 1e-12 * (1.0 + std::abs(obj));
      if (cand >= obj + 1e-4 * alpha * slope ||
          (flat && prob.gradient(w, b, nullptr).norm() < gnorm)) {
        model.weights = w;
        model.intercept = b;
        obj = cand;
        break;
      }
    }
  }
  return model;
}

LinearModel fit_map(std::span<const BinarySample> samples, Index dimension, double prior_variance,
                    const FitOptions& options) {
  Eigen::VectorXd targets(static_cast<Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) targets[static_cast<Index>(j)] = samples[j].target;
  return fit_map(make_design(samples, dimension), targets, prior_variance, nullptr, options);
}

double predict_proba(const LinearModel& model, const SparseFeatures& x) {
  return sigmoid(sparse_dot(x, model.weights) + model.intercept);
}

PluginBelief::PluginBelief(LabelSpace labels, Index dimension, double label_prior_variance,
                           double abstain_prior_variance, FitOptions options)
    : labels_(labels),
      dimension_(dimension),
      label_prior_variance_(label_prior_variance),
      abstain_prior_variance_(abstain_prior_variance),
      options_(options) {
  if (!(label_prior_variance > 0) || !(abstain_prior_variance > 0)) {
    throw Error("bad_input", "prior variances must be positive");
  }
  LinearModel prior_mode;
  prior_mode.weights = Eigen::VectorXd::Zero(dimension);
  prior_mode.prior_variance = label_prior_variance;
  label_models_.assign(labels.size() == 2 ? 1 : static_cast<std::size_t>(labels.size()), prior_mode);
  abstain_model_ = prior_mode;
  abstain_model_.prior_variance = abstain_prior_variance;
}

std::unique_ptr<Belief> PluginBelief::clone() const { return std::make_unique<PluginBelief>(*this); }

Eigen::VectorXd PluginBelief::predictive_pmf(const Example& x) const {
  Eigen::VectorXd pmf(labels_.size());
  if (labels_.size() == 2) {
    const double p = predict_proba(label_models_.front(), x.features);
    pmf << 1.0 - p, p;
    return pmf;
  }
  for (int c = 0; c < labels_.size(); ++c) pmf[c] = predict_proba(label_models_[static_cast<std::size_t>(c)], x.features);
  return pmf / pmf.sum();
}

double PluginBelief::estimated_rate(const Example& x) const { return predict_proba(abstain_model_, x.features); }

void PluginBelief::observe_label(const Example& x, Label y) {
  if (!labels_.contains(y)) throw Error("bad_input", "label out of range");
  label_obs_.emplace_back(x.index, y);
  label_features_.push_back(x.features);
  abstain_obs_.emplace_back(x.index, 0);
  abstain_features_.push_back(x.features);
  refit_labels();
  refit_abstain();
}

void PluginBelief::observe_abstain(const Example& x) {
  abstain_obs_.emplace_back(x.index, 1);
  abstain_features_.push_back(x.features);
  refit_abstain();
}

namespace {

DesignMatrix stack(const std::vector<SparseFeatures>& rows, Index dimension) {
  std::vector<BinarySample> samples;
  samples.reserve(rows.size());
  for (const SparseFeatures& f : rows) samples.push_back(BinarySample{f, 0});
  return make_design(samples, dimension);
}

}  // namespace

void PluginBelief::refit_labels() {
  const DesignMatrix x = stack(label_features_, dimension_);
  Eigen::VectorXd t(static_cast<Index>(label_obs_.size()));
  for (std::size_t c = 0; c < label_models_.size(); ++c) {
    const Label positive = labels_.size() == 2 ? 2 : static_cast<Label>(c + 1);
    for (std::size_t j = 0; j < label_obs_.size(); ++j) {
      t[static_cast<Index>(j)] = label_obs_[j].second == positive ? 1.0 : 0.0;
    }
    label_models_[c] = fit_map(x, t, label_prior_variance_, &label_models_[c], options_);
  }
}

void PluginBelief::refit_abstain() {
  const DesignMatrix x = stack(abstain_features_, dimension_);
  Eigen::VectorXd t(static_cast<Index>(abstain_obs_.size()));
  for (std::size_t j = 0; j < abstain_obs_.size(); ++j) t[static_cast<Index>(j)] = abstain_obs_[j].second;
  abstain_model_ = fit_map(x, t, abstain_prior_variance_, &abstain_model_, options_);
}

RateFn fixed_rate_estimator(std::span<const BinarySample> pattern, Index dimension, double prior_variance) {
  const LinearModel model = fit_map(pattern, dimension, prior_variance);
  return [model](const Example& x) { return predict_proba(model, x.features); };
}

}  // namespace abstain_al
