#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace abstain_al {

using Index = Eigen::Index;
using Label = int;
using SparseFeatures = Eigen::SparseVector<double>;

/// Feedback value returned when the labeler declines to label.
inline constexpr Label kAbstain = 0;
/// Label sentinel for pool examples that belong to none of the target classes.
inline constexpr Label kRedundant = -1;

/// Error carrying a stable machine-readable code ("zero_posterior_mass", ...).
class Error : public std::runtime_error {
 public:
  explicit Error(std::string code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Labels are 1..size(); 0 is reserved for abstention.
class LabelSpace {
 public:
  explicit LabelSpace(int num_labels) : num_labels_(num_labels) {
    if (num_labels < 2) throw Error("bad_input", "label space needs at least two labels");
  }

  int size() const noexcept { return num_labels_; }
  bool contains(Label y) const noexcept { return y >= 1 && y <= num_labels_; }

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  int num_labels_;
};

struct Feedback {
  Label value = kAbstain;

  bool abstained() const noexcept { return value == kAbstain; }
  friend bool operator==(const Feedback&, const Feedback&) = default;
};

struct Example {
  Index index = 0;
  SparseFeatures features;
  Label true_label = kRedundant;

  bool redundant() const noexcept { return true_label == kRedundant; }
};

/// Derives an independent 64-bit stream seed from (seed, stream) via splitmix64.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Sparse dot product that ignores feature ids beyond the dense vector.
template <typename Derived>
typename Derived::Scalar sparse_dot(const SparseFeatures& x, const Eigen::MatrixBase<Derived>& w) {
  typename Derived::Scalar acc = 0;
  for (SparseFeatures::InnerIterator it(x); it; ++it) {
    if (it.index() < w.size()) acc += it.value() * w.coeff(it.index());
  }
  return acc;
}

/// Pool or test split. Example i always carries index i.
class Dataset {
 public:
  Dataset(LabelSpace labels, std::vector<Example> examples);

  const LabelSpace& labels() const noexcept { return labels_; }
  const std::vector<Example>& examples() const noexcept { return examples_; }
  const Example& operator[](Index i) const { return examples_.at(static_cast<std::size_t>(i)); }
  Index size() const noexcept { return static_cast<Index>(examples_.size()); }
  bool empty() const noexcept { return examples_.empty(); }
  /// One past the largest feature id present.
  Index dimension() const noexcept { return dimension_; }

  Index redundant_count() const;
  Dataset subset(const std::vector<Index>& positions) const;
  Dataset without_redundant() const;

 private:
  LabelSpace labels_;
  std::vector<Example> examples_;
  Index dimension_ = 0;
};

/// Posterior state consumed by the selection policies.
///
/// The active-learning loop is written once against this interface; the
/// exact finite-space posterior and the MAP plugin approximation both
/// implement it.
class Belief {
 public:
  virtual ~Belief() = default;

  virtual std::unique_ptr<Belief> clone() const = 0;
  virtual int num_labels() const = 0;

  /// Entry y-1 holds p[Y = y; x].
  virtual Eigen::VectorXd predictive_pmf(const Example& x) const = 0;
  /// Posterior-mean abstention probability at x.
  virtual double estimated_rate(const Example& x) const = 0;

  virtual void observe_label(const Example& x, Label y) = 0;
  virtual void observe_abstain(const Example& x) = 0;
};

/// Answers a query from a table fixed at construction, so repeated queries agree.
class SimulatedLabeler {
 public:
  SimulatedLabeler() = default;
  explicit SimulatedLabeler(std::vector<Label> answers) : answers_(std::move(answers)) {}

  Feedback query(Index x) const { return Feedback{answers_.at(static_cast<std::size_t>(x))}; }
  Index size() const noexcept { return static_cast<Index>(answers_.size()); }
  Index abstention_count() const;
  /// 1 where the labeler abstains.
  std::vector<int> abstention_pattern() const;

 private:
  std::vector<Label> answers_;
};

}  // namespace abstain_al
