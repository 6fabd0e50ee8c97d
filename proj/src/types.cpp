#include "abstain_al/types.hpp"

#include <algorithm>
#include <cmath>

namespace abstain_al {

Dataset::Dataset(LabelSpace labels, std::vector<Example> examples)
    : labels_(labels), examples_(std::move(examples)) {
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    Example& ex = examples_[i];
    ex.index = static_cast<Index>(i);
    if (!ex.redundant() && !labels_.contains(ex.true_label)) {
      throw Error("bad_input", "example " + std::to_string(i) + " has label " +
                                   std::to_string(ex.true_label) + " outside 1.." +
                                   std::to_string(labels_.size()));
    }
    for (SparseFeatures::InnerIterator it(ex.features); it; ++it) {
      if (!std::isfinite(it.value())) {
        throw Error("bad_input", "non-finite feature in example " + std::to_string(i));
      }
      dimension_ = std::max<Index>(dimension_, it.index() + 1);
    }
  }
}

Index Dataset::redundant_count() const {
  return std::count_if(examples_.begin(), examples_.end(),
                       [](const Example& ex) { return ex.redundant(); });
}

Dataset Dataset::subset(const std::vector<Index>& positions) const {
  std::vector<Example> picked;
  picked.reserve(positions.size());
  for (Index p : positions) picked.push_back((*this)[p]);
  return Dataset(labels_, std::move(picked));
}

Dataset Dataset::without_redundant() const {
  std::vector<Example> kept;
  for (const Example& ex : examples_) {
    if (!ex.redundant()) kept.push_back(ex);
  }
  return Dataset(labels_, std::move(kept));
}

Index SimulatedLabeler::abstention_count() const {
  return std::count(answers_.begin(), answers_.end(), kAbstain);
}

std::vector<int> SimulatedLabeler::abstention_pattern() const {
  std::vector<int> z(answers_.size());
  std::transform(answers_.begin(), answers_.end(), z.begin(),
                 [](Label a) { return a == kAbstain ? 1 : 0; });
  return z;
}

}  // namespace abstain_al
