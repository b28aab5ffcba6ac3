#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quorum/domain.hpp"

namespace quorum::voting {

// Vote histogram over one ensemble. Keys are vote keys (label text, or the
// canonical ParameterSet serialization). sum(counts) + n_abstained == n_total.
struct VoteTally {
  std::map<std::string, int> counts;
  int n_total = 0;
  int n_abstained = 0;
};

struct Prediction {
  std::optional<std::string> key;  // null iff counts empty
  Certainty ensemble_accuracy;     // counts[key] / n_total
  bool tie_broken = false;
};

// Counts identical answers; abstentions go to n_abstained.
// Throws DomainError when outputs.size() != n_total.
VoteTally tally(std::span<const ClassifierOutput> outputs, int n_total);

// Argmax of counts. Ties break to the lexicographically smallest maximal
// key (deterministic; the tie is flagged). Empty counts -> (null, 0).
Prediction predict(const VoteTally& t);

// counts.get(key, 0) / n_total.
Certainty true_label_accuracy(const VoteTally& t, const std::string& true_key);

// Opt-in aggregation for parameter tasks: per-parameter fraction of
// non-abstaining variants that included it. Throws DomainError if any
// output is a Single answer. All-abstain input yields an empty map.
std::map<std::string, Certainty> marginal_parameter_tally(
    std::span<const ClassifierOutput> outputs);

// Full per-intent aggregation: tally + predict + both accuracies.
EnsembleResult summarize(const std::string& intent_id,
                         std::span<const ClassifierOutput> outputs,
                         int n_total, const std::string& true_key);

}  // namespace quorum::voting
