#include "quorum/voting.hpp"

#include <algorithm>

namespace quorum::voting {

VoteTally tally(std::span<const ClassifierOutput> outputs, int n_total) {
  if (static_cast<int>(outputs.size()) != n_total) {
    throw DomainError("tally: " + std::to_string(outputs.size()) +
                      " outputs for n_total=" + std::to_string(n_total));
  }
  VoteTally t;
  t.n_total = n_total;
  for (const auto& out : outputs) {
    if (auto key = out.vote_key()) {
      ++t.counts[*key];
    } else {
      ++t.n_abstained;
    }
  }
  return t;
}

Prediction predict(const VoteTally& t) {
  Prediction p;
  p.ensemble_accuracy = Certainty{0, std::max(t.n_total, 1)};
  if (t.counts.empty()) return p;
  // std::map iterates keys lexicographically, so keeping the first strict
  // maximum realizes the smallest-label tie-break.
  int best = 0;
  int at_max = 0;
  for (const auto& [key, count] : t.counts) {
    if (count > best) {
      best = count;
      p.key = key;
      at_max = 1;
    } else if (count == best) {
      ++at_max;
    }
  }
  p.tie_broken = at_max > 1;
  p.ensemble_accuracy = Certainty{best, t.n_total};
  return p;
}

Certainty true_label_accuracy(const VoteTally& t, const std::string& true_key) {
  auto it = t.counts.find(true_key);
  const int count = it == t.counts.end() ? 0 : it->second;
  return Certainty{count, std::max(t.n_total, 1)};
}

std::map<std::string, Certainty> marginal_parameter_tally(
    std::span<const ClassifierOutput> outputs) {
  std::int64_t n_voting = 0;
  std::map<std::string, std::int64_t> hits;
  for (const auto& out : outputs) {
    if (out.is_abstain()) continue;
    const auto* multi = std::get_if<ParameterSet>(&out.answer);
    if (multi == nullptr) {
      throw DomainError("marginal_parameter_tally: single-label output present");
    }
    ++n_voting;
    for (const auto& p : multi->params()) ++hits[p.text()];
  }
  std::map<std::string, Certainty> fractions;
  for (const auto& [key, count] : hits) {
    fractions[key] = Certainty{count, n_voting};
  }
  return fractions;
}

EnsembleResult summarize(const std::string& intent_id,
                         std::span<const ClassifierOutput> outputs,
                         int n_total, const std::string& true_key) {
  const VoteTally t = tally(outputs, n_total);
  const Prediction p = predict(t);
  EnsembleResult r;
  r.intent_id = intent_id;
  r.tally = t.counts;
  r.n_total = t.n_total;
  r.n_abstained = t.n_abstained;
  r.prediction = p.key;
  r.ensemble_accuracy = p.ensemble_accuracy;
  r.true_label_accuracy = true_label_accuracy(t, true_key);
  r.tie_broken = p.tie_broken;
  return r;
}

}  // namespace quorum::voting
