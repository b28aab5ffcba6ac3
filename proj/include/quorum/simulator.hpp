#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "quorum/backends.hpp"
#include "quorum/domain.hpp"
#include "quorum/rng.hpp"

namespace quorum::simulator {

// Generative model of one intent: theta is the conceptual certainty of the
// simulated classifier, epsilon_j the lexical difficulty of variant j. A
// variant answers correctly with probability p_j = theta * (1 - epsilon_j);
// otherwise the answer is drawn from `confusion`. theta = 1 with epsilon = 0
// is immune to phrasing; theta = 0 never finds the true label.
struct IntentModel {
  ClassLabel true_label;
  double theta = 1.0;
  std::map<ClassLabel, double> confusion;  // wrong label -> probability, sums to 1
  std::vector<double> variant_difficulty;  // epsilon_j, one per variant

  // Throws DomainError on any violated invariant: theta or an epsilon
  // outside [0,1], true_label in confusion, or weights not summing to 1
  // within 1e-12.
  void validate() const;
};

// Uniform confusion over every candidate except the true label.
std::map<ClassLabel, double> uniform_confusion(
    const ClassLabel& true_label, const std::set<ClassLabel>& candidates);

struct SimIntent {
  std::string intent_id;
  IntentModel model;
};

struct SimConfig {
  std::vector<SimIntent> intents;
  int n_variants = kDefaultVariantCount;
  std::uint64_t seed = 0;
  int trials = 1;

  void validate() const;
};

nlohmann::json sim_config_to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const nlohmann::json& j);

// One simulated classification. Always consumes exactly two draws from the
// generator, so streams stay aligned when the same seeds are replayed with
// a different theta (paired-seed sweeps).
ClassLabel sim_classify(const IntentModel& m, std::size_t variant_index,
                        SplitMix64& rng);

struct SweepRow {
  double theta = 0.0;
  double mean_ensemble_accuracy = 0.0;   // mean max-vote share across trials
  double true_share_variance = 0.0;      // population variance of the true-label share
};

// For each theta in the grid, re-runs every configured intent for
// cfg.trials ensembles with that theta substituted. Per-trial seeds are
// derived from (cfg.seed, intent index, trial index) only, so the grid is
// evaluated under paired randomness and the partition is safe to execute
// in parallel.
std::vector<SweepRow> hypothesis_sweep(const SimConfig& cfg,
                                       std::span<const double> theta_grid);

// Classifier backend that answers from bound intent models, emitting
// detector-format response text so the full parse/filter path is exercised.
// Answers are a pure function of (seed, intent index, variant index):
// repeated identical calls return identical responses.
class SimulatorBackend final : public backends::ClassifierBackend {
 public:
  explicit SimulatorBackend(std::uint64_t seed);

  void bind_intent(const std::string& intent_id, const IntentModel& model,
                   const std::vector<std::string>& variant_questions);

  std::string identity() const override;
  backends::Capabilities capabilities() const override;  // endpoint-only
  std::string complete(const backends::CompletionRequest& request) override;

 private:
  struct Binding {
    std::size_t intent_index = 0;
    std::size_t variant_index = 0;
  };

  std::uint64_t seed_;
  std::vector<IntentModel> models_;
  std::vector<std::string> intent_keys_;
  std::unordered_map<std::string, Binding> by_question_;
};

struct CorpusEntry {
  VariantSet variant_set;
  std::shared_ptr<SimulatorBackend> backend;
};

// Synthesizes labeled variant sets with placeholder phrasings, each bound to
// a simulator backend, for end-to-end calibration runs. Deterministic for a
// fixed config (including seed).
std::vector<CorpusEntry> make_calibration_corpus(const SimConfig& cfg);

}  // namespace quorum::simulator
