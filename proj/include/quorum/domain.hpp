#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "quorum/errors.hpp"

namespace quorum {

std::string trim(std::string_view s);

// A categorical answer ("/stock_items", "out_of_stock", "None"). Opaque
// string, compared case-sensitively; weak-model artefacts like "None" or
// "NULL" are ordinary labels, not abstentions.
class ClassLabel {
 public:
  explicit ClassLabel(std::string text);

  const std::string& text() const { return text_; }

  auto operator<=>(const ClassLabel&) const = default;

 private:
  std::string text_;
};

// Canonical set of parameter labels: lexicographically sorted, duplicates
// removed. May be empty (the classifier selected no parameters).
//
// serialized() joins members with the reserved separator '|'; the empty set
// serializes to the empty string. Members therefore must not contain '|'.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::vector<ClassLabel> labels);

  static ParameterSet from_serialized(const std::string& s);

  const std::vector<ClassLabel>& params() const { return params_; }
  bool empty() const { return params_.empty(); }
  std::size_t size() const { return params_.size(); }
  bool contains(const ClassLabel& label) const;

  std::string serialized() const;

  auto operator<=>(const ParameterSet&) const = default;

 private:
  std::vector<ClassLabel> params_;
};

enum class TaskKind { Endpoint, Parameter };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

// Ground truth for a variant set: a single label for endpoint tasks, a
// parameter set for parameter tasks.
using TrueLabel = std::variant<ParameterSet, ClassLabel>;

// The string under which an answer is tallied: the label text, or the
// canonical ParameterSet serialization.
std::string vote_key(const TrueLabel& label);

// Exact rational certainty (e.g. 8/15) kept alongside its decimal value so
// persisted results never depend on platform float rendering.
struct Certainty {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  friend bool operator==(const Certainty&, const Certainty&) = default;
};

// Canonical total order used when sample arrays must be reproducible:
// by value, then numerator, then denominator.
bool certainty_less(const Certainty& a, const Certainty& b);

enum class AbstainReason { ParseFailure, NotInCandidates, BackendError };

std::string to_string(AbstainReason reason);
AbstainReason abstain_reason_from_string(const std::string& s);

struct Abstention {
  AbstainReason reason = AbstainReason::ParseFailure;

  friend bool operator==(const Abstention&, const Abstention&) = default;
};

// Single(label) | Multi(params) | Abstain(reason).
using Answer = std::variant<Abstention, ClassLabel, ParameterSet>;

// One parsed classifier response for one variant.
struct ClassifierOutput {
  int variant_index = 0;
  Answer answer;
  std::string reason_text;  // free-text justification; empty if none
  std::string raw_text;     // the unparsed response, kept for replay/reports

  bool is_abstain() const {
    return std::holds_alternative<Abstention>(answer);
  }

  // Tally key for a voting answer; nullopt when abstaining.
  std::optional<std::string> vote_key() const;

  friend bool operator==(const ClassifierOutput&,
                         const ClassifierOutput&) = default;
};

// Aggregated outcome of one ensemble over a variant set. Keys of `tally`
// are vote keys (label text, or ParameterSet serialization for parameter
// tasks). `prediction` is null iff every variant abstained.
struct EnsembleResult {
  std::string intent_id;
  std::map<std::string, int> tally;
  int n_total = 0;
  int n_abstained = 0;
  std::optional<std::string> prediction;
  Certainty ensemble_accuracy;
  Certainty true_label_accuracy;
  bool tie_broken = false;  // argmax had competitors; lexicographic rule applied

  friend bool operator==(const EnsembleResult&, const EnsembleResult&) = default;
};

// One latent intent, its phrasings, ground truth, and the candidate pool.
// Variants are stored trimmed and exact-duplicate-free (dedup at ingestion).
struct VariantSet {
  std::string intent_id;
  std::string intent_text;
  std::vector<std::string> variants;
  TrueLabel true_label;
  std::set<ClassLabel> candidates;
  TaskKind task_kind = TaskKind::Endpoint;
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, preserved

  std::string true_label_key() const { return vote_key(true_label); }
};

inline constexpr int kDefaultVariantCount = 15;

// Returns every violated invariant; empty means the set is well-formed.
std::vector<std::string> validate_variant_set(const VariantSet& vs);

// Trims variant strings and drops exact duplicates, preserving first
// occurrence order. Applied by ingestion and by variant generation.
std::vector<std::string> dedup_variants(const std::vector<std::string>& variants);

// --- JSON mappings (field-level; file schemas live in the dataset module) ---

void to_json(nlohmann::json& j, const ClassLabel& label);
void from_json(const nlohmann::json& j, ClassLabel& label);

void to_json(nlohmann::json& j, const ParameterSet& ps);
void from_json(const nlohmann::json& j, ParameterSet& ps);

void to_json(nlohmann::json& j, const Certainty& c);
void from_json(const nlohmann::json& j, Certainty& c);

void to_json(nlohmann::json& j, const ClassifierOutput& out);
void from_json(const nlohmann::json& j, ClassifierOutput& out);

void to_json(nlohmann::json& j, const EnsembleResult& r);
void from_json(const nlohmann::json& j, EnsembleResult& r);

nlohmann::json variant_set_to_json(const VariantSet& vs);
VariantSet variant_set_from_json(const nlohmann::json& j);

}  // namespace quorum
