#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quorum/domain.hpp"
#include "quorum/stats.hpp"

namespace quorum::assessment {

enum class Verdict {
  MoreLikelyCorrect,
  SlightlyMoreLikelyCorrect,
  SlightlyMoreLikelyIncorrect,
  MoreLikelyIncorrect,
};

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);
// Human-readable form, e.g. "Slightly more likely to have come from the
// correct distribution".
std::string verdict_prose(Verdict v);

struct ClassSamples {
  std::vector<Certainty> correct;    // sorted by certainty_less
  std::vector<Certainty> incorrect;  // sorted by certainty_less

  friend bool operator==(const ClassSamples&, const ClassSamples&) = default;
};

struct Provenance {
  std::int64_t n_results = 0;           // labeled results consumed
  std::int64_t n_excluded_abstain = 0;  // all-abstain results skipped
  std::string created;                  // ISO-8601; empty when not stamped

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// Calibrated correct/incorrect certainty distributions. Immutable in use:
// update() returns a new model. Raw rational samples are the authoritative
// state; the ECDFs are derived views.
struct CalibrationModel {
  std::vector<Certainty> correct_samples;    // sorted by certainty_less
  std::vector<Certainty> incorrect_samples;  // sorted by certainty_less
  stats::KsReport ks;
  bool per_class_enabled = false;
  std::map<std::string, ClassSamples> per_class;  // keyed by predicted class
  std::size_t small_sample_threshold = 20;
  std::size_t per_class_min_samples = 5;
  Provenance provenance;
  std::vector<std::string> warnings;

  stats::EmpiricalDistribution correct_dist() const;
  stats::EmpiricalDistribution incorrect_dist() const;
};

struct Assessment {
  double u_new = 0.0;
  double p_low_given_correct = 0.0;    // P(U <= u_new | correct)
  double p_high_given_incorrect = 0.0;  // P(U > u_new | incorrect)
  Verdict verdict = Verdict::SlightlyMoreLikelyCorrect;
  std::vector<std::string> warnings;
  bool used_per_class = false;
};

enum class TriageCell {
  ConfidentCorrect,
  ConfidentIncorrect,
  NotConfidentIncorrect,
  NotConfidentCorrect,
};

std::string to_string(TriageCell cell);

// Curation note for a triage cell; nonempty only for ConfidentIncorrect,
// the cell worth targeting with additional training data.
std::string triage_guidance(TriageCell cell);

struct CalibrateOptions {
  bool per_class = false;
  std::size_t small_sample_threshold = 20;
  std::size_t per_class_min_samples = 5;
  std::string timestamp;  // provenance.created; empty leaves it unstamped
};

using LabeledResult = std::pair<EnsembleResult, std::string>;  // result, true key

// Routes each result's ensemble_accuracy into the correct or incorrect side
// by comparing prediction against the true key, builds both ECDFs, and runs
// the KS separation test. All-abstain results are excluded with a warning.
// Throws CalibrationError when either side ends up with fewer than 2 samples.
CalibrationModel calibrate(std::span<const LabeledResult> results,
                           const CalibrateOptions& options = {});

// Dual-ECDF extremeness of a new certainty u_new. When `class_hint` is given
// and the per-class sides both have >= per_class_min_samples, the class
// distributions are used; otherwise assessment falls back to the global ones
// and is identical to calling without a hint.
Assessment assess(const CalibrationModel& model, double u_new,
                  const std::optional<std::string>& class_hint = std::nullopt);

// Verdict for an extremeness pair. The larger probability picks the side;
// the ratio max/min >= 2 upgrades "slightly more likely" to "more likely".
// Equal values break toward correct. Both zero means u_new lies outside both
// empirical supports: slightly-more-likely-correct plus a warning.
std::pair<Verdict, std::optional<std::string>> verdict_for(double p_low_correct,
                                                           double p_high_incorrect);

// Appends the result's certainty to the appropriate side (global, and
// per-class when enabled), rebuilds the affected ECDFs, and recomputes the
// KS report. An all-abstain result leaves the distributions untouched and
// only records a warning.
CalibrationModel update(const CalibrationModel& model, const EnsembleResult& result,
                        const std::string& true_key);

// Offline labeling aid: confident iff u_new >= threshold (default: median of
// the correct side), crossed with actual correctness. Throws CalibrationError
// when was_correct is absent.
TriageCell triage(const CalibrationModel& model, const Assessment& assessment,
                  std::optional<bool> was_correct,
                  std::optional<double> threshold = std::nullopt);

// Default triage threshold: median of the correct-side samples.
double confidence_threshold(const CalibrationModel& model);

}  // namespace quorum::assessment
