#include "quorum/assessment.hpp"

#include <algorithm>

namespace quorum::assessment {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::MoreLikelyCorrect:
      return "more_likely_correct";
    case Verdict::SlightlyMoreLikelyCorrect:
      return "slightly_more_likely_correct";
    case Verdict::SlightlyMoreLikelyIncorrect:
      return "slightly_more_likely_incorrect";
    case Verdict::MoreLikelyIncorrect:
      return "more_likely_incorrect";
  }
  throw DomainError("invalid verdict");
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "more_likely_correct") return Verdict::MoreLikelyCorrect;
  if (s == "slightly_more_likely_correct") return Verdict::SlightlyMoreLikelyCorrect;
  if (s == "slightly_more_likely_incorrect")
    return Verdict::SlightlyMoreLikelyIncorrect;
  if (s == "more_likely_incorrect") return Verdict::MoreLikelyIncorrect;
  throw DomainError("unknown verdict: " + s);
}

std::string verdict_prose(Verdict v) {
  switch (v) {
    case Verdict::MoreLikelyCorrect:
      return "More likely to have come from the correct distribution";
    case Verdict::SlightlyMoreLikelyCorrect:
      return "Slightly more likely to have come from the correct distribution";
    case Verdict::SlightlyMoreLikelyIncorrect:
      return "Slightly more likely to have come from the incorrect distribution";
    case Verdict::MoreLikelyIncorrect:
      return "More likely to have come from the incorrect distribution";
  }
  throw DomainError("invalid verdict");
}

std::string to_string(TriageCell cell) {
  switch (cell) {
    case TriageCell::ConfidentCorrect:
      return "confident_correct";
    case TriageCell::ConfidentIncorrect:
      return "confident_incorrect";
    case TriageCell::NotConfidentIncorrect:
      return "not_confident_incorrect";
    case TriageCell::NotConfidentCorrect:
      return "not_confident_correct";
  }
  throw DomainError("invalid triage cell");
}

std::string triage_guidance(TriageCell cell) {
  if (cell == TriageCell::ConfidentIncorrect) {
    return "target for improvement with training data";
  }
  return "";
}

namespace {

std::vector<double> values_of(std::span<const Certainty> samples) {
  std::vector<double> values;
  values.reserve(samples.size());
  for (const auto& s : samples) values.push_back(s.value());
  return values;
}

void insert_sorted(std::vector<Certainty>& side, const Certainty& sample) {
  auto it = std::lower_bound(side.begin(), side.end(), sample, certainty_less);
  side.insert(it, sample);
}

std::vector<std::string> derive_warnings(const CalibrationModel& model) {
  std::vector<std::string> warnings;
  if (model.provenance.n_excluded_abstain > 0) {
    warnings.push_back(
        "excluded " + std::to_string(model.provenance.n_excluded_abstain) +
        " all-abstain result(s) from calibration");
  }
  const auto check_side = [&](const char* name, std::size_t n) {
    if (n < model.small_sample_threshold) {
      warnings.push_back("small-sample: " + std::string(name) + " side has " +
                         std::to_string(n) + " samples (< " +
                         std::to_string(model.small_sample_threshold) + ")");
    }
  };
  check_side("correct", model.correct_samples.size());
  check_side("incorrect", model.incorrect_samples.size());
  return warnings;
}

void recompute_ks(CalibrationModel& model) {
  model.ks = stats::ks_2samp(model.correct_dist(), model.incorrect_dist());
}

}  // namespace

stats::EmpiricalDistribution CalibrationModel::correct_dist() const {
  return stats::EmpiricalDistribution(values_of(correct_samples));
}

stats::EmpiricalDistribution CalibrationModel::incorrect_dist() const {
  return stats::EmpiricalDistribution(values_of(incorrect_samples));
}

CalibrationModel calibrate(std::span<const LabeledResult> results,
                           const CalibrateOptions& options) {
  if (results.empty()) {
    throw CalibrationError("calibrate: no results supplied");
  }
  CalibrationModel model;
  model.per_class_enabled = options.per_class;
  model.small_sample_threshold = options.small_sample_threshold;
  model.per_class_min_samples = options.per_class_min_samples;
  model.provenance.created = options.timestamp;
  model.provenance.n_results = static_cast<std::int64_t>(results.size());

  for (const auto& [result, true_key] : results) {
    if (!result.prediction) {
      ++model.provenance.n_excluded_abstain;
      continue;
    }
    const bool correct = *result.prediction == true_key;
    auto& side = correct ? model.correct_samples : model.incorrect_samples;
    insert_sorted(side, result.ensemble_accuracy);
    if (model.per_class_enabled) {
      auto& cls = model.per_class[*result.prediction];
      insert_sorted(correct ? cls.correct : cls.incorrect,
                    result.ensemble_accuracy);
    }
  }

  if (model.correct_samples.empty()) {
    throw CalibrationError("correct side empty (need at least 2 samples)");
  }
  if (model.incorrect_samples.empty()) {
    throw CalibrationError("incorrect side empty (need at least 2 samples)");
  }
  if (model.correct_samples.size() < 2) {
    throw CalibrationError("correct side has 1 sample (need at least 2)");
  }
  if (model.incorrect_samples.size() < 2) {
    throw CalibrationError("incorrect side has 1 sample (need at least 2)");
  }

  recompute_ks(model);
  model.warnings = derive_warnings(model);
  return model;
}

std::pair<Verdict, std::optional<std::string>> verdict_for(
    double p_low_correct, double p_high_incorrect) {
  if (p_low_correct == 0.0 && p_high_incorrect == 0.0) {
    return {Verdict::SlightlyMoreLikelyCorrect,
            "u_new lies outside both empirical supports"};
  }
  const bool correct_side = p_low_correct >= p_high_incorrect;
  const double hi = std::max(p_low_correct, p_high_incorrect);
  const double lo = std::min(p_low_correct, p_high_incorrect);
  const bool strong = lo == 0.0 || hi / lo >= 2.0;
  if (correct_side) {
    return {strong ? Verdict::MoreLikelyCorrect
                   : Verdict::SlightlyMoreLikelyCorrect,
            std::nullopt};
  }
  return {strong ? Verdict::MoreLikelyIncorrect
                 : Verdict::SlightlyMoreLikelyIncorrect,
          std::nullopt};
}

Assessment assess(const CalibrationModel& model, double u_new,
                  const std::optional<std::string>& class_hint) {
  if (!(u_new >= 0.0 && u_new <= 1.0)) {
    throw StatsError("u_new outside [0, 1]: " + std::to_string(u_new));
  }
  Assessment a;
  a.u_new = u_new;

  const std::vector<Certainty>* correct = &model.correct_samples;
  const std::vector<Certainty>* incorrect = &model.incorrect_samples;
  if (class_hint && model.per_class_enabled) {
    auto it = model.per_class.find(*class_hint);
    if (it != model.per_class.end() &&
        it->second.correct.size() >= model.per_class_min_samples &&
        it->second.incorrect.size() >= model.per_class_min_samples) {
      correct = &it->second.correct;
      incorrect = &it->second.incorrect;
      a.used_per_class = true;
    }
  }

  a.p_low_given_correct =
      stats::EmpiricalDistribution(values_of(*correct)).cdf(u_new);
  a.p_high_given_incorrect =
      stats::EmpiricalDistribution(values_of(*incorrect)).sf(u_new);
  auto [verdict, warning] =
      verdict_for(a.p_low_given_correct, a.p_high_given_incorrect);
  a.verdict = verdict;
  if (warning) a.warnings.push_back(*warning);
  if (correct->size() < model.small_sample_threshold ||
      incorrect->size() < model.small_sample_threshold) {
    a.warnings.push_back("small-sample calibration side in use");
  }
  return a;
}

CalibrationModel update(const CalibrationModel& model,
                        const EnsembleResult& result,
                        const std::string& true_key) {
  CalibrationModel next = model;
  ++next.provenance.n_results;
  if (!result.prediction) {
    ++next.provenance.n_excluded_abstain;
    next.warnings = derive_warnings(next);
    return next;
  }
  const bool correct = *result.prediction == true_key;
  auto& side = correct ? next.correct_samples : next.incorrect_samples;
  insert_sorted(side, result.ensemble_accuracy);
  if (next.per_class_enabled) {
    auto& cls = next.per_class[*result.prediction];
    insert_sorted(correct ? cls.correct : cls.incorrect,
                  result.ensemble_accuracy);
  }
  recompute_ks(next);
  next.warnings = derive_warnings(next);
  return next;
}

double confidence_threshold(const CalibrationModel& model) {
  const auto& s = model.correct_samples;
  if (s.empty()) {
    throw CalibrationError("confidence threshold undefined: correct side empty");
  }
  const std::size_t n = s.size();
  if (n % 2 == 1) return s[n / 2].value();
  return (s[n / 2 - 1].value() + s[n / 2].value()) / 2.0;
}

TriageCell triage(const CalibrationModel& model, const Assessment& assessment,
                  std::optional<bool> was_correct,
                  std::optional<double> threshold) {
  if (!was_correct) {
    throw CalibrationError(
        "triage requires ground truth; it is an offline labeling aid");
  }
  const double thr = threshold ? *threshold : confidence_threshold(model);
  const bool confident = assessment.u_new >= thr;
  if (confident) {
    return *was_correct ? TriageCell::ConfidentCorrect
                        : TriageCell::ConfidentIncorrect;
  }
  return *was_correct ? TriageCell::NotConfidentCorrect
                      : TriageCell::NotConfidentIncorrect;
}

}  // namespace quorum::assessment
