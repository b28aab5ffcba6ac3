#include "quorum/domain.hpp"

#include <algorithm>
#include <sstream>

namespace quorum {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && is_space(s[begin])) ++begin;
  while (end > begin && is_space(s[end - 1])) --end;
  return std::string(s.substr(begin, end - begin));
}

ClassLabel::ClassLabel(std::string text) : text_(std::move(text)) {
  if (trim(text_).empty()) {
    throw DomainError("class label is empty after whitespace trimming");
  }
}

ParameterSet::ParameterSet(std::vector<ClassLabel> labels)
    : params_(std::move(labels)) {
  for (const auto& label : params_) {
    if (label.text().find('|') != std::string::npos) {
      throw DomainError("parameter label contains reserved separator '|': " +
                        label.text());
    }
  }
  std::sort(params_.begin(), params_.end());
  params_.erase(std::unique(params_.begin(), params_.end()), params_.end());
}

ParameterSet ParameterSet::from_serialized(const std::string& s) {
  if (s.empty()) return ParameterSet();
  std::vector<ClassLabel> labels;
  std::size_t start = 0;
  while (true) {
    std::size_t sep = s.find('|', start);
    labels.emplace_back(s.substr(start, sep - start));
    if (sep == std::string::npos) break;
    start = sep + 1;
  }
  return ParameterSet(std::move(labels));
}

bool ParameterSet::contains(const ClassLabel& label) const {
  return std::binary_search(params_.begin(), params_.end(), label);
}

std::string ParameterSet::serialized() const {
  std::string out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (i > 0) out += '|';
    out += params_[i].text();
  }
  return out;
}

std::string to_string(TaskKind kind) {
  return kind == TaskKind::Endpoint ? "endpoint" : "parameter";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "endpoint") return TaskKind::Endpoint;
  if (s == "parameter") return TaskKind::Parameter;
  throw DomainError("unknown task kind: " + s);
}

std::string vote_key(const TrueLabel& label) {
  if (const auto* single = std::get_if<ClassLabel>(&label)) {
    return single->text();
  }
  return std::get<ParameterSet>(label).serialized();
}

bool certainty_less(const Certainty& a, const Certainty& b) {
  if (a.value() != b.value()) return a.value() < b.value();
  if (a.num != b.num) return a.num < b.num;
  return a.den < b.den;
}

std::string to_string(AbstainReason reason) {
  switch (reason) {
    case AbstainReason::ParseFailure:
      return "parse_failure";
    case AbstainReason::NotInCandidates:
      return "not_in_candidates";
    case AbstainReason::BackendError:
      return "backend_error";
  }
  throw DomainError("invalid abstain reason");
}

AbstainReason abstain_reason_from_string(const std::string& s) {
  if (s == "parse_failure") return AbstainReason::ParseFailure;
  if (s == "not_in_candidates") return AbstainReason::NotInCandidates;
  if (s == "backend_error") return AbstainReason::BackendError;
  throw DomainError("unknown abstain reason: " + s);
}

std::optional<std::string> ClassifierOutput::vote_key() const {
  if (const auto* single = std::get_if<ClassLabel>(&answer)) {
    return single->text();
  }
  if (const auto* multi = std::get_if<ParameterSet>(&answer)) {
    return multi->serialized();
  }
  return std::nullopt;
}

std::vector<std::string> dedup_variants(const std::vector<std::string>& variants) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& v : variants) {
    std::string t = trim(v);
    if (seen.insert(t).second) out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> validate_variant_set(const VariantSet& vs) {
  std::vector<std::string> errors;
  if (vs.intent_id.empty()) {
    errors.push_back("intent_id is empty");
  }
  if (vs.variants.empty()) {
    errors.push_back("empty variants");
  }
  if (vs.candidates.empty()) {
    errors.push_back("empty candidate pool");
  }
  std::set<std::string> seen;
  for (const auto& v : vs.variants) {
    if (trim(v).empty()) {
      errors.push_back("variant is empty after trimming");
    }
    if (!seen.insert(trim(v)).second) {
      errors.push_back("duplicate variant: " + trim(v));
    }
  }
  if (const auto* single = std::get_if<ClassLabel>(&vs.true_label)) {
    if (vs.task_kind != TaskKind::Endpoint) {
      errors.push_back("single true label on a parameter task");
    }
    if (!vs.candidates.contains(*single)) {
      errors.push_back("label not in candidates: " + single->text());
    }
  } else {
    const auto& multi = std::get<ParameterSet>(vs.true_label);
    if (vs.task_kind != TaskKind::Parameter) {
      errors.push_back("parameter-set true label on an endpoint task");
    }
    for (const auto& p : multi.params()) {
      if (!vs.candidates.contains(p)) {
        errors.push_back("label not in candidates: " + p.text());
      }
    }
  }
  return errors;
}

// --- JSON mappings ---

void to_json(nlohmann::json& j, const ClassLabel& label) { j = label.text(); }

void from_json(const nlohmann::json& j, ClassLabel& label) {
  label = ClassLabel(j.get<std::string>());
}

void to_json(nlohmann::json& j, const ParameterSet& ps) {
  j = nlohmann::json::array();
  for (const auto& p : ps.params()) j.push_back(p.text());
}

void from_json(const nlohmann::json& j, ParameterSet& ps) {
  std::vector<ClassLabel> labels;
  for (const auto& item : j) labels.emplace_back(item.get<std::string>());
  ps = ParameterSet(std::move(labels));
}

void to_json(nlohmann::json& j, const Certainty& c) {
  j = nlohmann::json{{"num", c.num}, {"den", c.den}, {"value", c.value()}};
}

void from_json(const nlohmann::json& j, Certainty& c) {
  c.num = j.at("num").get<std::int64_t>();
  c.den = j.at("den").get<std::int64_t>();
  if (c.den <= 0) throw DomainError("certainty denominator must be positive");
  if (c.num < 0 || c.num > c.den) {
    throw DomainError("certainty numerator outside [0, den]");
  }
}

void to_json(nlohmann::json& j, const ClassifierOutput& out) {
  j = nlohmann::json{{"variant_index", out.variant_index},
                     {"reason_text", out.reason_text},
                     {"raw_text", out.raw_text}};
  if (const auto* single = std::get_if<ClassLabel>(&out.answer)) {
    j["kind"] = "single";
    j["label"] = single->text();
  } else if (const auto* multi = std::get_if<ParameterSet>(&out.answer)) {
    j["kind"] = "multi";
    j["params"] = *multi;
  } else {
    j["kind"] = "abstain";
    j["reason_code"] = to_string(std::get<Abstention>(out.answer).reason);
  }
}

void from_json(const nlohmann::json& j, ClassifierOutput& out) {
  out.variant_index = j.at("variant_index").get<int>();
  out.reason_text = j.at("reason_text").get<std::string>();
  out.raw_text = j.at("raw_text").get<std::string>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "single") {
    out.answer = ClassLabel(j.at("label").get<std::string>());
  } else if (kind == "multi") {
    out.answer = j.at("params").get<ParameterSet>();
  } else if (kind == "abstain") {
    out.answer = Abstention{
        abstain_reason_from_string(j.at("reason_code").get<std::string>())};
  } else {
    throw DomainError("unknown classifier output kind: " + kind);
  }
}

void to_json(nlohmann::json& j, const EnsembleResult& r) {
  j = nlohmann::json{{"intent_id", r.intent_id},
                     {"tally", r.tally},
                     {"n_total", r.n_total},
                     {"n_abstained", r.n_abstained},
                     {"ensemble_accuracy", r.ensemble_accuracy},
                     {"true_label_accuracy", r.true_label_accuracy},
                     {"tie_broken", r.tie_broken}};
  if (r.prediction) {
    j["prediction"] = *r.prediction;
  } else {
    j["prediction"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, EnsembleResult& r) {
  r.intent_id = j.at("intent_id").get<std::string>();
  r.tally = j.at("tally").get<std::map<std::string, int>>();
  r.n_total = j.at("n_total").get<int>();
  r.n_abstained = j.at("n_abstained").get<int>();
  if (j.at("prediction").is_null()) {
    r.prediction = std::nullopt;
  } else {
    r.prediction = j.at("prediction").get<std::string>();
  }
  r.ensemble_accuracy = j.at("ensemble_accuracy").get<Certainty>();
  r.true_label_accuracy = j.at("true_label_accuracy").get<Certainty>();
  r.tie_broken = j.value("tie_broken", false);
}

namespace {

const std::set<std::string> kVariantSetFields = {
    "intent_id", "intent_text", "variants",
    "true_label", "candidates", "task_kind"};

}  // namespace

nlohmann::json variant_set_to_json(const VariantSet& vs) {
  nlohmann::json j = vs.extra.is_object() ? vs.extra : nlohmann::json::object();
  j["intent_id"] = vs.intent_id;
  j["intent_text"] = vs.intent_text;
  j["variants"] = vs.variants;
  if (const auto* single = std::get_if<ClassLabel>(&vs.true_label)) {
    j["true_label"] = single->text();
  } else {
    j["true_label"] = std::get<ParameterSet>(vs.true_label);
  }
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : vs.candidates) j["candidates"].push_back(c.text());
  j["task_kind"] = to_string(vs.task_kind);
  return j;
}

VariantSet variant_set_from_json(const nlohmann::json& j) {
  VariantSet vs;
  vs.intent_id = j.at("intent_id").get<std::string>();
  vs.intent_text = j.at("intent_text").get<std::string>();
  vs.variants = dedup_variants(j.at("variants").get<std::vector<std::string>>());
  vs.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
  const auto& label = j.at("true_label");
  if (label.is_array()) {
    vs.true_label = label.get<ParameterSet>();
  } else {
    vs.true_label = ClassLabel(label.get<std::string>());
  }
  for (const auto& c : j.at("candidates")) {
    vs.candidates.insert(ClassLabel(c.get<std::string>()));
  }
  vs.extra = nlohmann::json::object();
  for (const auto& [key, value] : j.items()) {
    if (!kVariantSetFields.contains(key)) vs.extra[key] = value;
  }
  return vs;
}

}  // namespace quorum
