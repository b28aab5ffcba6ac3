#include "quorum/dataset.hpp"

#include <algorithm>
#include <sstream>

#include "quorum/errors.hpp"
#include "quorum/voting.hpp"

namespace quorum::dataset {

namespace {

std::string line_context(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no) + ": ";
}

// Splits file content into lines, tolerating CRLF and a missing final
// newline. Blank lines are skipped by callers.
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

const std::set<std::string> kRunRecordFields = {
    "schema",    "intent_id", "backend",  "template_id", "task_kind",
    "true_label", "outputs",  "ensemble", "timestamp"};

const std::set<std::string> kCalibrationFields = {
    "schema",    "correct",          "incorrect",  "ks",
    "per_class_enabled", "per_class", "config",     "provenance",
    "warnings"};

nlohmann::json certainty_array(std::span<const Certainty> samples) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : samples) arr.push_back(s);
  return arr;
}

std::vector<Certainty> certainty_vector(const nlohmann::json& arr) {
  std::vector<Certainty> samples = arr.get<std::vector<Certainty>>();
  std::sort(samples.begin(), samples.end(), certainty_less);
  return samples;
}

}  // namespace

nlohmann::json run_record_to_json(const RunRecord& record) {
  nlohmann::json j =
      record.extra.is_object() ? record.extra : nlohmann::json::object();
  j["schema"] = kRunRecordSchema;
  j["intent_id"] = record.intent_id;
  j["backend"] = record.backend_identity;
  j["template_id"] = record.template_id;
  j["task_kind"] = to_string(record.task_kind);
  if (const auto* single = std::get_if<ClassLabel>(&record.true_label)) {
    j["true_label"] = single->text();
  } else {
    j["true_label"] = std::get<ParameterSet>(record.true_label);
  }
  j["outputs"] = record.outputs;
  j["ensemble"] = record.ensemble;
  if (!record.timestamp.empty()) j["timestamp"] = record.timestamp;
  return j;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != std::string(kRunRecordSchema)) {
    throw DatasetError("unknown or missing schema (expected " +
                       std::string(kRunRecordSchema) + ")");
  }
  RunRecord record;
  record.intent_id = j.at("intent_id").get<std::string>();
  record.backend_identity = j.at("backend").get<std::string>();
  record.template_id = j.at("template_id").get<std::string>();
  record.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
  const auto& label = j.at("true_label");
  if (label.is_array()) {
    record.true_label = label.get<ParameterSet>();
  } else {
    record.true_label = ClassLabel(label.get<std::string>());
  }
  record.outputs = j.at("outputs").get<std::vector<ClassifierOutput>>();
  record.ensemble = j.at("ensemble").get<EnsembleResult>();
  record.timestamp = j.value("timestamp", "");
  record.extra = nlohmann::json::object();
  for (const auto& [key, value] : j.items()) {
    if (!kRunRecordFields.contains(key)) record.extra[key] = value;
  }
  return record;
}

std::vector<VariantSet> load_variant_sets(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<VariantSet> sets;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::size_t line_no = i + 1;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(line_context(path, line_no) +
                         "malformed record: " + e.what());
    }
    if (j.value("schema", "") != std::string(kVariantSetSchema)) {
      throw DatasetError(line_context(path, line_no) +
                         "unknown or missing schema (expected " +
                         std::string(kVariantSetSchema) + ")");
    }
    VariantSet vs;
    try {
      j.erase("schema");
      vs = variant_set_from_json(j);
    } catch (const std::exception& e) {
      throw DatasetError(line_context(path, line_no) +
                         "malformed record: " + e.what());
    }
    const auto violations = validate_variant_set(vs);
    if (!violations.empty()) {
      std::string msg = line_context(path, line_no) + "invalid variant set: ";
      for (std::size_t k = 0; k < violations.size(); ++k) {
        if (k > 0) msg += "; ";
        msg += violations[k];
      }
      throw DatasetError(msg);
    }
    sets.push_back(std::move(vs));
  }
  return sets;
}

void save_variant_sets(const std::string& path,
                       std::span<const VariantSet> sets) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open file for writing: " + path);
  for (const auto& vs : sets) {
    nlohmann::json j = variant_set_to_json(vs);
    j["schema"] = kVariantSetSchema;
    out << j.dump() << '\n';
  }
  if (!out) throw DatasetError("write failure: " + path);
}

RunFile load_run(const std::string& path, const LoadRunOptions& options) {
  const auto lines = read_lines(path);
  std::size_t last_content = lines.size();
  while (last_content > 0 && trim(lines[last_content - 1]).empty()) {
    --last_content;
  }
  RunFile file;
  for (std::size_t i = 0; i < last_content; ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::size_t line_no = i + 1;
    const bool is_final = i + 1 == last_content;
    try {
      file.records.push_back(
          run_record_from_json(nlohmann::json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (is_final && options.allow_truncated_tail) {
        file.warnings.push_back(line_context(path, line_no) +
                                "dropped truncated final record");
        break;
      }
      if (is_final) {
        throw DatasetError(line_context(path, line_no) +
                           "truncated or malformed final record (" + e.what() +
                           "); earlier records are intact");
      }
      throw DatasetError(line_context(path, line_no) + "malformed record: " +
                         e.what());
    }
  }
  return file;
}

void save_run(const std::string& path, std::span<const RunRecord> records) {
  RunWriter writer(path, /*truncate=*/true);
  for (const auto& record : records) writer.write(record);
}

RunWriter::RunWriter(const std::string& path, bool truncate)
    : path_(path),
      out_(path, std::ios::binary |
                     (truncate ? std::ios::trunc : std::ios::app)) {
  if (!out_) throw DatasetError("cannot open file for writing: " + path);
}

void RunWriter::write(const RunRecord& record) {
  out_ << run_record_to_json(record).dump() << '\n';
  out_.flush();
  if (!out_) throw DatasetError("write failure: " + path_);
}

void save_calibration(const std::string& path,
                      const assessment::CalibrationModel& model) {
  nlohmann::json j;
  j["schema"] = kCalibrationSchema;
  j["correct"] = {{"samples", certainty_array(model.correct_samples)}};
  j["incorrect"] = {{"samples", certainty_array(model.incorrect_samples)}};
  j["ks"] = {{"statistic", model.ks.statistic},
             {"p_value", model.ks.p_value},
             {"method", stats::to_string(model.ks.method)},
             {"n1", model.ks.n1},
             {"n2", model.ks.n2}};
  j["per_class_enabled"] = model.per_class_enabled;
  if (model.per_class_enabled) {
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [key, sides] : model.per_class) {
      per_class[key] = {{"correct", certainty_array(sides.correct)},
                        {"incorrect", certainty_array(sides.incorrect)}};
    }
    j["per_class"] = per_class;
  }
  j["config"] = {{"small_sample_threshold", model.small_sample_threshold},
                 {"per_class_min_samples", model.per_class_min_samples}};
  j["provenance"] = {{"n_results", model.provenance.n_results},
                     {"n_excluded_abstain", model.provenance.n_excluded_abstain},
                     {"created", model.provenance.created}};
  j["warnings"] = model.warnings;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open file for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DatasetError("write failure: " + path);
}

LoadedCalibration load_calibration(const std::string& path,
                                   const LoadCalibrationOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(path + ": corrupted payload: " + e.what());
  }
  if (j.value("schema", "") != std::string(kCalibrationSchema)) {
    throw DatasetError(path + ": unknown or missing schema (expected " +
                       std::string(kCalibrationSchema) + ")");
  }

  LoadedCalibration loaded;
  auto& model = loaded.model;
  try {
    model.correct_samples = certainty_vector(j.at("correct").at("samples"));
    model.incorrect_samples = certainty_vector(j.at("incorrect").at("samples"));
    model.ks.statistic = j.at("ks").at("statistic").get<double>();
    model.ks.p_value = j.at("ks").at("p_value").get<double>();
    model.ks.method =
        stats::ks_method_from_string(j.at("ks").at("method").get<std::string>());
    model.ks.n1 = j.at("ks").at("n1").get<std::size_t>();
    model.ks.n2 = j.at("ks").at("n2").get<std::size_t>();
    model.per_class_enabled = j.value("per_class_enabled", false);
    if (j.contains("per_class")) {
      if (options.allow_per_class) {
        for (const auto& [key, sides] : j.at("per_class").items()) {
          assessment::ClassSamples cls;
          cls.correct = certainty_vector(sides.at("correct"));
          cls.incorrect = certainty_vector(sides.at("incorrect"));
          model.per_class.emplace(key, std::move(cls));
        }
      } else {
        model.per_class_enabled = false;
        loaded.warnings.push_back(
            "per-class distributions present in snapshot but disabled; "
            "loaded global-only");
      }
    }
    const auto& config = j.at("config");
    model.small_sample_threshold =
        config.at("small_sample_threshold").get<std::size_t>();
    model.per_class_min_samples =
        config.at("per_class_min_samples").get<std::size_t>();
    const auto& provenance = j.at("provenance");
    model.provenance.n_results = provenance.at("n_results").get<std::int64_t>();
    model.provenance.n_excluded_abstain =
        provenance.at("n_excluded_abstain").get<std::int64_t>();
    model.provenance.created = provenance.value("created", "");
    model.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(path + ": corrupted payload: " + e.what());
  }

  // Recompute-on-load check: the stored report must match the samples.
  const auto recomputed =
      stats::ks_2samp(model.correct_dist(), model.incorrect_dist());
  if (!(recomputed == model.ks)) {
    throw DatasetError(path + ": corrupted payload: stored KS report does not "
                       "match the stored samples");
  }
  return loaded;
}

GeneratedVariants generate_variants(backends::ClassifierBackend& backend,
                                    const backends::TemplateStore& templates,
                                    const std::string& intent_text, int n) {
  if (n < 1) throw DomainError("generate_variants: n must be >= 1");
  if (!backend.capabilities().free_text) {
    throw ConfigError("backend " + backend.identity() +
                      " does not support free-text generation");
  }
  const std::string prompt = backends::render_variants_prompt(
      templates.text(backends::TemplateStore::kVariantsDefault), intent_text, n);
  // TransportError propagates: no silent fallback for generation failures.
  const std::string raw = backend.complete({prompt, intent_text, nullptr});

  std::vector<std::string> lines;
  std::istringstream stream(raw);
  std::string line;
  while (std::getline(stream, line)) {
    const std::string cleaned = trim(line);
    if (!cleaned.empty()) lines.push_back(cleaned);
  }
  std::vector<std::string> unique = dedup_variants(lines);
  if (static_cast<int>(unique.size()) > n) {
    unique.resize(static_cast<std::size_t>(n));
  }
  return {std::move(unique), n};
}

}  // namespace quorum::dataset
