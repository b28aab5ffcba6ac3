#pragma once

#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "quorum/assessment.hpp"
#include "quorum/backends.hpp"
#include "quorum/domain.hpp"

namespace quorum::dataset {

inline constexpr const char* kVariantSetSchema = "variant_set.v1";
inline constexpr const char* kRunRecordSchema = "run_record.v1";
inline constexpr const char* kCalibrationSchema = "calibration.v1";

// One completed ensemble over one variant set. Replayable: voting over
// `outputs` reproduces `ensemble` exactly.
struct RunRecord {
  std::string intent_id;
  std::string backend_identity;
  std::string template_id;
  TaskKind task_kind = TaskKind::Endpoint;
  TrueLabel true_label;
  std::vector<ClassifierOutput> outputs;
  EnsembleResult ensemble;
  std::string timestamp;  // ISO-8601; empty = unstamped (deterministic files)
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, preserved

  std::string true_label_key() const { return vote_key(true_label); }
};

nlohmann::json run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

// --- Variant set files (JSONL, one set per line) ---

// Validates every record via validate_variant_set and hard-fails on the
// first malformed line, naming the line number. Variants are trimmed and
// exact duplicates dropped at ingestion.
std::vector<VariantSet> load_variant_sets(const std::string& path);

void save_variant_sets(const std::string& path,
                       std::span<const VariantSet> sets);

// --- Run files (JSONL, one record per line, append-safe) ---

struct LoadRunOptions {
  // When true, a final line that fails to parse (interrupted append) is
  // dropped with a warning instead of raising; earlier records are kept.
  bool allow_truncated_tail = false;
};

struct RunFile {
  std::vector<RunRecord> records;
  std::vector<std::string> warnings;
};

RunFile load_run(const std::string& path, const LoadRunOptions& options = {});

// Truncates and writes all records.
void save_run(const std::string& path, std::span<const RunRecord> records);

// Incremental writer: appends one record per line, flushing each line so an
// interrupted run loses at most its final line.
class RunWriter {
 public:
  explicit RunWriter(const std::string& path, bool truncate = false);

  void write(const RunRecord& record);

 private:
  std::string path_;
  std::ofstream out_;
};

// --- Calibration snapshots (single versioned JSON document) ---

// Stores the raw sorted rational samples (never binned summaries) plus the
// KS report and provenance, so the ECDFs rebuild exactly.
void save_calibration(const std::string& path,
                      const assessment::CalibrationModel& model);

struct LoadCalibrationOptions {
  // When false, per-class sample maps in the snapshot are dropped with a
  // warning and the model degrades to global-only.
  bool allow_per_class = true;
};

struct LoadedCalibration {
  assessment::CalibrationModel model;
  std::vector<std::string> warnings;
};

// Rebuilds the model and recomputes the KS report from the stored samples;
// a mismatch with the stored report means a corrupted or edited payload and
// raises DatasetError.
LoadedCalibration load_calibration(const std::string& path,
                                   const LoadCalibrationOptions& options = {});

// --- Variant generation ---

struct GeneratedVariants {
  std::vector<std::string> variants;  // trimmed, deduplicated, at most `requested`
  int requested = 0;
};

// Asks a free-text-capable backend to rephrase `intent_text` n ways (one per
// line). Exact duplicates are removed; the returned count may fall short of
// n. Backend failures propagate as TransportError: variant generation has no
// silent fallback.
GeneratedVariants generate_variants(backends::ClassifierBackend& backend,
                                    const backends::TemplateStore& templates,
                                    const std::string& intent_text, int n);

}  // namespace quorum::dataset
