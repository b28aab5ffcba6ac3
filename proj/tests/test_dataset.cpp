#include <doctest.h>

#include <json.hpp>

#include "fixtures.hpp"
#include "quorum/dataset.hpp"
#include "quorum/simulator.hpp"
#include "quorum/voting.hpp"

using namespace quorum;
using namespace quorum::dataset;

namespace {

nlohmann::json supplier_record() {
  nlohmann::json j;
  j["schema"] = kVariantSetSchema;
  j["intent_id"] = "q-suppliers";
  j["intent_text"] = fixtures::kSupplierIntent;
  j["variants"] = fixtures::kSupplierVariants;
  j["true_label"] = "/contact_balances";
  j["candidates"] = {"/contact_balances", "/sales_invoices", "/stock_items"};
  j["task_kind"] = "endpoint";
  return j;
}

// A small deterministic run: two simulated intents.
std::vector<RunRecord> sample_run() {
  simulator::SimConfig cfg;
  cfg.seed = 321;
  cfg.n_variants = 15;
  const std::set<ClassLabel> candidates = {
      ClassLabel("/right"), ClassLabel("/wrong_a"), ClassLabel("/wrong_b")};
  cfg.intents.push_back(
      {"run-000",
       simulator::IntentModel{
           ClassLabel("/right"), 0.9,
           simulator::uniform_confusion(ClassLabel("/right"), candidates),
           std::vector<double>(15, 0.0)}});
  cfg.intents.push_back(
      {"run-001",
       simulator::IntentModel{
           ClassLabel("/right"), 0.3,
           simulator::uniform_confusion(ClassLabel("/right"), candidates),
           std::vector<double>(15, 0.0)}});
  auto corpus = simulator::make_calibration_corpus(cfg);
  backends::TemplateStore templates;
  std::vector<RunRecord> records;
  for (auto& entry : corpus) {
    RunRecord record;
    record.intent_id = entry.variant_set.intent_id;
    record.backend_identity = entry.backend->identity();
    record.template_id = backends::TemplateStore::kEndpointDefault;
    record.task_kind = entry.variant_set.task_kind;
    record.true_label = entry.variant_set.true_label;
    record.outputs =
        ensemble_classify(*entry.backend, entry.variant_set, templates);
    record.ensemble =
        voting::summarize(record.intent_id, record.outputs, 15,
                          entry.variant_set.true_label_key());
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

TEST_CASE("a supplier-payment variant set loads from jsonl") {
  fixtures::TempDir dir("variants");
  const std::string path = dir.file("sets.jsonl");
  fixtures::write_file(path, supplier_record().dump() + "\n");
  const auto sets = load_variant_sets(path);
  REQUIRE(sets.size() == 1);
  CHECK(sets[0].intent_id == "q-suppliers");
  CHECK(sets[0].variants.size() == 15);
  CHECK(sets[0].variants == fixtures::kSupplierVariants);
  CHECK(sets[0].true_label_key() == "/contact_balances");
  CHECK(sets[0].task_kind == TaskKind::Endpoint);
}

TEST_CASE("an empty variants file is an empty sequence") {
  fixtures::TempDir dir("empty");
  const std::string path = dir.file("sets.jsonl");
  fixtures::write_file(path, "");
  CHECK(load_variant_sets(path).empty());
  // Blank lines and CRLF endings are tolerated.
  fixtures::write_file(path, "\r\n\n");
  CHECK(load_variant_sets(path).empty());
}

TEST_CASE("a label outside the candidate pool names its line") {
  fixtures::TempDir dir("badlabel");
  auto bad = supplier_record();
  bad["true_label"] = "/services";
  const std::string path = dir.file("sets.jsonl");
  fixtures::write_file(path, supplier_record().dump() + "\n" + bad.dump() + "\n");
  try {
    load_variant_sets(path);
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    const std::string what = e.what();
    CHECK(what.find(":2:") != std::string::npos);
    CHECK(what.find("label not in candidates") != std::string::npos);
  }
}

TEST_CASE("malformed json and missing schema fail with line context") {
  fixtures::TempDir dir("badjson");
  const std::string path = dir.file("sets.jsonl");
  fixtures::write_file(path, "{ not json\n");
  CHECK_THROWS_AS(load_variant_sets(path), DatasetError);
  fixtures::write_file(path, nlohmann::json{{"intent_id", "x"}}.dump() + "\n");
  CHECK_THROWS_AS(load_variant_sets(path), DatasetError);
  CHECK_THROWS_AS(load_variant_sets(dir.file("missing.jsonl")), DatasetError);
}

TEST_CASE("ingestion dedups exact variant duplicates after trimming") {
  fixtures::TempDir dir("dedup");
  auto record = supplier_record();
  auto variants = fixtures::kSupplierVariants;
  variants.push_back("  " + fixtures::kSupplierVariants[0] + "  ");
  variants.push_back(fixtures::kSupplierVariants[5]);
  record["variants"] = variants;
  const std::string path = dir.file("sets.jsonl");
  fixtures::write_file(path, record.dump() + "\n");
  const auto sets = load_variant_sets(path);
  REQUIRE(sets.size() == 1);
  CHECK(sets[0].variants.size() == 15);  // near-duplicates were exact after trim
}

TEST_CASE("variant set files round-trip through save and load") {
  fixtures::TempDir dir("vsroundtrip");
  const std::string path = dir.file("sets.jsonl");
  fixtures::write_file(path, supplier_record().dump() + "\n");
  auto sets = load_variant_sets(path);
  sets[0].extra["note"] = "kept";
  const std::string out = dir.file("copy.jsonl");
  save_variant_sets(out, sets);
  const auto reloaded = load_variant_sets(out);
  REQUIRE(reloaded.size() == 1);
  CHECK(variant_set_to_json(reloaded[0]) == variant_set_to_json(sets[0]));
  CHECK(reloaded[0].extra.at("note") == "kept");
}

TEST_CASE("run files round-trip losslessly and replay their ensembles") {
  fixtures::TempDir dir("run");
  const auto records = sample_run();
  const std::string path = dir.file("run.jsonl");
  save_run(path, records);
  const auto loaded = load_run(path);
  CHECK(loaded.warnings.empty());
  REQUIRE(loaded.records.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(run_record_to_json(loaded.records[i]) == run_record_to_json(records[i]));
    // Replay invariant: voting over the stored outputs reproduces the
    // stored ensemble result exactly.
    const auto revoted = voting::summarize(
        loaded.records[i].intent_id, loaded.records[i].outputs,
        loaded.records[i].ensemble.n_total, loaded.records[i].true_label_key());
    CHECK(revoted == loaded.records[i].ensemble);
    // Tally invariants hold for every pipeline-produced result.
    const auto& ensemble = loaded.records[i].ensemble;
    int vote_sum = 0;
    for (const auto& [_, count] : ensemble.tally) vote_sum += count;
    CHECK(vote_sum + ensemble.n_abstained == ensemble.n_total);
    REQUIRE(ensemble.prediction.has_value());
    CHECK(ensemble.ensemble_accuracy ==
          Certainty{ensemble.tally.at(*ensemble.prediction), ensemble.n_total});
    CHECK(ensemble.true_label_accuracy.num <= ensemble.ensemble_accuracy.num);
  }
}

TEST_CASE("unknown run-record fields survive a round trip") {
  fixtures::TempDir dir("extra");
  auto records = sample_run();
  records[0].extra["experiment"] = "baseline";
  const std::string path = dir.file("run.jsonl");
  save_run(path, records);
  const auto loaded = load_run(path);
  CHECK(loaded.records[0].extra.at("experiment") == "baseline");
}

TEST_CASE("a truncated final line raises but leaves prior records loadable") {
  fixtures::TempDir dir("trunc");
  const auto records = sample_run();
  const std::string path = dir.file("run.jsonl");
  save_run(path, records);
  // Chop the last line mid-record, as an interrupted append would.
  std::string content = fixtures::read_file(path);
  fixtures::write_file(path, content.substr(0, content.size() - 40));

  try {
    load_run(path);
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("intact") != std::string::npos);
  }
  LoadRunOptions options;
  options.allow_truncated_tail = true;
  const auto recovered = load_run(path, options);
  CHECK(recovered.records.size() == records.size() - 1);
  REQUIRE(recovered.warnings.size() == 1);
  CHECK(recovered.warnings[0].find("truncated") != std::string::npos);
}

TEST_CASE("a malformed middle line is never skipped") {
  fixtures::TempDir dir("middle");
  const auto records = sample_run();
  const std::string path = dir.file("run.jsonl");
  save_run(path, records);
  std::string content = fixtures::read_file(path);
  const auto first_newline = content.find('\n');
  content.insert(first_newline + 1, "{broken\n");
  fixtures::write_file(path, content);
  LoadRunOptions lenient;
  lenient.allow_truncated_tail = true;
  CHECK_THROWS_AS(load_run(path, lenient), DatasetError);
}

TEST_CASE("the run writer appends without rewriting prior records") {
  fixtures::TempDir dir("append");
  const auto records = sample_run();
  const std::string path = dir.file("run.jsonl");
  {
    RunWriter writer(path, /*truncate=*/true);
    writer.write(records[0]);
  }
  {
    RunWriter writer(path, /*truncate=*/false);
    writer.write(records[1]);
  }
  const auto loaded = load_run(path);
  REQUIRE(loaded.records.size() == 2);
  CHECK(loaded.records[0].intent_id == "run-000");
  CHECK(loaded.records[1].intent_id == "run-001");
}

namespace {

assessment::CalibrationModel sample_model(bool per_class = false) {
  std::vector<assessment::LabeledResult> labeled;
  int id = 0;
  for (int votes : {15, 14, 13, 12, 11, 10}) {
    EnsembleResult r;
    r.intent_id = "c" + std::to_string(id++);
    r.n_total = 15;
    r.tally = {{"/a", votes}, {"/b", 15 - votes}};
    r.prediction = "/a";
    r.ensemble_accuracy = Certainty{votes, 15};
    r.true_label_accuracy = Certainty{votes, 15};
    labeled.emplace_back(r, "/a");
  }
  for (int votes : {5, 6, 7, 8, 9}) {
    EnsembleResult r;
    r.intent_id = "i" + std::to_string(id++);
    r.n_total = 15;
    r.tally = {{"/a", votes}, {"/b", 15 - votes}};
    r.prediction = "/a";
    r.ensemble_accuracy = Certainty{votes, 15};
    r.true_label_accuracy = Certainty{0, 15};
    labeled.emplace_back(r, "/z");
  }
  assessment::CalibrateOptions options;
  options.per_class = per_class;
  options.timestamp = "2026-08-09T00:00:00Z";
  return assessment::calibrate(labeled, options);
}

}  // namespace

TEST_CASE("calibration snapshots round-trip to full precision") {
  fixtures::TempDir dir("calib");
  const auto model = sample_model();
  const std::string path = dir.file("calibration.json");
  save_calibration(path, model);
  const auto loaded = load_calibration(path);
  CHECK(loaded.warnings.empty());
  CHECK(loaded.model.correct_samples == model.correct_samples);
  CHECK(loaded.model.incorrect_samples == model.incorrect_samples);
  CHECK(loaded.model.ks == model.ks);
  CHECK(loaded.model.provenance.n_results == model.provenance.n_results);
  CHECK(loaded.model.provenance.created == "2026-08-09T00:00:00Z");
  CHECK(loaded.model.small_sample_threshold == model.small_sample_threshold);
  // The assessment path sees identical distributions.
  const auto before = assess(model, 0.7);
  const auto after = assess(loaded.model, 0.7);
  CHECK(before.p_low_given_correct == after.p_low_given_correct);
  CHECK(before.p_high_given_incorrect == after.p_high_given_incorrect);
}

TEST_CASE("per-class snapshots round-trip and degrade gracefully") {
  fixtures::TempDir dir("perclass");
  const auto model = sample_model(/*per_class=*/true);
  REQUIRE(model.per_class_enabled);
  const std::string path = dir.file("calibration.json");
  save_calibration(path, model);

  const auto loaded = load_calibration(path);
  CHECK(loaded.model.per_class_enabled);
  CHECK(loaded.model.per_class.at("/a").correct ==
        model.per_class.at("/a").correct);

  LoadCalibrationOptions no_per_class;
  no_per_class.allow_per_class = false;
  const auto degraded = load_calibration(path, no_per_class);
  CHECK_FALSE(degraded.model.per_class_enabled);
  CHECK(degraded.model.per_class.empty());
  REQUIRE(degraded.warnings.size() == 1);
  CHECK(degraded.warnings[0].find("global-only") != std::string::npos);
  // Global distributions are untouched by the degrade.
  CHECK(degraded.model.correct_samples == model.correct_samples);
}

TEST_CASE("calibration loading rejects version mismatches and tampering") {
  fixtures::TempDir dir("tamper");
  const auto model = sample_model();
  const std::string path = dir.file("calibration.json");
  save_calibration(path, model);

  auto doc = nlohmann::json::parse(fixtures::read_file(path));
  auto wrong_version = doc;
  wrong_version["schema"] = "calibration.v999";
  fixtures::write_file(path, wrong_version.dump());
  CHECK_THROWS_AS(load_calibration(path), DatasetError);

  auto tampered = doc;
  tampered["ks"]["statistic"] = 0.123;  // no longer matches the samples
  fixtures::write_file(path, tampered.dump());
  try {
    load_calibration(path);
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("KS report") != std::string::npos);
  }

  fixtures::write_file(path, "{");
  CHECK_THROWS_AS(load_calibration(path), DatasetError);
}

TEST_CASE("variant generation dedups and reports shortfalls") {
  backends::MockBackend mock("rephraser");
  backends::TemplateStore templates;

  std::string all;
  for (const auto& v : fixtures::kSupplierVariants) all += v + "\n";
  mock.script(fixtures::kSupplierIntent, all);
  const auto generated =
      generate_variants(mock, templates, fixtures::kSupplierIntent, 15);
  CHECK(generated.requested == 15);
  CHECK(generated.variants.size() == 15);
  CHECK(generated.variants == fixtures::kSupplierVariants);

  // The same line n times collapses to one variant, shortfall visible.
  mock.script("monotone", "same phrasing\nsame phrasing\nsame phrasing\n");
  const auto collapsed = generate_variants(mock, templates, "monotone", 3);
  CHECK(collapsed.variants == std::vector<std::string>{"same phrasing"});
  CHECK(collapsed.requested == 3);

  mock.script("one", "only line\nsecond line\n");
  const auto capped = generate_variants(mock, templates, "one", 1);
  CHECK(capped.variants.size() == 1);
}

TEST_CASE("variant generation propagates backend failures") {
  backends::MockBackend mock;
  mock.script_failure("dead intent");
  backends::TemplateStore templates;
  CHECK_THROWS_AS(generate_variants(mock, templates, "dead intent", 5),
                  TransportError);
  CHECK_THROWS_AS(generate_variants(mock, templates, "x", 0), DomainError);
}

TEST_CASE("free-text-incapable backends are rejected for generation") {
  simulator::SimulatorBackend sim(1);
  backends::TemplateStore templates;
  CHECK_THROWS_AS(generate_variants(sim, templates, "intent", 5), ConfigError);
}
