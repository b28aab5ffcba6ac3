#include "commands.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>

#include <json.hpp>

#include "quorum/assessment.hpp"
#include "quorum/backends.hpp"
#include "quorum/dataset.hpp"
#include "quorum/errors.hpp"
#include "quorum/simulator.hpp"
#include "quorum/voting.hpp"

namespace quorum::cli {

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TransportError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const Error& e) {  // dataset, domain, stats, calibration
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string resolve_timestamp(const std::string& requested) {
  return requested == "now" ? iso_now() : requested;
}

// Shortest round-trip rendering; locale-free and platform-stable.
std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string sanitize_filename(const std::string& name) {
  std::string out;
  for (char ch : name) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '-' || ch == '_';
    out += ok ? ch : '_';
  }
  return out.empty() ? "_" : out;
}

struct BackendBundle {
  std::unique_ptr<backends::ClassifierBackend> backend;
  backends::TemplateStore templates;
  std::string endpoint_template_id;
  std::string parameter_template_id;
};

simulator::IntentModel sim_intent_for(const nlohmann::json& entry,
                                      const VariantSet& vs) {
  const auto* single = std::get_if<ClassLabel>(&vs.true_label);
  if (single == nullptr) {
    throw ConfigError("simulator backend supports endpoint tasks only (intent " +
                      vs.intent_id + " is a parameter task)");
  }
  std::map<ClassLabel, double> confusion;
  if (entry.contains("confusion")) {
    for (const auto& [label, weight] : entry.at("confusion").items()) {
      confusion.emplace(ClassLabel(label), weight.get<double>());
    }
  } else {
    confusion = simulator::uniform_confusion(*single, vs.candidates);
  }
  std::vector<double> difficulty;
  if (entry.contains("variant_difficulty")) {
    difficulty = entry.at("variant_difficulty").get<std::vector<double>>();
  } else {
    difficulty.assign(vs.variants.size(), 0.0);
  }
  return simulator::IntentModel{*single, entry.at("theta").get<double>(),
                                std::move(confusion), std::move(difficulty)};
}

BackendBundle build_backend(const nlohmann::json& config,
                            const std::vector<VariantSet>& datasets,
                            std::optional<std::uint64_t> seed_override) {
  BackendBundle bundle;
  if (config.contains("templates")) {
    for (const auto& [id, path] : config.at("templates").items()) {
      bundle.templates.load_file(id, path.get<std::string>());
    }
  }
  bundle.endpoint_template_id = config.value("endpoint_template_id", "");
  bundle.parameter_template_id = config.value("parameter_template_id", "");

  const std::string type = config.value("type", "");
  if (type == "mock") {
    auto mock = std::make_unique<backends::MockBackend>(
        config.value("name", std::string("scripted")));
    if (config.contains("responses")) {
      for (const auto& [question, response] : config.at("responses").items()) {
        mock->script(question, response.get<std::string>());
      }
    }
    if (config.contains("failures")) {
      for (const auto& q : config.at("failures")) {
        mock->script_failure(q.get<std::string>());
      }
    }
    if (config.contains("default_response")) {
      mock->set_default_response(config.at("default_response").get<std::string>());
    }
    bundle.backend = std::move(mock);
  } else if (type == "simulator") {
    if (config.contains("rng") &&
        config.at("rng").get<std::string>() != "splitmix64") {
      throw ConfigError("simulator backend: unsupported rng (this build uses "
                        "splitmix64)");
    }
    const std::uint64_t seed =
        seed_override.value_or(config.value("seed", std::uint64_t{0}));
    auto sim = std::make_unique<simulator::SimulatorBackend>(seed);
    std::map<std::string, const nlohmann::json*> by_id;
    if (config.contains("intents")) {
      for (const auto& entry : config.at("intents")) {
        by_id[entry.at("intent_id").get<std::string>()] = &entry;
      }
    }
    for (const auto& vs : datasets) {
      auto it = by_id.find(vs.intent_id);
      if (it == by_id.end()) {
        throw ConfigError("simulator backend: no intent config for " +
                          vs.intent_id);
      }
      sim->bind_intent(vs.intent_id, sim_intent_for(*it->second, vs),
                       vs.variants);
    }
    bundle.backend = std::move(sim);
  } else if (type == "openai") {
    backends::WireConfig wire;
    wire.base_url = config.value("base_url", "");
    wire.model = config.value("model", "");
    wire.path = config.value("path", wire.path);
    wire.api_key_env = config.value("api_key_env", wire.api_key_env);
    wire.timeout_ms = config.value("timeout_ms", wire.timeout_ms);
    wire.max_retries = config.value("max_retries", wire.max_retries);
    wire.backoff_base_ms = config.value("backoff_base_ms", wire.backoff_base_ms);
    bundle.backend = std::make_unique<backends::WireBackend>(wire);
  } else {
    throw ConfigError("backend config: unknown type '" + type +
                      "' (expected mock, simulator, or openai)");
  }
  return bundle;
}

}  // namespace

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", fraction * 100.0);
  return buf;
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto datasets = dataset::load_variant_sets(args.dataset_path);
    const auto config = parse_json_file(args.backend_config_path);
    auto bundle = build_backend(config, datasets, args.seed);
    const std::string timestamp = resolve_timestamp(args.timestamp);

    dataset::RunWriter writer(args.out_path, /*truncate=*/true);
    long total_outputs = 0;
    long backend_failures = 0;
    int ties = 0;
    for (const auto& vs : datasets) {
      backends::EnsembleOptions options;
      options.parallelism = args.parallelism;
      options.template_id = vs.task_kind == TaskKind::Endpoint
                                ? bundle.endpoint_template_id
                                : bundle.parameter_template_id;
      const auto outputs =
          ensemble_classify(*bundle.backend, vs, bundle.templates, options);
      const auto result =
          voting::summarize(vs.intent_id, outputs,
                            static_cast<int>(vs.variants.size()),
                            vs.true_label_key());

      dataset::RunRecord record;
      record.intent_id = vs.intent_id;
      record.backend_identity = bundle.backend->identity();
      record.template_id = options.template_id.empty()
                               ? backends::TemplateStore::default_id(vs.task_kind)
                               : options.template_id;
      record.task_kind = vs.task_kind;
      record.true_label = vs.true_label;
      record.outputs = outputs;
      record.ensemble = result;
      record.timestamp = timestamp;
      writer.write(record);

      for (const auto& o : outputs) {
        ++total_outputs;
        if (const auto* a = std::get_if<Abstention>(&o.answer)) {
          if (a->reason == AbstainReason::BackendError) ++backend_failures;
        }
      }
      if (result.tie_broken) ++ties;

      out << vs.intent_id << "  prediction=" << result.prediction.value_or("-")
          << "  ensemble_accuracy=" << format_percent(result.ensemble_accuracy.value())
          << "%  true_label_accuracy="
          << format_percent(result.true_label_accuracy.value())
          << "%  abstained=" << result.n_abstained << "/" << result.n_total;
      if (result.tie_broken) {
        out << "  [tie broken to lexicographically smallest]";
      }
      out << "\n";
    }
    out << "wrote " << datasets.size() << " run record(s) to " << args.out_path
        << "\n";
    if (ties > 0) {
      out << "note: " << ties
          << " prediction(s) involved a tie; the lexicographically smallest "
             "label was chosen\n";
    }
    if (total_outputs > 0 && backend_failures == total_outputs) {
      err << "error: backend unreachable: every variant classification failed "
             "with a transport error\n";
      return kExitBackend;
    }
    if (backend_failures > 0) {
      out << "note: " << backend_failures << "/" << total_outputs
          << " classifications abstained on backend errors\n";
    }
    return kExitOk;
  });
}

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    const auto run = dataset::load_run(args.run_path);
    std::vector<assessment::LabeledResult> labeled;
    labeled.reserve(run.records.size());
    for (const auto& record : run.records) {
      labeled.emplace_back(record.ensemble, record.true_label_key());
    }
    assessment::CalibrateOptions options;
    options.per_class = args.per_class;
    options.timestamp = resolve_timestamp(args.timestamp);
    assessment::CalibrationModel model;
    try {
      model = assessment::calibrate(labeled, options);
    } catch (const CalibrationError& e) {
      err << "error: " << e.what() << "\n"
          << "hint: calibration needs both correctly and incorrectly "
             "predicted questions; extend the labeled run\n";
      return kExitData;
    }
    dataset::save_calibration(args.out_path, model);
    out << "calibrated " << model.provenance.n_results
        << " result(s): correct=" << model.correct_samples.size()
        << " incorrect=" << model.incorrect_samples.size() << "\n";
    out << "KS: D=" << format_double(model.ks.statistic)
        << " p=" << format_double(model.ks.p_value)
        << " method=" << stats::to_string(model.ks.method) << "\n";
    for (const auto& w : model.warnings) err << "warning: " << w << "\n";
    out << "wrote calibration snapshot to " << args.out_path << "\n";
    return kExitOk;
  });
}

namespace {

void print_assessment(std::ostream& out, const std::string& label,
                      const assessment::Assessment& a) {
  if (!label.empty()) out << label << "  ";
  out << "u_new=" << format_percent(a.u_new)
      << "%  p_low_correct=" << format_percent(a.p_low_given_correct)
      << "%  p_high_incorrect=" << format_percent(a.p_high_given_incorrect)
      << "%  verdict=" << assessment::to_string(a.verdict) << "  # "
      << assessment::verdict_prose(a.verdict);
  if (a.used_per_class) out << " (per-class distributions)";
  out << "\n";
}

}  // namespace

int cmd_assess(const AssessArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.u_new.has_value() == !args.run_path.empty()) {
      throw ConfigError("assess: provide exactly one of --u or --run");
    }
    if (args.u_new && !(*args.u_new >= 0.0 && *args.u_new <= 1.0)) {
      throw ConfigError("assess: --u must lie in [0, 1]");
    }
    const auto loaded = dataset::load_calibration(args.calibration_path);
    for (const auto& w : loaded.warnings) err << "warning: " << w << "\n";

    if (args.u_new) {
      const auto a = assess(loaded.model, *args.u_new, args.class_hint);
      print_assessment(out, "", a);
      for (const auto& w : a.warnings) err << "warning: " << w << "\n";
      return kExitOk;
    }

    const auto run = dataset::load_run(args.run_path);
    for (const auto& record : run.records) {
      const std::optional<std::string> hint =
          args.class_hint ? args.class_hint : record.ensemble.prediction;
      const auto a = assess(loaded.model,
                            record.ensemble.ensemble_accuracy.value(), hint);
      print_assessment(out, record.intent_id, a);
      for (const auto& w : a.warnings) {
        err << "warning: " << record.intent_id << ": " << w << "\n";
      }
    }
    return kExitOk;
  });
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto run = dataset::load_run(args.run_path);
    std::filesystem::create_directories(args.out_dir);

    std::ofstream index(std::filesystem::path(args.out_dir) / "index.csv",
                        std::ios::binary | std::ios::trunc);
    if (!index) throw DatasetError("cannot write report index");
    index << "intent_id,prediction,ensemble_accuracy_pct,true_label_accuracy_pct,"
             "n_abstained,tie_broken\n";

    for (const auto& record : run.records) {
      const std::string base = sanitize_filename(record.intent_id);
      const auto votes_path =
          std::filesystem::path(args.out_dir) / (base + "_votes.csv");
      std::ofstream votes(votes_path, std::ios::binary | std::ios::trunc);
      if (!votes) throw DatasetError("cannot write " + votes_path.string());
      votes << "category,count,is_true_label\n";
      // Chart order: descending count, then label, so the bar chart reads
      // left to right.
      std::vector<std::pair<std::string, int>> rows(record.ensemble.tally.begin(),
                                                    record.ensemble.tally.end());
      std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      const std::string true_key = record.true_label_key();
      for (const auto& [category, count] : rows) {
        votes << csv_escape(category) << "," << count << ","
              << (category == true_key ? "true" : "false") << "\n";
      }
      if (record.ensemble.n_abstained > 0) {
        votes << "__abstain__," << record.ensemble.n_abstained << ",false\n";
      }

      const auto reasons_path =
          std::filesystem::path(args.out_dir) / (base + "_reasons.csv");
      std::ofstream reasons(reasons_path, std::ios::binary | std::ios::trunc);
      if (!reasons) throw DatasetError("cannot write " + reasons_path.string());
      reasons << "variant_index,reason_length\n";
      for (const auto& o : record.outputs) {
        reasons << o.variant_index << "," << o.reason_text.size() << "\n";
      }

      index << csv_escape(record.intent_id) << ","
            << csv_escape(record.ensemble.prediction.value_or("")) << ","
            << format_percent(record.ensemble.ensemble_accuracy.value()) << ","
            << format_percent(record.ensemble.true_label_accuracy.value()) << ","
            << record.ensemble.n_abstained << ","
            << (record.ensemble.tie_broken ? "true" : "false") << "\n";
    }
    out << "wrote report CSVs for " << run.records.size() << " question(s) to "
        << args.out_dir << "\n";
    return kExitOk;
  });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = simulator::sim_config_from_json(parse_json_file(args.config_path));
    if (args.seed) cfg.seed = *args.seed;

    if (!args.thetas.empty() && !args.corpus_prefix.empty()) {
      throw ConfigError("simulate: choose one of --thetas or --make-corpus");
    }

    if (!args.thetas.empty()) {
      const auto rows = simulator::hypothesis_sweep(cfg, args.thetas);
      std::string csv = "theta,mean_ensemble_accuracy,true_label_share_variance\n";
      for (const auto& row : rows) {
        csv += format_double(row.theta) + "," +
               format_double(row.mean_ensemble_accuracy) + "," +
               format_double(row.true_share_variance) + "\n";
      }
      out << csv;
      if (!args.out_path.empty()) {
        std::ofstream file(args.out_path, std::ios::binary | std::ios::trunc);
        if (!file) throw DatasetError("cannot write " + args.out_path);
        file << csv;
      }
      return kExitOk;
    }

    if (!args.corpus_prefix.empty()) {
      const auto corpus = simulator::make_calibration_corpus(cfg);
      std::vector<VariantSet> sets;
      sets.reserve(corpus.size());
      for (const auto& entry : corpus) sets.push_back(entry.variant_set);
      const std::string variants_path = args.corpus_prefix + ".variants.jsonl";
      dataset::save_variant_sets(variants_path, sets);

      nlohmann::json backend_config = sim_config_to_json(cfg);
      backend_config.erase("schema");
      backend_config.erase("trials");
      backend_config["type"] = "simulator";
      const std::string backend_path = args.corpus_prefix + ".backend.json";
      std::ofstream file(backend_path, std::ios::binary | std::ios::trunc);
      if (!file) throw DatasetError("cannot write " + backend_path);
      file << backend_config.dump(2) << "\n";

      out << "wrote " << sets.size() << " synthetic variant set(s) to "
          << variants_path << "\n"
          << "wrote simulator backend config to " << backend_path << "\n";
      return kExitOk;
    }

    throw ConfigError("simulate: provide --thetas for a sweep or --make-corpus "
                      "for a synthetic corpus");
  });
}

}  // namespace quorum::cli
