#include "quorum/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "quorum/errors.hpp"

namespace quorum::simulator {

void IntentModel::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw DomainError("theta outside [0, 1]: " + std::to_string(theta));
  }
  for (double eps : variant_difficulty) {
    if (!(eps >= 0.0 && eps <= 1.0)) {
      throw DomainError("variant difficulty outside [0, 1]: " +
                        std::to_string(eps));
    }
  }
  if (confusion.contains(true_label)) {
    throw DomainError("confusion must exclude the true label: " +
                      true_label.text());
  }
  if (confusion.empty()) {
    throw DomainError("confusion is empty; at least one wrong candidate needed");
  }
  double sum = 0.0;
  for (const auto& [label, weight] : confusion) {
    if (weight < 0.0) {
      throw DomainError("negative confusion weight for " + label.text());
    }
    sum += weight;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw DomainError("confusion weights sum to " + std::to_string(sum) +
                      ", expected 1");
  }
}

std::map<ClassLabel, double> uniform_confusion(
    const ClassLabel& true_label, const std::set<ClassLabel>& candidates) {
  std::vector<ClassLabel> wrong;
  for (const auto& c : candidates) {
    if (!(c == true_label)) wrong.push_back(c);
  }
  if (wrong.empty()) {
    throw DomainError("uniform confusion needs at least one wrong candidate");
  }
  std::map<ClassLabel, double> confusion;
  // Last weight takes the residual so the sum is exactly 1.
  double assigned = 0.0;
  for (std::size_t i = 0; i + 1 < wrong.size(); ++i) {
    const double w = 1.0 / static_cast<double>(wrong.size());
    confusion.emplace(wrong[i], w);
    assigned += w;
  }
  confusion.emplace(wrong.back(), 1.0 - assigned);
  return confusion;
}

void SimConfig::validate() const {
  if (n_variants < 1) throw DomainError("n_variants must be >= 1");
  if (trials < 1) throw DomainError("trials must be >= 1");
  if (intents.empty()) throw DomainError("sim config has no intents");
  std::set<std::string> ids;
  for (const auto& intent : intents) {
    if (intent.intent_id.empty()) throw DomainError("intent_id is empty");
    if (!ids.insert(intent.intent_id).second) {
      throw DomainError("duplicate intent_id: " + intent.intent_id);
    }
    intent.model.validate();
    if (intent.model.variant_difficulty.size() !=
        static_cast<std::size_t>(n_variants)) {
      throw DomainError("intent " + intent.intent_id + " has " +
                        std::to_string(intent.model.variant_difficulty.size()) +
                        " difficulty entries for n_variants=" +
                        std::to_string(n_variants));
    }
  }
}

nlohmann::json sim_config_to_json(const SimConfig& cfg) {
  nlohmann::json j;
  j["schema"] = "sim_config.v1";
  j["rng"] = "splitmix64";
  j["seed"] = cfg.seed;
  j["n_variants"] = cfg.n_variants;
  j["trials"] = cfg.trials;
  j["intents"] = nlohmann::json::array();
  for (const auto& intent : cfg.intents) {
    nlohmann::json ji;
    ji["intent_id"] = intent.intent_id;
    ji["true_label"] = intent.model.true_label.text();
    ji["theta"] = intent.model.theta;
    nlohmann::json confusion = nlohmann::json::object();
    for (const auto& [label, weight] : intent.model.confusion) {
      confusion[label.text()] = weight;
    }
    ji["confusion"] = confusion;
    ji["variant_difficulty"] = intent.model.variant_difficulty;
    j["intents"].push_back(std::move(ji));
  }
  return j;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != std::string("sim_config.v1")) {
    throw ConfigError("sim config: unknown or missing schema (expected "
                      "sim_config.v1)");
  }
  if (j.contains("rng") && j.at("rng").get<std::string>() != "splitmix64") {
    throw ConfigError("sim config: unsupported rng '" +
                      j.at("rng").get<std::string>() + "' (this build uses "
                      "splitmix64)");
  }
  SimConfig cfg;
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.n_variants = j.value("n_variants", kDefaultVariantCount);
  cfg.trials = j.value("trials", 1);
  for (const auto& ji : j.at("intents")) {
    const std::string intent_id = ji.at("intent_id").get<std::string>();
    ClassLabel true_label(ji.at("true_label").get<std::string>());
    std::map<ClassLabel, double> confusion;
    if (ji.contains("confusion")) {
      for (const auto& [label, weight] : ji.at("confusion").items()) {
        confusion.emplace(ClassLabel(label), weight.get<double>());
      }
    } else if (ji.contains("candidates")) {
      std::set<ClassLabel> candidates;
      for (const auto& c : ji.at("candidates")) {
        candidates.insert(ClassLabel(c.get<std::string>()));
      }
      confusion = uniform_confusion(true_label, candidates);
    } else {
      throw ConfigError("intent " + intent_id +
                        ": need either confusion or candidates");
    }
    std::vector<double> difficulty;
    if (ji.contains("variant_difficulty")) {
      difficulty = ji.at("variant_difficulty").get<std::vector<double>>();
    } else {
      difficulty.assign(cfg.n_variants, 0.0);
    }
    cfg.intents.push_back(
        SimIntent{intent_id,
                  IntentModel{std::move(true_label), ji.at("theta").get<double>(),
                              std::move(confusion), std::move(difficulty)}});
  }
  cfg.validate();
  return cfg;
}

ClassLabel sim_classify(const IntentModel& m, std::size_t variant_index,
                        SplitMix64& rng) {
  if (variant_index >= m.variant_difficulty.size()) {
    throw DomainError("variant index " + std::to_string(variant_index) +
                      " outside difficulty vector of size " +
                      std::to_string(m.variant_difficulty.size()));
  }
  const double p = m.theta * (1.0 - m.variant_difficulty[variant_index]);
  const double u = rng.next_double();
  const double v = rng.next_double();
  if (u < p) return m.true_label;
  double cum = 0.0;
  for (const auto& [label, weight] : m.confusion) {
    cum += weight;
    if (v < cum) return label;
  }
  return m.confusion.rbegin()->first;  // residual rounding
}

std::vector<SweepRow> hypothesis_sweep(const SimConfig& cfg,
                                       std::span<const double> theta_grid) {
  cfg.validate();
  for (double theta : theta_grid) {
    if (!(theta >= 0.0 && theta <= 1.0)) {
      throw DomainError("theta grid value outside [0, 1]: " +
                        std::to_string(theta));
    }
  }
  std::vector<SweepRow> rows;
  rows.reserve(theta_grid.size());
  const std::size_t n = static_cast<std::size_t>(cfg.n_variants);
  for (double theta : theta_grid) {
    double sum_max_share = 0.0;
    std::vector<double> true_shares;
    true_shares.reserve(cfg.intents.size() * cfg.trials);
    for (std::size_t i = 0; i < cfg.intents.size(); ++i) {
      IntentModel model = cfg.intents[i].model;
      model.theta = theta;
      for (int t = 0; t < cfg.trials; ++t) {
        SplitMix64 rng(derive_seed(cfg.seed, i, static_cast<std::uint64_t>(t)));
        std::map<ClassLabel, int> counts;
        for (std::size_t j = 0; j < n; ++j) {
          ++counts[sim_classify(model, j, rng)];
        }
        int max_count = 0;
        int true_count = 0;
        for (const auto& [label, count] : counts) {
          max_count = std::max(max_count, count);
          if (label == model.true_label) true_count = count;
        }
        sum_max_share += static_cast<double>(max_count) / static_cast<double>(n);
        true_shares.push_back(static_cast<double>(true_count) /
                              static_cast<double>(n));
      }
    }
    SweepRow row;
    row.theta = theta;
    const double n_runs = static_cast<double>(true_shares.size());
    row.mean_ensemble_accuracy = sum_max_share / n_runs;
    double mean_true = 0.0;
    for (double s : true_shares) mean_true += s;
    mean_true /= n_runs;
    double var = 0.0;
    for (double s : true_shares) var += (s - mean_true) * (s - mean_true);
    row.true_share_variance = var / n_runs;
    rows.push_back(row);
  }
  return rows;
}

SimulatorBackend::SimulatorBackend(std::uint64_t seed) : seed_(seed) {}

void SimulatorBackend::bind_intent(const std::string& intent_id,
                                   const IntentModel& model,
                                   const std::vector<std::string>& variant_questions) {
  model.validate();
  const std::size_t intent_index = models_.size();
  models_.push_back(model);
  intent_keys_.push_back(intent_id);
  for (std::size_t j = 0; j < variant_questions.size(); ++j) {
    if (j >= model.variant_difficulty.size()) {
      throw DomainError("intent " + intent_id + ": more variant questions than "
                        "difficulty entries");
    }
    const auto [it, inserted] =
        by_question_.emplace(variant_questions[j], Binding{intent_index, j});
    if (!inserted) {
      throw DomainError("duplicate variant question bound to simulator: " +
                        variant_questions[j]);
    }
  }
}

std::string SimulatorBackend::identity() const {
  return "simulator:seed=" + std::to_string(seed_);
}

backends::Capabilities SimulatorBackend::capabilities() const {
  return {.endpoint = true, .parameter = false, .free_text = false};
}

std::string SimulatorBackend::complete(const backends::CompletionRequest& request) {
  auto it = by_question_.find(request.question);
  if (it == by_question_.end()) {
    throw TransportError("simulator: question not bound: " + request.question);
  }
  const auto [intent_index, variant_index] = it->second;
  // Streams are keyed by intent id (hashed), not bind order, so answers are
  // stable under dataset reordering or filtering.
  SplitMix64 rng(
      derive_seed(seed_, fnv1a64(intent_keys_[intent_index]), variant_index));
  const ClassLabel answer =
      sim_classify(models_[intent_index], variant_index, rng);
  return backends::render_endpoint_response(
      answer, "simulated draw for variant " + std::to_string(variant_index));
}

std::vector<CorpusEntry> make_calibration_corpus(const SimConfig& cfg) {
  cfg.validate();
  // One backend bound to every intent, shared by all entries: answers depend
  // only on (seed, intent position, variant position), so replaying the
  // emitted corpus through the CLI reproduces the in-process run exactly.
  auto backend = std::make_shared<SimulatorBackend>(cfg.seed);
  std::vector<CorpusEntry> corpus;
  corpus.reserve(cfg.intents.size());
  for (const auto& intent : cfg.intents) {
    VariantSet vs;
    vs.intent_id = intent.intent_id;
    vs.intent_text = "synthetic intent " + intent.intent_id;
    for (int j = 0; j < cfg.n_variants; ++j) {
      vs.variants.push_back(intent.intent_id + " phrasing " +
                            std::to_string(j + 1));
    }
    vs.true_label = intent.model.true_label;
    vs.candidates.insert(intent.model.true_label);
    for (const auto& [label, _] : intent.model.confusion) {
      vs.candidates.insert(label);
    }
    vs.task_kind = TaskKind::Endpoint;
    backend->bind_intent(intent.intent_id, intent.model, vs.variants);
    corpus.push_back({std::move(vs), backend});
  }
  return corpus;
}

}  // namespace quorum::simulator
