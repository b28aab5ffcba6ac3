#include <doctest.h>

#include <cmath>

#include "quorum/assessment.hpp"
#include "quorum/backends.hpp"
#include "quorum/simulator.hpp"
#include "quorum/voting.hpp"

using namespace quorum;
using namespace quorum::simulator;

namespace {

IntentModel model_for(double theta, std::vector<double> difficulty = {}) {
  if (difficulty.empty()) difficulty.assign(15, 0.0);
  return IntentModel{
      ClassLabel("/right"), theta,
      uniform_confusion(ClassLabel("/right"),
                        {ClassLabel("/right"), ClassLabel("/wrong_a"),
                         ClassLabel("/wrong_b"), ClassLabel("/wrong_c")}),
      std::move(difficulty)};
}

SimConfig config_for(double theta, std::uint64_t seed, int trials) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.trials = trials;
  cfg.n_variants = 15;
  cfg.intents.push_back({"sim-000", model_for(theta)});
  return cfg;
}

}  // namespace

TEST_CASE("intent models validate their invariants") {
  CHECK_NOTHROW(model_for(0.5).validate());

  auto bad_theta = model_for(1.5);
  CHECK_THROWS_AS(bad_theta.validate(), DomainError);

  auto bad_eps = model_for(0.5, std::vector<double>(15, 1.5));
  CHECK_THROWS_AS(bad_eps.validate(), DomainError);

  auto self_confused = model_for(0.5);
  self_confused.confusion.emplace(ClassLabel("/right"), 0.0);
  CHECK_THROWS_AS(self_confused.validate(), DomainError);

  auto bad_sum = model_for(0.5);
  bad_sum.confusion[ClassLabel("/wrong_a")] += 0.25;
  CHECK_THROWS_AS(bad_sum.validate(), DomainError);

  auto empty = model_for(1.0);
  empty.confusion.clear();
  CHECK_THROWS_AS(empty.validate(), DomainError);
}

TEST_CASE("uniform confusion covers exactly the wrong candidates and sums to one") {
  const auto confusion = uniform_confusion(
      ClassLabel("/a"), {ClassLabel("/a"), ClassLabel("/b"), ClassLabel("/c"),
                         ClassLabel("/d")});
  REQUIRE(confusion.size() == 3);
  CHECK_FALSE(confusion.contains(ClassLabel("/a")));
  double sum = 0.0;
  for (const auto& [_, w] : confusion) sum += w;
  CHECK(sum == 1.0);  // exact by construction
  CHECK_THROWS_AS(uniform_confusion(ClassLabel("/a"), {ClassLabel("/a")}),
                  DomainError);
}

TEST_CASE("degenerate certainty settles every draw") {
  const auto certain = model_for(1.0);
  const auto hopeless = model_for(0.0);
  SplitMix64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    CHECK(sim_classify(certain, i % 15, rng) == ClassLabel("/right"));
  }
  for (int i = 0; i < 2000; ++i) {
    CHECK_FALSE(sim_classify(hopeless, i % 15, rng) == ClassLabel("/right"));
  }
}

TEST_CASE("wrong answers follow the confusion weights") {
  auto m = model_for(0.0);
  m.confusion = {{ClassLabel("/wrong_a"), 0.7},
                 {ClassLabel("/wrong_b"), 0.2},
                 {ClassLabel("/wrong_c"), 0.1}};
  SplitMix64 rng(2);
  std::map<ClassLabel, int> counts;
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++counts[sim_classify(m, 0, rng)];
  // 5 sigma of a 0.7 Bernoulli over 50000 draws is about 0.010.
  CHECK(std::abs(counts[ClassLabel("/wrong_a")] / double(n) - 0.7) < 0.011);
  CHECK(std::abs(counts[ClassLabel("/wrong_b")] / double(n) - 0.2) < 0.010);
  CHECK(std::abs(counts[ClassLabel("/wrong_c")] / double(n) - 0.1) < 0.008);
}

TEST_CASE("sim classify rejects an out-of-range variant index") {
  const auto m = model_for(0.5);
  SplitMix64 rng(3);
  CHECK_THROWS_AS(sim_classify(m, 15, rng), DomainError);
}

TEST_CASE("the true-label vote fraction converges to theta") {
  // Binomial expectation: theta=0.6 with zero difficulty makes each of the
  // 15 variants right with probability 0.6 independently, so the mean
  // true-label vote fraction over many ensembles approaches 0.6.
  const auto m = model_for(0.6);
  const int trials = 10000;
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    SplitMix64 rng(derive_seed(606, 0, static_cast<std::uint64_t>(t)));
    int true_count = 0;
    for (int j = 0; j < 15; ++j) {
      if (sim_classify(m, j, rng) == ClassLabel("/right")) ++true_count;
    }
    acc += true_count / 15.0;
  }
  CHECK(std::abs(acc / trials - 0.6) < 0.02);
}

TEST_CASE("raising variant difficulty lowers the true-label share") {
  const auto easy = config_for(0.8, 77, 3000);
  auto hard = easy;
  hard.intents[0].model.variant_difficulty.assign(15, 0.5);
  auto share_of = [](const SimConfig& cfg) {
    double acc = 0.0;
    for (int t = 0; t < cfg.trials; ++t) {
      SplitMix64 rng(derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(t)));
      for (int j = 0; j < 15; ++j) {
        if (sim_classify(cfg.intents[0].model, j, rng) == ClassLabel("/right")) {
          acc += 1.0 / 15.0;
        }
      }
    }
    return acc / cfg.trials;
  };
  // p_j = theta * (1 - eps): 0.8 vs 0.4, far beyond Monte Carlo noise.
  CHECK(share_of(easy) - share_of(hard) > 0.3);
}

TEST_CASE("mean ensemble accuracy rises with conceptual certainty") {
  const auto cfg = config_for(0.0, 909, 1500);
  const double grid[] = {0.3, 0.6, 0.9};
  const auto rows = hypothesis_sweep(cfg, grid);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].mean_ensemble_accuracy < rows[1].mean_ensemble_accuracy);
  CHECK(rows[1].mean_ensemble_accuracy < rows[2].mean_ensemble_accuracy);
}

TEST_CASE("full certainty with zero difficulty has zero vote-share variance") {
  const auto cfg = config_for(0.0, 11, 500);
  const double grid[] = {1.0};
  const auto rows = hypothesis_sweep(cfg, grid);
  CHECK(rows[0].mean_ensemble_accuracy == 1.0);
  CHECK(rows[0].true_share_variance == 0.0);
}

TEST_CASE("sweeps are bitwise reproducible for a fixed config") {
  const auto cfg = config_for(0.0, 2718, 400);
  const double grid[] = {0.25, 0.5, 0.75};
  const auto a = hypothesis_sweep(cfg, grid);
  const auto b = hypothesis_sweep(cfg, grid);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean_ensemble_accuracy == b[i].mean_ensemble_accuracy);
    CHECK(a[i].true_share_variance == b[i].true_share_variance);
  }
}

TEST_CASE("sim configs round-trip through json and validate the generator") {
  auto cfg = config_for(0.4, 42, 10);
  const auto j = sim_config_to_json(cfg);
  CHECK(j.at("rng") == "splitmix64");
  const auto back = sim_config_from_json(j);
  CHECK(back.seed == cfg.seed);
  CHECK(back.n_variants == cfg.n_variants);
  CHECK(back.trials == cfg.trials);
  REQUIRE(back.intents.size() == 1);
  CHECK(back.intents[0].model.theta == 0.4);
  CHECK(back.intents[0].model.confusion == cfg.intents[0].model.confusion);

  auto bad = j;
  bad["rng"] = "mt19937";
  CHECK_THROWS_AS(sim_config_from_json(bad), ConfigError);
  auto no_schema = j;
  no_schema.erase("schema");
  CHECK_THROWS_AS(sim_config_from_json(no_schema), ConfigError);
}

TEST_CASE("the simulator backend answers deterministically in wire format") {
  auto cfg = config_for(0.5, 1234, 1);
  auto corpus = make_calibration_corpus(cfg);
  REQUIRE(corpus.size() == 1);
  auto& [vs, backend] = corpus[0];
  REQUIRE(vs.variants.size() == 15);
  CHECK(backend->capabilities().endpoint);
  CHECK_FALSE(backend->capabilities().parameter);
  CHECK_FALSE(backend->capabilities().free_text);

  const backends::CompletionRequest req{"prompt", vs.variants[3], nullptr};
  const std::string first = backend->complete(req);
  const std::string second = backend->complete(req);
  CHECK(first == second);  // pure function of (seed, intent, variant)
  const auto parsed = backends::parse_endpoint_response(first);
  REQUIRE(parsed.has_value());
  CHECK(vs.candidates.contains(parsed->endpoint));

  CHECK_THROWS_AS(backend->complete({"prompt", "unbound question", nullptr}),
                  TransportError);
}

TEST_CASE("calibration corpora are identical across builds of the same config") {
  auto cfg = config_for(0.5, 99, 1);
  cfg.intents.push_back({"sim-001", model_for(0.9)});
  auto first = make_calibration_corpus(cfg);
  auto second = make_calibration_corpus(cfg);
  REQUIRE(first.size() == second.size());
  backends::TemplateStore templates;
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(variant_set_to_json(first[i].variant_set) ==
          variant_set_to_json(second[i].variant_set));
    const auto a = ensemble_classify(*first[i].backend, first[i].variant_set,
                                     templates);
    const auto b = ensemble_classify(*second[i].backend, second[i].variant_set,
                                     templates);
    CHECK(a == b);
  }
}

TEST_CASE("an all-certain corpus cannot calibrate: the incorrect side is empty") {
  SimConfig cfg;
  cfg.seed = 5;
  cfg.n_variants = 15;
  for (int i = 0; i < 10; ++i) {
    cfg.intents.push_back({"sim-" + std::to_string(i), model_for(1.0)});
  }
  auto corpus = make_calibration_corpus(cfg);
  backends::TemplateStore templates;
  std::vector<assessment::LabeledResult> labeled;
  for (auto& entry : corpus) {
    const auto outputs =
        ensemble_classify(*entry.backend, entry.variant_set, templates);
    labeled.emplace_back(
        voting::summarize(entry.variant_set.intent_id, outputs, 15,
                          entry.variant_set.true_label_key()),
        entry.variant_set.true_label_key());
  }
  CHECK_THROWS_AS(assessment::calibrate(labeled), CalibrationError);
}

TEST_CASE("sim config validation catches structural errors") {
  auto cfg = config_for(0.5, 1, 1);
  cfg.n_variants = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);

  cfg = config_for(0.5, 1, 0);
  CHECK_THROWS_AS(cfg.validate(), DomainError);

  cfg = config_for(0.5, 1, 1);
  cfg.intents.push_back(cfg.intents[0]);  // duplicate id
  CHECK_THROWS_AS(cfg.validate(), DomainError);

  cfg = config_for(0.5, 1, 1);
  cfg.intents[0].model.variant_difficulty.resize(10);  // wrong length
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
