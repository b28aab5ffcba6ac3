#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "quorum/rng.hpp"
#include "quorum/voting.hpp"

using namespace quorum;
using namespace quorum::voting;

namespace {

ClassifierOutput single(int index, const std::string& label) {
  return {index, ClassLabel(label), "", ""};
}

ClassifierOutput abstain(int index, AbstainReason reason) {
  return {index, Abstention{reason}, "", ""};
}

// The worked example: 8 votes A, 4 votes B, 3 votes C out of 15.
std::vector<ClassifierOutput> eight_four_three() {
  std::vector<ClassifierOutput> outputs;
  for (int i = 0; i < 8; ++i) outputs.push_back(single(i, "A"));
  for (int i = 8; i < 12; ++i) outputs.push_back(single(i, "B"));
  for (int i = 12; i < 15; ++i) outputs.push_back(single(i, "C"));
  return outputs;
}

}  // namespace

TEST_CASE("tally counts identical answers") {
  const auto t = tally(eight_four_three(), 15);
  CHECK(t.counts == std::map<std::string, int>{{"A", 8}, {"B", 4}, {"C", 3}});
  CHECK(t.n_total == 15);
  CHECK(t.n_abstained == 0);
}

TEST_CASE("tally of a unanimous ensemble") {
  std::vector<ClassifierOutput> outputs;
  for (int i = 0; i < 15; ++i) outputs.push_back(single(i, "A"));
  const auto t = tally(outputs, 15);
  CHECK(t.counts == std::map<std::string, int>{{"A", 15}});
}

TEST_CASE("abstentions are counted separately from votes") {
  auto outputs = eight_four_three();
  outputs[13] = abstain(13, AbstainReason::ParseFailure);
  outputs[14] = abstain(14, AbstainReason::ParseFailure);
  const auto t = tally(outputs, 15);
  int vote_sum = 0;
  for (const auto& [_, count] : t.counts) vote_sum += count;
  CHECK(vote_sum == 13);
  CHECK(t.n_abstained == 2);
  CHECK(vote_sum + t.n_abstained == t.n_total);
}

TEST_CASE("tally rejects an output count that disagrees with n_total") {
  CHECK_THROWS_AS(tally(eight_four_three(), 14), DomainError);
}

TEST_CASE("predict returns the modal class with its vote share") {
  const auto p = predict(tally(eight_four_three(), 15));
  REQUIRE(p.key.has_value());
  CHECK(*p.key == "A");
  CHECK(p.ensemble_accuracy == Certainty{8, 15});
  CHECK_FALSE(p.tie_broken);
}

TEST_CASE("predict breaks ties toward the lexicographically smallest label") {
  std::vector<ClassifierOutput> outputs;
  for (int i = 0; i < 5; ++i) outputs.push_back(single(i, "C"));
  for (int i = 5; i < 10; ++i) outputs.push_back(single(i, "A"));
  for (int i = 10; i < 15; ++i) outputs.push_back(single(i, "B"));
  const auto p = predict(tally(outputs, 15));
  REQUIRE(p.key.has_value());
  CHECK(*p.key == "A");
  CHECK(p.ensemble_accuracy == Certainty{5, 15});
  CHECK(p.tie_broken);
}

TEST_CASE("predict on an all-abstain tally is null with zero certainty") {
  std::vector<ClassifierOutput> outputs;
  for (int i = 0; i < 15; ++i) outputs.push_back(abstain(i, AbstainReason::BackendError));
  const auto p = predict(tally(outputs, 15));
  CHECK_FALSE(p.key.has_value());
  CHECK(p.ensemble_accuracy == Certainty{0, 15});
}

TEST_CASE("true-label accuracy reads the tally for any label") {
  const auto t = tally(eight_four_three(), 15);
  CHECK(true_label_accuracy(t, "A") == Certainty{8, 15});
  CHECK(true_label_accuracy(t, "B") == Certainty{4, 15});
  CHECK(true_label_accuracy(t, "C") == Certainty{3, 15});
  CHECK(true_label_accuracy(t, "D") == Certainty{0, 15});
}

TEST_CASE("marginal parameter tally computes per-parameter vote fractions") {
  std::vector<ClassifierOutput> outputs;
  for (int i = 0; i < 15; ++i) {
    std::vector<ClassLabel> params{ClassLabel("p1")};
    if (i < 7) params.push_back(ClassLabel("p2"));
    outputs.push_back({i, ParameterSet(params), "", ""});
  }
  const auto fractions = marginal_parameter_tally(outputs);
  REQUIRE(fractions.size() == 2);
  CHECK(fractions.at("p1") == Certainty{15, 15});
  CHECK(fractions.at("p2") == Certainty{7, 15});
}

TEST_CASE("marginal parameter tally uses non-abstaining outputs as denominator") {
  std::vector<ClassifierOutput> outputs;
  for (int i = 0; i < 10; ++i) {
    outputs.push_back({i, ParameterSet({ClassLabel("p1")}), "", ""});
  }
  for (int i = 10; i < 15; ++i) outputs.push_back(abstain(i, AbstainReason::ParseFailure));
  const auto fractions = marginal_parameter_tally(outputs);
  REQUIRE(fractions.size() == 1);
  CHECK(fractions.at("p1") == Certainty{10, 10});
}

TEST_CASE("marginal parameter tally of all-abstain input is empty") {
  std::vector<ClassifierOutput> outputs;
  for (int i = 0; i < 5; ++i) outputs.push_back(abstain(i, AbstainReason::ParseFailure));
  CHECK(marginal_parameter_tally(outputs).empty());
}

TEST_CASE("marginal parameter tally rejects single-label outputs") {
  std::vector<ClassifierOutput> outputs{single(0, "A")};
  CHECK_THROWS_AS(marginal_parameter_tally(outputs), DomainError);
}

TEST_CASE("tally and predict are invariant under output permutation") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(20));
    std::vector<ClassifierOutput> outputs;
    for (int i = 0; i < n; ++i) {
      if (rng.next_below(5) == 0) {
        outputs.push_back(abstain(i, AbstainReason::ParseFailure));
      } else {
        outputs.push_back(single(i, std::string(1, 'A' + rng.next_below(4))));
      }
    }
    auto shuffled = outputs;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
    }
    const auto t1 = tally(outputs, n);
    const auto t2 = tally(shuffled, n);
    CHECK(t1.counts == t2.counts);
    CHECK(t1.n_abstained == t2.n_abstained);
    const auto p1 = predict(t1);
    const auto p2 = predict(t2);
    CHECK(p1.key == p2.key);
    CHECK(p1.ensemble_accuracy == p2.ensemble_accuracy);
  }
}

TEST_CASE("predict agrees with a brute-force argmax and dominates every count") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(25));
    std::vector<ClassifierOutput> outputs;
    for (int i = 0; i < n; ++i) {
      if (rng.next_below(6) == 0) {
        outputs.push_back(abstain(i, AbstainReason::BackendError));
      } else {
        outputs.push_back(single(i, std::string(1, 'A' + rng.next_below(5))));
      }
    }
    const auto t = tally(outputs, n);
    const auto p = predict(t);
    if (t.counts.empty()) {
      CHECK_FALSE(p.key.has_value());
      continue;
    }
    const auto maximal = oracles::max_count_keys(t.counts);
    REQUIRE(p.key.has_value());
    // Modal class, smallest label among the maximal ones.
    CHECK(*p.key == *std::min_element(maximal.begin(), maximal.end()));
    CHECK(p.tie_broken == (maximal.size() > 1));
    // ensemble_accuracy dominates the share of every class, so the
    // true-label accuracy can never exceed it.
    for (const auto& [key, count] : t.counts) {
      CHECK(true_label_accuracy(t, key).num <= p.ensemble_accuracy.num);
    }
    CHECK(p.ensemble_accuracy.num > 0);
  }
}

TEST_CASE("summarize assembles a consistent ensemble result") {
  auto outputs = eight_four_three();
  outputs[14] = abstain(14, AbstainReason::NotInCandidates);
  const auto r = summarize("q001", outputs, 15, "B");
  CHECK(r.intent_id == "q001");
  CHECK(r.tally == std::map<std::string, int>{{"A", 8}, {"B", 4}, {"C", 2}});
  CHECK(r.n_abstained == 1);
  CHECK(r.prediction == "A");
  CHECK(r.ensemble_accuracy == Certainty{8, 15});
  CHECK(r.true_label_accuracy == Certainty{4, 15});
  int vote_sum = 0;
  for (const auto& [_, count] : r.tally) vote_sum += count;
  CHECK(vote_sum + r.n_abstained == r.n_total);
}
