#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quorum/domain.hpp"

namespace quorum::backends {

// Task kinds a backend can serve, plus whether it can produce free text
// (needed for variant generation).
struct Capabilities {
  bool endpoint = false;
  bool parameter = false;
  bool free_text = false;

  bool supports(TaskKind kind) const {
    return kind == TaskKind::Endpoint ? endpoint : parameter;
  }
};

// One classification request: a single variant question plus the candidate
// pool offered through the prompt.
struct PromptSpec {
  std::string question;
  std::set<ClassLabel> candidates;
  TaskKind task_kind = TaskKind::Endpoint;
  std::string template_id;
};

// What a backend sees per call. `prompt` is the fully rendered text (what
// goes over the wire); `question` is the underlying question, which scripted
// and simulated backends key on; `spec` is absent for free-text calls.
struct CompletionRequest {
  std::string prompt;
  std::string question;
  const PromptSpec* spec = nullptr;
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;

  virtual std::string identity() const = 0;
  virtual Capabilities capabilities() const = 0;

  // Returns one raw completion under greedy decoding. Throws TransportError
  // on failure (after any backend-internal retries). Must tolerate
  // concurrent in-flight calls.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

// --- Response parsing (detector wire format) ---

// Removes trailing whitespace and trailing generation-terminator tokens of
// the form "<|...|>" (repeatedly, so stacked terminators all go).
std::string strip_terminators(std::string_view text);

struct EndpointResponse {
  ClassLabel endpoint;
  std::string reason;
};

struct ParameterResponse {
  ParameterSet params;
  std::string reason;
};

// Extracts `endpoint` and `reason` from the first well-formed object found
// in the text. Accepts both single-quoted dictionary literals and strict
// JSON. Missing or duplicate keys, or no parseable object, yield nullopt.
std::optional<EndpointResponse> parse_endpoint_response(const std::string& raw);

// Extracts the (single) string-list field plus `reason`; the list is
// canonicalized into a ParameterSet.
std::optional<ParameterResponse> parse_parameter_response(const std::string& raw);

// Well-formed response text for a (label, reason) pair, in the single-quoted
// dictionary form the detectors emit. parse_* inverts these exactly as long
// as the reason does not end in whitespace or a terminator token.
std::string render_endpoint_response(const ClassLabel& endpoint,
                                     const std::string& reason);
std::string render_parameter_response(const ParameterSet& params,
                                      const std::string& reason);

// Single answers outside the pool abstain; Multi answers drop out-of-pool
// members and abstain only when every member was dropped. Idempotent.
Answer filter_candidates(const Answer& answer,
                         const std::set<ClassLabel>& candidates);

// --- Prompt templates ---

// Templates are data: placeholder substitution over {{question}},
// {{candidates}} and {{n}}. Built-in defaults are registered under the ids
// below; files can override or add ids.
class TemplateStore {
 public:
  static constexpr const char* kEndpointDefault = "endpoint-default-v1";
  static constexpr const char* kParameterDefault = "parameter-default-v1";
  static constexpr const char* kVariantsDefault = "variants-default-v1";

  TemplateStore();

  void register_template(const std::string& id, std::string text);
  void load_file(const std::string& id, const std::string& path);
  const std::string& text(const std::string& id) const;
  static std::string default_id(TaskKind kind);

 private:
  std::map<std::string, std::string> templates_;
};

std::string render_prompt(const std::string& template_text,
                          const PromptSpec& spec);
std::string render_variants_prompt(const std::string& template_text,
                                   const std::string& intent_text, int n);

// --- Orchestration ---

// Renders the prompt, obtains one completion, parses per task kind, and
// filters to the candidate pool. Every failure mode becomes an abstention
// with the matching reason code; this function does not throw for
// per-variant problems.
ClassifierOutput classify(ClassifierBackend& backend, const PromptSpec& spec,
                          const TemplateStore& templates);

struct EnsembleOptions {
  int parallelism = 4;
  std::string template_id;  // empty -> default for the task kind
};

// One output per variant, indexed by variant position. Results are assembled
// in variant order regardless of completion order.
std::vector<ClassifierOutput> ensemble_classify(ClassifierBackend& backend,
                                                const VariantSet& vs,
                                                const TemplateStore& templates,
                                                const EnsembleOptions& options = {});

// --- Backends ---

// Scripted backend: fixed response per question, optional default. Unknown
// questions (with no default) and explicitly scripted failures throw
// TransportError. Deterministic by construction.
class MockBackend final : public ClassifierBackend {
 public:
  explicit MockBackend(std::string name = "mock");

  void script(const std::string& question, std::string response);
  void script_failure(const std::string& question);
  void set_default_response(std::string response);

  std::string identity() const override;
  Capabilities capabilities() const override;
  std::string complete(const CompletionRequest& request) override;

 private:
  std::string name_;
  std::map<std::string, std::string> responses_;
  std::set<std::string> failures_;
  std::optional<std::string> default_response_;
};

// OpenAI-compatible chat-completions client. Requests carry the model name,
// a single user message, and temperature 0. The credential is read from the
// environment variable named in the config, never from flags or files.
struct WireConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  std::string model;
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "QUORUM_API_KEY";
  int timeout_ms = 30000;
  int max_retries = 2;      // retries after the first attempt
  int backoff_base_ms = 100;  // doubles per retry
};

class WireBackend final : public ClassifierBackend {
 public:
  explicit WireBackend(WireConfig config);

  std::string identity() const override;
  Capabilities capabilities() const override;
  std::string complete(const CompletionRequest& request) override;

 private:
  WireConfig config_;
};

}  // namespace quorum::backends
