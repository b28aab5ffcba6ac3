#include "quorum/backends.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include "quorum/errors.hpp"

namespace quorum::backends {

std::string strip_terminators(std::string_view text) {
  std::size_t end = text.size();
  while (true) {
    while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
      --end;
    }
    if (end < 4 || text.substr(end - 2, 2) != "|>") break;
    const std::size_t open = text.rfind("<|", end - 2);
    if (open == std::string_view::npos) break;
    end = open;
  }
  return std::string(text.substr(0, end));
}

namespace {

// Minimal parser for detector responses: an object whose values are strings
// or lists of strings, written either as a single-quoted dictionary literal
// or as strict JSON. Anything else fails the parse.
using FieldValue = std::variant<std::string, std::vector<std::string>>;
using FieldMap = std::vector<std::pair<std::string, FieldValue>>;

struct Cursor {
  std::string_view s;
  std::size_t pos = 0;

  bool done() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
};

bool parse_quoted(Cursor& c, std::string& out) {
  if (c.done()) return false;
  const char quote = c.peek();
  if (quote != '\'' && quote != '"') return false;
  ++c.pos;
  out.clear();
  while (!c.done()) {
    const char ch = c.s[c.pos++];
    if (ch == quote) return true;
    if (ch == '\\') {
      if (c.done()) return false;
      const char esc = c.s[c.pos++];
      switch (esc) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        default: out += esc; break;  // \' \" \\ / and unknown escapes
      }
    } else {
      out += ch;
    }
  }
  return false;  // unterminated
}

bool parse_string_list(Cursor& c, std::vector<std::string>& out) {
  if (c.done() || c.peek() != '[') return false;
  ++c.pos;
  out.clear();
  c.skip_ws();
  if (!c.done() && c.peek() == ']') {
    ++c.pos;
    return true;
  }
  while (true) {
    c.skip_ws();
    std::string item;
    if (!parse_quoted(c, item)) return false;
    out.push_back(std::move(item));
    c.skip_ws();
    if (c.done()) return false;
    const char ch = c.s[c.pos++];
    if (ch == ']') return true;
    if (ch != ',') return false;
  }
}

std::optional<FieldMap> parse_object_at(std::string_view s, std::size_t start) {
  Cursor c{s, start};
  if (c.done() || c.peek() != '{') return std::nullopt;
  ++c.pos;
  FieldMap fields;
  c.skip_ws();
  if (!c.done() && c.peek() == '}') return fields;  // empty object
  while (true) {
    c.skip_ws();
    std::string key;
    if (!parse_quoted(c, key)) return std::nullopt;
    for (const auto& [existing, _] : fields) {
      if (existing == key) return std::nullopt;  // duplicate key
    }
    c.skip_ws();
    if (c.done() || c.s[c.pos++] != ':') return std::nullopt;
    c.skip_ws();
    if (c.done()) return std::nullopt;
    if (c.peek() == '[') {
      std::vector<std::string> items;
      if (!parse_string_list(c, items)) return std::nullopt;
      fields.emplace_back(std::move(key), std::move(items));
    } else {
      std::string value;
      if (!parse_quoted(c, value)) return std::nullopt;
      fields.emplace_back(std::move(key), std::move(value));
    }
    c.skip_ws();
    if (c.done()) return std::nullopt;
    const char ch = c.s[c.pos++];
    if (ch == '}') return fields;
    if (ch != ',') return std::nullopt;
  }
}

// First position from which a well-formed object parses; LLM output is
// wrapper-noisy, so leading prose before the dictionary is common.
std::optional<FieldMap> first_object(std::string_view raw) {
  for (std::size_t pos = raw.find('{'); pos != std::string_view::npos;
       pos = raw.find('{', pos + 1)) {
    if (auto fields = parse_object_at(raw, pos)) return fields;
  }
  return std::nullopt;
}

const std::string* find_string(const FieldMap& fields, const std::string& key) {
  for (const auto& [k, v] : fields) {
    if (k == key) return std::get_if<std::string>(&v);
  }
  return nullptr;
}

}  // namespace

std::optional<EndpointResponse> parse_endpoint_response(const std::string& raw) {
  const auto fields = first_object(raw);
  if (!fields) return std::nullopt;
  const std::string* endpoint = find_string(*fields, "endpoint");
  const std::string* reason = find_string(*fields, "reason");
  if (endpoint == nullptr || reason == nullptr) return std::nullopt;
  try {
    return EndpointResponse{ClassLabel(*endpoint), strip_terminators(*reason)};
  } catch (const DomainError&) {
    return std::nullopt;  // e.g. empty endpoint string
  }
}

std::optional<ParameterResponse> parse_parameter_response(const std::string& raw) {
  const auto fields = first_object(raw);
  if (!fields) return std::nullopt;
  const std::string* reason = find_string(*fields, "reason");
  if (reason == nullptr) return std::nullopt;
  const std::vector<std::string>* list = nullptr;
  for (const auto& [key, value] : *fields) {
    if (const auto* items = std::get_if<std::vector<std::string>>(&value)) {
      if (list != nullptr) return std::nullopt;  // ambiguous: two list fields
      list = items;
    }
  }
  if (list == nullptr) return std::nullopt;
  try {
    std::vector<ClassLabel> labels;
    labels.reserve(list->size());
    for (const auto& item : *list) labels.emplace_back(item);
    return ParameterResponse{ParameterSet(std::move(labels)),
                             strip_terminators(*reason)};
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

namespace {

std::string quote_single(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    switch (ch) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += ch; break;
    }
  }
  out += '\'';
  return out;
}

}  // namespace

std::string render_endpoint_response(const ClassLabel& endpoint,
                                     const std::string& reason) {
  return "{'endpoint': " + quote_single(endpoint.text()) +
         ", 'reason': " + quote_single(reason) + "}";
}

std::string render_parameter_response(const ParameterSet& params,
                                      const std::string& reason) {
  std::string list = "[";
  for (std::size_t i = 0; i < params.params().size(); ++i) {
    if (i > 0) list += ", ";
    list += quote_single(params.params()[i].text());
  }
  list += "]";
  return "{'parameters': " + list + ", 'reason': " + quote_single(reason) + "}";
}

Answer filter_candidates(const Answer& answer,
                         const std::set<ClassLabel>& candidates) {
  if (std::holds_alternative<Abstention>(answer)) return answer;
  if (const auto* single = std::get_if<ClassLabel>(&answer)) {
    if (candidates.contains(*single)) return answer;
    return Abstention{AbstainReason::NotInCandidates};
  }
  const auto& multi = std::get<ParameterSet>(answer);
  if (multi.empty()) return answer;
  std::vector<ClassLabel> kept;
  for (const auto& p : multi.params()) {
    if (candidates.contains(p)) kept.push_back(p);
  }
  if (kept.empty()) return Abstention{AbstainReason::NotInCandidates};
  return ParameterSet(std::move(kept));
}

// --- Templates ---

namespace {

constexpr const char* kEndpointTemplateText =
    "Select the REST endpoint that answers the user's question.\n"
    "Candidates: {{candidates}}\n"
    "Question: {{question}}\n"
    "Reply with exactly one dictionary of the form "
    "{'endpoint': '<candidate>', 'reason': '<short justification>'} "
    "and nothing else.\n";

constexpr const char* kParameterTemplateText =
    "Select every query parameter needed to answer the user's question.\n"
    "Candidates: {{candidates}}\n"
    "Question: {{question}}\n"
    "Reply with exactly one dictionary of the form "
    "{'parameters': ['<candidate>', ...], 'reason': '<short justification>'} "
    "and nothing else.\n";

constexpr const char* kVariantsTemplateText =
    "Rephrase the question below in {{n}} different ways while preserving "
    "its meaning.\n"
    "Write one rephrasing per line, with no numbering or commentary.\n"
    "Question: {{question}}\n";

std::string replace_all(std::string text, const std::string& placeholder,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
  return text;
}

std::string candidates_literal(const std::set<ClassLabel>& candidates) {
  std::string out = "[";
  bool first = true;
  for (const auto& c : candidates) {
    if (!first) out += ", ";
    out += quote_single(c.text());
    first = false;
  }
  out += "]";
  return out;
}

}  // namespace

TemplateStore::TemplateStore() {
  templates_[kEndpointDefault] = kEndpointTemplateText;
  templates_[kParameterDefault] = kParameterTemplateText;
  templates_[kVariantsDefault] = kVariantsTemplateText;
}

void TemplateStore::register_template(const std::string& id, std::string text) {
  templates_[id] = std::move(text);
}

void TemplateStore::load_file(const std::string& id, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open template file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  templates_[id] = buf.str();
}

const std::string& TemplateStore::text(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw ConfigError("unknown template id: " + id);
  return it->second;
}

std::string TemplateStore::default_id(TaskKind kind) {
  return kind == TaskKind::Endpoint ? kEndpointDefault : kParameterDefault;
}

std::string render_prompt(const std::string& template_text,
                          const PromptSpec& spec) {
  std::string text = replace_all(template_text, "{{question}}", spec.question);
  return replace_all(text, "{{candidates}}", candidates_literal(spec.candidates));
}

std::string render_variants_prompt(const std::string& template_text,
                                   const std::string& intent_text, int n) {
  std::string text = replace_all(template_text, "{{question}}", intent_text);
  return replace_all(text, "{{n}}", std::to_string(n));
}

// --- Orchestration ---

ClassifierOutput classify(ClassifierBackend& backend, const PromptSpec& spec,
                          const TemplateStore& templates) {
  if (spec.candidates.empty()) {
    throw ConfigError("prompt spec has an empty candidate pool");
  }
  if (!backend.capabilities().supports(spec.task_kind)) {
    throw ConfigError("backend " + backend.identity() + " does not support " +
                      to_string(spec.task_kind) + " tasks");
  }
  const std::string& template_text = templates.text(
      spec.template_id.empty() ? TemplateStore::default_id(spec.task_kind)
                               : spec.template_id);

  ClassifierOutput out;
  std::string raw;
  try {
    raw = backend.complete(
        {render_prompt(template_text, spec), spec.question, &spec});
  } catch (const TransportError&) {
    out.answer = Abstention{AbstainReason::BackendError};
    return out;
  }
  out.raw_text = raw;

  Answer answer = Abstention{AbstainReason::ParseFailure};
  if (spec.task_kind == TaskKind::Endpoint) {
    if (auto parsed = parse_endpoint_response(raw)) {
      out.reason_text = parsed->reason;
      answer = parsed->endpoint;
    }
  } else {
    if (auto parsed = parse_parameter_response(raw)) {
      out.reason_text = parsed->reason;
      answer = parsed->params;
    }
  }
  if (std::holds_alternative<Abstention>(answer)) {
    out.answer = answer;
    return out;
  }
  out.answer = filter_candidates(answer, spec.candidates);
  return out;
}

std::vector<ClassifierOutput> ensemble_classify(ClassifierBackend& backend,
                                                const VariantSet& vs,
                                                const TemplateStore& templates,
                                                const EnsembleOptions& options) {
  const std::size_t n = vs.variants.size();
  std::vector<ClassifierOutput> outputs(n);
  const std::string template_id =
      options.template_id.empty() ? TemplateStore::default_id(vs.task_kind)
                                  : options.template_id;

  const auto run_one = [&](std::size_t i) {
    PromptSpec spec{vs.variants[i], vs.candidates, vs.task_kind, template_id};
    ClassifierOutput out = classify(backend, spec, templates);
    out.variant_index = static_cast<int>(i);
    outputs[i] = std::move(out);
  };

  const int workers =
      std::min<int>(std::max(options.parallelism, 1), static_cast<int>(n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
    return outputs;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return outputs;
}

// --- Mock backend ---

MockBackend::MockBackend(std::string name) : name_(std::move(name)) {}

void MockBackend::script(const std::string& question, std::string response) {
  responses_[question] = std::move(response);
}

void MockBackend::script_failure(const std::string& question) {
  failures_.insert(question);
}

void MockBackend::set_default_response(std::string response) {
  default_response_ = std::move(response);
}

std::string MockBackend::identity() const { return "mock:" + name_; }

Capabilities MockBackend::capabilities() const { return {true, true, true}; }

std::string MockBackend::complete(const CompletionRequest& request) {
  if (failures_.contains(request.question)) {
    throw TransportError("mock: scripted failure for: " + request.question);
  }
  auto it = responses_.find(request.question);
  if (it != responses_.end()) return it->second;
  if (default_response_) return *default_response_;
  throw TransportError("mock: no scripted response for: " + request.question);
}

}  // namespace quorum::backends
