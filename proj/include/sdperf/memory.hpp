#pragma once

// Static weight memory and per-token KV-cache memory for a target model with
// an optional drafter (draft model or EAGLE-style head).

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdperf/error.hpp"
#include "sdperf/trace.hpp"

namespace sdperf {

struct ModelSpec {
  std::string name;
  double params_billion = 0.0;
  int hidden_layers = 0;
  int kv_heads = 0;
  int head_dim = 0;
  // Recorded only: parameter counts already account for tied embeddings.
  bool tied_lm_head = false;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline void validate(const ModelSpec& s) {
  if (s.name.empty()) throw ValidationError("model spec without a name");
  if (!(s.params_billion > 0.0) || s.hidden_layers < 1 || s.kv_heads < 1 || s.head_dim < 1) {
    throw ValidationError("model spec '" + s.name + "': numeric fields must be positive");
  }
}

struct DeploymentSpec {
  ModelSpec target;
  std::optional<ModelSpec> drafter;  // absent for no-SD and n-gram
  int bytes_per_param = 2;
  int bytes_per_element = 2;
};

inline void validate(const DeploymentSpec& d) {
  validate(d.target);
  if (d.drafter) validate(*d.drafter);
  auto ok = [](int b) { return b == 1 || b == 2 || b == 4; };
  if (!ok(d.bytes_per_param) || !ok(d.bytes_per_element)) {
    throw ValidationError("bytes_per_param and bytes_per_element must be 1, 2 or 4");
  }
}

inline double weights_gib(const ModelSpec& m, int bytes_per_param) {
  return m.params_billion * 1e9 * bytes_per_param / 1073741824.0;
}

// Keys and values for every layer: L * 2 * n_kv * d_head * bytes / 2^10.
inline double kv_kib_per_token(const ModelSpec& m, int bytes_per_element) {
  return static_cast<double>(m.hidden_layers) * 2.0 * m.kv_heads * m.head_dim * bytes_per_element / 1024.0;
}

inline double static_memory_gib(const DeploymentSpec& d) {
  validate(d);
  const double draft = d.drafter ? d.drafter->params_billion : 0.0;
  return (d.target.params_billion + draft) * 1e9 * d.bytes_per_param / 1073741824.0;
}

inline double per_token_kv_kib(const DeploymentSpec& d) {
  validate(d);
  double kib = kv_kib_per_token(d.target, d.bytes_per_element);
  if (d.drafter) kib += kv_kib_per_token(*d.drafter, d.bytes_per_element);
  return kib;
}

// ---------------------------------------------------------------------------
// Registry

class ModelRegistry {
 public:
  ModelRegistry() = default;
  explicit ModelRegistry(std::vector<ModelSpec> specs) : specs_(std::move(specs)) {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      validate(specs_[i]);
      for (std::size_t j = 0; j < i; ++j) {
        if (specs_[j].name == specs_[i].name) throw ValidationError("duplicate model spec '" + specs_[i].name + "'");
      }
    }
  }

  const ModelSpec& get(const std::string& name) const {
    for (const auto& s : specs_) {
      if (s.name == name) return s;
    }
    throw LookupError("unknown model spec '" + name + "'");
  }

  bool contains(const std::string& name) const {
    for (const auto& s : specs_) {
      if (s.name == name) return true;
    }
    return false;
  }

  const std::vector<ModelSpec>& specs() const { return specs_; }

 private:
  std::vector<ModelSpec> specs_;
};

// Model configurations. Parameter counts exclude EAGLE3 vocabulary
// remap tables.
inline ModelRegistry builtin_registry() {
  return ModelRegistry({
      {"Llama3.1-8B-Instruct", 8.03, 32, 8, 128, false},
      {"Llama3-70B-Instruct", 70.55, 80, 8, 128, false},
      {"Llama3.2-1B-Instruct", 1.23, 16, 8, 64, true},
      {"Qwen3-8B", 8.19, 36, 8, 128, false},
      {"Qwen3-0.6B", 0.596, 28, 8, 128, true},
      {"EAGLE-LLaMA3.1-Instruct-8B", 0.25, 1, 8, 128, false},
      {"EAGLE3-LLaMA3.1-Instruct-8B", 0.425, 1, 8, 128, false},
      {"EAGLE-LLaMA3-Instruct-70B", 0.99, 1, 8, 128, false},
      {"EAGLE3-Qwen3-8B", 0.40, 1, 8, 128, false},
  });
}

inline ModelRegistry parse_registry(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ParseError(0, "model registry must be a JSON array");
  std::vector<ModelSpec> specs;
  try {
    for (const auto& e : doc) {
      ModelSpec s;
      s.name = e.at("name").get<std::string>();
      s.params_billion = e.at("params_billion").get<double>();
      s.hidden_layers = e.at("hidden_layers").get<int>();
      s.kv_heads = e.at("kv_heads").get<int>();
      s.head_dim = e.at("head_dim").get<int>();
      s.tied_lm_head = e.value("tied_lm_head", false);
      specs.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("model registry: ") + e.what());
  }
  return ModelRegistry(std::move(specs));
}

inline ModelRegistry load_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model registry '" + path + "'");
  try {
    return parse_registry(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, "model registry '" + path + "': " + e.what());
  }
}

inline nlohmann::ordered_json registry_json(const ModelRegistry& reg) {
  auto doc = nlohmann::ordered_json::array();
  for (const auto& s : reg.specs()) {
    doc.push_back({{"name", s.name},
                   {"params_billion", s.params_billion},
                   {"hidden_layers", s.hidden_layers},
                   {"kv_heads", s.kv_heads},
                   {"head_dim", s.head_dim},
                   {"tied_lm_head", s.tied_lm_head}});
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Report

struct DeploymentRef {
  std::string label;
  std::string target;
  std::optional<std::string> drafter;
};

struct MemoryRow {
  std::string label;
  std::string target;
  std::string drafter;  // empty when none
  double static_gib = 0.0;
  double per_token_kib = 0.0;
  double static_overhead_pct = 0.0;  // vs. the same target without SD
  double per_token_ratio = 1.0;      // vs. the same target without SD
};

// Parses "target=NAME[,drafter=NAME][,label=TEXT]".
inline DeploymentRef parse_deployment(const std::string& text) {
  DeploymentRef ref;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ValidationError("deployment '" + text + "': expected key=value");
    const std::string key = part.substr(0, eq), value = part.substr(eq + 1);
    if (key == "target") ref.target = value;
    else if (key == "drafter") ref.drafter = value;
    else if (key == "label") ref.label = value;
    else throw ValidationError("deployment '" + text + "': unknown key '" + key + "'");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (ref.target.empty()) throw ValidationError("deployment '" + text + "': missing target");
  if (ref.label.empty()) ref.label = ref.drafter ? ref.target + "+" + *ref.drafter : ref.target;
  return ref;
}

// Reference deployments: each target alone and with its drafters.
inline std::vector<DeploymentRef> builtin_deployments() {
  return {
      {"Llama3.1-8B no-SD/n-gram", "Llama3.1-8B-Instruct", std::nullopt},
      {"Llama3.1-8B EAGLE", "Llama3.1-8B-Instruct", "EAGLE-LLaMA3.1-Instruct-8B"},
      {"Llama3.1-8B EAGLE3", "Llama3.1-8B-Instruct", "EAGLE3-LLaMA3.1-Instruct-8B"},
      {"Llama3-70B no-SD/n-gram", "Llama3-70B-Instruct", std::nullopt},
      {"Llama3-70B EAGLE", "Llama3-70B-Instruct", "EAGLE-LLaMA3-Instruct-70B"},
      {"Llama3-70B draft-1B", "Llama3-70B-Instruct", "Llama3.2-1B-Instruct"},
      {"Qwen3-8B no-SD/n-gram", "Qwen3-8B", std::nullopt},
      {"Qwen3-8B EAGLE3", "Qwen3-8B", "EAGLE3-Qwen3-8B"},
      {"Qwen3-8B draft-0.6B", "Qwen3-8B", "Qwen3-0.6B"},
  };
}

inline std::vector<MemoryRow> memory_report(const ModelRegistry& reg, const std::vector<DeploymentRef>& deployments,
                                            int bytes_per_param = 2, int bytes_per_element = 2) {
  std::vector<MemoryRow> rows;
  for (const auto& ref : deployments) {
    DeploymentSpec d{reg.get(ref.target), std::nullopt, bytes_per_param, bytes_per_element};
    if (ref.drafter) d.drafter = reg.get(*ref.drafter);
    const DeploymentSpec base{d.target, std::nullopt, bytes_per_param, bytes_per_element};
    MemoryRow row;
    row.label = ref.label;
    row.target = ref.target;
    row.drafter = ref.drafter.value_or("");
    row.static_gib = static_memory_gib(d);
    row.per_token_kib = per_token_kv_kib(d);
    row.static_overhead_pct = 100.0 * (row.static_gib / static_memory_gib(base) - 1.0);
    row.per_token_ratio = row.per_token_kib / per_token_kv_kib(base);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string memory_csv(const std::vector<MemoryRow>& rows) {
  std::string out = "label,target,drafter,static_gib,per_token_kib,static_overhead_pct,per_token_ratio\n";
  for (const auto& r : rows) {
    out += r.label + "," + r.target + "," + r.drafter + "," + format_double(r.static_gib) + "," +
           format_double(r.per_token_kib) + "," + format_double(r.static_overhead_pct) + "," +
           format_double(r.per_token_ratio) + "\n";
  }
  return out;
}

inline std::string memory_table_text(const std::vector<MemoryRow>& rows) {
  const std::vector<std::string> head = {"deployment", "static (GiB)", "per-token (KiB)", "static +%", "per-token x"};
  std::vector<std::vector<std::string>> cells;
  char buf[64];
  for (const auto& r : rows) {
    std::vector<std::string> line{r.label};
    std::snprintf(buf, sizeof buf, "%.2f", r.static_gib);
    line.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "%.0f", r.per_token_kib);
    line.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "%.1f", r.static_overhead_pct);
    line.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "%.3f", r.per_token_ratio);
    line.emplace_back(buf);
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& l : cells) width[c] = std::max(width[c], l[c].size());
  }
  auto emit = [&](const std::vector<std::string>& l) {
    std::string s;
    for (std::size_t c = 0; c < l.size(); ++c) {
      const std::string pad(width[c] - l[c].size(), ' ');
      s += c == 0 ? l[c] + pad : "  " + pad + l[c];
    }
    return s + "\n";
  };
  std::string out = emit(head);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
  for (const auto& l : cells) out += emit(l);
  return out;
}

}  // namespace sdperf
