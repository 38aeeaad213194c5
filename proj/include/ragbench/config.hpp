#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ragbench/llm.hpp"
#include "ragbench/metrics.hpp"
#include "ragbench/perturb.hpp"

namespace ragbench {

// One HTTP backend plus the model ids it serves.
struct BackendEntry {
  BackendConfig http;
  std::vector<std::string> models;
};

// Reference-preparation settings (backbone model, pinned temperature,
// optional manual-override file).
struct ReferenceConfig {
  std::string model;  // defaults to the first benchmark model
  double temperature = 0.0;
  int max_tokens = 256;
  std::string overrides_path;
};

// Semantic-scoring providers: a precomputed token-embedding sidecar and/or
// embedding endpoints. Absent both, semantic metrics are reported absent.
struct ScorerConfig {
  std::string sidecar_path;
  bool has_endpoint = false;
  EmbedderConfig endpoint;

  bool configured() const { return !sidecar_path.empty() || has_endpoint; }
};

struct RunConfig {
  std::string dataset_path;
  int per_cell = 4;
  uint64_t seed = 1;
  std::vector<std::string> models;
  std::vector<double> temperatures;              // default: 0.0..2.0 step 0.2
  std::vector<PerturbationKind> perturbations;   // default: original + core three
  int runs_per_condition = 3;
  int max_tokens = 1000;
  std::vector<MetricId> metrics;                 // default: em,f1,rouge1,rouge2,rougeL
  MetricId headline_metric = MetricId::f1;       // drives stats/figures
  std::vector<BackendEntry> backends;
  ReferenceConfig reference;
  ScorerConfig scorer;
  int concurrency = 4;
  std::string cache_dir = "cache";
  std::string lexicon_path;
  std::string prefix_text;                       // prefix_injection payload
  std::string output_dir = "out";
  std::vector<double> boxplot_temperatures;      // default: {0.2, 1.0, 2.0}
  bool strict_dataset = false;

  const BackendEntry* backend_for(const std::string& model) const;
};

// Parses the JSON config, fills documented defaults, validates invariants
// (temperatures within [0,2], runs_per_condition >= 1, at least one model
// and metric, ...). Throws ParseError / SchemaError / InvalidConfig.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical fully-resolved serialization: every field present, keys sorted.
// This is what run manifests echo for provenance.
std::string config_to_json(const RunConfig& cfg);

// sha256 over the experiment-identity fields of the resolved config; guards
// manifests against config drift. Execution-environment fields (output_dir,
// cache_dir, concurrency, strict_dataset) are excluded: overriding them
// cannot change results, so it must not invalidate resume.
std::string config_digest(const RunConfig& cfg);

void validate_config(const RunConfig& cfg);

}  // namespace ragbench
