#include "ragbench/config.hpp"

#include <algorithm>

#include "json.hpp"
#include "ragbench/errors.hpp"
#include "ragbench/util.hpp"

namespace ragbench {

using nlohmann::json;

const BackendEntry* RunConfig::backend_for(const std::string& model) const {
  for (const auto& b : backends)
    if (std::find(b.models.begin(), b.models.end(), model) != b.models.end()) return &b;
  return nullptr;
}

namespace {

std::vector<double> default_temperatures() {
  std::vector<double> t;
  for (int i = 0; i <= 10; ++i) t.push_back(i / 5.0);
  return t;
}

std::vector<PerturbationKind> default_perturbations() {
  return {PerturbationKind::original, PerturbationKind::sentence_replacement,
          PerturbationKind::sentence_removal, PerturbationKind::ner_replacement};
}

std::vector<MetricId> default_metrics() {
  return {MetricId::em, MetricId::f1, MetricId::rouge1, MetricId::rouge2, MetricId::rougeL};
}

BackendConfig backend_from_json(const json& j) {
  BackendConfig b;
  b.name = j.at("name").get<std::string>();
  b.base_url = j.at("base_url").get<std::string>();
  b.chat_path = j.value("chat_path", b.chat_path);
  b.api_key_env = j.value("api_key_env", std::string());
  b.max_attempts = j.value("max_attempts", b.max_attempts);
  b.base_delay_ms = j.value("base_delay_ms", b.base_delay_ms);
  b.timeout_s = j.value("timeout_s", b.timeout_s);
  return b;
}

json backend_to_json(const BackendConfig& b) {
  return json{{"name", b.name},
              {"base_url", b.base_url},
              {"chat_path", b.chat_path},
              {"api_key_env", b.api_key_env},
              {"max_attempts", b.max_attempts},
              {"base_delay_ms", b.base_delay_ms},
              {"timeout_s", b.timeout_s}};
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("config must be a JSON object");

  RunConfig cfg;
  try {
    cfg.dataset_path = j.at("dataset").get<std::string>();
    cfg.models = j.at("models").get<std::vector<std::string>>();
    cfg.per_cell = j.value("per_cell", cfg.per_cell);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.temperatures =
        j.contains("temperatures") ? j.at("temperatures").get<std::vector<double>>()
                                   : default_temperatures();
    if (j.contains("perturbations")) {
      for (const auto& name : j.at("perturbations"))
        cfg.perturbations.push_back(parse_perturbation(name.get<std::string>()));
    } else {
      cfg.perturbations = default_perturbations();
    }
    cfg.runs_per_condition = j.value("runs_per_condition", cfg.runs_per_condition);
    cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
    if (j.contains("metrics")) {
      for (const auto& name : j.at("metrics"))
        cfg.metrics.push_back(parse_metric(name.get<std::string>()));
    } else {
      cfg.metrics = default_metrics();
    }
    cfg.headline_metric =
        j.contains("headline_metric") ? parse_metric(j.at("headline_metric").get<std::string>())
                                      : MetricId::f1;
    if (j.contains("backends")) {
      for (const auto& bj : j.at("backends")) {
        BackendEntry e;
        e.http = backend_from_json(bj);
        e.models = bj.value("models", std::vector<std::string>());
        cfg.backends.push_back(std::move(e));
      }
    }
    if (j.contains("reference")) {
      const json& r = j.at("reference");
      cfg.reference.model = r.value("model", std::string());
      cfg.reference.temperature = r.value("temperature", cfg.reference.temperature);
      cfg.reference.max_tokens = r.value("max_tokens", cfg.reference.max_tokens);
      cfg.reference.overrides_path = r.value("overrides", std::string());
    }
    if (j.contains("scorer")) {
      const json& s = j.at("scorer");
      cfg.scorer.sidecar_path = s.value("sidecar", std::string());
      if (s.contains("endpoint")) {
        cfg.scorer.has_endpoint = true;
        cfg.scorer.endpoint.backend = backend_from_json(s.at("endpoint"));
        cfg.scorer.endpoint.model = s.value("model", std::string());
        cfg.scorer.endpoint.embed_path =
            s.value("embed_path", cfg.scorer.endpoint.embed_path);
        cfg.scorer.endpoint.token_embed_path =
            s.value("token_embed_path", cfg.scorer.endpoint.token_embed_path);
        cfg.scorer.endpoint.cache_dir = s.value("cache_dir", std::string());
      }
    }
    cfg.concurrency = j.value("concurrency", cfg.concurrency);
    cfg.cache_dir = j.value("cache_dir", cfg.cache_dir);
    cfg.lexicon_path = j.value("lexicon", std::string());
    cfg.prefix_text = j.value("prefix_text", std::string());
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.boxplot_temperatures = j.contains("boxplot_temperatures")
                                   ? j.at("boxplot_temperatures").get<std::vector<double>>()
                                   : std::vector<double>{0.2, 1.0, 2.0};
    cfg.strict_dataset = j.value("strict_dataset", false);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config field error: ") + e.what());
  }

  if (cfg.reference.model.empty() && !cfg.models.empty()) cfg.reference.model = cfg.models[0];
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

void validate_config(const RunConfig& cfg) {
  if (cfg.dataset_path.empty()) throw InvalidConfig("config: dataset path is empty");
  if (cfg.models.empty()) throw InvalidConfig("config: at least one model is required");
  if (cfg.metrics.empty()) throw InvalidConfig("config: at least one metric is required");
  if (cfg.temperatures.empty()) throw InvalidConfig("config: temperature grid is empty");
  for (double t : cfg.temperatures)
    if (!(t >= 0.0 && t <= 2.0))
      throw InvalidConfig("config: temperature " + fmt_double(t, 3) + " outside [0, 2]");
  if (cfg.perturbations.empty()) throw InvalidConfig("config: perturbation list is empty");
  if (cfg.runs_per_condition < 1) throw InvalidConfig("config: runs_per_condition must be >= 1");
  if (cfg.max_tokens < 1) throw InvalidConfig("config: max_tokens must be >= 1");
  if (cfg.per_cell < 0) throw InvalidConfig("config: per_cell must be >= 0");
  if (cfg.concurrency < 1) throw InvalidConfig("config: concurrency must be >= 1");
  if (!is_lexical_metric(cfg.headline_metric) && !cfg.scorer.configured())
    throw InvalidConfig("config: headline metric '" +
                        std::string(metric_name(cfg.headline_metric)) +
                        "' needs a scorer (sidecar or endpoint)");
  for (MetricId m : cfg.metrics) {
    if (!is_lexical_metric(m) && !cfg.scorer.configured())
      throw InvalidConfig("config: metric '" + std::string(metric_name(m)) +
                          "' needs a scorer (sidecar or endpoint)");
    if (m == MetricId::embed_cosine && !cfg.scorer.has_endpoint)
      throw InvalidConfig(
          "config: embed_cosine needs an embedding endpoint (the sidecar holds "
          "token vectors only)");
  }
  if (std::find(cfg.metrics.begin(), cfg.metrics.end(), cfg.headline_metric) ==
      cfg.metrics.end())
    throw InvalidConfig("config: headline metric must appear in the metrics list");
  for (double t : cfg.boxplot_temperatures)
    if (std::find(cfg.temperatures.begin(), cfg.temperatures.end(), t) ==
        cfg.temperatures.end())
      throw InvalidConfig("config: boxplot temperature " + fmt_double(t, 3) +
                          " is not on the temperature grid");
}

namespace {

json config_json_object(const RunConfig& cfg);

}  // namespace

std::string config_to_json(const RunConfig& cfg) {
  return config_json_object(cfg).dump(2) + "\n";
}

std::string config_digest(const RunConfig& cfg) {
  json j = config_json_object(cfg);
  // Execution-environment fields cannot change results, so they are not part
  // of the experiment's identity: overriding them must not invalidate resume.
  j.erase("concurrency");
  j.erase("cache_dir");
  j.erase("output_dir");
  j.erase("strict_dataset");
  return sha256_hex(j.dump(2) + "\n");
}

namespace {

json config_json_object(const RunConfig& cfg) {
  json j;
  j["dataset"] = cfg.dataset_path;
  j["per_cell"] = cfg.per_cell;
  j["seed"] = cfg.seed;
  j["models"] = cfg.models;
  j["temperatures"] = cfg.temperatures;
  json perts = json::array();
  for (PerturbationKind k : cfg.perturbations) perts.push_back(perturbation_name(k));
  j["perturbations"] = perts;
  j["runs_per_condition"] = cfg.runs_per_condition;
  j["max_tokens"] = cfg.max_tokens;
  json mets = json::array();
  for (MetricId m : cfg.metrics) mets.push_back(metric_name(m));
  j["metrics"] = mets;
  j["headline_metric"] = metric_name(cfg.headline_metric);
  json backends = json::array();
  for (const auto& b : cfg.backends) {
    json bj = backend_to_json(b.http);
    bj["models"] = b.models;
    backends.push_back(bj);
  }
  j["backends"] = backends;
  j["reference"] = json{{"model", cfg.reference.model},
                        {"temperature", cfg.reference.temperature},
                        {"max_tokens", cfg.reference.max_tokens},
                        {"overrides", cfg.reference.overrides_path}};
  json scorer;
  scorer["sidecar"] = cfg.scorer.sidecar_path;
  if (cfg.scorer.has_endpoint) {
    scorer["endpoint"] = backend_to_json(cfg.scorer.endpoint.backend);
    scorer["model"] = cfg.scorer.endpoint.model;
    scorer["embed_path"] = cfg.scorer.endpoint.embed_path;
    scorer["token_embed_path"] = cfg.scorer.endpoint.token_embed_path;
    scorer["cache_dir"] = cfg.scorer.endpoint.cache_dir;
  }
  j["scorer"] = scorer;
  j["concurrency"] = cfg.concurrency;
  j["cache_dir"] = cfg.cache_dir;
  j["lexicon"] = cfg.lexicon_path;
  j["prefix_text"] = cfg.prefix_text;
  j["output_dir"] = cfg.output_dir;
  j["boxplot_temperatures"] = cfg.boxplot_temperatures;
  j["strict_dataset"] = cfg.strict_dataset;
  return j;
}

}  // namespace

}  // namespace ragbench
