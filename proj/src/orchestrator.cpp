#include "ragbench/orchestrator.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"
#include "ragbench/errors.hpp"
#include "ragbench/util.hpp"

namespace ragbench {

using nlohmann::json;

std::string WorkItem::key() const {
  return sample_id + '|' + model + '|' + fmt_double(temperature, 6) + '|' +
         perturbation_name(perturbation) + '|' + std::to_string(run_index);
}

const char* item_status_name(ItemStatus s) {
  switch (s) {
    case ItemStatus::pending: return "pending";
    case ItemStatus::done: return "done";
    case ItemStatus::failed: return "failed";
  }
  return "pending";
}

ItemStatus parse_item_status(const std::string& name) {
  if (name == "pending") return ItemStatus::pending;
  if (name == "done") return ItemStatus::done;
  if (name == "failed") return ItemStatus::failed;
  throw ParseError("unknown item status '" + name + "'");
}

size_t condition_group_count(const RunConfig& cfg) {
  return cfg.models.size() * cfg.temperatures.size() * cfg.perturbations.size() * 2;
}

Expansion expand_conditions(const RunConfig& cfg, const std::vector<QASample>& samples) {
  validate_config(cfg);
  Expansion e;
  e.condition_groups = condition_group_count(cfg);
  e.items.reserve(cfg.models.size() * cfg.temperatures.size() * cfg.perturbations.size() *
                  samples.size() * static_cast<size_t>(cfg.runs_per_condition));
  for (const auto& model : cfg.models)
    for (double t : cfg.temperatures)
      for (PerturbationKind kind : cfg.perturbations)
        for (const auto& s : samples)
          for (int run = 0; run < cfg.runs_per_condition; ++run)
            e.items.push_back({s.id, model, t, kind, run});
  return e;
}

int RunManifest::count(ItemStatus s) const {
  int n = 0;
  for (const auto& i : items)
    if (i.status == s) ++n;
  return n;
}

namespace {

json item_to_json(const ManifestItem& mi) {
  return json{{"sample_id", mi.item.sample_id},
              {"model", mi.item.model},
              {"temperature", mi.item.temperature},
              {"perturbation", perturbation_name(mi.item.perturbation)},
              {"run_index", mi.item.run_index},
              {"status", item_status_name(mi.status)},
              {"error", mi.error}};
}

ManifestItem item_from_json(const json& j) {
  ManifestItem mi;
  mi.item.sample_id = j.at("sample_id").get<std::string>();
  mi.item.model = j.at("model").get<std::string>();
  mi.item.temperature = j.at("temperature").get<double>();
  mi.item.perturbation = parse_perturbation(j.at("perturbation").get<std::string>());
  mi.item.run_index = j.at("run_index").get<int>();
  mi.status = parse_item_status(j.at("status").get<std::string>());
  mi.error = j.value("error", std::string());
  return mi;
}

}  // namespace

std::string manifest_to_json(const RunManifest& m, const RunConfig& cfg) {
  json j;
  j["config_digest"] = m.config_digest;
  j["rng_algorithm"] = m.rng_algorithm;
  j["config"] = json::parse(config_to_json(cfg));
  json items = json::array();
  for (const auto& mi : m.items) items.push_back(item_to_json(mi));
  j["items"] = items;
  json artifacts = json::array();
  for (const auto& a : m.artifacts)
    artifacts.push_back(json{{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  j["artifacts"] = artifacts;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  RunManifest m;
  try {
    m.config_digest = j.at("config_digest").get<std::string>();
    m.rng_algorithm = j.value("rng_algorithm", std::string());
    for (const auto& it : j.at("items")) m.items.push_back(item_from_json(it));
    if (j.contains("artifacts"))
      for (const auto& a : j.at("artifacts"))
        m.artifacts.push_back({a.at("path").get<std::string>(),
                               a.at("sha256").get<std::string>(),
                               a.at("bytes").get<size_t>()});
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string generation_to_jsonl(const GenerationRecord& g) {
  return json{{"sample_id", g.item.sample_id},
              {"model", g.item.model},
              {"temperature", g.item.temperature},
              {"perturbation", perturbation_name(g.item.perturbation)},
              {"run_index", g.item.run_index},
              {"question_type", question_type_name(g.question_type)},
              {"fact_count", g.fact_count},
              {"text", g.text},
              {"finish_reason", finish_reason_name(g.finish_reason)},
              {"cached", g.cached}}
      .dump();
}

GenerationRecord generation_from_jsonl(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed generation line: ") + e.what());
  }
  GenerationRecord g;
  try {
    g.item.sample_id = j.at("sample_id").get<std::string>();
    g.item.model = j.at("model").get<std::string>();
    g.item.temperature = j.at("temperature").get<double>();
    g.item.perturbation = parse_perturbation(j.at("perturbation").get<std::string>());
    g.item.run_index = j.at("run_index").get<int>();
    g.question_type = parse_question_type(j.at("question_type").get<std::string>());
    g.fact_count = j.at("fact_count").get<int>();
    g.text = j.at("text").get<std::string>();
    g.finish_reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
    g.cached = j.at("cached").get<bool>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("generation line missing fields: ") + e.what());
  }
  return g;
}

std::vector<GenerationRecord> read_generations(const std::string& path) {
  std::vector<GenerationRecord> out;
  if (!file_exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  size_t line_no = 0;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  for (const auto& l : lines) {
    ++line_no;
    if (trim(l).empty()) continue;
    try {
      out.push_back(generation_from_jsonl(l));
    } catch (const Error&) {
      if (line_no == lines.size()) {
        // A torn final line from an interrupted append is recoverable.
        std::cerr << "warning: dropping torn final line of " << path << "\n";
        continue;
      }
      throw;
    }
  }
  return out;
}

EngineFn mock_engine(const MockModel& model) {
  return [model](const GenerationRequest& req) {
    GenerationRequest r = req;
    // Seed from the same material as the response-cache key, so identical
    // requests yield identical text exactly as a cached API would.
    r.seed = fnv1a64(CacheStore::compute_key(r.model, serialize_prompt(r.prompt), r.temperature,
                                             r.max_tokens, r.run_index));
    return mock_generate(r, model);
  };
}

EngineFn http_engine(const RunConfig& cfg, const CacheStore* cache) {
  return [cfg, cache](const GenerationRequest& req) {
    const BackendEntry* entry = cfg.backend_for(req.model);
    if (!entry) throw ConfigError("no configured backend serves model '" + req.model + "'");
    return generate(req, entry->http, cache);
  };
}

std::string samples_path(const RunConfig& cfg) { return cfg.output_dir + "/samples.json"; }
std::string perturbed_path(const RunConfig& cfg) { return cfg.output_dir + "/perturbed.json"; }
std::string references_path(const RunConfig& cfg) { return cfg.output_dir + "/references.json"; }
std::string generations_path(const RunConfig& cfg) {
  return cfg.output_dir + "/generations.jsonl";
}
std::string scores_jsonl_path(const RunConfig& cfg) { return cfg.output_dir + "/scores.jsonl"; }
std::string scores_csv_path(const RunConfig& cfg) { return cfg.output_dir + "/scores.csv"; }
std::string run_stats_path(const RunConfig& cfg) { return cfg.output_dir + "/run_stats.csv"; }
std::string condition_stats_path(const RunConfig& cfg) {
  return cfg.output_dir + "/condition_stats.csv";
}
std::string baseline_csv_path(const RunConfig& cfg) { return cfg.output_dir + "/baseline_cv.csv"; }
std::string manifest_path(const RunConfig& cfg) { return cfg.output_dir + "/run_manifest.json"; }

std::vector<QASample> stage_sample(const RunConfig& cfg, bool write_output) {
  LoadStats stats;
  std::vector<QASample> all = load_dataset(cfg.dataset_path, cfg.strict_dataset, &stats);
  if (stats.skipped > 0)
    std::cerr << "warning: skipped " << stats.skipped << " malformed dataset records\n";
  std::vector<QASample> chosen = stratified_sample(all, {cfg.per_cell, cfg.seed});
  if (write_output) {
    ensure_dir(cfg.output_dir);
    write_file_atomic(samples_path(cfg), samples_to_json(chosen));
  }
  return chosen;
}

namespace {

bool kind_needs_lexicon(PerturbationKind k) {
  return k == PerturbationKind::random_noise_injection ||
         k == PerturbationKind::synonym_replacement ||
         k == PerturbationKind::antonym_replacement;
}

}  // namespace

std::vector<PerturbedSample> stage_perturb(const RunConfig& cfg,
                                           const std::vector<QASample>& samples,
                                           bool write_output) {
  PerturbOptions opts;
  Lexicon lexicon;
  bool needs_lexicon = false;
  for (PerturbationKind k : cfg.perturbations) needs_lexicon |= kind_needs_lexicon(k);
  if (needs_lexicon) {
    if (cfg.lexicon_path.empty())
      throw MissingLexicon("configured perturbations need a lexicon file");
    lexicon = Lexicon::load(cfg.lexicon_path);
    opts.lexicon = &lexicon;
  }
  opts.prefix = cfg.prefix_text;

  std::vector<PerturbedSample> out;
  out.reserve(samples.size() * cfg.perturbations.size());
  for (const auto& s : samples)
    for (PerturbationKind kind : cfg.perturbations)
      out.push_back(apply_perturbation(s, kind, cfg.seed, opts));
  if (write_output) {
    ensure_dir(cfg.output_dir);
    write_file_atomic(perturbed_path(cfg), perturbed_to_json(out));
  }
  return out;
}

std::vector<ReferenceAnswer> stage_references(const RunConfig& cfg,
                                              const std::vector<QASample>& samples,
                                              const EngineFn& engine, bool write_output) {
  std::map<std::string, std::string> overrides;
  if (!cfg.reference.overrides_path.empty())
    overrides = load_overrides(cfg.reference.overrides_path);
  ReferenceBackbone backbone;
  backbone.model = cfg.reference.model;
  backbone.temperature = cfg.reference.temperature;
  backbone.max_tokens = cfg.reference.max_tokens;
  backbone.seed = derive_seed(cfg.seed, "reference");
  auto refs = prepare_references(samples, overrides, backbone, engine, cfg.concurrency);
  if (write_output) {
    ensure_dir(cfg.output_dir);
    write_file_atomic(references_path(cfg), references_to_json(refs));
  }
  return refs;
}

namespace {

std::vector<ScoreRecord> score_one(const GenerationRecord& g, const std::string& ref_text,
                                   const std::vector<MetricId>& metrics,
                                   const EmbeddingSidecar* sidecar, const ScorerConfig& scorer) {
  std::vector<ScoreRecord> out;
  out.reserve(metrics.size());
  for (MetricId m : metrics) {
    double value = 0.0;
    switch (m) {
      case MetricId::em: value = exact_match(g.text, ref_text); break;
      case MetricId::f1: value = token_f1(g.text, ref_text); break;
      case MetricId::rouge1: value = rouge(g.text, ref_text, RougeVariant::rouge1); break;
      case MetricId::rouge2: value = rouge(g.text, ref_text, RougeVariant::rouge2); break;
      case MetricId::rougeL: value = rouge(g.text, ref_text, RougeVariant::rougeL); break;
      case MetricId::bertscore_f1: {
        TokenEmbeddings pe, re;
        if (sidecar) {
          auto p = sidecar->lookup(g.text);
          auto r = sidecar->lookup(ref_text);
          if (!p || !r)
            throw ConfigError("embedding sidecar lacks an entry for a scored text (digests " +
                              sha256_hex(g.text) + ", " + sha256_hex(ref_text) + ")");
          pe = *p;
          re = *r;
        } else {
          pe = fetch_token_embeddings(g.text, scorer.endpoint);
          re = fetch_token_embeddings(ref_text, scorer.endpoint);
        }
        value = bertscore_greedy(pe, re).f1;
        break;
      }
      case MetricId::embed_cosine:
        value = embed_cosine(g.text, ref_text, scorer.endpoint);
        break;
    }
    ScoreRecord r;
    r.sample_id = g.item.sample_id;
    r.model = g.item.model;
    r.temperature = g.item.temperature;
    r.perturbation = g.item.perturbation;
    r.question_type = g.question_type;
    r.fact_count = g.fact_count;
    r.run_index = g.item.run_index;
    r.metric = m;
    r.value = value;
    r.cached = g.cached;
    out.push_back(std::move(r));
  }
  return out;
}

std::string score_to_jsonl(const ScoreRecord& r) {
  return json{{"sample_id", r.sample_id},
              {"model", r.model},
              {"temperature", r.temperature},
              {"perturbation", perturbation_name(r.perturbation)},
              {"question_type", question_type_name(r.question_type)},
              {"fact_count", r.fact_count},
              {"run_index", r.run_index},
              {"metric", metric_name(r.metric)},
              {"value", r.value},
              {"cached", r.cached}}
      .dump();
}

void sort_records(std::vector<ScoreRecord>& records) {
  std::sort(records.begin(), records.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.model, a.temperature, a.perturbation, a.question_type, a.sample_id,
                    a.run_index, a.metric) < std::tie(b.model, b.temperature, b.perturbation,
                                                      b.question_type, b.sample_id, b.run_index,
                                                      b.metric);
  });
}

void sort_generations(std::vector<GenerationRecord>& gens) {
  std::sort(gens.begin(), gens.end(), [](const GenerationRecord& a, const GenerationRecord& b) {
    return std::tie(a.item.model, a.item.temperature, a.item.perturbation, a.item.sample_id,
                    a.item.run_index) < std::tie(b.item.model, b.item.temperature,
                                                 b.item.perturbation, b.item.sample_id,
                                                 b.item.run_index);
  });
}

}  // namespace

std::vector<ScoreRecord> score_generations(const std::vector<GenerationRecord>& gens,
                                           const std::vector<ReferenceAnswer>& refs,
                                           const RunConfig& cfg, int concurrency) {
  std::map<std::string, std::string> ref_by_id;
  for (const auto& r : refs) ref_by_id[r.sample_id] = r.text;
  for (const auto& g : gens)
    if (!ref_by_id.count(g.item.sample_id))
      throw DatasetError("no reference prepared for sample '" + g.item.sample_id + "'");

  std::optional<EmbeddingSidecar> sidecar;
  bool wants_bertscore =
      std::find(cfg.metrics.begin(), cfg.metrics.end(), MetricId::bertscore_f1) !=
      cfg.metrics.end();
  if (wants_bertscore && !cfg.scorer.sidecar_path.empty())
    sidecar = EmbeddingSidecar::load(cfg.scorer.sidecar_path);

  if (concurrency < 1) concurrency = 1;
  std::vector<std::vector<ScoreRecord>> per_gen(gens.size());
  std::exception_ptr first_error;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(concurrency) if (concurrency > 1)
#endif
  for (size_t i = 0; i < gens.size(); ++i) {
    try {
      per_gen[i] = score_one(gens[i], ref_by_id.at(gens[i].item.sample_id), cfg.metrics,
                             sidecar ? &*sidecar : nullptr, cfg.scorer);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(score_error)
#endif
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<ScoreRecord> out;
  out.reserve(gens.size() * cfg.metrics.size());
  for (auto& batch : per_gen)
    for (auto& r : batch) out.push_back(std::move(r));
  sort_records(out);
  return out;
}

void persist_scores(const RunConfig& cfg, const std::vector<ScoreRecord>& records) {
  ensure_dir(cfg.output_dir);
  std::string lines;
  for (const auto& r : records) lines += score_to_jsonl(r) + '\n';
  write_file_atomic(scores_jsonl_path(cfg), lines);
  emit_scores_csv(records, scores_csv_path(cfg));
}

StatsBundle stage_stats(const RunConfig& cfg, const std::vector<ScoreRecord>& records,
                        bool write_output) {
  StatsBundle bundle;
  bundle.run_stats = run_stats_from_records(records, cfg.headline_metric,
                                            &bundle.skipped_zero_mean);
  if (bundle.skipped_zero_mean > 0)
    std::cerr << "warning: " << bundle.skipped_zero_mean
              << " sample-condition groups had all-zero scores (no CV); skipped\n";
  bundle.condition_stats = condition_stats_from_run_stats(bundle.run_stats);

  if (write_output) {
    ensure_dir(cfg.output_dir);
    emit_run_stats_csv(bundle.run_stats, run_stats_path(cfg));
    emit_condition_stats_csv(bundle.condition_stats, condition_stats_path(cfg));

    bool has_original = std::find(cfg.perturbations.begin(), cfg.perturbations.end(),
                                  PerturbationKind::original) != cfg.perturbations.end();
    if (has_original) {
      std::string csv = "model,question_type,baseline_cv\n";
      for (const auto& model : cfg.models)
        for (QuestionType qt : {QuestionType::bridge, QuestionType::comparison}) {
          std::vector<ConditionStats> originals;
          for (const auto& c : bundle.condition_stats)
            if (c.key.model == model && c.key.question_type == qt &&
                c.key.perturbation == PerturbationKind::original)
              originals.push_back(c);
          if (originals.empty()) continue;
          csv += model + ',' + question_type_name(qt) + ',' +
                 fmt_double(baseline_cv(originals), 6) + '\n';
        }
      write_file_atomic(baseline_csv_path(cfg), csv);
    }
  }
  return bundle;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<ScoreRecord> records_from_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("scores CSV is empty: " + path);
  const std::string expected =
      "sample_id,model,temperature,perturbation,question_type,fact_count,run_index,metric,value,"
      "cached";
  if (line != expected) throw SchemaError("unexpected scores CSV header in " + path);
  std::vector<ScoreRecord> out;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 10)
      throw SchemaError(path + ":" + std::to_string(line_no) + ": expected 10 fields");
    ScoreRecord r;
    try {
      r.sample_id = fields[0];
      r.model = fields[1];
      r.temperature = std::stod(fields[2]);
      r.perturbation = parse_perturbation(fields[3]);
      r.question_type = parse_question_type(fields[4]);
      r.fact_count = std::stoi(fields[5]);
      r.run_index = std::stoi(fields[6]);
      r.metric = parse_metric(fields[7]);
      r.value = std::stod(fields[8]);
      r.cached = fields[9] == "1";
    } catch (const std::exception& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ArtifactEntry> stage_report(const RunConfig& cfg) {
  std::vector<ScoreRecord> records = records_from_csv(scores_csv_path(cfg));
  StatsBundle bundle = stage_stats(cfg, records, /*write_output=*/false);

  bool has_original = std::find(cfg.perturbations.begin(), cfg.perturbations.end(),
                                PerturbationKind::original) != cfg.perturbations.end();
  if (!has_original)
    throw InvalidConfig("report needs the original perturbation for baseline CV figures");

  std::vector<ArtifactEntry> artifacts;
  ensure_dir(cfg.output_dir);
  for (QuestionType qt : {QuestionType::bridge, QuestionType::comparison}) {
    std::string suffix = question_type_name(qt);

    FigureSpec trend;
    trend.kind = FigureKind::temperature_trend;
    trend.models = cfg.models;
    trend.series = cfg.perturbations;
    trend.question_type = qt;
    trend.temperatures = cfg.temperatures;
    trend.metric = cfg.headline_metric;
    trend.allow_gaps = true;
    trend.output_path = cfg.output_dir + "/fig_temperature_trend_" + suffix + ".svg";
    render_temperature_trend(trend, bundle.condition_stats);
    artifacts.push_back(artifact_entry_for(cfg.output_dir, "fig_temperature_trend_" + suffix +
                                                               ".svg"));

    std::map<std::string, double> baselines;
    for (const auto& model : cfg.models) {
      std::vector<ConditionStats> originals;
      for (const auto& c : bundle.condition_stats)
        if (c.key.model == model && c.key.question_type == qt &&
            c.key.perturbation == PerturbationKind::original)
          originals.push_back(c);
      if (!originals.empty()) baselines[model] = baseline_cv(originals);
    }
    FigureSpec cv = trend;
    cv.kind = FigureKind::cv_trend;
    cv.output_path = cfg.output_dir + "/fig_cv_trend_" + suffix + ".svg";
    render_cv_trend(cv, bundle.condition_stats, baselines);
    artifacts.push_back(artifact_entry_for(cfg.output_dir, "fig_cv_trend_" + suffix + ".svg"));

    FigureSpec box = trend;
    box.kind = FigureKind::score_boxplot;
    box.temperatures = cfg.boxplot_temperatures;
    box.output_path = cfg.output_dir + "/fig_score_boxplot_" + suffix + ".svg";
    render_score_boxplot(box, bundle.run_stats);
    artifacts.push_back(artifact_entry_for(cfg.output_dir, "fig_score_boxplot_" + suffix +
                                                               ".svg"));
  }

  for (const char* name : {"scores.csv", "run_stats.csv", "condition_stats.csv",
                           "baseline_cv.csv"})
    if (file_exists(cfg.output_dir + "/" + name))
      artifacts.push_back(artifact_entry_for(cfg.output_dir, name));

  write_report_manifest(cfg.output_dir + "/report_manifest.json", artifacts);
  return artifacts;
}

RunOutcome run_benchmark(const RunConfig& cfg, const RunOptions& opts) {
  validate_config(cfg);
  RunConfig effective = cfg;
  if (opts.strict) effective.strict_dataset = true;
  const std::string digest = config_digest(cfg);

  std::vector<QASample> samples = stage_sample(effective, /*write_output=*/!opts.dry_run);
  Expansion expansion = expand_conditions(cfg, samples);

  RunOutcome outcome;
  outcome.condition_groups = expansion.condition_groups;
  outcome.total_items = expansion.items.size();

  if (opts.dry_run) {
    outcome.pending = static_cast<int>(expansion.items.size());
    outcome.manifest.config_digest = digest;
    outcome.manifest.rng_algorithm = SeededRng::kAlgorithm;
    return outcome;
  }

  ensure_dir(cfg.output_dir);

  // Resume: the generation log is the source of truth for completed items.
  std::set<std::string> done_keys;
  if (opts.resume) {
    const std::string prev_path =
        opts.resume_from.empty() ? manifest_path(cfg) : opts.resume_from;
    RunManifest previous = manifest_from_json(read_file(prev_path));
    if (previous.config_digest != digest)
      throw ManifestMismatch("manifest was produced by a different config (digest " +
                             previous.config_digest + " vs " + digest + ")");
    for (const auto& g : read_generations(generations_path(cfg)))
      done_keys.insert(g.item.key());
  } else {
    // Fresh run: truncate progress files.
    std::ofstream(generations_path(cfg), std::ios::trunc);
    std::ofstream(scores_jsonl_path(cfg), std::ios::trunc);
  }

  std::vector<PerturbedSample> perturbed = stage_perturb(cfg, samples);

  MockModel mock = MockModel::default_qa_model();
  CacheStore cache(cfg.cache_dir);
  EngineFn engine = opts.mock ? mock_engine(mock) : http_engine(cfg, &cache);

  std::vector<ReferenceAnswer> refs = stage_references(cfg, samples, engine);
  std::map<std::string, std::string> ref_by_id;
  for (const auto& r : refs) ref_by_id[r.sample_id] = r.text;

  std::map<std::string, const QASample*> sample_by_id;
  for (const auto& s : samples) sample_by_id[s.id] = &s;
  std::map<std::pair<std::string, int>, const PerturbedSample*> perturbed_by_key;
  for (const auto& p : perturbed)
    perturbed_by_key[{p.base_id, static_cast<int>(p.kind)}] = &p;

  std::vector<MetricId> lexical;
  for (MetricId m : cfg.metrics)
    if (is_lexical_metric(m)) lexical.push_back(m);

  // Work selection: canonical order, minus completed items, capped by the
  // interruption hook.
  std::vector<const WorkItem*> todo;
  for (const auto& item : expansion.items)
    if (!done_keys.count(item.key())) todo.push_back(&item);
  if (opts.max_items >= 0 && static_cast<size_t>(opts.max_items) < todo.size())
    todo.resize(static_cast<size_t>(opts.max_items));

  std::map<std::string, std::pair<ItemStatus, std::string>> statuses;
  for (const auto& item : expansion.items)
    statuses[item.key()] = {done_keys.count(item.key()) ? ItemStatus::done : ItemStatus::pending,
                            ""};

  std::ofstream gen_out(generations_path(cfg), std::ios::app);
  std::ofstream score_out(scores_jsonl_path(cfg), std::ios::app);
  std::mutex io_mutex;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(cfg.concurrency) if (cfg.concurrency > 1)
#endif
  for (size_t i = 0; i < todo.size(); ++i) {
    const WorkItem& item = *todo[i];
    try {
      const QASample* s = sample_by_id.at(item.sample_id);
      const PerturbedSample* p =
          perturbed_by_key.at({item.sample_id, static_cast<int>(item.perturbation)});

      GenerationRequest req;
      req.model = item.model;
      req.prompt = build_rag_prompt(p->query, p->context);
      req.temperature = item.temperature;
      req.max_tokens = cfg.max_tokens;
      req.run_index = item.run_index;
      GenerationResult result = engine(req);

      GenerationRecord g;
      g.item = item;
      g.question_type = s->question_type;
      g.fact_count = s->fact_count;
      g.text = result.text;
      g.finish_reason = result.finish_reason;
      g.cached = result.from_cache;

      // Incremental score records for the lexical metrics.
      std::vector<ScoreRecord> partial =
          score_one(g, ref_by_id.at(item.sample_id), lexical, nullptr, cfg.scorer);

      std::lock_guard<std::mutex> lock(io_mutex);
      gen_out << generation_to_jsonl(g) << '\n';
      gen_out.flush();
      for (const auto& r : partial) score_out << score_to_jsonl(r) << '\n';
      score_out.flush();
      statuses[item.key()] = {ItemStatus::done, ""};
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(io_mutex);
      statuses[item.key()] = {ItemStatus::failed, e.what()};
    } catch (...) {
      std::lock_guard<std::mutex> lock(io_mutex);
      statuses[item.key()] = {ItemStatus::failed, "unknown error"};
    }
  }
  gen_out.close();
  score_out.close();
  outcome.executed = static_cast<int>(todo.size());

  RunManifest manifest;
  manifest.config_digest = digest;
  manifest.rng_algorithm = SeededRng::kAlgorithm;
  for (const auto& item : expansion.items) {
    const auto& [status, error] = statuses.at(item.key());
    manifest.items.push_back({item, status, error});
  }
  outcome.done = manifest.count(ItemStatus::done);
  outcome.failed = manifest.count(ItemStatus::failed);
  outcome.pending = manifest.count(ItemStatus::pending);

  if (outcome.pending == 0 && outcome.failed == 0) {
    // Every item succeeded: canonicalize the generation log, then derive
    // scores and statistics. Runs with failures stop at the manifest so the
    // failure record survives and resume can retry; aggregate tables over an
    // incomplete grid would be misleading.
    std::vector<GenerationRecord> gens = read_generations(generations_path(cfg));
    sort_generations(gens);
    std::string canonical;
    for (const auto& g : gens) canonical += generation_to_jsonl(g) + '\n';
    write_file_atomic(generations_path(cfg), canonical);

    std::vector<ScoreRecord> records = score_generations(gens, refs, cfg, cfg.concurrency);
    persist_scores(cfg, records);
    stage_stats(cfg, records);
  }

  for (const char* name :
       {"samples.json", "perturbed.json", "references.json", "generations.jsonl", "scores.jsonl",
        "scores.csv", "run_stats.csv", "condition_stats.csv", "baseline_cv.csv"})
    if (file_exists(cfg.output_dir + "/" + name))
      manifest.artifacts.push_back(artifact_entry_for(cfg.output_dir, name));

  std::string manifest_bytes = manifest_to_json(manifest, cfg);
  write_file_atomic(manifest_path(cfg), manifest_bytes);

  outcome.manifest = std::move(manifest);
  outcome.manifest_path = manifest_path(cfg);
  outcome.manifest_digest = sha256_hex(manifest_bytes);
  return outcome;
}

}  // namespace ragbench
