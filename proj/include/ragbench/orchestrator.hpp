#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ragbench/config.hpp"
#include "ragbench/dataset.hpp"
#include "ragbench/llm.hpp"
#include "ragbench/metrics.hpp"
#include "ragbench/perturb.hpp"
#include "ragbench/refproc.hpp"
#include "ragbench/report.hpp"
#include "ragbench/stats.hpp"

namespace ragbench {

// One unit of generation work: a single run of one (sample, model,
// temperature, perturbation) condition.
struct WorkItem {
  std::string sample_id;
  std::string model;
  double temperature = 0.0;
  PerturbationKind perturbation = PerturbationKind::original;
  int run_index = 0;

  std::string key() const;  // "sample|model|temperature|perturbation|run"
  bool operator==(const WorkItem&) const = default;
};

enum class ItemStatus { pending, done, failed };
const char* item_status_name(ItemStatus s);
ItemStatus parse_item_status(const std::string& name);

struct Expansion {
  size_t condition_groups = 0;     // |models| x |T| x |perturbations| x 2
  std::vector<WorkItem> items;     // canonical (model, T, perturbation, sample, run) order
};

size_t condition_group_count(const RunConfig& cfg);
Expansion expand_conditions(const RunConfig& cfg, const std::vector<QASample>& samples);

struct ManifestItem {
  WorkItem item;
  ItemStatus status = ItemStatus::pending;
  std::string error;  // populated for failed items
};

struct RunManifest {
  std::string config_digest;
  std::string rng_algorithm;
  std::vector<ManifestItem> items;       // canonical expansion order
  std::vector<ArtifactEntry> artifacts;  // emitted files with content digests

  int count(ItemStatus s) const;
};

// Deterministic serialization (config echo included for provenance,
// no wall-clock fields), so equal runs produce equal manifest bytes.
std::string manifest_to_json(const RunManifest& m, const RunConfig& cfg);
RunManifest manifest_from_json(const std::string& text);

// One completed generation; persisted as a generations.jsonl line.
struct GenerationRecord {
  WorkItem item;
  QuestionType question_type = QuestionType::bridge;
  int fact_count = 0;
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  bool cached = false;
};

std::string generation_to_jsonl(const GenerationRecord& g);
GenerationRecord generation_from_jsonl(const std::string& line);
std::vector<GenerationRecord> read_generations(const std::string& path);

using EngineFn = std::function<GenerationResult(const GenerationRequest&)>;

// Deterministic mock engine: the result is a pure function of
// (model, prompt, temperature, max_tokens, run_index), mirroring how the
// response cache keys real API calls. Never touches the cache or network.
EngineFn mock_engine(const MockModel& model);

// Routes each request to the backend configured for its model, with the
// shared response cache and retry policy.
EngineFn http_engine(const RunConfig& cfg, const CacheStore* cache);

struct RunOptions {
  bool mock = false;
  bool dry_run = false;     // expand and report counts only; no work, no writes
  bool resume = false;      // skip items already present in generations.jsonl
  std::string resume_from;  // manifest to resume from (default: out dir's)
  int max_items = -1;       // >=0: execute at most this many items (test hook)
  bool strict = false;      // strict dataset loading
};

struct RunOutcome {
  RunManifest manifest;
  std::string manifest_path;
  std::string manifest_digest;  // sha256 of the manifest file bytes
  size_t condition_groups = 0;
  size_t total_items = 0;
  int executed = 0;
  int done = 0;
  int failed = 0;
  int pending = 0;
};

// Full pipeline: stratified sampling, perturbation, reference preparation,
// the bounded-concurrency generation loop (cache-aware, failures recorded
// per item), incremental score persistence, and — once no item is pending —
// canonical score/stats tables and the run manifest. Resume executes only
// items absent from generations.jsonl after verifying the config digest.
RunOutcome run_benchmark(const RunConfig& cfg, const RunOptions& opts);

// ---- individual stages (each persists its output for independent reruns) ----

std::vector<QASample> stage_sample(const RunConfig& cfg, bool write_output = true);
std::vector<PerturbedSample> stage_perturb(const RunConfig& cfg,
                                           const std::vector<QASample>& samples,
                                           bool write_output = true);
std::vector<ReferenceAnswer> stage_references(const RunConfig& cfg,
                                              const std::vector<QASample>& samples,
                                              const EngineFn& engine, bool write_output = true);

// Scores every generation against its reference for all configured
// metrics. Pure given its inputs; concurrency == 1 is the serial
// reference path, higher values fan the loop out over threads with
// identical results.
std::vector<ScoreRecord> score_generations(const std::vector<GenerationRecord>& gens,
                                           const std::vector<ReferenceAnswer>& refs,
                                           const RunConfig& cfg, int concurrency);

// Writes the canonical scores.jsonl and scores.csv for an already-sorted
// record set (the order score_generations returns).
void persist_scores(const RunConfig& cfg, const std::vector<ScoreRecord>& records);

struct StatsBundle {
  std::vector<RunStats> run_stats;                 // headline metric
  std::vector<ConditionStats> condition_stats;
  int skipped_zero_mean = 0;
};

StatsBundle stage_stats(const RunConfig& cfg, const std::vector<ScoreRecord>& records,
                        bool write_output = true);

// Renders the six default figures (trend / CV / boxplot, per question type)
// from out/scores.csv and writes the report manifest.
std::vector<ArtifactEntry> stage_report(const RunConfig& cfg);

std::vector<ScoreRecord> records_from_csv(const std::string& path);

// Canonical artifact locations under cfg.output_dir.
std::string samples_path(const RunConfig& cfg);
std::string perturbed_path(const RunConfig& cfg);
std::string references_path(const RunConfig& cfg);
std::string generations_path(const RunConfig& cfg);
std::string scores_jsonl_path(const RunConfig& cfg);
std::string scores_csv_path(const RunConfig& cfg);
std::string run_stats_path(const RunConfig& cfg);
std::string condition_stats_path(const RunConfig& cfg);
std::string baseline_csv_path(const RunConfig& cfg);
std::string manifest_path(const RunConfig& cfg);

}  // namespace ragbench
