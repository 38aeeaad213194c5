#pragma once

#include <span>
#include <string>
#include <vector>

#include "ragbench/metrics.hpp"
#include "ragbench/perturb.hpp"

namespace ragbench {

// One cell of the experimental matrix.
struct ConditionKey {
  std::string model;
  double temperature = 0.0;
  PerturbationKind perturbation = PerturbationKind::original;
  QuestionType question_type = QuestionType::bridge;

  bool operator==(const ConditionKey&) const = default;
};

// Canonical ordering used by every CSV and report: model, temperature,
// perturbation, question_type.
bool condition_key_less(const ConditionKey& a, const ConditionKey& b);

// Mean/std/CV of one sample's scores across repeated runs of one condition.
struct RunStats {
  std::string sample_id;
  ConditionKey key;
  int n_runs = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, n-1 denominator
  double cv = 0.0;   // std / mean
};

// Per-condition aggregate over samples. mean_cv averages per-sample CVs
// (per-sample-first order); condition_cv = mean_of_stds / mean_of_means is
// the alternative aggregation order, emitted as a secondary column.
struct ConditionStats {
  ConditionKey key;
  int n_samples = 0;
  double mean_of_means = 0.0;
  double mean_of_stds = 0.0;
  double mean_cv = 0.0;
  double condition_cv = 0.0;
};

// Throws TooFewRuns for fewer than two scores and ZeroMean when the run
// mean is zero (CV undefined; only all-zero runs can trigger this since
// scores live in [0,1]).
RunStats per_sample_stats(std::span<const double> scores, const std::string& sample_id,
                          const ConditionKey& key);

// Arithmetic means of the per-sample fields. Throws EmptyGroup / MixedKeys.
ConditionStats aggregate_condition(const std::vector<RunStats>& stats);

// Mean of mean_cv over the temperature grid for the unperturbed condition;
// the stability reference line annotated on CV figures. All entries must be
// Original and share (model, question_type).
double baseline_cv(const std::vector<ConditionStats>& condition_stats);

struct FragileSample {
  std::string sample_id;
  double gap = 0.0;  // mean_original - mean_perturbed
  double mean_original = 0.0;
  double mean_perturbed = 0.0;
};

// Sample with the largest mean-score drop from Original to the target
// perturbation at one (model, temperature, question_type); ties go to the
// lexicographically smallest sample_id. Samples missing either side are
// excluded; none comparable -> NoComparablePairs.
FragileSample fragile_samples(const std::vector<RunStats>& run_stats, const std::string& model,
                              double temperature, QuestionType question_type,
                              PerturbationKind perturbation);

// Groups ScoreRecords of one metric by (sample, condition) and computes
// RunStats for each. Sample groups whose run mean is zero are skipped (CV
// undefined); skipped_zero_mean counts them so callers can surface it.
std::vector<RunStats> run_stats_from_records(const std::vector<ScoreRecord>& records,
                                             MetricId metric, int* skipped_zero_mean = nullptr);

// Aggregates RunStats into one ConditionStats per distinct key, in
// canonical key order.
std::vector<ConditionStats> condition_stats_from_run_stats(const std::vector<RunStats>& stats);

}  // namespace ragbench
