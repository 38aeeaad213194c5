#pragma once

#include <map>
#include <string>
#include <vector>

#include "ragbench/metrics.hpp"
#include "ragbench/stats.hpp"

namespace ragbench {

// Writes the canonical score table: header
//   sample_id,model,temperature,perturbation,question_type,fact_count,run_index,metric,value,cached
// rows sorted by (model, temperature, perturbation, question_type,
// sample_id, run_index, metric), reals with 6 decimals, no timestamps.
// Emission is byte-stable: identical records produce identical files.
// Returns the data-row count.
size_t emit_scores_csv(const std::vector<ScoreRecord>& records, const std::string& path);

// Per-sample statistics table, same ordering conventions.
size_t emit_run_stats_csv(const std::vector<RunStats>& stats, const std::string& path);

// Per-condition aggregate table (mean_cv plus the secondary condition_cv).
size_t emit_condition_stats_csv(const std::vector<ConditionStats>& stats, const std::string& path);

enum class FigureKind { temperature_trend, cv_trend, score_boxplot };

struct FigureSpec {
  FigureKind kind = FigureKind::temperature_trend;
  std::vector<std::string> models;       // one panel per model
  std::vector<PerturbationKind> series;  // one series per perturbation
  QuestionType question_type = QuestionType::bridge;
  std::vector<double> temperatures;      // x grid (boxplots: explicit subset)
  MetricId metric = MetricId::f1;
  bool allow_gaps = false;  // absent (series, temperature) points: error or skip
  std::string output_path;  // empty renders without writing
};

// Box statistics under the documented convention: quartiles by linear
// interpolation between order statistics at rank h = (n-1)p (inclusive
// median), whiskers at the most extreme points within 1.5*IQR of the box.
struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double lo_whisker = 0.0;
  double hi_whisker = 0.0;
  std::vector<double> outliers;
};
BoxStats box_stats(std::vector<double> values);

// Mean-score trend over temperature: one panel per model, a solid mean
// line per perturbation with a +/- std shaded band. Returns the SVG markup
// and writes it to spec.output_path when set.
std::string render_temperature_trend(const FigureSpec& spec,
                                     const std::vector<ConditionStats>& stats);

// mean_cv trend with the per-model baseline CV drawn as a dotted reference
// line and annotated "baseline CV: <value>" in the top-left of each panel.
std::string render_cv_trend(const FigureSpec& spec, const std::vector<ConditionStats>& stats,
                            const std::map<std::string, double>& baseline_by_model);

// Per-perturbation boxes of per-sample mean scores at each configured
// temperature (median, IQR box, 1.5*IQR whiskers, outlier markers).
std::string render_score_boxplot(const FigureSpec& spec, const std::vector<RunStats>& stats);

// Artifact inventory: JSON array of {path, sha256, bytes} sorted by path,
// for every emitted file, so downstream readers can verify integrity.
struct ArtifactEntry {
  std::string path;  // relative to the report directory
  std::string sha256;
  size_t bytes = 0;
};
void write_report_manifest(const std::string& path, std::vector<ArtifactEntry> entries);
ArtifactEntry artifact_entry_for(const std::string& dir, const std::string& relative_path);

}  // namespace ragbench
