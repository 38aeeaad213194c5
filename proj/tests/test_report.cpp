// Tests for report emission: CSV tables (exact bytes, ordering, quoting),
// box statistics, SVG figure rendering, and the artifact manifest.
#include "doctest.h"
#include "oracles.hpp"

#include "ragbench/errors.hpp"
#include "ragbench/report.hpp"
#include "ragbench/util.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <unistd.h>
#include <vector>

using namespace ragbench;
using json = nlohmann::json;

namespace {

std::string fresh_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("ragbench_report_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

ConditionKey key_of(const std::string& model, double T, PerturbationKind p, QuestionType q) {
  ConditionKey k;
  k.model = model;
  k.temperature = T;
  k.perturbation = p;
  k.question_type = q;
  return k;
}

ScoreRecord score_of(const std::string& sample, const std::string& model, double T,
                     PerturbationKind p, int run, MetricId metric, double value) {
  ScoreRecord r;
  r.sample_id = sample;
  r.model = model;
  r.temperature = T;
  r.perturbation = p;
  r.question_type = QuestionType::bridge;
  r.fact_count = 2;
  r.run_index = run;
  r.metric = metric;
  r.value = value;
  return r;
}

// A small but complete stats grid: two models, three temperatures, two
// series (original + sentence_removal), bridge questions.
std::vector<ConditionStats> demo_grid() {
  std::vector<ConditionStats> out;
  for (const std::string& model : {"m1", "m2"}) {
    for (double T : {0.0, 1.0, 2.0}) {
      for (PerturbationKind p :
           {PerturbationKind::original, PerturbationKind::sentence_removal}) {
        ConditionStats c;
        c.key = key_of(model, T, p, QuestionType::bridge);
        c.n_samples = 4;
        c.mean_of_means = 0.9 - 0.2 * T - (p == PerturbationKind::original ? 0.0 : 0.1);
        c.mean_of_stds = 0.05 * T;
        c.mean_cv = 0.1 * T + (p == PerturbationKind::original ? 0.0 : 0.05);
        c.condition_cv = c.mean_cv * 1.1;
        out.push_back(c);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("scores CSV is byte-exact, sorted, and quoted") {
  std::string dir = fresh_dir("scores");
  std::string path = dir + "/scores.csv";

  std::vector<ScoreRecord> records;
  // Insert out of order; emission must sort canonically.
  records.push_back(score_of("s2", "m", 1.0, PerturbationKind::original, 0, MetricId::f1, 0.25));
  records.push_back(score_of("s1", "m", 0.2, PerturbationKind::original, 1, MetricId::f1, 0.5));
  records.push_back(score_of("s1", "m", 0.2, PerturbationKind::original, 0, MetricId::f1, 1.0));
  records.push_back(score_of("s1", "m", 0.2, PerturbationKind::original, 0, MetricId::em, 0.0));
  auto quoted = score_of("we,ird\"id", "m", 0.2, PerturbationKind::sentence_removal, 0,
                         MetricId::f1, 0.125);
  quoted.cached = true;
  records.push_back(quoted);

  size_t n = emit_scores_csv(records, path);
  CHECK(n == 5);
  CHECK(read_file(path) ==
        "sample_id,model,temperature,perturbation,question_type,fact_count,run_index,metric,"
        "value,cached\n"
        "s1,m,0.200000,original,bridge,2,0,em,0.000000,0\n"
        "s1,m,0.200000,original,bridge,2,0,f1,1.000000,0\n"
        "s1,m,0.200000,original,bridge,2,1,f1,0.500000,0\n"
        "\"we,ird\"\"id\",m,0.200000,sentence_removal,bridge,2,0,f1,0.125000,1\n"
        "s2,m,1.000000,original,bridge,2,0,f1,0.250000,0\n");

  // Re-emission of the same records is byte-identical.
  std::string again = dir + "/scores2.csv";
  emit_scores_csv(records, again);
  CHECK(read_file(again) == read_file(path));

  // Empty input still produces the header.
  std::string empty = dir + "/empty.csv";
  CHECK(emit_scores_csv({}, empty) == 0);
  CHECK(read_file(empty) ==
        "sample_id,model,temperature,perturbation,question_type,fact_count,run_index,metric,"
        "value,cached\n");
}

TEST_CASE("run-stats CSV sorts by condition key then sample id") {
  std::string dir = fresh_dir("runstats");
  std::string path = dir + "/run_stats.csv";

  std::vector<RunStats> stats;
  auto add = [&](const std::string& model, double T, const std::string& id, double mean) {
    RunStats s;
    s.sample_id = id;
    s.key = key_of(model, T, PerturbationKind::original, QuestionType::bridge);
    s.n_runs = 3;
    s.mean = mean;
    s.std = 0.1;
    s.cv = 0.1 / mean;
    stats.push_back(s);
  };
  add("m", 1.0, "s1", 0.5);
  add("m", 0.2, "s2", 0.8);
  add("m", 0.2, "s1", 0.4);

  CHECK(emit_run_stats_csv(stats, path) == 3);
  CHECK(read_file(path) ==
        "model,temperature,perturbation,question_type,sample_id,n_runs,mean,std,cv\n"
        "m,0.200000,original,bridge,s1,3,0.400000,0.100000,0.250000\n"
        "m,0.200000,original,bridge,s2,3,0.800000,0.100000,0.125000\n"
        "m,1.000000,original,bridge,s1,3,0.500000,0.100000,0.200000\n");
}

TEST_CASE("condition-stats CSV uses the canonical key order") {
  std::string dir = fresh_dir("condstats");
  std::string path = dir + "/condition_stats.csv";

  std::vector<ConditionStats> stats;
  ConditionStats a;
  a.key = key_of("m", 0.4, PerturbationKind::sentence_removal, QuestionType::comparison);
  a.n_samples = 2;
  a.mean_of_means = 0.5;
  a.mean_of_stds = 0.05;
  a.mean_cv = 0.1;
  a.condition_cv = 0.1;
  ConditionStats b = a;
  b.key = key_of("m", 0.4, PerturbationKind::original, QuestionType::bridge);
  stats = {a, b};

  CHECK(emit_condition_stats_csv(stats, path) == 2);
  CHECK(read_file(path) ==
        "model,temperature,perturbation,question_type,n_samples,mean_of_means,mean_of_stds,"
        "mean_cv,condition_cv\n"
        "m,0.400000,original,bridge,2,0.500000,0.050000,0.100000,0.100000\n"
        "m,0.400000,sentence_removal,comparison,2,0.500000,0.050000,0.100000,0.100000\n");
}

TEST_CASE("box_stats matches the quantile oracle on random data") {
  SeededRng rng(derive_seed(21, "box-oracle"));
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 1 + rng.next_below(30);
    std::vector<double> values(n);
    for (auto& v : values) v = rng.next_unit();

    auto b = box_stats(values);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    CHECK(b.q1 == doctest::Approx(oracles::quantile(sorted, 0.25)).epsilon(1e-12));
    CHECK(b.median == doctest::Approx(oracles::quantile(sorted, 0.5)).epsilon(1e-12));
    CHECK(b.q3 == doctest::Approx(oracles::quantile(sorted, 0.75)).epsilon(1e-12));
    CHECK(b.lo_whisker >= sorted.front() - 1e-15);
    CHECK(b.hi_whisker <= sorted.back() + 1e-15);
    CHECK(b.lo_whisker <= b.q1 + 1e-15);
    CHECK(b.hi_whisker >= b.q3 - 1e-15);
  }
}

TEST_CASE("box_stats hand-checked: quartiles, whiskers, outliers") {
  // Odd count, no outliers: {1,2,3,4,5} -> q1=2, med=3, q3=4, whiskers 1 and 5.
  auto odd = box_stats({5.0, 1.0, 3.0, 2.0, 4.0});
  CHECK(odd.q1 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(odd.median == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(odd.q3 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(odd.lo_whisker == 1.0);
  CHECK(odd.hi_whisker == 5.0);
  CHECK(odd.outliers.empty());

  // Even count: {1,2,3,4} -> h(.25)=0.75 -> 1.75; med 2.5; q3 3.25.
  auto even = box_stats({4.0, 2.0, 1.0, 3.0});
  CHECK(even.q1 == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(even.median == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(even.q3 == doctest::Approx(3.25).epsilon(1e-12));

  // Outlier: {1,2,3,4,100}: q1=2, q3=4, fence hi=4+3=7 -> 100 is out,
  // hi whisker retreats to 4.
  auto out = box_stats({1.0, 2.0, 3.0, 4.0, 100.0});
  CHECK(out.q3 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(out.hi_whisker == 4.0);
  REQUIRE(out.outliers.size() == 1);
  CHECK(out.outliers[0] == 100.0);

  // Single value: everything collapses onto it.
  auto one = box_stats({0.6});
  CHECK(one.median == 0.6);
  CHECK(one.q1 == 0.6);
  CHECK(one.q3 == 0.6);
  CHECK(one.lo_whisker == 0.6);
  CHECK(one.hi_whisker == 0.6);

  CHECK_THROWS_AS(box_stats({}), EmptyGroup);
}

TEST_CASE("temperature trend renders deterministically with all series") {
  auto stats = demo_grid();
  FigureSpec spec;
  spec.kind = FigureKind::temperature_trend;
  spec.models = {"m1", "m2"};
  spec.series = {PerturbationKind::original, PerturbationKind::sentence_removal};
  spec.question_type = QuestionType::bridge;
  spec.temperatures = {0.0, 1.0, 2.0};
  spec.metric = MetricId::f1;

  std::string svg = render_temperature_trend(spec, stats);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  // One panel per model, labeled.
  CHECK(svg.find("m1") != std::string::npos);
  CHECK(svg.find("m2") != std::string::npos);
  // Legend names each series.
  CHECK(svg.find("original") != std::string::npos);
  CHECK(svg.find("sentence_removal") != std::string::npos);

  // Determinism: the exact same bytes on a second render.
  CHECK(render_temperature_trend(spec, stats) == svg);

  // Writing to a file stores the same markup.
  std::string dir = fresh_dir("trend");
  spec.output_path = dir + "/fig.svg";
  std::string written = render_temperature_trend(spec, stats);
  CHECK(read_file(spec.output_path) == written);
  CHECK(written == svg);
}

TEST_CASE("missing series points are errors unless gaps are allowed") {
  auto stats = demo_grid();
  // Remove one (m2, 2.0, sentence_removal) point.
  std::vector<ConditionStats> holed;
  for (const auto& c : stats)
    if (!(c.key.model == "m2" && c.key.temperature == 2.0 &&
          c.key.perturbation == PerturbationKind::sentence_removal))
      holed.push_back(c);

  FigureSpec spec;
  spec.models = {"m1", "m2"};
  spec.series = {PerturbationKind::original, PerturbationKind::sentence_removal};
  spec.temperatures = {0.0, 1.0, 2.0};

  CHECK_THROWS_AS(render_temperature_trend(spec, holed), MissingSeries);
  spec.allow_gaps = true;
  std::string svg = render_temperature_trend(spec, holed);
  CHECK(svg.find("</svg>") != std::string::npos);

  // Spec validation errors.
  FigureSpec bad;
  bad.series = {PerturbationKind::original};
  bad.temperatures = {0.0};
  CHECK_THROWS_AS(render_temperature_trend(bad, stats), InvalidConfig);  // no models
  bad.models = {"m1"};
  bad.temperatures.clear();
  CHECK_THROWS_AS(render_temperature_trend(bad, stats), InvalidConfig);  // no temperatures
  bad.temperatures = {0.0};
  bad.series.clear();
  CHECK_THROWS_AS(render_temperature_trend(bad, stats), InvalidConfig);  // no series
}

TEST_CASE("cv trend draws and annotates the per-model baseline") {
  auto stats = demo_grid();
  FigureSpec spec;
  spec.kind = FigureKind::cv_trend;
  spec.models = {"m1", "m2"};
  spec.series = {PerturbationKind::original, PerturbationKind::sentence_removal};
  spec.temperatures = {0.0, 1.0, 2.0};

  std::map<std::string, double> baselines{{"m1", 0.1}, {"m2", 0.275}};
  std::string svg = render_cv_trend(spec, stats, baselines);
  CHECK(svg.find("baseline CV: 0.100") != std::string::npos);
  CHECK(svg.find("baseline CV: 0.275") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);  // dotted reference line
  CHECK(render_cv_trend(spec, stats, baselines) == svg);

  // A model without a baseline is an error.
  std::map<std::string, double> partial{{"m1", 0.1}};
  CHECK_THROWS_AS(render_cv_trend(spec, stats, partial), MissingSeries);
}

TEST_CASE("score boxplot renders per-sample distributions") {
  std::vector<RunStats> run_stats;
  for (const std::string& model : {"m1"}) {
    for (double T : {0.2, 1.0, 2.0}) {
      for (PerturbationKind p :
           {PerturbationKind::original, PerturbationKind::word_reordering}) {
        for (int i = 0; i < 6; ++i) {
          RunStats s;
          s.sample_id = "s" + std::to_string(i);
          s.key = key_of(model, T, p, QuestionType::bridge);
          s.n_runs = 3;
          s.mean = 0.2 + 0.1 * i + (p == PerturbationKind::original ? 0.1 : 0.0);
          s.std = 0.05;
          s.cv = s.std / s.mean;
          run_stats.push_back(s);
        }
      }
    }
  }

  FigureSpec spec;
  spec.kind = FigureKind::score_boxplot;
  spec.models = {"m1"};
  spec.series = {PerturbationKind::original, PerturbationKind::word_reordering};
  spec.temperatures = {0.2, 1.0, 2.0};

  std::string svg = render_score_boxplot(spec, run_stats);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("original") != std::string::npos);
  CHECK(svg.find("word_reordering") != std::string::npos);
  CHECK(render_score_boxplot(spec, run_stats) == svg);

  // Missing (series, temperature) group: error unless gaps allowed.
  FigureSpec wrong = spec;
  wrong.temperatures = {0.2, 0.7};
  CHECK_THROWS_AS(render_score_boxplot(wrong, run_stats), MissingSeries);
  wrong.allow_gaps = true;
  CHECK(render_score_boxplot(wrong, run_stats).find("</svg>") != std::string::npos);
}

TEST_CASE("artifact manifest lists files sorted by path with true digests") {
  std::string dir = fresh_dir("manifest");
  write_file_atomic(dir + "/b.csv", "header\n1,2\n");
  write_file_atomic(dir + "/a.svg", "<svg></svg>\n");

  auto ea = artifact_entry_for(dir, "a.svg");
  auto eb = artifact_entry_for(dir, "b.csv");
  CHECK(ea.path == "a.svg");
  CHECK(ea.sha256 == sha256_hex("<svg></svg>\n"));
  CHECK(ea.bytes == 12);
  CHECK(eb.sha256 == sha256_hex("header\n1,2\n"));

  std::string mpath = dir + "/report_manifest.json";
  write_report_manifest(mpath, {eb, ea});  // deliberately unsorted input

  json j = json::parse(read_file(mpath));
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 2);
  CHECK(j[0].at("path") == "a.svg");  // sorted by path
  CHECK(j[1].at("path") == "b.csv");
  CHECK(j[0].at("sha256") == ea.sha256);
  CHECK(j[1].at("bytes").get<size_t>() == eb.bytes);

  // Byte-stable across rewrites.
  std::string first = read_file(mpath);
  write_report_manifest(mpath, {ea, eb});
  CHECK(read_file(mpath) == first);

  CHECK_THROWS_AS(artifact_entry_for(dir, "missing.bin"), FileNotFound);
}
