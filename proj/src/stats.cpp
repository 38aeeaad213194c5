#include "ragbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "ragbench/errors.hpp"

namespace ragbench {

namespace {

auto key_tuple(const ConditionKey& k) {
  return std::make_tuple(k.model, k.temperature, static_cast<int>(k.perturbation),
                         static_cast<int>(k.question_type));
}

}  // namespace

bool condition_key_less(const ConditionKey& a, const ConditionKey& b) {
  return key_tuple(a) < key_tuple(b);
}

RunStats per_sample_stats(std::span<const double> scores, const std::string& sample_id,
                          const ConditionKey& key) {
  if (scores.size() < 2)
    throw TooFewRuns("per_sample_stats needs >= 2 scores, got " + std::to_string(scores.size()));
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0))
      throw InvalidConfig("score outside [0,1] for sample '" + sample_id + "'");

  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());

  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  double std = std::sqrt(ss / static_cast<double>(scores.size() - 1));

  if (mean == 0.0)
    throw ZeroMean("sample '" + sample_id + "': all-zero runs, CV undefined");

  RunStats r;
  r.sample_id = sample_id;
  r.key = key;
  r.n_runs = static_cast<int>(scores.size());
  r.mean = mean;
  r.std = std;
  r.cv = std / mean;
  return r;
}

ConditionStats aggregate_condition(const std::vector<RunStats>& stats) {
  if (stats.empty()) throw EmptyGroup("aggregate_condition: empty RunStats list");
  const ConditionKey& key = stats.front().key;
  for (const auto& s : stats)
    if (!(s.key == key))
      throw MixedKeys("aggregate_condition: RunStats span multiple condition keys");

  ConditionStats c;
  c.key = key;
  c.n_samples = static_cast<int>(stats.size());
  for (const auto& s : stats) {
    c.mean_of_means += s.mean;
    c.mean_of_stds += s.std;
    c.mean_cv += s.cv;
  }
  double n = static_cast<double>(stats.size());
  c.mean_of_means /= n;
  c.mean_of_stds /= n;
  c.mean_cv /= n;
  c.condition_cv = c.mean_of_means > 0.0 ? c.mean_of_stds / c.mean_of_means : 0.0;
  return c;
}

double baseline_cv(const std::vector<ConditionStats>& condition_stats) {
  if (condition_stats.empty()) throw EmptyGroup("baseline_cv: empty ConditionStats list");
  const auto& first = condition_stats.front().key;
  double total = 0.0;
  for (const auto& c : condition_stats) {
    if (c.key.perturbation != PerturbationKind::original)
      throw NonBaselineEntry("baseline_cv: entry with perturbation '" +
                             std::string(perturbation_name(c.key.perturbation)) + "'");
    if (c.key.model != first.model || c.key.question_type != first.question_type)
      throw MixedKeys("baseline_cv: entries span multiple (model, question_type) groups");
    total += c.mean_cv;
  }
  return total / static_cast<double>(condition_stats.size());
}

FragileSample fragile_samples(const std::vector<RunStats>& run_stats, const std::string& model,
                              double temperature, QuestionType question_type,
                              PerturbationKind perturbation) {
  std::map<std::string, double> original, perturbed;
  for (const auto& s : run_stats) {
    if (s.key.model != model || s.key.temperature != temperature ||
        s.key.question_type != question_type)
      continue;
    if (s.key.perturbation == PerturbationKind::original)
      original[s.sample_id] = s.mean;
    else if (s.key.perturbation == perturbation)
      perturbed[s.sample_id] = s.mean;
  }

  bool found = false;
  FragileSample best;
  for (const auto& [id, mean_orig] : original) {
    auto it = perturbed.find(id);
    if (it == perturbed.end()) continue;
    double gap = mean_orig - it->second;
    // std::map iterates ids in ascending order, so strict > keeps the
    // lexicographically smallest id on ties.
    if (!found || gap > best.gap) {
      best = {id, gap, mean_orig, it->second};
      found = true;
    }
  }
  if (!found)
    throw NoComparablePairs("no sample has both Original and target-perturbation stats");
  return best;
}

std::vector<RunStats> run_stats_from_records(const std::vector<ScoreRecord>& records,
                                             MetricId metric, int* skipped_zero_mean) {
  // Group scores by (condition key, sample), ordered canonically.
  std::map<std::tuple<std::string, double, int, int, std::string>, std::vector<double>> groups;
  for (const auto& r : records) {
    if (r.metric != metric) continue;
    groups[{r.model, r.temperature, static_cast<int>(r.perturbation),
            static_cast<int>(r.question_type), r.sample_id}]
        .push_back(r.value);
  }
  std::vector<RunStats> out;
  int skipped = 0;
  for (const auto& [g, scores] : groups) {
    ConditionKey key{std::get<0>(g), std::get<1>(g), static_cast<PerturbationKind>(std::get<2>(g)),
                     static_cast<QuestionType>(std::get<3>(g))};
    try {
      out.push_back(per_sample_stats(scores, std::get<4>(g), key));
    } catch (const ZeroMean&) {
      ++skipped;  // all-zero runs carry no CV information; surfaced via the counter
    }
  }
  if (skipped_zero_mean) *skipped_zero_mean = skipped;
  return out;
}

std::vector<ConditionStats> condition_stats_from_run_stats(const std::vector<RunStats>& stats) {
  std::map<std::tuple<std::string, double, int, int>, std::vector<RunStats>> groups;
  for (const auto& s : stats)
    groups[{s.key.model, s.key.temperature, static_cast<int>(s.key.perturbation),
            static_cast<int>(s.key.question_type)}]
        .push_back(s);
  std::vector<ConditionStats> out;
  out.reserve(groups.size());
  for (const auto& [g, members] : groups) out.push_back(aggregate_condition(members));
  return out;
}

}  // namespace ragbench
