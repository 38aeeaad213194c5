// ragbench command-line driver.
//
// Subcommands cover each pipeline stage (sample, perturb, refprep, run,
// score, stats, report, fragile); every stage persists its output so stages
// can be re-run independently. Exit codes: 0 success, 1 fatal config or
// dataset error, 2 run completed with failed items.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ragbench/errors.hpp"
#include "ragbench/orchestrator.hpp"
#include "ragbench/util.hpp"

namespace {

using namespace ragbench;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  bool strict = false;
  int concurrency = 0;  // 0: keep config value
  bool mock = false;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool with_mock) {
  cmd->add_option("--config", args->config_path, "Run configuration file (JSON)")
      ->required();
  cmd->add_option("--out", args->out_dir, "Override the configured output directory");
  cmd->add_flag("--strict", args->strict, "Treat malformed dataset records as fatal");
  cmd->add_option("--concurrency", args->concurrency, "Override the worker-pool size")
      ->check(CLI::PositiveNumber);
  if (with_mock)
    cmd->add_flag("--mock", args->mock,
                  "Use the deterministic offline backend instead of HTTP");
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg = load_config(args.config_path);
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  if (args.concurrency > 0) cfg.concurrency = args.concurrency;
  if (args.strict) cfg.strict_dataset = true;
  return cfg;
}

std::vector<QASample> load_or_sample(const RunConfig& cfg) {
  if (file_exists(samples_path(cfg)))
    return samples_from_json(read_file(samples_path(cfg)));
  return stage_sample(cfg);
}

void require_backends(const RunConfig& cfg) {
  for (const auto& model : cfg.models)
    if (!cfg.backend_for(model))
      throw FatalConfig("no backend configured for model '" + model +
                        "' (use --mock for offline runs)");
  if (!cfg.reference.model.empty() && !cfg.backend_for(cfg.reference.model))
    throw FatalConfig("no backend configured for reference model '" + cfg.reference.model +
                      "' (use --mock for offline runs)");
}

EngineFn make_engine(const RunConfig& cfg, bool mock, const MockModel& mm,
                     const CacheStore* cache) {
  if (mock) return mock_engine(mm);
  require_backends(cfg);
  return http_engine(cfg, cache);
}

int cmd_sample(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  auto samples = stage_sample(cfg);
  std::cout << "sampled " << samples.size() << " items -> " << samples_path(cfg) << "\n";
  return 0;
}

int cmd_perturb(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  auto samples = load_or_sample(cfg);
  auto perturbed = stage_perturb(cfg, samples);
  std::cout << "perturbed " << samples.size() << " samples x " << cfg.perturbations.size()
            << " kinds -> " << perturbed_path(cfg) << " (" << perturbed.size()
            << " contexts)\n";
  return 0;
}

int cmd_refprep(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  auto samples = load_or_sample(cfg);
  MockModel mm = MockModel::default_qa_model();
  CacheStore cache(cfg.cache_dir);
  EngineFn engine = make_engine(cfg, args.mock, mm, &cache);
  auto refs = stage_references(cfg, samples, engine);
  int overridden = 0;
  for (const auto& r : refs)
    if (r.source == ReferenceSource::manual_override) ++overridden;
  std::cout << "prepared " << refs.size() << " references (" << overridden
            << " manual overrides) -> " << references_path(cfg) << "\n";
  return 0;
}

int cmd_run(const CommonArgs& args, bool dry_run, const std::string& resume_from,
            bool resume_flag, int max_items) {
  RunConfig cfg = resolve_config(args);
  if (!args.mock && !dry_run) require_backends(cfg);

  RunOptions opts;
  opts.mock = args.mock;
  opts.dry_run = dry_run;
  opts.resume = resume_flag || !resume_from.empty();
  opts.resume_from = resume_from;
  opts.max_items = max_items;
  opts.strict = args.strict;

  RunOutcome oc = run_benchmark(cfg, opts);
  std::cout << "condition groups: " << oc.condition_groups << "\n"
            << "work items:       " << oc.total_items << "\n";
  if (dry_run) {
    std::cout << "dry run: nothing executed\n";
    return 0;
  }
  std::cout << "executed:         " << oc.executed << "\n"
            << "done:             " << oc.done << "\n"
            << "failed:           " << oc.failed << "\n"
            << "pending:          " << oc.pending << "\n"
            << "manifest:         " << oc.manifest_path << " (sha256 " << oc.manifest_digest
            << ")\n";
  if (oc.failed > 0) {
    std::cerr << "error: " << oc.failed << " items failed; see the manifest for details\n";
    return 2;
  }
  return 0;
}

int cmd_score(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  auto gens = read_generations(generations_path(cfg));
  if (gens.empty()) throw FatalConfig("no generations found at " + generations_path(cfg));
  auto refs = references_from_json(read_file(references_path(cfg)));
  auto records = score_generations(gens, refs, cfg, cfg.concurrency);
  persist_scores(cfg, records);
  std::cout << "scored " << gens.size() << " generations x " << cfg.metrics.size()
            << " metrics -> " << scores_csv_path(cfg) << " (" << records.size()
            << " records)\n";
  return 0;
}

int cmd_stats(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  auto records = records_from_csv(scores_csv_path(cfg));
  StatsBundle bundle = stage_stats(cfg, records);
  std::cout << "run stats:       " << bundle.run_stats.size() << " rows -> "
            << run_stats_path(cfg) << "\n"
            << "condition stats: " << bundle.condition_stats.size() << " rows -> "
            << condition_stats_path(cfg) << "\n";
  if (bundle.skipped_zero_mean > 0)
    std::cout << "skipped (all-zero scores, CV undefined): " << bundle.skipped_zero_mean
              << "\n";
  return 0;
}

int cmd_report(const CommonArgs& args) {
  RunConfig cfg = resolve_config(args);
  auto artifacts = stage_report(cfg);
  std::cout << "report: " << artifacts.size() << " artifacts -> " << cfg.output_dir
            << "/report_manifest.json\n";
  return 0;
}

int cmd_fragile(const CommonArgs& args, const std::string& model, double temperature,
                const std::string& type_name, const std::string& pert_name) {
  RunConfig cfg = resolve_config(args);
  std::string m = model.empty() ? cfg.models.at(0) : model;
  auto records = records_from_csv(scores_csv_path(cfg));
  auto rs = run_stats_from_records(records, cfg.headline_metric);
  FragileSample f = fragile_samples(rs, m, temperature, parse_question_type(type_name),
                                    parse_perturbation(pert_name));
  std::cout << "most fragile sample for " << m << " @ T=" << fmt_double(temperature, 2)
            << ", " << type_name << ", " << pert_name << ":\n"
            << "  sample:         " << f.sample_id << "\n"
            << "  mean original:  " << fmt_double(f.mean_original, 6) << "\n"
            << "  mean perturbed: " << fmt_double(f.mean_perturbed, 6) << "\n"
            << "  score drop:     " << fmt_double(f.gap, 6) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ragbench: quantifies how sampling temperature and retrieved-context "
      "perturbations jointly affect retrieval-augmented QA"};
  app.require_subcommand(1);

  CommonArgs sample_args, perturb_args, refprep_args, run_args, score_args, stats_args,
      report_args, fragile_args;

  CLI::App* sample = app.add_subcommand("sample", "Stratified-sample the dataset");
  add_common(sample, &sample_args, false);

  CLI::App* perturb = app.add_subcommand("perturb", "Emit perturbed contexts");
  add_common(perturb, &perturb_args, false);

  CLI::App* refprep = app.add_subcommand("refprep", "Prepare reference answers");
  add_common(refprep, &refprep_args, true);

  CLI::App* run = app.add_subcommand("run", "Execute the full benchmark pipeline");
  add_common(run, &run_args, true);
  bool dry_run = false;
  bool resume_flag = false;
  std::string resume_from;
  int max_items = -1;
  run->add_flag("--dry-run", dry_run, "Expand the condition matrix and exit");
  run->add_option("--resume", resume_from,
                  "Resume from a manifest (path; executes only unfinished items)")
      ->expected(0, 1);
  run->add_option("--max-items", max_items,
                  "Execute at most N pending items, then stop (testing hook)")
      ->group("");  // hidden

  CLI::App* score = app.add_subcommand("score", "Score generations against references");
  add_common(score, &score_args, false);

  CLI::App* stats = app.add_subcommand("stats", "Aggregate score statistics");
  add_common(stats, &stats_args, false);

  CLI::App* report = app.add_subcommand("report", "Render figures and the report manifest");
  add_common(report, &report_args, false);

  CLI::App* fragile = app.add_subcommand(
      "fragile", "Find the sample hurt most by a perturbation at one condition");
  add_common(fragile, &fragile_args, false);
  std::string f_model, f_type = "bridge", f_pert = "sentence_replacement";
  double f_temp = 0.0;
  fragile->add_option("--model", f_model, "Model id (default: first configured model)");
  fragile->add_option("--temperature", f_temp, "Temperature on the configured grid")
      ->required();
  fragile->add_option("--type", f_type, "Question type: bridge or comparison");
  fragile->add_option("--perturbation", f_pert, "Perturbation kind name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) return cmd_sample(sample_args);
    if (perturb->parsed()) return cmd_perturb(perturb_args);
    if (refprep->parsed()) return cmd_refprep(refprep_args);
    if (run->parsed()) {
      resume_flag = run->count("--resume") > 0;
      return cmd_run(run_args, dry_run, resume_from, resume_flag, max_items);
    }
    if (score->parsed()) return cmd_score(score_args);
    if (stats->parsed()) return cmd_stats(stats_args);
    if (report->parsed()) return cmd_report(report_args);
    if (fragile->parsed()) return cmd_fragile(fragile_args, f_model, f_temp, f_type, f_pert);
  } catch (const ragbench::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
