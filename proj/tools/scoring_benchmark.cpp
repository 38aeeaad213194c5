// Compares the serial reference scoring path (concurrency=1) against the
// OpenMP-parallel path on a synthetic workload, verifies the outputs are
// identical, and reports wall times.
//
// Usage: scoring_benchmark [pairs] [tokens-per-text] [threads]

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "ragbench/orchestrator.hpp"
#include "ragbench/util.hpp"

using namespace ragbench;

namespace {

std::string random_text(SeededRng& rng, int tokens) {
  static const std::vector<std::string> vocab = {
      "alpha", "bravo", "charlie", "delta", "echo",  "foxtrot", "golf",   "hotel",
      "india", "juliet", "kilo",   "lima",  "mike",  "november", "oscar", "papa",
      "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey", "xray"};
  std::string out;
  for (int i = 0; i < tokens; ++i) {
    if (i) out += ' ';
    out += vocab[rng.next_below(vocab.size())];
  }
  return out;
}

double run_scoring(const std::vector<GenerationRecord>& gens,
                   const std::vector<ReferenceAnswer>& refs, const RunConfig& cfg,
                   int concurrency, std::vector<ScoreRecord>* out) {
  auto t0 = std::chrono::steady_clock::now();
  *out = score_generations(gens, refs, cfg, concurrency);
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && (std::string(argv[1]) == "-h" || std::string(argv[1]) == "--help")) {
    std::cout << "Usage: scoring_benchmark [pairs=2000] [tokens-per-text=160] [threads=hw]\n";
    return 0;
  }
  int pairs = argc > 1 ? std::atoi(argv[1]) : 2000;
  int tokens = argc > 2 ? std::atoi(argv[2]) : 160;
  int threads = argc > 3 ? std::atoi(argv[3])
                         : static_cast<int>(std::thread::hardware_concurrency());
  if (pairs <= 0 || tokens <= 0) {
    std::cerr << "scoring_benchmark: pairs and tokens-per-text must be positive integers\n";
    return 1;
  }
  if (threads < 2) threads = 2;

  SeededRng rng(derive_seed(42, "scoring-benchmark"));
  std::vector<GenerationRecord> gens;
  std::vector<ReferenceAnswer> refs;
  gens.reserve(pairs);
  for (int i = 0; i < pairs; ++i) {
    std::string id = "bench-" + std::to_string(i);
    GenerationRecord g;
    g.item.sample_id = id;
    g.item.model = "bench";
    g.item.temperature = 1.0;
    g.item.perturbation = PerturbationKind::original;
    g.item.run_index = 0;
    g.question_type = i % 2 ? QuestionType::comparison : QuestionType::bridge;
    g.fact_count = 2;
    g.text = random_text(rng, tokens);
    gens.push_back(std::move(g));
    refs.push_back({id, random_text(rng, tokens), ReferenceSource::generated});
  }

  RunConfig cfg;
  cfg.metrics = {MetricId::em, MetricId::f1, MetricId::rouge1, MetricId::rouge2,
                 MetricId::rougeL};

  std::vector<ScoreRecord> serial, parallel;
  double warm = run_scoring(gens, refs, cfg, 1, &serial);  // warm caches
  double t_serial = run_scoring(gens, refs, cfg, 1, &serial);
  double t_parallel = run_scoring(gens, refs, cfg, threads, &parallel);

  bool identical = serial.size() == parallel.size();
  for (size_t i = 0; identical && i < serial.size(); ++i)
    identical = serial[i].sample_id == parallel[i].sample_id &&
                serial[i].metric == parallel[i].metric &&
                serial[i].value == parallel[i].value;

  std::cout << "pairs: " << pairs << ", tokens/text: " << tokens << ", threads: " << threads
            << "\n"
            << "records per pass: " << serial.size() << " (warm-up " << fmt_double(warm, 3)
            << " s)\n"
            << "serial reference: " << fmt_double(t_serial, 3) << " s\n"
            << "parallel:         " << fmt_double(t_parallel, 3) << " s\n"
            << "speedup:          "
            << fmt_double(t_parallel > 0 ? t_serial / t_parallel : 0.0, 2) << "x\n"
            << "outputs identical: " << (identical ? "yes" : "NO") << "\n";
  return identical ? 0 : 1;
}
