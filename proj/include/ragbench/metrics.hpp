#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ragbench/llm.hpp"
#include "ragbench/perturb.hpp"

namespace ragbench {

enum class MetricId { em, f1, rouge1, rouge2, rougeL, bertscore_f1, embed_cosine };
const char* metric_name(MetricId m);
MetricId parse_metric(const std::string& name);

// One scored (generation, metric) observation.
struct ScoreRecord {
  std::string sample_id;
  std::string model;
  double temperature = 0.0;
  PerturbationKind perturbation = PerturbationKind::original;
  QuestionType question_type = QuestionType::bridge;
  int fact_count = 0;
  int run_index = 0;
  MetricId metric = MetricId::f1;
  double value = 0.0;  // always in [0, 1]
  bool cached = false;
};

// QA-standard answer normalization: lowercase, strip punctuation, drop the
// articles {a, an, the}, collapse whitespace, split into tokens.
std::vector<std::string> normalize(const std::string& text);

// 1 iff the normalized token lists are identical (both empty counts as equal).
double exact_match(const std::string& pred, const std::string& ref);

// Multiset-overlap F1 over normalized tokens. Both lists empty -> 1;
// exactly one empty -> 0.
double token_f1(const std::string& pred, const std::string& ref);

enum class RougeVariant { rouge1, rouge2, rougeL };

// F1 over clipped n-gram matches (variants 1 and 2) or the LCS length
// (variant L), on normalized tokens. The empty conventions of token_f1
// apply to the unit lists (n-grams for 1/2, tokens for L): both empty -> 1,
// exactly one empty -> 0. This keeps rouge(x, x) = 1 even for one-token x.
double rouge(const std::string& pred, const std::string& ref, RougeVariant variant);

// Contextual token embeddings for one text, supplied externally.
struct TokenEmbeddings {
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> vectors;  // one per token, common dimension
};

struct BertScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Cosine similarity clamped to [0, 1]; a zero-norm vector scores 0.
double cosine_clamped(std::span<const double> a, std::span<const double> b);

// Greedy maximum-cosine matching: recall averages, over reference tokens,
// the best clamped cosine against any prediction token; precision is the
// mirror image; f1 the harmonic mean. No idf weighting, no rescaling.
BertScore bertscore_greedy(const TokenEmbeddings& pred, const TokenEmbeddings& ref);

// Precomputed token-embedding sidecar: JSON object mapping sha256(text) ->
// {"tokens": [...], "vectors": [[...], ...]}.
class EmbeddingSidecar {
 public:
  static EmbeddingSidecar load(const std::string& path);
  static EmbeddingSidecar parse(const std::string& text);

  std::optional<TokenEmbeddings> lookup(const std::string& text) const;
  size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<std::string, TokenEmbeddings>> entries_;  // digest -> embeddings
};

// Embedding endpoints (sentence-level and token-level) sharing the llm
// module's retry policy and a content-addressed file cache.
struct EmbedderConfig {
  BackendConfig backend;
  std::string model;
  std::string embed_path = "/v1/embeddings";              // {"model", "input":[text]}
  std::string token_embed_path = "/v1/token_embeddings";  // {"model", "input": text}
  std::string cache_dir;                                  // empty disables caching
};

std::vector<double> sentence_embedding(const std::string& text, const EmbedderConfig& cfg);
TokenEmbeddings fetch_token_embeddings(const std::string& text, const EmbedderConfig& cfg);

// Clamped cosine similarity of the two sentence embeddings.
double embed_cosine(const std::string& pred, const std::string& ref, const EmbedderConfig& cfg);

// Scores every requested lexical metric (em/f1/rouge*) for one pair.
// Semantic metrics are not computable here and are rejected.
std::vector<std::pair<MetricId, double>> lexical_scores(const std::string& pred,
                                                        const std::string& ref,
                                                        const std::vector<MetricId>& metrics);

bool is_lexical_metric(MetricId m);

}  // namespace ragbench
