#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ragbench/dataset.hpp"

namespace ragbench {

// Temperature-scaled softmax over token logits. T > 0 divides the logits
// before exponentiation (computed with max-logit subtraction); T = 0 is the
// greedy limit: a one-hot at the argmax, ties resolved to the lowest index.
std::vector<double> temperature_softmax(std::span<const double> logits, double T);

double shannon_entropy(std::span<const double> probs);

struct Message {
  std::string role;
  std::string content;
};

using Prompt = std::vector<Message>;

// RAG prompt: a fixed system instruction plus one user message holding the
// serialized documents and the question. The exact serialization is
// documented in the README and never changes between runs.
Prompt build_rag_prompt(const std::string& question, const std::vector<Document>& context);

// Canonical byte form of a prompt, used for digests and cache keys.
std::string serialize_prompt(const Prompt& prompt);

struct GenerationRequest {
  std::string model;
  Prompt prompt;
  double temperature = 0.0;
  int max_tokens = 1000;
  int run_index = 0;
  uint64_t seed = 0;  // consumed by the mock backend only
};

enum class FinishReason { stop, length, error };
const char* finish_reason_name(FinishReason r);
FinishReason parse_finish_reason(const std::string& name);

struct GenerationResult {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  int attempts = 0;     // 0 when served from cache
  bool from_cache = false;
  long latency_ms = 0;
};

// Deterministic substitute for a hosted model. Two table shapes: a fixed
// per-position logit table, or a toy bigram table (initial logits plus a
// per-token transition row). Sampling follows temperature_softmax.
struct MockModel {
  std::vector<std::string> vocabulary;
  std::vector<std::vector<double>> position_logits;    // fixed-table mode
  std::vector<double> initial_logits;                  // bigram mode
  std::vector<std::vector<double>> transition_logits;  // bigram mode, row per token
  int max_length = 32;
  int stop_token = -1;  // sampling this token ends the sequence (not emitted)

  bool bigram() const { return !transition_logits.empty(); }
  void validate() const;

  static MockModel fixed_table(std::vector<std::string> vocab,
                               std::vector<std::vector<double>> rows);
  // Built-in bigram table used by --mock runs: one strongly preferred
  // successor per token so low temperatures are near-deterministic while
  // high temperatures scatter across the whole vocabulary.
  static MockModel default_qa_model();
};

// Samples a token sequence from the mock model. Fully determined by
// (model, request.seed, request.run_index, temperature, max_tokens).
GenerationResult mock_generate(const GenerationRequest& request, const MockModel& model);

// One chat-completions-compatible HTTP backend.
struct BackendConfig {
  std::string name;
  std::string base_url;                     // e.g. https://api.openai.com
  std::string chat_path = "/v1/chat/completions";
  std::string api_key_env;                  // default: <NAME>_API_KEY
  int max_attempts = 5;
  int base_delay_ms = 1000;                 // exponential backoff base, full jitter
  int timeout_s = 120;

  std::string key_env_name() const;
};

// Content-addressed response cache: one self-describing JSON file per key.
// Concurrent readers are fine; inserts go through an atomic rename.
class CacheStore {
 public:
  explicit CacheStore(std::string dir);

  struct Entry {
    std::string key;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 0;
    int run_index = 0;
    std::string prompt_digest;
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
  };

  std::optional<Entry> lookup(const std::string& key) const;  // throws CacheCorruption
  void insert(const Entry& entry) const;

  const std::string& dir() const { return dir_; }

  static std::string compute_key(const std::string& model, const std::string& prompt_bytes,
                                 double temperature, int max_tokens, int run_index);

 private:
  std::string path_for(const std::string& key) const;
  std::string dir_;
};

// Executes a generation against an HTTP backend, consulting the cache
// first. Retries throttle/server errors with exponential backoff and full
// jitter, then persists the result. Throws ConfigError for out-of-range
// temperature and BackendError once retries are exhausted.
GenerationResult generate(const GenerationRequest& request, const BackendConfig& backend,
                          const CacheStore* cache);

// Shared JSON-over-HTTP POST with the same retry policy; used by the
// embedding providers as well.
std::string post_json_with_retries(const BackendConfig& backend, const std::string& path,
                                   const std::string& body, int* attempts_out);

}  // namespace ragbench
