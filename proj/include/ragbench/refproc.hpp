#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ragbench/dataset.hpp"
#include "ragbench/llm.hpp"

namespace ragbench {

enum class ReferenceSource { generated, cached, manual_override };
const char* reference_source_name(ReferenceSource s);
ReferenceSource parse_reference_source(const std::string& name);

// A short gold answer rewritten into sentence form, used as the scoring
// reference. When source == generated, text is a prefix of the raw
// generation it was extracted from.
struct ReferenceAnswer {
  std::string sample_id;
  std::string text;
  ReferenceSource source = ReferenceSource::generated;
};

// Messages asking a backbone model to rewrite (question, answer) into a
// full sentence. The user message is exactly:
//   "Question: {question}\nAnswer: {answer}\nGenerate a complete and
//    coherent answer based on the given question and answer, being as
//    brief as possible:"
Prompt build_ref_prompt(const std::string& question, const std::string& answer);

// First sentence of the generation — first two when the trimmed text opens
// with "Yes" or "No" (case-insensitive, word boundary). Sentences end at
// . ! ? followed by whitespace or end of text; a fixed abbreviation list
// (and single-letter initials) suppresses false splits at periods. If the
// text holds fewer sentences than requested, everything is returned. The
// result is always a prefix of the trimmed input.
std::string extract_reference(const std::string& generated);

// Manual-override file: JSON object mapping sample_id -> reference text.
std::map<std::string, std::string> load_overrides(const std::string& path);
std::map<std::string, std::string> parse_overrides(const std::string& text);

struct ReferenceBackbone {
  std::string model;
  double temperature = 0.0;  // pinned low so reference prep is reproducible
  int max_tokens = 256;
  uint64_t seed = 0;  // consumed by mock backends only
};

using GenerateFn = std::function<GenerationResult(const GenerationRequest&)>;

// Prepares one reference per sample, in sample order: overrides win without
// any generation call; everything else goes through generate_fn (mock or
// HTTP) and extract_reference. concurrency bounds the in-flight calls.
std::vector<ReferenceAnswer> prepare_references(const std::vector<QASample>& samples,
                                                const std::map<std::string, std::string>& overrides,
                                                const ReferenceBackbone& backbone,
                                                const GenerateFn& generate_fn,
                                                int concurrency = 1);

std::string references_to_json(const std::vector<ReferenceAnswer>& refs);
std::vector<ReferenceAnswer> references_from_json(const std::string& text);

}  // namespace ragbench
