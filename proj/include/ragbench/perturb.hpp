#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ragbench/dataset.hpp"

namespace ragbench {

enum class PerturbationKind {
  original,
  sentence_replacement,
  sentence_removal,
  ner_replacement,
  word_reordering,
  source_reordering,
  random_noise_injection,
  synonym_replacement,
  antonym_replacement,
  prefix_injection,
};

const char* perturbation_name(PerturbationKind k);
PerturbationKind parse_perturbation(const std::string& name);

enum class EditKind {
  remove_sentence,
  replace_sentence,
  mask_span,
  reorder_documents,
  set_query,
  noop,
};

const char* edit_kind_name(EditKind k);
EditKind parse_edit_kind(const std::string& name);

// One entry of the sequential edit log. sentence_index (and the char span
// for mask_span) refer to the context state at the moment the edit is
// applied, so replaying the log in order reproduces the perturbed context.
struct Edit {
  EditKind kind = EditKind::noop;
  std::string title;       // empty for reorder_documents / set_query
  int sentence_index = -1;
  int span_begin = -1;     // mask_span only, char offsets within the sentence
  int span_end = -1;
  std::string before;
  std::string after;
  std::string flag;        // "unmatched", "no_lexicon_hit", "degraded_to_removal"
};

using EditLog = std::vector<Edit>;

struct PerturbedSample {
  std::string base_id;
  PerturbationKind kind = PerturbationKind::original;
  std::vector<Document> context;
  std::string query;
  EditLog edits;
  uint64_t seed = 0;
};

// Word lookup tables for the lexical perturbations. Keys are matched
// case-insensitively.
struct Lexicon {
  std::map<std::string, std::vector<std::string>> synonyms;
  std::map<std::string, std::vector<std::string>> antonyms;
  std::vector<std::string> noise;

  static Lexicon load(const std::string& path);
  static Lexicon parse(const std::string& json_text);
};

// How many supporting sentences a perturbation touches: 2->1, 3->1, 4->2,
// and floor(n/2) beyond the grid the experiments cover. Throws
// InvalidFactCount below 2.
int perturb_count(int fact_count);

PerturbedSample sentence_removal_perturbation(const QASample& sample);

enum class ReplacementFallback { error, degrade_to_removal };
PerturbedSample sentence_replacement_perturbation(const QASample& sample, uint64_t seed,
                                                  ReplacementFallback fallback =
                                                      ReplacementFallback::error);

// Returns [begin, end) char spans of detected entities within a sentence.
using EntityDetector = std::function<std::vector<std::pair<int, int>>(const std::string&)>;

// Default detector: longest case-insensitive match of any context-document
// title (or its parenthetical-stripped form) on word boundaries.
EntityDetector title_entity_detector(const QASample& sample);

PerturbedSample ner_replacement_perturbation(const QASample& sample,
                                             const EntityDetector& detector);
PerturbedSample ner_replacement_perturbation(const QASample& sample);

struct PerturbOptions {
  const Lexicon* lexicon = nullptr;  // synonym / antonym / noise kinds
  std::string prefix;                // prefix_injection
  ReplacementFallback replacement_fallback = ReplacementFallback::error;
};

// Dispatch over every kind. original returns an unmodified copy with an
// empty edit log.
PerturbedSample apply_perturbation(const QASample& sample, PerturbationKind kind,
                                   uint64_t seed, const PerturbOptions& opts = {});

struct ReplayResult {
  std::vector<Document> context;
  std::string query;
};

// Replays an edit log against the original sample state. Verifies each
// edit's before-text and throws ReplayMismatch on divergence.
ReplayResult replay_edits(const std::vector<Document>& original_context,
                          const std::string& original_query, const EditLog& edits);

// Tokenizer for the word-level perturbations: whitespace-separated runs,
// with punctuation split off as single-char tokens.
std::vector<std::string> tokenize_words(const std::string& text);

// JSON round-trip for persisted perturbed sets.
std::string perturbed_to_json(const std::vector<PerturbedSample>& items);
std::vector<PerturbedSample> perturbed_from_json(const std::string& json_text);

}  // namespace ragbench
