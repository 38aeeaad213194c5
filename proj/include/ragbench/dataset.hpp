#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace ragbench {

struct Document {
  std::string title;
  std::vector<std::string> sentences;
  bool degenerate = false;  // set when the sentence list is empty
};

enum class QuestionType { bridge, comparison };

const char* question_type_name(QuestionType t);
QuestionType parse_question_type(const std::string& name);

struct SupportingFact {
  std::string title;
  int sentence_index = 0;
};

// One multi-hop question with its gold answer and context documents.
struct QASample {
  std::string id;
  std::string question;
  std::string gold_answer;
  QuestionType question_type = QuestionType::bridge;
  std::vector<Document> context;
  std::vector<SupportingFact> supporting_facts;
  int fact_count = 0;  // always == supporting_facts.size()
};

struct LoadStats {
  size_t total_records = 0;
  size_t loaded = 0;
  size_t skipped = 0;
};

// Loads a HotpotQA fullwiki-format file: a JSON array of records with
// fields id (or _id), question, answer, type, supporting_facts (list of
// [title, sentence_index]) and context (list of [title, [sentence, ...]]).
// Records violating the QASample invariants are skipped and counted;
// strict=true promotes the first violation to SchemaError/ParseError.
std::vector<QASample> load_dataset(const std::string& path, bool strict = false,
                                   LoadStats* stats = nullptr);

// Parses an already-loaded JSON array (same contract as load_dataset).
std::vector<QASample> parse_dataset(const std::string& json_text, bool strict = false,
                                    LoadStats* stats = nullptr);

struct SamplePlan {
  int per_cell = 100;
  uint64_t seed = 0;
};

// Draws per_cell samples from each of the 6 cells (fact_count {2,3,4} x
// question_type {bridge, comparison}). Selection depends only on the id set
// and the seed, never on input order; output is sorted by
// (fact_count, question_type, id). Samples with fact_count outside [2,4]
// are not eligible. Throws InsufficientCell when a cell is too small.
std::vector<QASample> stratified_sample(const std::vector<QASample>& samples,
                                        const SamplePlan& plan);

// Resolves the supporting-fact pointers to (title, index, sentence text),
// in supporting_facts order. Duplicated pointers stay duplicated.
std::vector<std::tuple<std::string, int, std::string>> supporting_sentences(
    const QASample& sample);

// Canonical JSON round-trip for persisted sample sets.
std::string samples_to_json(const std::vector<QASample>& samples);
std::vector<QASample> samples_from_json(const std::string& json_text);

}  // namespace ragbench
