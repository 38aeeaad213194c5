#include "ragbench/refproc.hpp"

#include <array>
#include <cctype>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"
#include "ragbench/errors.hpp"
#include "ragbench/util.hpp"

namespace ragbench {

using nlohmann::json;

const char* reference_source_name(ReferenceSource s) {
  switch (s) {
    case ReferenceSource::generated: return "generated";
    case ReferenceSource::cached: return "cached";
    case ReferenceSource::manual_override: return "manual-override";
  }
  return "generated";
}

ReferenceSource parse_reference_source(const std::string& name) {
  if (name == "generated") return ReferenceSource::generated;
  if (name == "cached") return ReferenceSource::cached;
  if (name == "manual-override") return ReferenceSource::manual_override;
  throw ParseError("unknown reference source '" + name + "'");
}

Prompt build_ref_prompt(const std::string& question, const std::string& answer) {
  if (question.empty()) throw EmptyField("build_ref_prompt: question is empty");
  if (answer.empty()) throw EmptyField("build_ref_prompt: answer is empty");
  std::string user = "Question: " + question + "\nAnswer: " + answer +
                     "\nGenerate a complete and coherent answer based on the given question "
                     "and answer, being as brief as possible:";
  return {{"user", user}};
}

namespace {

// Periods ending these tokens do not terminate a sentence.
constexpr std::array<const char*, 18> kAbbreviations = {
    "mr.", "mrs.", "ms.", "dr.", "prof.", "st.",  "jr.",  "sr.",  "vs.",
    "etc.", "e.g.", "i.e.", "u.s.", "u.k.", "d.c.", "inc.", "ltd.", "no.",
};

bool is_abbreviation(const std::string& text, size_t dot_index) {
  // Word = maximal non-space run ending at the period, with leading
  // punctuation such as '(' stripped.
  size_t begin = dot_index;
  while (begin > 0 && !std::isspace(static_cast<unsigned char>(text[begin - 1]))) --begin;
  while (begin < dot_index &&
         !std::isalnum(static_cast<unsigned char>(text[begin])) && text[begin] != '.')
    ++begin;
  std::string word = to_lower_ascii(text.substr(begin, dot_index - begin + 1));
  for (const char* abbr : kAbbreviations)
    if (word == abbr) return true;
  // Single-letter initials: "J." in "J. K. Rowling".
  return word.size() == 2 && std::isalpha(static_cast<unsigned char>(word[0]));
}

bool starts_yes_no(const std::string& text) {
  auto matches = [&](const char* lead, size_t n) {
    if (text.size() < n) return false;
    for (size_t i = 0; i < n; ++i)
      if (std::tolower(static_cast<unsigned char>(text[i])) != lead[i]) return false;
    return text.size() == n || !std::isalnum(static_cast<unsigned char>(text[n]));
  };
  return matches("yes", 3) || matches("no", 2);
}

}  // namespace

std::string extract_reference(const std::string& generated) {
  std::string text = trim(generated);
  if (text.empty()) throw EmptyGeneration("extract_reference: generation empty after trimming");

  const int needed = starts_yes_no(text) ? 2 : 1;
  int seen = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    bool at_end = i + 1 == text.size();
    if (!at_end && !std::isspace(static_cast<unsigned char>(text[i + 1]))) continue;
    if (c == '.' && is_abbreviation(text, i)) continue;
    if (++seen == needed) return text.substr(0, i + 1);
  }
  return text;  // fewer sentences than requested
}

std::map<std::string, std::string> parse_overrides(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("override file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("override file must be a JSON object");
  std::map<std::string, std::string> out;
  for (const auto& [id, value] : j.items()) {
    if (!value.is_string())
      throw SchemaError("override for '" + id + "' must be a string");
    std::string ref = value.get<std::string>();
    if (trim(ref).empty()) throw EmptyField("override for '" + id + "' is empty");
    out[id] = ref;
  }
  return out;
}

std::map<std::string, std::string> load_overrides(const std::string& path) {
  return parse_overrides(read_file(path));
}

std::vector<ReferenceAnswer> prepare_references(const std::vector<QASample>& samples,
                                                const std::map<std::string, std::string>& overrides,
                                                const ReferenceBackbone& backbone,
                                                const GenerateFn& generate_fn,
                                                int concurrency) {
  if (backbone.model.empty()) throw ConfigError("reference backbone model is empty");
  if (concurrency < 1) concurrency = 1;

  std::vector<ReferenceAnswer> out(samples.size());
  std::exception_ptr first_error;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(concurrency)
#endif
  for (size_t i = 0; i < samples.size(); ++i) {
    try {
      const QASample& s = samples[i];
      if (auto it = overrides.find(s.id); it != overrides.end()) {
        out[i] = {s.id, it->second, ReferenceSource::manual_override};
        continue;
      }
      GenerationRequest req;
      req.model = backbone.model;
      req.prompt = build_ref_prompt(s.question, s.gold_answer);
      req.temperature = backbone.temperature;
      req.max_tokens = backbone.max_tokens;
      req.run_index = 0;
      req.seed = derive_seed(backbone.seed, "refprep", fnv1a64(s.id));
      GenerationResult r = generate_fn(req);
      out[i] = {s.id, extract_reference(r.text),
                r.from_cache ? ReferenceSource::cached : ReferenceSource::generated};
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(refprep_error)
#endif
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

std::string references_to_json(const std::vector<ReferenceAnswer>& refs) {
  json arr = json::array();
  for (const auto& r : refs)
    arr.push_back(json{{"sample_id", r.sample_id},
                       {"text", r.text},
                       {"source", reference_source_name(r.source)}});
  return arr.dump(2) + "\n";
}

std::vector<ReferenceAnswer> references_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("reference file is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw SchemaError("reference file must be a JSON array");
  std::vector<ReferenceAnswer> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    ReferenceAnswer r;
    try {
      r.sample_id = item.at("sample_id").get<std::string>();
      r.text = item.at("text").get<std::string>();
      r.source = parse_reference_source(item.at("source").get<std::string>());
    } catch (const json::exception& e) {
      throw SchemaError(std::string("malformed reference record: ") + e.what());
    }
    if (r.text.empty()) throw EmptyField("reference for '" + r.sample_id + "' is empty");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ragbench
