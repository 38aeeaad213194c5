#include "ragbench/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "json.hpp"
#include "ragbench/errors.hpp"
#include "ragbench/util.hpp"

namespace ragbench {

using nlohmann::json;

const char* question_type_name(QuestionType t) {
  return t == QuestionType::bridge ? "bridge" : "comparison";
}

QuestionType parse_question_type(const std::string& name) {
  if (name == "bridge") return QuestionType::bridge;
  if (name == "comparison") return QuestionType::comparison;
  throw SchemaError("unknown question type: " + name);
}

namespace {

// Builds one QASample from a record; throws SchemaError/ParseError on
// invariant violations so the caller can apply the skip-or-strict policy.
QASample record_to_sample(const json& rec, size_t index) {
  auto fail = [&](const std::string& what) -> std::string {
    return "record " + std::to_string(index) + ": " + what;
  };
  if (!rec.is_object()) throw ParseError(fail("not an object"));

  QASample s;
  if (rec.contains("id"))
    s.id = rec.at("id").get<std::string>();
  else if (rec.contains("_id"))
    s.id = rec.at("_id").get<std::string>();
  else
    throw ParseError(fail("missing id"));

  try {
    s.question = rec.at("question").get<std::string>();
    s.gold_answer = rec.at("answer").get<std::string>();
    s.question_type = parse_question_type(rec.at("type").get<std::string>());

    for (const auto& doc : rec.at("context")) {
      if (!doc.is_array() || doc.size() != 2)
        throw ParseError(fail("context entry is not a [title, sentences] pair"));
      Document d;
      d.title = doc[0].get<std::string>();
      if (d.title.empty()) throw SchemaError(fail("empty document title"));
      for (const auto& sent : doc[1]) d.sentences.push_back(sent.get<std::string>());
      d.degenerate = d.sentences.empty();
      s.context.push_back(std::move(d));
    }

    for (const auto& sf : rec.at("supporting_facts")) {
      if (!sf.is_array() || sf.size() != 2)
        throw ParseError(fail("supporting fact is not a [title, index] pair"));
      SupportingFact f;
      f.title = sf[0].get<std::string>();
      f.sentence_index = sf[1].get<int>();
      s.supporting_facts.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw ParseError(fail(e.what()));
  }

  // Every supporting fact must resolve to an existing sentence.
  for (const auto& f : s.supporting_facts) {
    auto it = std::find_if(s.context.begin(), s.context.end(),
                           [&](const Document& d) { return d.title == f.title; });
    if (it == s.context.end())
      throw SchemaError(fail("supporting fact names absent title '" + f.title + "'"));
    if (f.sentence_index < 0 || static_cast<size_t>(f.sentence_index) >= it->sentences.size())
      throw SchemaError(fail("supporting fact index " + std::to_string(f.sentence_index) +
                             " out of range for '" + f.title + "'"));
  }

  s.fact_count = static_cast<int>(s.supporting_facts.size());
  return s;
}

json sample_to_json(const QASample& s) {
  json rec;
  rec["id"] = s.id;
  rec["question"] = s.question;
  rec["answer"] = s.gold_answer;
  rec["type"] = question_type_name(s.question_type);
  json ctx = json::array();
  for (const auto& d : s.context) ctx.push_back(json::array({d.title, d.sentences}));
  rec["context"] = std::move(ctx);
  json sf = json::array();
  for (const auto& f : s.supporting_facts) sf.push_back(json::array({f.title, f.sentence_index}));
  rec["supporting_facts"] = std::move(sf);
  return rec;
}

}  // namespace

std::vector<QASample> parse_dataset(const std::string& json_text, bool strict,
                                    LoadStats* stats) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset is not valid JSON: ") + e.what());
  }
  if (!root.is_array()) throw ParseError("dataset root is not an array");

  std::vector<QASample> out;
  LoadStats local;
  local.total_records = root.size();
  for (size_t i = 0; i < root.size(); ++i) {
    try {
      out.push_back(record_to_sample(root[i], i));
      ++local.loaded;
    } catch (const Error&) {
      if (strict) throw;
      ++local.skipped;
    }
  }
  if (local.skipped > 0) {
    std::fprintf(stderr, "warning: skipped %zu of %zu invalid dataset records\n",
                 local.skipped, local.total_records);
  }
  if (stats) *stats = local;
  return out;
}

std::vector<QASample> load_dataset(const std::string& path, bool strict, LoadStats* stats) {
  if (!file_exists(path)) throw FileNotFound("dataset file not found: " + path);
  return parse_dataset(read_file(path), strict, stats);
}

std::vector<QASample> stratified_sample(const std::vector<QASample>& samples,
                                        const SamplePlan& plan) {
  if (plan.per_cell < 0) throw InvalidConfig("per_cell must be >= 0");
  if (plan.per_cell == 0) return {};

  // cell -> candidates
  std::map<std::pair<int, QuestionType>, std::vector<const QASample*>> cells;
  for (int fc : {2, 3, 4})
    for (auto qt : {QuestionType::bridge, QuestionType::comparison})
      cells[{fc, qt}] = {};
  std::set<std::string> seen_ids;
  for (const auto& s : samples) {
    if (s.fact_count < 2 || s.fact_count > 4) continue;
    if (!seen_ids.insert(s.id).second) continue;  // ids are unique by contract
    cells[{s.fact_count, s.question_type}].push_back(&s);
  }

  std::vector<const QASample*> picked;
  for (auto& [cell, candidates] : cells) {
    if (candidates.size() < static_cast<size_t>(plan.per_cell)) {
      throw InsufficientCell("cell (fact_count=" + std::to_string(cell.first) + ", " +
                             question_type_name(cell.second) + ") has " +
                             std::to_string(candidates.size()) + " candidates, need " +
                             std::to_string(plan.per_cell));
    }
    // Order-independent seeded choice: rank candidates by a hash of
    // (seed, cell, id) and take the lowest ranks. Ties fall back to id.
    std::string cell_tag = std::to_string(cell.first) + "/" + question_type_name(cell.second);
    uint64_t cell_seed = derive_seed(plan.seed, cell_tag);
    std::vector<std::pair<uint64_t, const QASample*>> ranked;
    ranked.reserve(candidates.size());
    for (const QASample* s : candidates)
      ranked.emplace_back(fnv1a64(s->id, fnv1a64(cell_seed)), s);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second->id < b.second->id;
    });
    for (int i = 0; i < plan.per_cell; ++i) picked.push_back(ranked[i].second);
  }

  std::sort(picked.begin(), picked.end(), [](const QASample* a, const QASample* b) {
    if (a->fact_count != b->fact_count) return a->fact_count < b->fact_count;
    if (a->question_type != b->question_type)
      return static_cast<int>(a->question_type) < static_cast<int>(b->question_type);
    return a->id < b->id;
  });

  std::vector<QASample> out;
  out.reserve(picked.size());
  for (const QASample* s : picked) out.push_back(*s);
  return out;
}

std::vector<std::tuple<std::string, int, std::string>> supporting_sentences(
    const QASample& sample) {
  std::vector<std::tuple<std::string, int, std::string>> out;
  out.reserve(sample.supporting_facts.size());
  for (const auto& f : sample.supporting_facts) {
    auto it = std::find_if(sample.context.begin(), sample.context.end(),
                           [&](const Document& d) { return d.title == f.title; });
    out.emplace_back(f.title, f.sentence_index, it->sentences[f.sentence_index]);
  }
  return out;
}

std::string samples_to_json(const std::vector<QASample>& samples) {
  json arr = json::array();
  for (const auto& s : samples) arr.push_back(sample_to_json(s));
  return arr.dump(2) + "\n";
}

std::vector<QASample> samples_from_json(const std::string& json_text) {
  return parse_dataset(json_text, /*strict=*/true);
}

}  // namespace ragbench
