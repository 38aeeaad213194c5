#include "ragbench/perturb.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "json.hpp"
#include "ragbench/errors.hpp"
#include "ragbench/util.hpp"

namespace ragbench {

using nlohmann::json;

namespace {

const struct {
  PerturbationKind kind;
  const char* name;
} kKindNames[] = {
    {PerturbationKind::original, "original"},
    {PerturbationKind::sentence_replacement, "sentence_replacement"},
    {PerturbationKind::sentence_removal, "sentence_removal"},
    {PerturbationKind::ner_replacement, "ner_replacement"},
    {PerturbationKind::word_reordering, "word_reordering"},
    {PerturbationKind::source_reordering, "source_reordering"},
    {PerturbationKind::random_noise_injection, "random_noise_injection"},
    {PerturbationKind::synonym_replacement, "synonym_replacement"},
    {PerturbationKind::antonym_replacement, "antonym_replacement"},
    {PerturbationKind::prefix_injection, "prefix_injection"},
};

const struct {
  EditKind kind;
  const char* name;
} kEditNames[] = {
    {EditKind::remove_sentence, "remove_sentence"},
    {EditKind::replace_sentence, "replace_sentence"},
    {EditKind::mask_span, "mask_span"},
    {EditKind::reorder_documents, "reorder_documents"},
    {EditKind::set_query, "set_query"},
    {EditKind::noop, "noop"},
};

constexpr const char* kMaskToken = "[MASK]";

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '\''; }

// Last k = perturb_count(fact_count) supporting facts, deduplicated by
// (title, index) while preserving listing order.
std::vector<SupportingFact> latter_targets(const QASample& sample) {
  int k = perturb_count(sample.fact_count);
  std::vector<SupportingFact> distinct;
  std::set<std::pair<std::string, int>> seen;
  for (const auto& f : sample.supporting_facts) {
    if (seen.insert({f.title, f.sentence_index}).second) distinct.push_back(f);
  }
  if (k > static_cast<int>(distinct.size())) k = static_cast<int>(distinct.size());
  return {distinct.end() - k, distinct.end()};
}

std::set<std::pair<std::string, int>> supporting_set(const QASample& sample) {
  std::set<std::pair<std::string, int>> s;
  for (const auto& f : sample.supporting_facts) s.insert({f.title, f.sentence_index});
  return s;
}

// Mutable context that keeps the original sentence index of every current
// sentence, so edits can be logged in current-state coordinates even after
// removals shift positions.
struct WorkingContext {
  std::vector<Document> docs;
  std::vector<std::vector<int>> orig_index;

  explicit WorkingContext(const std::vector<Document>& context) : docs(context) {
    for (const auto& d : docs) {
      std::vector<int> ids(d.sentences.size());
      for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
      orig_index.push_back(std::move(ids));
    }
  }

  int doc_of(const std::string& title) const {
    for (size_t i = 0; i < docs.size(); ++i)
      if (docs[i].title == title) return static_cast<int>(i);
    return -1;
  }

  int current_of(int doc, int orig) const {
    const auto& ids = orig_index[doc];
    for (size_t j = 0; j < ids.size(); ++j)
      if (ids[j] == orig) return static_cast<int>(j);
    return -1;
  }

  void remove(int doc, int cur) {
    docs[doc].sentences.erase(docs[doc].sentences.begin() + cur);
    orig_index[doc].erase(orig_index[doc].begin() + cur);
  }
};

PerturbedSample make_base(const QASample& sample, PerturbationKind kind, uint64_t seed) {
  PerturbedSample p;
  p.base_id = sample.id;
  p.kind = kind;
  p.context = sample.context;
  p.query = sample.question;
  p.seed = seed;
  return p;
}

SeededRng rng_for(const QASample& sample, PerturbationKind kind, uint64_t seed) {
  return SeededRng(derive_seed(seed, perturbation_name(kind), fnv1a64(sample.id)));
}

std::string strip_parenthetical(const std::string& title) {
  auto pos = title.find(" (");
  if (pos == std::string::npos) return title;
  return title.substr(0, pos);
}

json perm_to_json(const std::vector<int>& perm) { return json(perm); }

std::vector<int> perm_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw ReplayMismatch("bad permutation payload: " + text);
  std::vector<int> out;
  for (const auto& v : j) out.push_back(v.get<int>());
  return out;
}

// Replaces whole-word lexicon hits in a sentence. Every hit is replaced;
// when an entry offers several alternatives one is drawn from the stream.
std::string substitute_words(const std::string& sentence,
                             const std::map<std::string, std::vector<std::string>>& table,
                             SeededRng& rng, int* hits) {
  std::string out;
  size_t i = 0;
  while (i < sentence.size()) {
    if (!is_word_char(static_cast<unsigned char>(sentence[i]))) {
      out.push_back(sentence[i]);
      ++i;
      continue;
    }
    size_t j = i;
    while (j < sentence.size() && is_word_char(static_cast<unsigned char>(sentence[j]))) ++j;
    std::string word = sentence.substr(i, j - i);
    auto it = table.find(to_lower_ascii(word));
    if (it != table.end() && !it->second.empty()) {
      const auto& alts = it->second;
      out += alts[rng.next_below(alts.size())];
      ++*hits;
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

}  // namespace

const char* perturbation_name(PerturbationKind k) {
  for (const auto& e : kKindNames)
    if (e.kind == k) return e.name;
  return "unknown";
}

PerturbationKind parse_perturbation(const std::string& name) {
  for (const auto& e : kKindNames)
    if (name == e.name) return e.kind;
  throw InvalidConfig("unknown perturbation kind: " + name);
}

const char* edit_kind_name(EditKind k) {
  for (const auto& e : kEditNames)
    if (e.kind == k) return e.name;
  return "noop";
}

EditKind parse_edit_kind(const std::string& name) {
  for (const auto& e : kEditNames)
    if (name == e.name) return e.kind;
  throw ParseError("unknown edit kind: " + name);
}

int perturb_count(int fact_count) {
  if (fact_count < 2) throw InvalidFactCount("fact_count must be >= 2, got " +
                                             std::to_string(fact_count));
  if (fact_count == 2 || fact_count == 3) return 1;
  if (fact_count == 4) return 2;
  return fact_count / 2;
}

Lexicon Lexicon::parse(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("lexicon is not valid JSON: ") + e.what());
  }
  Lexicon lex;
  if (root.contains("words")) {
    for (const auto& [word, entry] : root.at("words").items()) {
      std::string key = to_lower_ascii(word);
      if (entry.contains("synonyms"))
        for (const auto& s : entry.at("synonyms")) lex.synonyms[key].push_back(s.get<std::string>());
      if (entry.contains("antonyms"))
        for (const auto& a : entry.at("antonyms")) lex.antonyms[key].push_back(a.get<std::string>());
    }
  }
  if (root.contains("noise"))
    for (const auto& w : root.at("noise")) lex.noise.push_back(w.get<std::string>());
  return lex;
}

Lexicon Lexicon::load(const std::string& path) {
  if (!file_exists(path)) throw FileNotFound("lexicon file not found: " + path);
  return parse(read_file(path));
}

PerturbedSample sentence_removal_perturbation(const QASample& sample) {
  PerturbedSample p = make_base(sample, PerturbationKind::sentence_removal, 0);
  WorkingContext work(sample.context);
  for (const auto& target : latter_targets(sample)) {
    int d = work.doc_of(target.title);
    int cur = work.current_of(d, target.sentence_index);
    Edit e;
    e.kind = EditKind::remove_sentence;
    e.title = target.title;
    e.sentence_index = cur;
    e.before = work.docs[d].sentences[cur];
    p.edits.push_back(e);
    work.remove(d, cur);
  }
  p.context = std::move(work.docs);
  return p;
}

PerturbedSample sentence_replacement_perturbation(const QASample& sample, uint64_t seed,
                                                  ReplacementFallback fallback) {
  PerturbedSample p = make_base(sample, PerturbationKind::sentence_replacement, seed);
  SeededRng rng = rng_for(sample, PerturbationKind::sentence_replacement, seed);
  auto supporting = supporting_set(sample);
  WorkingContext work(sample.context);
  std::set<std::pair<std::string, int>> used;  // replacements drawn without repetition

  for (const auto& target : latter_targets(sample)) {
    int d = work.doc_of(target.title);
    // Candidates: non-supporting sentences of the same document, not yet used.
    std::vector<int> candidates;
    for (size_t i = 0; i < sample.context[d].sentences.size(); ++i) {
      int oi = static_cast<int>(i);
      if (supporting.count({target.title, oi})) continue;
      if (used.count({target.title, oi})) continue;
      candidates.push_back(oi);
    }
    int cur = work.current_of(d, target.sentence_index);
    if (candidates.empty()) {
      if (fallback == ReplacementFallback::error) {
        throw NoIrrelevantSentence("document '" + target.title +
                                   "' has no non-supporting sentence to swap in (sample " +
                                   sample.id + ")");
      }
      Edit e;
      e.kind = EditKind::remove_sentence;
      e.title = target.title;
      e.sentence_index = cur;
      e.before = work.docs[d].sentences[cur];
      e.flag = "degraded_to_removal";
      p.edits.push_back(e);
      work.remove(d, cur);
      continue;
    }
    int pick = candidates[rng.next_below(candidates.size())];
    used.insert({target.title, pick});
    Edit e;
    e.kind = EditKind::replace_sentence;
    e.title = target.title;
    e.sentence_index = cur;
    e.before = work.docs[d].sentences[cur];
    e.after = sample.context[d].sentences[pick];
    p.edits.push_back(e);
    work.docs[d].sentences[cur] = e.after;
  }
  p.context = std::move(work.docs);
  return p;
}

EntityDetector title_entity_detector(const QASample& sample) {
  // Entity strings: every context title plus its parenthetical-stripped
  // form, matched longest-first on word boundaries.
  std::vector<std::string> entities;
  for (const auto& d : sample.context) {
    entities.push_back(to_lower_ascii(d.title));
    std::string stripped = to_lower_ascii(strip_parenthetical(d.title));
    if (stripped != entities.back()) entities.push_back(stripped);
  }
  std::sort(entities.begin(), entities.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a < b;
  });
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());

  return [entities](const std::string& sentence) {
    std::string lower = to_lower_ascii(sentence);
    std::vector<std::pair<int, int>> spans;
    size_t pos = 0;
    while (pos < lower.size()) {
      bool matched = false;
      for (const auto& ent : entities) {
        if (ent.empty() || pos + ent.size() > lower.size()) continue;
        if (lower.compare(pos, ent.size(), ent) != 0) continue;
        bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]));
        size_t end = pos + ent.size();
        bool right_ok = end >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
        if (left_ok && right_ok) {
          spans.emplace_back(static_cast<int>(pos), static_cast<int>(end));
          pos = end;
          matched = true;
          break;
        }
      }
      if (!matched) ++pos;
    }
    return spans;
  };
}

PerturbedSample ner_replacement_perturbation(const QASample& sample,
                                             const EntityDetector& detector) {
  PerturbedSample p = make_base(sample, PerturbationKind::ner_replacement, 0);
  WorkingContext work(sample.context);
  for (const auto& target : latter_targets(sample)) {
    int d = work.doc_of(target.title);
    int cur = work.current_of(d, target.sentence_index);
    const std::string original = work.docs[d].sentences[cur];
    auto spans = detector(original);
    if (spans.empty()) {
      Edit e;
      e.kind = EditKind::noop;
      e.title = target.title;
      e.sentence_index = cur;
      e.flag = "unmatched";
      p.edits.push_back(e);
      continue;
    }
    // Apply right-to-left so earlier (left) span offsets stay valid.
    std::sort(spans.begin(), spans.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::string text = original;
    for (const auto& [b, e_off] : spans) {
      Edit e;
      e.kind = EditKind::mask_span;
      e.title = target.title;
      e.sentence_index = cur;
      e.span_begin = b;
      e.span_end = e_off;
      e.before = text.substr(b, e_off - b);
      e.after = kMaskToken;
      p.edits.push_back(e);
      text = text.substr(0, b) + kMaskToken + text.substr(e_off);
    }
    work.docs[d].sentences[cur] = text;
  }
  p.context = std::move(work.docs);
  return p;
}

PerturbedSample ner_replacement_perturbation(const QASample& sample) {
  return ner_replacement_perturbation(sample, title_entity_detector(sample));
}

namespace {

PerturbedSample word_reordering_perturbation(const QASample& sample, uint64_t seed) {
  PerturbedSample p = make_base(sample, PerturbationKind::word_reordering, seed);
  SeededRng rng = rng_for(sample, PerturbationKind::word_reordering, seed);
  WorkingContext work(sample.context);
  for (const auto& target : latter_targets(sample)) {
    int d = work.doc_of(target.title);
    int cur = work.current_of(d, target.sentence_index);
    std::string before = work.docs[d].sentences[cur];
    auto tokens = tokenize_words(before);
    rng.shuffle(tokens);
    std::string after = join(tokens, " ");
    Edit e;
    e.kind = EditKind::replace_sentence;
    e.title = target.title;
    e.sentence_index = cur;
    e.before = before;
    e.after = after;
    p.edits.push_back(e);
    work.docs[d].sentences[cur] = after;
  }
  p.context = std::move(work.docs);
  return p;
}

PerturbedSample source_reordering_perturbation(const QASample& sample, uint64_t seed) {
  PerturbedSample p = make_base(sample, PerturbationKind::source_reordering, seed);
  SeededRng rng = rng_for(sample, PerturbationKind::source_reordering, seed);
  std::vector<int> perm(sample.context.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::vector<int> identity = perm;
  rng.shuffle(perm);
  Edit e;
  e.kind = EditKind::reorder_documents;
  e.before = perm_to_json(identity).dump();
  e.after = perm_to_json(perm).dump();
  p.edits.push_back(e);
  std::vector<Document> reordered;
  reordered.reserve(perm.size());
  for (int idx : perm) reordered.push_back(sample.context[idx]);
  p.context = std::move(reordered);
  return p;
}

PerturbedSample noise_injection_perturbation(const QASample& sample, uint64_t seed,
                                             const Lexicon& lexicon) {
  if (lexicon.noise.empty()) throw MissingLexicon("noise vocabulary is empty");
  PerturbedSample p = make_base(sample, PerturbationKind::random_noise_injection, seed);
  SeededRng rng = rng_for(sample, PerturbationKind::random_noise_injection, seed);
  WorkingContext work(sample.context);
  for (const auto& target : latter_targets(sample)) {
    int d = work.doc_of(target.title);
    int cur = work.current_of(d, target.sentence_index);
    std::string before = work.docs[d].sentences[cur];

    // Three insertions per target: one before, one inside at a random
    // whitespace gap, one after.
    auto draw = [&]() { return lexicon.noise[rng.next_below(lexicon.noise.size())]; };
    std::string head = draw();
    std::string mid = draw();
    std::string tail = draw();
    std::vector<size_t> gaps;
    for (size_t i = 0; i < before.size(); ++i)
      if (before[i] == ' ') gaps.push_back(i);
    std::string inner = before;
    if (!gaps.empty()) {
      size_t at = gaps[rng.next_below(gaps.size())];
      inner = inner.substr(0, at + 1) + mid + " " + inner.substr(at + 1);
    } else {
      inner = inner + " " + mid;
    }
    std::string after = head + " " + inner + " " + tail;

    Edit e;
    e.kind = EditKind::replace_sentence;
    e.title = target.title;
    e.sentence_index = cur;
    e.before = before;
    e.after = after;
    p.edits.push_back(e);
    work.docs[d].sentences[cur] = after;
  }
  p.context = std::move(work.docs);
  return p;
}

PerturbedSample lexical_replacement_perturbation(const QASample& sample, uint64_t seed,
                                                 PerturbationKind kind,
                                                 const Lexicon& lexicon) {
  const auto& table =
      kind == PerturbationKind::synonym_replacement ? lexicon.synonyms : lexicon.antonyms;
  PerturbedSample p = make_base(sample, kind, seed);
  SeededRng rng = rng_for(sample, kind, seed);
  WorkingContext work(sample.context);
  for (const auto& target : latter_targets(sample)) {
    int d = work.doc_of(target.title);
    int cur = work.current_of(d, target.sentence_index);
    std::string before = work.docs[d].sentences[cur];
    int hits = 0;
    std::string after = substitute_words(before, table, rng, &hits);
    Edit e;
    e.title = target.title;
    e.sentence_index = cur;
    if (hits == 0) {
      e.kind = EditKind::noop;
      e.flag = "no_lexicon_hit";
    } else {
      e.kind = EditKind::replace_sentence;
      e.before = before;
      e.after = after;
      work.docs[d].sentences[cur] = after;
    }
    p.edits.push_back(e);
  }
  p.context = std::move(work.docs);
  return p;
}

PerturbedSample prefix_injection_perturbation(const QASample& sample, const std::string& prefix) {
  if (prefix.empty()) throw MissingPrefix("prefix_injection requires a non-empty prefix");
  PerturbedSample p = make_base(sample, PerturbationKind::prefix_injection, 0);
  Edit e;
  e.kind = EditKind::set_query;
  e.before = sample.question;
  e.after = prefix + " " + sample.question;
  p.edits.push_back(e);
  p.query = e.after;
  return p;
}

}  // namespace

PerturbedSample apply_perturbation(const QASample& sample, PerturbationKind kind,
                                   uint64_t seed, const PerturbOptions& opts) {
  switch (kind) {
    case PerturbationKind::original:
      return make_base(sample, PerturbationKind::original, seed);
    case PerturbationKind::sentence_removal:
      return sentence_removal_perturbation(sample);
    case PerturbationKind::sentence_replacement:
      return sentence_replacement_perturbation(sample, seed, opts.replacement_fallback);
    case PerturbationKind::ner_replacement:
      return ner_replacement_perturbation(sample);
    case PerturbationKind::word_reordering:
      return word_reordering_perturbation(sample, seed);
    case PerturbationKind::source_reordering:
      return source_reordering_perturbation(sample, seed);
    case PerturbationKind::random_noise_injection:
      if (!opts.lexicon) throw MissingLexicon("random_noise_injection requires a lexicon");
      return noise_injection_perturbation(sample, seed, *opts.lexicon);
    case PerturbationKind::synonym_replacement:
    case PerturbationKind::antonym_replacement:
      if (!opts.lexicon) throw MissingLexicon(std::string(perturbation_name(kind)) +
                                              " requires a lexicon");
      return lexical_replacement_perturbation(sample, seed, kind, *opts.lexicon);
    case PerturbationKind::prefix_injection:
      return prefix_injection_perturbation(sample, opts.prefix);
  }
  throw InvalidConfig("unhandled perturbation kind");
}

ReplayResult replay_edits(const std::vector<Document>& original_context,
                          const std::string& original_query, const EditLog& edits) {
  ReplayResult r{original_context, original_query};
  auto doc_of = [&](const std::string& title) -> Document& {
    for (auto& d : r.context)
      if (d.title == title) return d;
    throw ReplayMismatch("edit names absent document '" + title + "'");
  };
  for (const auto& e : edits) {
    switch (e.kind) {
      case EditKind::noop:
        break;
      case EditKind::remove_sentence: {
        Document& d = doc_of(e.title);
        if (e.sentence_index < 0 || static_cast<size_t>(e.sentence_index) >= d.sentences.size())
          throw ReplayMismatch("remove index out of range in '" + e.title + "'");
        if (d.sentences[e.sentence_index] != e.before)
          throw ReplayMismatch("remove before-text mismatch in '" + e.title + "'");
        d.sentences.erase(d.sentences.begin() + e.sentence_index);
        break;
      }
      case EditKind::replace_sentence: {
        Document& d = doc_of(e.title);
        if (e.sentence_index < 0 || static_cast<size_t>(e.sentence_index) >= d.sentences.size())
          throw ReplayMismatch("replace index out of range in '" + e.title + "'");
        if (d.sentences[e.sentence_index] != e.before)
          throw ReplayMismatch("replace before-text mismatch in '" + e.title + "'");
        d.sentences[e.sentence_index] = e.after;
        break;
      }
      case EditKind::mask_span: {
        Document& d = doc_of(e.title);
        if (e.sentence_index < 0 || static_cast<size_t>(e.sentence_index) >= d.sentences.size())
          throw ReplayMismatch("mask index out of range in '" + e.title + "'");
        std::string& text = d.sentences[e.sentence_index];
        if (e.span_begin < 0 || e.span_end < e.span_begin ||
            static_cast<size_t>(e.span_end) > text.size())
          throw ReplayMismatch("mask span out of range in '" + e.title + "'");
        if (text.compare(e.span_begin, e.span_end - e.span_begin, e.before) != 0)
          throw ReplayMismatch("mask span before-text mismatch in '" + e.title + "'");
        text = text.substr(0, e.span_begin) + e.after + text.substr(e.span_end);
        break;
      }
      case EditKind::reorder_documents: {
        std::vector<int> perm = perm_from_json(e.after);
        if (perm.size() != r.context.size())
          throw ReplayMismatch("reorder permutation size mismatch");
        std::vector<bool> seen(perm.size(), false);
        for (int idx : perm) {
          if (idx < 0 || static_cast<size_t>(idx) >= perm.size() || seen[idx])
            throw ReplayMismatch("reorder payload is not a permutation");
          seen[idx] = true;
        }
        std::vector<Document> reordered;
        reordered.reserve(perm.size());
        for (int idx : perm) reordered.push_back(r.context[idx]);
        r.context = std::move(reordered);
        break;
      }
      case EditKind::set_query: {
        if (r.query != e.before) throw ReplayMismatch("query before-text mismatch");
        r.query = e.after;
        break;
      }
    }
  }
  return r;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (is_word_char(c)) {
      size_t j = i;
      while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
      tokens.push_back(text.substr(i, j - i));
      i = j;
    } else {
      tokens.push_back(text.substr(i, 1));
      ++i;
    }
  }
  return tokens;
}

std::string perturbed_to_json(const std::vector<PerturbedSample>& items) {
  json arr = json::array();
  for (const auto& p : items) {
    json rec;
    rec["base_id"] = p.base_id;
    rec["kind"] = perturbation_name(p.kind);
    rec["query"] = p.query;
    rec["seed"] = p.seed;
    json ctx = json::array();
    for (const auto& d : p.context) ctx.push_back(json::array({d.title, d.sentences}));
    rec["context"] = std::move(ctx);
    json edits = json::array();
    for (const auto& e : p.edits) {
      json je;
      je["kind"] = edit_kind_name(e.kind);
      je["title"] = e.title;
      je["sentence_index"] = e.sentence_index;
      je["span_begin"] = e.span_begin;
      je["span_end"] = e.span_end;
      je["before"] = e.before;
      je["after"] = e.after;
      je["flag"] = e.flag;
      edits.push_back(std::move(je));
    }
    rec["edits"] = std::move(edits);
    arr.push_back(std::move(rec));
  }
  return arr.dump(2) + "\n";
}

std::vector<PerturbedSample> perturbed_from_json(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("perturbed set is not valid JSON: ") + e.what());
  }
  std::vector<PerturbedSample> out;
  for (const auto& rec : root) {
    PerturbedSample p;
    p.base_id = rec.at("base_id").get<std::string>();
    p.kind = parse_perturbation(rec.at("kind").get<std::string>());
    p.query = rec.at("query").get<std::string>();
    p.seed = rec.at("seed").get<uint64_t>();
    for (const auto& doc : rec.at("context")) {
      Document d;
      d.title = doc[0].get<std::string>();
      for (const auto& s : doc[1]) d.sentences.push_back(s.get<std::string>());
      p.context.push_back(std::move(d));
    }
    for (const auto& je : rec.at("edits")) {
      Edit e;
      e.kind = parse_edit_kind(je.at("kind").get<std::string>());
      e.title = je.at("title").get<std::string>();
      e.sentence_index = je.at("sentence_index").get<int>();
      e.span_begin = je.at("span_begin").get<int>();
      e.span_end = je.at("span_end").get<int>();
      e.before = je.at("before").get<std::string>();
      e.after = je.at("after").get<std::string>();
      e.flag = je.at("flag").get<std::string>();
      p.edits.push_back(std::move(e));
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ragbench
