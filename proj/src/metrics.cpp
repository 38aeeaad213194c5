#include "ragbench/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "json.hpp"
#include "ragbench/errors.hpp"
#include "ragbench/util.hpp"

namespace ragbench {

using nlohmann::json;

const char* metric_name(MetricId m) {
  switch (m) {
    case MetricId::em: return "em";
    case MetricId::f1: return "f1";
    case MetricId::rouge1: return "rouge1";
    case MetricId::rouge2: return "rouge2";
    case MetricId::rougeL: return "rougeL";
    case MetricId::bertscore_f1: return "bertscore_f1";
    case MetricId::embed_cosine: return "embed_cosine";
  }
  return "f1";
}

MetricId parse_metric(const std::string& name) {
  for (MetricId m : {MetricId::em, MetricId::f1, MetricId::rouge1, MetricId::rouge2,
                     MetricId::rougeL, MetricId::bertscore_f1, MetricId::embed_cosine})
    if (name == metric_name(m)) return m;
  throw ParseError("unknown metric '" + name + "'");
}

bool is_lexical_metric(MetricId m) {
  return m != MetricId::bertscore_f1 && m != MetricId::embed_cosine;
}

std::vector<std::string> normalize(const std::string& text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u))
      cleaned += static_cast<char>(std::tolower(u));
    else if (std::isspace(u))
      cleaned += ' ';
    else if (u >= 0x80)
      cleaned += c;  // keep non-ASCII bytes; only ASCII punctuation is stripped
    // ASCII punctuation is dropped entirely
  }
  std::vector<std::string> tokens;
  for (const std::string& t : split_ws(cleaned))
    if (t != "a" && t != "an" && t != "the") tokens.push_back(t);
  return tokens;
}

double exact_match(const std::string& pred, const std::string& ref) {
  return normalize(pred) == normalize(ref) ? 1.0 : 0.0;
}

namespace {

// Multiset intersection size of two token lists.
size_t overlap_count(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string, int> counts;
  for (const auto& t : a) ++counts[t];
  size_t same = 0;
  for (const auto& t : b) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  return same;
}

double f1_from_counts(size_t same, size_t pred_total, size_t ref_total) {
  if (pred_total == 0 && ref_total == 0) return 1.0;
  if (pred_total == 0 || ref_total == 0) return 0.0;
  if (same == 0) return 0.0;
  double p = static_cast<double>(same) / static_cast<double>(pred_total);
  double r = static_cast<double>(same) / static_cast<double>(ref_total);
  return 2.0 * p * r / (p + r);
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, size_t n) {
  std::vector<std::string> grams;
  if (tokens.size() < n) return grams;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string g = tokens[i];
    for (size_t k = 1; k < n; ++k) {
      g += '\x1f';
      g += tokens[i + k];
    }
    grams.push_back(std::move(g));
  }
  return grams;
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double token_f1(const std::string& pred, const std::string& ref) {
  auto p = normalize(pred);
  auto r = normalize(ref);
  return f1_from_counts(overlap_count(p, r), p.size(), r.size());
}

double rouge(const std::string& pred, const std::string& ref, RougeVariant variant) {
  auto p = normalize(pred);
  auto r = normalize(ref);
  switch (variant) {
    case RougeVariant::rouge1:
    case RougeVariant::rouge2: {
      size_t n = variant == RougeVariant::rouge1 ? 1 : 2;
      auto pg = ngrams(p, n);
      auto rg = ngrams(r, n);
      return f1_from_counts(overlap_count(pg, rg), pg.size(), rg.size());
    }
    case RougeVariant::rougeL:
      if (p.empty() && r.empty()) return 1.0;
      if (p.empty() || r.empty()) return 0.0;
      return f1_from_counts(lcs_length(p, r), p.size(), r.size());
  }
  return 0.0;
}

double cosine_clamped(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionMismatch("cosine: vector dimensions " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  if (a.empty()) throw EmptyEmbeddings("cosine: zero-dimensional vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, 0.0, 1.0);
}

namespace {

void check_embeddings(const TokenEmbeddings& e, const char* side) {
  if (e.vectors.empty())
    throw EmptyEmbeddings(std::string("bertscore: empty ") + side + " embeddings");
  size_t dim = e.vectors.front().size();
  if (dim == 0) throw EmptyEmbeddings(std::string("bertscore: zero-dimensional ") + side);
  for (const auto& v : e.vectors) {
    if (v.size() != dim)
      throw DimensionMismatch(std::string("bertscore: ragged ") + side + " embeddings");
    for (double x : v)
      if (!std::isfinite(x))
        throw DimensionMismatch(std::string("bertscore: non-finite value in ") + side);
  }
}

// Mean over rows of `from` of the best clamped cosine against rows of `to`.
double greedy_side(const std::vector<std::vector<double>>& from,
                   const std::vector<std::vector<double>>& to) {
  double total = 0.0;
  for (const auto& u : from) {
    double best = 0.0;
    for (const auto& v : to) best = std::max(best, cosine_clamped(u, v));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

BertScore bertscore_greedy(const TokenEmbeddings& pred, const TokenEmbeddings& ref) {
  check_embeddings(pred, "prediction");
  check_embeddings(ref, "reference");
  if (pred.vectors.front().size() != ref.vectors.front().size())
    throw DimensionMismatch("bertscore: prediction/reference dimension mismatch");
  BertScore s;
  s.precision = greedy_side(pred.vectors, ref.vectors);
  s.recall = greedy_side(ref.vectors, pred.vectors);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0
                                       : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

EmbeddingSidecar EmbeddingSidecar::load(const std::string& path) {
  return parse(read_file(path));
}

EmbeddingSidecar EmbeddingSidecar::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("embedding sidecar is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("embedding sidecar must be a JSON object");
  EmbeddingSidecar s;
  for (const auto& [digest, entry] : j.items()) {
    TokenEmbeddings e;
    try {
      e.tokens = entry.at("tokens").get<std::vector<std::string>>();
      e.vectors = entry.at("vectors").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& ex) {
      throw SchemaError("sidecar entry '" + digest + "' malformed: " + ex.what());
    }
    if (e.tokens.size() != e.vectors.size())
      throw SchemaError("sidecar entry '" + digest + "': token/vector count mismatch");
    s.entries_.emplace_back(digest, std::move(e));
  }
  return s;
}

std::optional<TokenEmbeddings> EmbeddingSidecar::lookup(const std::string& text) const {
  std::string digest = sha256_hex(text);
  for (const auto& [key, value] : entries_)
    if (key == digest) return value;
  return std::nullopt;
}

namespace {

std::string embed_cache_path(const EmbedderConfig& cfg, const std::string& kind,
                             const std::string& text) {
  std::string key = sha256_hex(cfg.model + "\n" + kind + "\n" + sha256_hex(text));
  return cfg.cache_dir + "/" + key + ".json";
}

std::optional<json> embed_cache_lookup(const std::string& path) {
  if (path.empty() || !file_exists(path)) return std::nullopt;
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw CacheCorruption("unreadable embedding cache record " + path + ": " + e.what());
  }
}

}  // namespace

std::vector<double> sentence_embedding(const std::string& text, const EmbedderConfig& cfg) {
  if (trim(text).empty()) throw EmptyText("sentence_embedding: empty input text");
  std::string cache_path = cfg.cache_dir.empty() ? "" : embed_cache_path(cfg, "sentence", text);
  if (auto hit = embed_cache_lookup(cache_path))
    return hit->at("vector").get<std::vector<double>>();

  json body{{"model", cfg.model}, {"input", json::array({text})}};
  std::string response = post_json_with_retries(cfg.backend, cfg.embed_path, body.dump(), nullptr);
  std::vector<double> vec;
  try {
    json j = json::parse(response);
    vec = j.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed embeddings response: ") + e.what());
  }
  if (vec.empty()) throw BackendError("embeddings endpoint returned an empty vector");
  if (!cache_path.empty()) {
    ensure_dir(cfg.cache_dir);
    write_file_atomic(cache_path,
                      json{{"model", cfg.model}, {"text_digest", sha256_hex(text)},
                           {"vector", vec}}
                              .dump() +
                          "\n");
  }
  return vec;
}

TokenEmbeddings fetch_token_embeddings(const std::string& text, const EmbedderConfig& cfg) {
  if (trim(text).empty()) throw EmptyText("fetch_token_embeddings: empty input text");
  std::string cache_path = cfg.cache_dir.empty() ? "" : embed_cache_path(cfg, "token", text);
  if (auto hit = embed_cache_lookup(cache_path)) {
    TokenEmbeddings e;
    e.tokens = hit->at("tokens").get<std::vector<std::string>>();
    e.vectors = hit->at("vectors").get<std::vector<std::vector<double>>>();
    return e;
  }

  json body{{"model", cfg.model}, {"input", text}};
  std::string response =
      post_json_with_retries(cfg.backend, cfg.token_embed_path, body.dump(), nullptr);
  TokenEmbeddings e;
  try {
    json j = json::parse(response);
    e.tokens = j.at("tokens").get<std::vector<std::string>>();
    e.vectors = j.at("embeddings").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& ex) {
    throw BackendError(std::string("malformed token-embeddings response: ") + ex.what());
  }
  if (e.tokens.size() != e.vectors.size())
    throw BackendError("token-embeddings endpoint: token/vector count mismatch");
  if (e.vectors.empty()) throw BackendError("token-embeddings endpoint returned no tokens");
  if (!cache_path.empty()) {
    ensure_dir(cfg.cache_dir);
    write_file_atomic(cache_path, json{{"model", cfg.model},
                                       {"text_digest", sha256_hex(text)},
                                       {"tokens", e.tokens},
                                       {"vectors", e.vectors}}
                                          .dump() +
                                      "\n");
  }
  return e;
}

double embed_cosine(const std::string& pred, const std::string& ref, const EmbedderConfig& cfg) {
  auto a = sentence_embedding(pred, cfg);
  auto b = sentence_embedding(ref, cfg);
  return cosine_clamped(a, b);
}

std::vector<std::pair<MetricId, double>> lexical_scores(const std::string& pred,
                                                        const std::string& ref,
                                                        const std::vector<MetricId>& metrics) {
  std::vector<std::pair<MetricId, double>> out;
  out.reserve(metrics.size());
  for (MetricId m : metrics) {
    switch (m) {
      case MetricId::em: out.emplace_back(m, exact_match(pred, ref)); break;
      case MetricId::f1: out.emplace_back(m, token_f1(pred, ref)); break;
      case MetricId::rouge1: out.emplace_back(m, rouge(pred, ref, RougeVariant::rouge1)); break;
      case MetricId::rouge2: out.emplace_back(m, rouge(pred, ref, RougeVariant::rouge2)); break;
      case MetricId::rougeL: out.emplace_back(m, rouge(pred, ref, RougeVariant::rougeL)); break;
      default:
        throw ConfigError(std::string("metric '") + metric_name(m) +
                          "' needs an embedding provider");
    }
  }
  return out;
}

}  // namespace ragbench
