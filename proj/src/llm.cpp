#include "ragbench/llm.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "ragbench/errors.hpp"
#include "ragbench/util.hpp"

namespace ragbench {

using nlohmann::json;

std::vector<double> temperature_softmax(std::span<const double> logits, double T) {
  if (logits.empty()) throw EmptyLogits("temperature_softmax needs at least one logit");
  for (double l : logits)
    if (!std::isfinite(l)) throw NonFiniteLogit("non-finite logit in temperature_softmax");
  if (T < 0.0) throw ConfigError("temperature must be >= 0");

  size_t argmax = 0;
  for (size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[argmax]) argmax = i;  // ties keep the lowest index

  std::vector<double> p(logits.size(), 0.0);
  if (T == 0.0) {
    p[argmax] = 1.0;
    return p;
  }
  double max_logit = logits[argmax];
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - max_logit) / T);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

const char* finish_reason_name(FinishReason r) {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

FinishReason parse_finish_reason(const std::string& name) {
  if (name == "stop") return FinishReason::stop;
  if (name == "length") return FinishReason::length;
  return FinishReason::error;
}

namespace {

constexpr const char* kRagSystemPrompt =
    "You are a question answering assistant. Answer the question using only the "
    "information in the retrieved documents. Give a short, direct answer.";

void check_temperature(double T) {
  if (!(T >= 0.0 && T <= 2.0))
    throw ConfigError("temperature " + fmt_double(T, 3) + " outside [0.0, 2.0]");
}

// Single draw from a categorical distribution via the cumulative sum.
size_t sample_index(const std::vector<double>& probs, SeededRng& rng) {
  double u = rng.next_unit();
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;  // guard against rounding at the top end
}

size_t greedy_index(std::span<const double> logits) {
  size_t best = 0;
  for (size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

}  // namespace

void MockModel::validate() const {
  if (vocabulary.empty()) throw InvalidConfig("mock model has an empty vocabulary");
  if (bigram()) {
    if (initial_logits.size() != vocabulary.size())
      throw InvalidConfig("mock model initial_logits size mismatch");
    if (transition_logits.size() != vocabulary.size())
      throw InvalidConfig("mock model transition table must have one row per token");
    for (const auto& row : transition_logits)
      if (row.size() != vocabulary.size())
        throw InvalidConfig("mock model transition row size mismatch");
  } else {
    for (const auto& row : position_logits)
      if (row.size() != vocabulary.size())
        throw InvalidConfig("mock model position row size mismatch");
  }
}

MockModel MockModel::fixed_table(std::vector<std::string> vocab,
                                 std::vector<std::vector<double>> rows) {
  MockModel m;
  m.vocabulary = std::move(vocab);
  m.position_logits = std::move(rows);
  m.max_length = static_cast<int>(m.position_logits.size());
  m.validate();
  return m;
}

MockModel MockModel::default_qa_model() {
  MockModel m;
  m.vocabulary = {
      "the",    "answer", "is",      "alpha",   "bravo",  "charlie", "delta",  "echo",
      "foxtrot","golf",   "hotel",   "india",   "juliet", "kilo",    "lima",   "mike",
      "november","oscar", "papa",    "quebec",  "romeo",  "sierra",  "tango",  "uniform",
      "victor", "whiskey","xray",    "yankee",  "zulu",   "city",    "river",  "mountain",
      "team",   "player", "band",    "album",   "film",   "novel",   "bridge", "county",
      "north",  "south",  "east",    "west",    "first",  "second",  "both",   ".",
  };
  const size_t v = m.vocabulary.size();
  m.stop_token = static_cast<int>(v - 1);
  m.max_length = 24;

  // Chain structure: token i strongly prefers i+1, with the chain head
  // reaching the stop token after a dozen steps. A weaker second choice
  // keeps mid temperatures mildly noisy without breaking greedy decoding.
  m.initial_logits.assign(v, 0.0);
  m.initial_logits[0] = 3.0;
  m.initial_logits[3] = 1.0;
  m.transition_logits.assign(v, std::vector<double>(v, 0.0));
  for (size_t i = 0; i < v; ++i) {
    size_t preferred = (i == 11) ? v - 1 : (i + 1) % v;
    size_t second = (i + 13) % v;
    m.transition_logits[i][preferred] = 3.0;
    if (second != preferred) m.transition_logits[i][second] = 1.0;
  }
  m.validate();
  return m;
}

GenerationResult mock_generate(const GenerationRequest& request, const MockModel& model) {
  check_temperature(request.temperature);
  if (request.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  model.validate();

  SeededRng rng(derive_seed(request.seed, "mock-generate",
                            static_cast<uint64_t>(request.run_index)));
  const double T = request.temperature;
  const int cap = std::min(request.max_tokens, model.max_length);

  std::vector<std::string> tokens;
  FinishReason finish = FinishReason::length;

  auto next_token = [&](std::span<const double> logits) -> size_t {
    if (T == 0.0) return greedy_index(logits);
    auto probs = temperature_softmax(logits, T);
    return sample_index(probs, rng);
  };

  if (model.bigram()) {
    int prev = -1;
    for (int step = 0; step < cap; ++step) {
      const auto& logits = prev < 0 ? model.initial_logits : model.transition_logits[prev];
      size_t idx = next_token(logits);
      if (static_cast<int>(idx) == model.stop_token) {
        finish = FinishReason::stop;
        break;
      }
      tokens.push_back(model.vocabulary[idx]);
      prev = static_cast<int>(idx);
    }
  } else {
    const int rows = static_cast<int>(model.position_logits.size());
    int limit = std::min(cap, rows);
    for (int step = 0; step < limit; ++step) {
      size_t idx = next_token(model.position_logits[step]);
      if (static_cast<int>(idx) == model.stop_token) {
        finish = FinishReason::stop;
        break;
      }
      tokens.push_back(model.vocabulary[idx]);
    }
    if (limit == rows && static_cast<int>(tokens.size()) == rows) finish = FinishReason::stop;
  }

  GenerationResult r;
  r.text = join(tokens, " ");
  r.finish_reason = finish;
  r.attempts = 1;
  r.from_cache = false;
  r.latency_ms = 0;
  return r;
}

Prompt build_rag_prompt(const std::string& question, const std::vector<Document>& context) {
  if (question.empty()) throw EmptyField("question must be non-empty");
  std::string user;
  for (const auto& d : context) {
    user += "Title: " + d.title + "\n";
    for (const auto& s : d.sentences) user += s + "\n";
    user += "\n";
  }
  user += "Question: " + question;
  return {{"system", kRagSystemPrompt}, {"user", user}};
}

std::string serialize_prompt(const Prompt& prompt) {
  json arr = json::array();
  for (const auto& m : prompt) arr.push_back(json{{"role", m.role}, {"content", m.content}});
  return arr.dump();
}

std::string BackendConfig::key_env_name() const {
  if (!api_key_env.empty()) return api_key_env;
  std::string env = name;
  for (char& c : env)
    c = std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(c)) : '_';
  return env + "_API_KEY";
}

CacheStore::CacheStore(std::string dir) : dir_(std::move(dir)) { ensure_dir(dir_); }

std::string CacheStore::path_for(const std::string& key) const { return dir_ + "/" + key + ".json"; }

std::string CacheStore::compute_key(const std::string& model, const std::string& prompt_bytes,
                                    double temperature, int max_tokens, int run_index) {
  std::string material = model + "\n" + sha256_hex(prompt_bytes) + "\n" +
                         fmt_double(temperature, 6) + "\n" + std::to_string(max_tokens) + "\n" +
                         std::to_string(run_index);
  return sha256_hex(material);
}

std::optional<CacheStore::Entry> CacheStore::lookup(const std::string& key) const {
  std::string path = path_for(key);
  if (!file_exists(path)) return std::nullopt;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw CacheCorruption("unreadable cache record " + key + ": " + e.what());
  }
  Entry e;
  try {
    e.key = j.at("key").get<std::string>();
    e.model = j.at("model").get<std::string>();
    e.temperature = j.at("temperature").get<double>();
    e.max_tokens = j.at("max_tokens").get<int>();
    e.run_index = j.at("run_index").get<int>();
    e.prompt_digest = j.at("prompt_digest").get<std::string>();
    e.text = j.at("text").get<std::string>();
    e.finish_reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
  } catch (const json::exception& ex) {
    throw CacheCorruption("cache record " + key + " missing fields: " + ex.what());
  }
  // Recompute the key from the stored header; any drift means corruption.
  std::string material = e.model + "\n" + e.prompt_digest + "\n" + fmt_double(e.temperature, 6) +
                         "\n" + std::to_string(e.max_tokens) + "\n" + std::to_string(e.run_index);
  std::string expect = sha256_hex(material);
  if (expect != key || e.key != key)
    throw CacheCorruption("cache digest mismatch for " + key);
  return e;
}

void CacheStore::insert(const Entry& entry) const {
  json j{{"key", entry.key},
         {"model", entry.model},
         {"temperature", entry.temperature},
         {"max_tokens", entry.max_tokens},
         {"run_index", entry.run_index},
         {"prompt_digest", entry.prompt_digest},
         {"text", entry.text},
         {"finish_reason", finish_reason_name(entry.finish_reason)}};
  write_file_atomic(path_for(entry.key), j.dump(2) + "\n");
}

namespace {

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

void backoff_sleep(const BackendConfig& backend, int attempt, SeededRng& rng) {
  // Full jitter: uniform over [0, base * 2^(attempt-1)].
  double ceiling = static_cast<double>(backend.base_delay_ms) * std::pow(2.0, attempt - 1);
  auto ms = static_cast<long>(rng.next_unit() * ceiling);
  if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

}  // namespace

std::string post_json_with_retries(const BackendConfig& backend, const std::string& path,
                                   const std::string& body, int* attempts_out) {
  httplib::Client client(backend.base_url);
  client.set_connection_timeout(backend.timeout_s, 0);
  client.set_read_timeout(backend.timeout_s, 0);
  client.set_write_timeout(backend.timeout_s, 0);

  httplib::Headers headers;
  if (const char* key = std::getenv(backend.key_env_name().c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  SeededRng jitter(fnv1a64(body, fnv1a64(backend.base_url)));
  std::string last_error = "no attempt made";
  int attempts = 0;
  for (int attempt = 1; attempt <= backend.max_attempts; ++attempt) {
    attempts = attempt;
    auto res = client.Post(path, headers, body, "application/json");
    if (res && res->status == 200) {
      if (attempts_out) *attempts_out = attempts;
      return res->body;
    }
    if (res && !retryable_status(res->status)) {
      if (attempts_out) *attempts_out = attempts;
      throw BackendError("backend '" + backend.name + "' returned status " +
                         std::to_string(res->status) + ": " + res->body);
    }
    last_error = res ? "status " + std::to_string(res->status)
                     : "transport error (" + httplib::to_string(res.error()) + ")";
    if (attempt < backend.max_attempts) backoff_sleep(backend, attempt, jitter);
  }
  if (attempts_out) *attempts_out = attempts;
  throw BackendError("backend '" + backend.name + "' failed after " +
                     std::to_string(backend.max_attempts) + " attempts; last: " + last_error);
}

GenerationResult generate(const GenerationRequest& request, const BackendConfig& backend,
                          const CacheStore* cache) {
  check_temperature(request.temperature);
  if (request.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");

  const std::string prompt_bytes = serialize_prompt(request.prompt);
  const std::string key = CacheStore::compute_key(request.model, prompt_bytes,
                                                  request.temperature, request.max_tokens,
                                                  request.run_index);
  if (cache) {
    if (auto hit = cache->lookup(key)) {
      GenerationResult r;
      r.text = hit->text;
      r.finish_reason = hit->finish_reason;
      r.attempts = 0;
      r.from_cache = true;
      r.latency_ms = 0;
      return r;
    }
  }

  json messages = json::array();
  for (const auto& m : request.prompt)
    messages.push_back(json{{"role", m.role}, {"content", m.content}});
  json body{{"model", request.model},
            {"messages", messages},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};

  auto t0 = std::chrono::steady_clock::now();
  int attempts = 0;
  std::string response = post_json_with_retries(backend, backend.chat_path, body.dump(), &attempts);
  auto t1 = std::chrono::steady_clock::now();

  GenerationResult r;
  try {
    json j = json::parse(response);
    const auto& choice = j.at("choices").at(0);
    r.text = choice.at("message").at("content").get<std::string>();
    std::string reason = choice.value("finish_reason", "stop");
    r.finish_reason = reason == "length" ? FinishReason::length : FinishReason::stop;
  } catch (const json::exception& e) {
    throw BackendError("backend '" + backend.name + "' returned malformed response: " + e.what());
  }
  r.attempts = attempts;
  r.from_cache = false;
  r.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();

  if (cache) {
    CacheStore::Entry entry;
    entry.key = key;
    entry.model = request.model;
    entry.temperature = request.temperature;
    entry.max_tokens = request.max_tokens;
    entry.run_index = request.run_index;
    entry.prompt_digest = sha256_hex(prompt_bytes);
    entry.text = r.text;
    entry.finish_reason = r.finish_reason;
    cache->insert(entry);
  }
  return r;
}

}  // namespace ragbench
