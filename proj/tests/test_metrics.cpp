// Tests for answer scoring: normalization, lexical metrics against
// independent oracles, embedding similarity, and the embedding providers
// (sidecar file and HTTP endpoint).
#include "doctest.h"
#include "oracles.hpp"

#include "ragbench/errors.hpp"
#include "ragbench/metrics.hpp"
#include "ragbench/util.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

using namespace ragbench;
using json = nlohmann::json;

namespace {

// Random short phrases over a small vocabulary so token overlaps are common.
std::string random_phrase(SeededRng& rng, size_t min_len, size_t max_len) {
  static const std::vector<std::string> words = {
      "tower", "bridge", "river", "red",  "blue",   "old",  "new",
      "city",  "famous", "both",  "1921", "quiet",  "gate", "stone",
  };
  size_t n = min_len + rng.next_below(max_len - min_len + 1);
  std::string out;
  for (size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words[rng.next_below(words.size())];
  }
  return out;
}

}  // namespace

TEST_CASE("metric names round-trip") {
  for (MetricId m : {MetricId::em, MetricId::f1, MetricId::rouge1, MetricId::rouge2,
                     MetricId::rougeL, MetricId::bertscore_f1, MetricId::embed_cosine}) {
    CHECK(parse_metric(metric_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_metric("bleu"), ParseError);
  CHECK(is_lexical_metric(MetricId::rougeL));
  CHECK_FALSE(is_lexical_metric(MetricId::bertscore_f1));
  CHECK_FALSE(is_lexical_metric(MetricId::embed_cosine));
}

TEST_CASE("normalize lowercases, strips punctuation and articles") {
  CHECK(normalize("The Tower, built in 1921!") ==
        std::vector<std::string>{"tower", "built", "in", "1921"});
  CHECK(normalize("A quick   test") == std::vector<std::string>{"quick", "test"});
  CHECK(normalize("an  An THE the") == std::vector<std::string>{});
  CHECK(normalize("") == std::vector<std::string>{});
  CHECK(normalize("don't") == std::vector<std::string>{"dont"});
  // Hyphens and slashes split nothing; they are just dropped.
  CHECK(normalize("state-of-the-art") == std::vector<std::string>{"stateoftheart"});
  // Tabs and newlines count as whitespace.
  CHECK(normalize("red\tblue\nold") == std::vector<std::string>{"red", "blue", "old"});
}

TEST_CASE("exact match compares normalized token sequences") {
  CHECK(exact_match("The Riverton Bridge!", "riverton bridge") == 1.0);
  CHECK(exact_match("yes", "Yes.") == 1.0);
  CHECK(exact_match("yes", "no") == 0.0);
  CHECK(exact_match("riverton bridge", "bridge riverton") == 0.0);  // order matters
  CHECK(exact_match("", "") == 1.0);
  CHECK(exact_match("a the an", "") == 1.0);  // only articles on one side
}

TEST_CASE("token F1 matches the oracle on random phrase pairs") {
  SeededRng rng(derive_seed(3, "f1-oracle"));
  for (int trial = 0; trial < 300; ++trial) {
    std::string pred = random_phrase(rng, 1, 8);
    std::string ref = random_phrase(rng, 1, 8);
    double got = token_f1(pred, ref);
    double want = oracles::f1_tokens(normalize(pred), normalize(ref));
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
  // Hand-checked: pred {red, red, blue}, ref {red, blue, old}; overlap 2,
  // precision 2/3, recall 2/3.
  CHECK(token_f1("red red blue", "red blue old") == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("token F1 empty-side conventions") {
  CHECK(token_f1("", "") == 1.0);
  CHECK(token_f1("the a an", "") == 1.0);  // both normalize to nothing
  CHECK(token_f1("", "answer") == 0.0);
  CHECK(token_f1("answer", "") == 0.0);
  CHECK(token_f1("red", "blue") == 0.0);  // disjoint
}

TEST_CASE("identity scores are exactly one for every lexical metric") {
  SeededRng rng(derive_seed(4, "identity"));
  for (int trial = 0; trial < 50; ++trial) {
    std::string text = random_phrase(rng, 1, 10);
    CHECK(exact_match(text, text) == 1.0);
    CHECK(token_f1(text, text) == 1.0);
    CHECK(rouge(text, text, RougeVariant::rouge1) == 1.0);
    CHECK(rouge(text, text, RougeVariant::rouge2) == 1.0);
    CHECK(rouge(text, text, RougeVariant::rougeL) == 1.0);
  }
  // Single-token texts have no bigrams on either side; identical inputs
  // still score 1 by the both-empty convention.
  CHECK(rouge("red", "red", RougeVariant::rouge2) == 1.0);
}

TEST_CASE("ROUGE-1 and ROUGE-2 match the n-gram oracle") {
  SeededRng rng(derive_seed(5, "rouge-oracle"));
  for (int trial = 0; trial < 300; ++trial) {
    std::string pred = random_phrase(rng, 1, 9);
    std::string ref = random_phrase(rng, 1, 9);
    auto p = normalize(pred);
    auto r = normalize(ref);
    CHECK(rouge(pred, ref, RougeVariant::rouge1) ==
          doctest::Approx(oracles::rouge_n(p, r, 1)).epsilon(1e-12));
    CHECK(rouge(pred, ref, RougeVariant::rouge2) ==
          doctest::Approx(oracles::rouge_n(p, r, 2)).epsilon(1e-12));
  }
  // Hand-checked bigrams: "red blue old" vs "blue old stone" share
  // ("blue","old"): 1 of 2 each side -> F1 = 0.5.
  CHECK(rouge("red blue old", "blue old stone", RougeVariant::rouge2) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ROUGE-L agrees with an exponential LCS oracle on short inputs") {
  SeededRng rng(derive_seed(6, "lcs-oracle"));
  for (int trial = 0; trial < 200; ++trial) {
    std::string pred = random_phrase(rng, 1, 7);
    std::string ref = random_phrase(rng, 1, 7);
    auto p = normalize(pred);
    auto r = normalize(ref);
    int lcs = oracles::lcs_exponential(p, r);
    double want = oracles::rouge_l_from_lcs(lcs, p.size(), r.size());
    CHECK(rouge(pred, ref, RougeVariant::rougeL) == doctest::Approx(want).epsilon(1e-12));
  }
  // Subsequence need not be contiguous: "red old gate" vs "red blue old stone gate"
  // has LCS 3; F1 = 2*(3/3)*(3/5)/(1+3/5) = 0.75.
  CHECK(rouge("red old gate", "red blue old stone gate", RougeVariant::rougeL) ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("ROUGE empty-side conventions") {
  for (RougeVariant v : {RougeVariant::rouge1, RougeVariant::rouge2, RougeVariant::rougeL}) {
    CHECK(rouge("", "", v) == 1.0);
    CHECK(rouge("", "answer text", v) == 0.0);
    CHECK(rouge("answer text", "", v) == 0.0);
  }
}

TEST_CASE("clamped cosine handles identity, orthogonality, and zero vectors") {
  std::vector<double> a{1.0, 2.0, 3.0};
  std::vector<double> b{-1.0, -2.0, -3.0};
  std::vector<double> c{3.0, -1.5, 0.0};  // orthogonal to a: 3 - 3 + 0 = 0
  CHECK(cosine_clamped(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_clamped(a, b) == 0.0);  // -1 clamps to 0
  CHECK(cosine_clamped(a, c) == doctest::Approx(0.0).epsilon(1e-12));
  std::vector<double> zero{0.0, 0.0, 0.0};
  CHECK(cosine_clamped(a, zero) == 0.0);
  CHECK(cosine_clamped(zero, zero) == 0.0);
  CHECK_THROWS_AS(cosine_clamped(a, std::vector<double>{1.0}), DimensionMismatch);
  CHECK_THROWS_AS(cosine_clamped(std::vector<double>{}, std::vector<double>{}), EmptyEmbeddings);
}

TEST_CASE("greedy BERTScore on hand-enumerated fixtures") {
  // pred tokens: u1=(1,0), u2=(0,1). ref tokens: v1=(1,0), v2=(1,1)/sqrt2.
  TokenEmbeddings pred{{"p1", "p2"}, {{1.0, 0.0}, {0.0, 1.0}}};
  TokenEmbeddings ref{{"r1", "r2"}, {{1.0, 0.0}, {1.0, 1.0}}};
  const double s = 1.0 / std::sqrt(2.0);

  // precision: u1 best=max(1, s)=1; u2 best=max(0, s)=s -> (1+s)/2
  // recall:    v1 best=max(1, 0)=1; v2 best=max(s, s)=s -> (1+s)/2
  auto b = bertscore_greedy(pred, ref);
  double side = (1.0 + s) / 2.0;
  CHECK(b.precision == doctest::Approx(side).epsilon(1e-12));
  CHECK(b.recall == doctest::Approx(side).epsilon(1e-12));
  CHECK(b.f1 == doctest::Approx(side).epsilon(1e-12));  // harmonic mean of equals

  // Identical inputs score exactly 1 on all three components.
  auto same = bertscore_greedy(pred, pred);
  CHECK(same.precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(same.recall == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(same.f1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("greedy BERTScore clamps negative similarities to zero") {
  // All cross-similarities are -1: every best match clamps to 0.
  TokenEmbeddings pred{{"p"}, {{1.0, 0.0}}};
  TokenEmbeddings ref{{"r"}, {{-1.0, 0.0}}};
  auto b = bertscore_greedy(pred, ref);
  CHECK(b.precision == 0.0);
  CHECK(b.recall == 0.0);
  CHECK(b.f1 == 0.0);  // 0/0 convention
}

TEST_CASE("greedy BERTScore validates embedding shapes") {
  TokenEmbeddings ok{{"a"}, {{1.0, 0.0}}};
  TokenEmbeddings empty;
  TokenEmbeddings ragged{{"a", "b"}, {{1.0, 0.0}, {1.0}}};
  TokenEmbeddings otherdim{{"a"}, {{1.0, 0.0, 0.0}}};
  TokenEmbeddings nonfinite{{"a"}, {{std::nan(""), 0.0}}};
  CHECK_THROWS_AS(bertscore_greedy(ok, empty), EmptyEmbeddings);
  CHECK_THROWS_AS(bertscore_greedy(empty, ok), EmptyEmbeddings);
  CHECK_THROWS_AS(bertscore_greedy(ragged, ok), DimensionMismatch);
  CHECK_THROWS_AS(bertscore_greedy(ok, otherdim), DimensionMismatch);
  CHECK_THROWS_AS(bertscore_greedy(nonfinite, ok), DimensionMismatch);
}

TEST_CASE("embedding sidecar parses, looks up by digest, and validates") {
  std::string text = "the tower is red";
  json sidecar{{sha256_hex(text),
                {{"tokens", {"the", "tower", "is", "red"}},
                 {"vectors", {{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}, {0.2, 0.8}}}}}};
  auto s = EmbeddingSidecar::parse(sidecar.dump());

  auto hit = s.lookup(text);
  REQUIRE(hit.has_value());
  CHECK(hit->tokens == std::vector<std::string>{"the", "tower", "is", "red"});
  REQUIRE(hit->vectors.size() == 4);
  CHECK(hit->vectors[3] == std::vector<double>{0.2, 0.8});
  CHECK_FALSE(s.lookup("some other text").has_value());

  CHECK_THROWS_AS(EmbeddingSidecar::parse("not json"), ParseError);
  CHECK_THROWS_AS(EmbeddingSidecar::parse("[]"), SchemaError);
  CHECK_THROWS_AS(EmbeddingSidecar::parse(R"({"d": {"tokens": ["a"]}})"), SchemaError);
  CHECK_THROWS_AS(
      EmbeddingSidecar::parse(R"({"d": {"tokens": ["a","b"], "vectors": [[1.0]]}})"),
      SchemaError);
}

TEST_CASE("embedding sidecar round-trips through a file") {
  auto dir = std::filesystem::temp_directory_path() /
             ("ragbench_sidecar_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::string path = (dir / "sidecar.json").string();
  json sidecar{{sha256_hex("answer one"),
                {{"tokens", {"answer", "one"}}, {"vectors", {{1.0, 0.0}, {0.0, 1.0}}}}}};
  write_file_atomic(path, sidecar.dump());
  auto s = EmbeddingSidecar::load(path);
  CHECK(s.lookup("answer one").has_value());
  CHECK_THROWS_AS(EmbeddingSidecar::load((dir / "missing.json").string()), FileNotFound);
}

TEST_CASE("lexical_scores computes requested metrics and rejects semantic ids") {
  auto scores = lexical_scores("red tower", "red tower",
                               {MetricId::em, MetricId::f1, MetricId::rougeL});
  REQUIRE(scores.size() == 3);
  CHECK(scores[0].first == MetricId::em);
  CHECK(scores[0].second == 1.0);
  CHECK(scores[1].first == MetricId::f1);
  CHECK(scores[1].second == 1.0);
  CHECK(scores[2].first == MetricId::rougeL);
  CHECK(scores[2].second == 1.0);

  CHECK_THROWS_AS(lexical_scores("a", "b", {MetricId::bertscore_f1}), ConfigError);
  CHECK_THROWS_AS(lexical_scores("a", "b", {MetricId::embed_cosine}), ConfigError);
}

// ---------------------------------------------------------------------------
// Embedding providers over HTTP (loopback server).
// ---------------------------------------------------------------------------

namespace {

struct EmbedServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;
  explicit EmbedServer() {
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~EmbedServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  EmbedderConfig config(const std::string& cache_dir = "") {
    EmbedderConfig cfg;
    cfg.backend.name = "embed-test";
    cfg.backend.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.backend.max_attempts = 2;
    cfg.backend.base_delay_ms = 1;
    cfg.backend.timeout_s = 5;
    cfg.model = "embedder";
    cfg.cache_dir = cache_dir;
    return cfg;
  }
};

}  // namespace

TEST_CASE("sentence embeddings drive embed_cosine and honor the disk cache") {
  EmbedServer es;
  std::atomic<int> calls{0};
  es.server.Post("/v1/embeddings", [&](const httplib::Request& r, httplib::Response& res) {
    ++calls;
    json body = json::parse(r.body);
    std::string text = body.at("input").at(0).get<std::string>();
    // Deterministic fake embedding: text "a"-count axis vs length axis.
    double a = static_cast<double>(std::count(text.begin(), text.end(), 'a'));
    json out{{"data", json::array({json{{"embedding", {a + 1.0, static_cast<double>(text.size())}}}})}};
    res.set_content(out.dump(), "application/json");
  });

  auto dir = std::filesystem::temp_directory_path() /
             ("ragbench_embed_cache_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  auto cfg = es.config(dir.string());

  // The first fetch writes the cache, so the identical reference text is
  // served from disk within the same call: exactly one network request.
  double same = embed_cosine("banana", "banana", cfg);
  CHECK(same == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(calls.load() == 1);

  // Re-scoring the same pair touches the network not at all.
  double again = embed_cosine("banana", "banana", cfg);
  CHECK(again == same);
  CHECK(calls.load() == 1);

  double cross = embed_cosine("banana", "pear", cfg);
  CHECK(cross > 0.0);
  CHECK(cross < 1.0);
  CHECK(calls.load() == 2);  // only the new text was fetched

  CHECK_THROWS_AS(embed_cosine("  ", "x", cfg), EmptyText);
}

TEST_CASE("token embeddings endpoint feeds BERTScore") {
  EmbedServer es;
  es.server.Post("/v1/token_embeddings", [&](const httplib::Request& r, httplib::Response& res) {
    json body = json::parse(r.body);
    std::string text = body.at("input").get<std::string>();
    json tokens = json::array();
    json vectors = json::array();
    size_t index = 1;
    for (const auto& tok : split_ws(text)) {
      tokens.push_back(tok);
      vectors.push_back(json::array({static_cast<double>(index), 1.0}));
      ++index;
    }
    res.set_content(json{{"tokens", tokens}, {"embeddings", vectors}}.dump(),
                    "application/json");
  });

  auto cfg = es.config();  // no cache dir: straight to the endpoint every time
  auto e = fetch_token_embeddings("red tower gate", cfg);
  REQUIRE(e.tokens.size() == 3);
  CHECK(e.tokens == std::vector<std::string>{"red", "tower", "gate"});
  CHECK(e.vectors[0] == std::vector<double>{1.0, 1.0});
  CHECK(e.vectors[2] == std::vector<double>{3.0, 1.0});

  auto b = bertscore_greedy(e, e);
  CHECK(b.f1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("embedding providers surface malformed endpoint responses") {
  EmbedServer es;
  es.server.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"data\": []}", "application/json");
  });
  es.server.Post("/v1/token_embeddings", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"tokens", {"a", "b"}}, {"embeddings", {{1.0}}}}.dump(),
                    "application/json");
  });
  auto cfg = es.config();
  CHECK_THROWS_AS(sentence_embedding("text", cfg), BackendError);
  CHECK_THROWS_AS(fetch_token_embeddings("text", cfg), BackendError);
}
