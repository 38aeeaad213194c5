#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ragbench {

// Seeded pseudo-random stream used everywhere determinism is promised.
// The engine is std::mt19937_64 (fully specified by the standard, so the
// stream is identical on every platform); bounded draws use Lemire's
// multiply-shift with rejection instead of std::uniform_int_distribution,
// whose output is implementation-defined. Run manifests record the
// algorithm under this name.
class SeededRng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/lemire-v1";

  explicit SeededRng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n). n must be nonzero.
  uint64_t next_below(uint64_t n);

  // Uniform in [0, 1) with 53 bits of precision.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Fisher-Yates shuffle driven by next_below.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// FNV-1a, used to fold strings and tags into RNG seeds and cheap keys.
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
uint64_t fnv1a64(std::string_view data, uint64_t basis = kFnvOffset);
uint64_t fnv1a64(uint64_t value, uint64_t basis = kFnvOffset);

// Derives a child seed from a parent seed and a label.
uint64_t derive_seed(uint64_t seed, std::string_view label);
uint64_t derive_seed(uint64_t seed, std::string_view label, uint64_t extra);

// SHA-256 hex digest (OpenSSL backed). Used for cache keys and artifact
// digests.
std::string sha256_hex(std::string_view data);

// --- file helpers ---

bool file_exists(const std::string& path);
std::string read_file(const std::string& path);
// Writes content to a temp file in the same directory, then renames over
// the target. Readers never observe a partial file.
void write_file_atomic(const std::string& path, std::string_view content);
void ensure_dir(const std::string& path);

// --- text helpers ---

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// printf-style fixed formatting, locale independent.
std::string fmt_double(double v, int decimals);

}  // namespace ragbench
