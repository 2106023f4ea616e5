#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mlop {

// Deterministic random stream.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Everything on top of the raw 64-bit words (uniform doubles,
// bounded integers, Box-Muller normals) is implemented here rather than via
// <random> distributions, whose algorithms are implementation-defined, so a
// seed reproduces the same numbers on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  // Uniform integer in [0, n), unbiased (rejection sampling). n > 0.
  std::size_t below(std::size_t n);

  // k distinct indices from [0, n) in selection order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Sub-seed for one component of an experiment: splitmix64 finaliser applied
// to master XOR fnv1a64(tag). Components draw from independent streams so
// that e.g. changing the sketch dimension leaves the dataset noise intact.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

// Tags used by the pipelines.
namespace seed_tag {
inline constexpr std::string_view kDatasetNoise = "dataset-noise";
inline constexpr std::string_view kDatasetEmbedding = "dataset-embedding";
inline constexpr std::string_view kSketch = "sketch";
inline constexpr std::string_view kInit = "init";
inline constexpr std::string_view kSupportSample = "support-sample";
inline constexpr std::string_view kBootstrap = "bootstrap";
}  // namespace seed_tag

}  // namespace mlop
