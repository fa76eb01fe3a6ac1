#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace crbm {

/// SplitMix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a stream key from a base seed and a path of counters. The result
/// depends only on the arguments, never on the order in which streams are
/// created, so work can be scheduled in any order.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(seed);
  for (auto p : path) key = mix64(key ^ mix64(p + 0x632be59bd9b4e019ULL));
  return key;
}

/// Random source for one logical stream (one chain, one subject, one twin).
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t key) {
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(mix64(key)), 0x5eedu};
    engine_.seed(seq);
  }
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) : Rng(stream_key(seed, path)) {}

  double uniform() { return unif_(engine_); }
  double normal() { return norm_(engine_); }
  double normal(double mean, double sd) { return mean + sd * norm_(engine_); }
  bool bernoulli(double p) { return unif_(engine_) < p; }
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_ && a.norm_ == b.norm_;
  }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

/// Fisher-Yates shuffle driven by Rng (std::shuffle's draw sequence is
/// implementation-defined; this one is not).
template <class Vec>
void shuffle(Vec& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.next() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace crbm
