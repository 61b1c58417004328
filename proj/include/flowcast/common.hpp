#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace flowcast {

inline constexpr const char* kVersion = "0.1.0";

/// Base class for all library errors. Subclasses map to CLI exit codes:
/// ParamError -> 1, DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter or option value.
class ParamError : public Error {
 public:
  using Error::Error;
};

/// Malformed, inconsistent, or insufficient input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: divergence, non-convergence, NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Deterministic RNG. Uses the standard mt19937_64 engine (whose output
/// sequence is pinned by the standard) with hand-rolled variate transforms,
/// so streams reproduce across platforms and stdlib versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    if (hi < lo) throw ParamError("uniform_int: empty range");
    const auto span = static_cast<std::uint64_t>(hi) - lo + 1;
    return lo + static_cast<int>(static_cast<std::uint64_t>(
                    uniform() * static_cast<double>(span)));
  }

  /// Standard normal via polar Box-Muller (second value cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(
          uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }

  /// Derives an independent child stream keyed by label (and index).
  /// Depends only on this stream's seed, not on how much was consumed.
  Rng split(std::string_view label, std::uint64_t index = 0) const {
    return Rng(derive_seed(seed_, label, index));
  }

  static std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                                   std::uint64_t index = 0);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// Shortest round-trip decimal formatting of a double.
std::string format_double(double v);

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware
/// concurrency, 1 = inline). Iterations must be independent; anything keyed
/// by i stays deterministic regardless of worker count.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn);

namespace detail {
void parallel_for_impl(std::size_t n, int workers,
                       void (*fn)(std::size_t, void*), void* ctx);
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  using F = std::remove_reference_t<Fn>;
  detail::parallel_for_impl(
      n, workers,
      [](std::size_t i, void* ctx) { (*static_cast<F*>(ctx))(i); },
      static_cast<void*>(std::addressof(fn)));
}

}  // namespace flowcast
