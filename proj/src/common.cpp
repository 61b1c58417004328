#include "flowcast/common.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <thread>

namespace flowcast {

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * factor;
  have_cached_normal_ = true;
  return u * factor;
}

std::uint64_t Rng::derive_seed(std::uint64_t root, std::string_view label,
                               std::uint64_t index) {
  // FNV-1a over (root, label, index), then a splitmix64 finalizer to
  // decorrelate nearby seeds.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(root >> (8 * i)));
  for (char c : label) mix_byte(static_cast<unsigned char>(c));
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(index >> (8 * i)));
  std::uint64_t z = h + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

namespace detail {

void parallel_for_impl(std::size_t n, int workers,
                       void (*fn)(std::size_t, void*), void* ctx) {
  if (n == 0) return;
  unsigned int nw = workers > 0 ? static_cast<unsigned int>(workers)
                                : std::thread::hardware_concurrency();
  if (nw == 0) nw = 1;
  if (nw > n) nw = static_cast<unsigned int>(n);
  if (nw == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, ctx);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i, ctx);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (unsigned int t = 0; t < nw; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

}  // namespace flowcast
