#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace segadv {

// Bad input: values out of range, malformed records, invalid parameters.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Sequences that should line up (values vs trajectory, deltas vs schedule) do not.
struct AlignmentError : ValidationError {
  using ValidationError::ValidationError;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

inline void require_aligned(bool cond, const std::string& msg) {
  if (!cond) throw AlignmentError(msg);
}

inline void require_finite(double x, const std::string& what) {
  if (!std::isfinite(x)) throw ValidationError(what + " must be finite");
}

// splitmix64 finalizer; used to derive independent seed streams from a root seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return mix64(mix64(root) ^ mix64(stream + 0x51ed2701ULL));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(root, a), b);
}

// Shortest round-trip decimal form; locale independent.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// Runs fn(i) for i in [0, n). Work items must be independent; results keyed by
// index so the outcome does not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace segadv
