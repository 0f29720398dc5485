#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wesbench {

// ---------------------------------------------------------------------------
// Error types. Every failure surfaced by the library derives from Error so
// callers can distinguish numeric failures from configuration problems.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define WESBENCH_ERROR_TYPE(Name)                                              \
  class Name : public Error {                                                  \
  public:                                                                      \
    using Error::Error;                                                        \
  }

WESBENCH_ERROR_TYPE(DimensionMismatch);
WESBENCH_ERROR_TYPE(ParticleMismatch);
WESBENCH_ERROR_TYPE(AllZeroWeights);
WESBENCH_ERROR_TYPE(EmptyEnsemble);
WESBENCH_ERROR_TYPE(EmptyPointSet);
WESBENCH_ERROR_TYPE(RankDeficient);
WESBENCH_ERROR_TYPE(InsufficientFrames);
WESBENCH_ERROR_TYPE(LagTooLong);
WESBENCH_ERROR_TYPE(NoConnectedSet);
WESBENCH_ERROR_TYPE(NotIrreducible);
WESBENCH_ERROR_TYPE(TooFewFrames);
WESBENCH_ERROR_TYPE(TooFewParticles);
WESBENCH_ERROR_TYPE(SupportMismatch);
WESBENCH_ERROR_TYPE(ZeroBandwidth);

#undef WESBENCH_ERROR_TYPE

// Configuration/IO problems map to CLI exit code 2, everything above to 3.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Counter-style RNG. Each (seed_base, stream, sequence) triple names an
// independent stream, so replays are bit-identical no matter how walkers are
// scheduled across threads. A Weyl sequence with a per-stream increment and a
// splitmix-style finalizer; normals via Box-Muller so draws do not depend on
// the standard library's distribution internals.
// ---------------------------------------------------------------------------

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
} // namespace detail

class Rng {
public:
  Rng(std::uint64_t seed_base, std::uint64_t stream, std::uint64_t sequence) {
    std::uint64_t k = detail::mix64(seed_base + 0x9e3779b97f4a7c15ull);
    k = detail::mix64(k ^ (stream + 0xd1b54a32d192ed03ull));
    k = detail::mix64(k ^ (sequence + 0x8cb92ba72f3d8dd7ull));
    state_ = k;
    gamma_ = detail::mix64(k + 0x9e3779b97f4a7c15ull) | 1ull;
  }

  std::uint64_t next_u64() {
    state_ += gamma_;
    return detail::mix64(state_);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0)
      u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

private:
  std::uint64_t state_;
  std::uint64_t gamma_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream tags keep the per-purpose RNG streams of a run disjoint.
enum : std::uint64_t {
  kStreamPropagate = 0x70726f70ull, // per-walker segment noise
  kStreamResample = 0x6d657267ull,  // per-iteration merge survivor draws
  kStreamKmeans = 0x6b6d6e73ull,    // k-means seeding
};

// Worker-thread cap: WESBENCH_THREADS wins over hardware_concurrency.
inline int worker_threads() {
  if (const char* env = std::getenv("WESBENCH_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1)
      return static_cast<int>(n);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs body(i) for i in [0, n). Each worker strides over indices, so results
// written to slot i are identical for any thread count.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  const int t_count = static_cast<int>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  pool.reserve(t_count);
  for (int t = 0; t < t_count; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += t_count)
          body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error)
          first_error = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool)
    th.join();
  if (first_error)
    std::rethrow_exception(first_error);
}

} // namespace wesbench
