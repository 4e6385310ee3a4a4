#pragma once

#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace wv {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Seeded, addressable random stream. A (seed, stream_id) pair fully
// determines the draw sequence, so per-sample child streams make serial
// and parallel ensemble runs bit-identical.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t s = detail::splitmix64(seed ^ detail::splitmix64(stream_id));
    gen_.seed(s);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Child stream for sample `i`; derivation is pure arithmetic on ids.
  RngStream child(std::uint64_t i) const {
    return RngStream(seed_, detail::splitmix64(stream_id_) ^ (i + 1));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 significant bits, identical on every platform
  // that implements mt19937_64 per the standard.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 gen_;
};

// Runs fn(begin, end) over [0, n) split into contiguous chunks, one thread
// per chunk. Each chunk must write only its own slots; the result is then
// independent of scheduling. threads <= 0 selects hardware concurrency.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    threads = hc == 0 ? 1 : static_cast<int>(hc);
  }
  std::size_t nthreads = std::min<std::size_t>(threads, n == 0 ? 1 : n);
  if (nthreads <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::size_t chunk = (n + nthreads - 1) / nthreads;
  for (std::size_t t = 0; t < nthreads; ++t) {
    std::size_t begin = t * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace wv
