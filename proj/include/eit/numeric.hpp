#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

namespace eit {

/* SplitMix64 finalizer. Used as a counter-based generator: bit-identical
   on every platform and randomly addressable, which is what makes seeded
   runs reproducible under any thread count. */
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/* Independent sub-stream seed for (base, a[, b]). */
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ splitmix64(a + 0x632be59bd9b4e019ULL));
  if (b) h = splitmix64(h ^ splitmix64(b + 0x9e3779b97f4a7c15ULL));
  return h;
}

/* Uniform draw indexed by position in the stream; value strictly inside (0,1). */
inline double uniform01(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t bits = splitmix64(seed + index * 0x9e3779b97f4a7c15ULL);
  return (double(bits >> 11) + 0.5) * 0x1p-53;
}

/* Standard normal by Box-Muller on the counter stream (two uniforms per draw). */
inline double standard_normal(std::uint64_t seed, std::uint64_t index) {
  const double u1 = uniform01(seed, 2 * index);
  const double u2 = uniform01(seed, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/* Kahan compensated accumulator. After t = fl(s + y) the excess
   c = fl(fl(t - s) - y) has been over-counted, so the running total is s - c;
   merge() folds another accumulator in on that convention. */
struct KahanSum {
  double s = 0.0;
  double c = 0.0;

  void add(double x) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  void merge(const KahanSum& o) {
    add(o.s);
    add(-o.c);
  }
  void scale(double f) {
    s *= f;
    c *= f;
  }
  double value() const { return s - c; }
};

/* FNV-1a 64-bit, used for output manifests. */
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

/* Runs fn(begin, end, chunk_index) over [0, n) split into fixed chunks.
   The chunk grid depends only on (n, chunk_size), never on the number of
   workers, so per-chunk results merged in chunk order are deterministic. */
void parallel_chunks(std::int64_t n, std::int64_t chunk_size,
                     const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn,
                     int threads = 0);

/* Number of worker threads: explicit argument, else EIT_THREADS, else all cores. */
int resolve_threads(int requested);

}  // namespace eit
