#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace nefqvf {

using Rng = std::mt19937_64;

// Independent generator for (seed, stream). Results that are split into
// streams are reproducible for a fixed seed regardless of worker count.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6e6566u};
  return Rng(seq);
}

// Running first and second moments, merged in a fixed order.
struct MomentAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  void merge(const MomentAccumulator& other) {
    sum += other.sum;
    sum_sq += other.sum_sq;
    count += other.count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  // Standard error of the mean from the sample standard deviation.
  double stderr_of_mean() const;
};

inline double MomentAccumulator::stderr_of_mean() const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double m = sum / n;
  double var = (sum_sq - n * m * m) / (n - 1.0);
  if (var < 0.0) var = 0.0;
  return std::sqrt(var / n);
}

// Runs body(block) for block in [0, blocks) on up to `workers` threads.
// Each block must write only to its own output slot.
inline void parallel_blocks(std::size_t blocks, unsigned workers,
                            const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  const std::size_t nthreads = std::min<std::size_t>(workers, blocks);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t b = t; b < blocks; b += nthreads) body(b);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace nefqvf
