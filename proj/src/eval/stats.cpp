#include "vlgen/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vlgen/error.hpp"

namespace vlgen::eval {
namespace {

// Resamples are split into this many blocks, each with its own generator,
// so the count does not depend on the thread count.
constexpr std::size_t kBlocks = 64;

double tolerance(std::span<const double> pooled) {
  auto [lo, hi] = std::minmax_element(pooled.begin(), pooled.end());
  return 1e-9 * (*hi - *lo);
}

// |mean of the first n_a entries - mean of the rest| given their sum.
double statistic(double sum_a, double total, std::size_t n_a, std::size_t n_b) {
  return std::abs(sum_a / double(n_a) - (total - sum_a) / double(n_b));
}

std::size_t count_block(std::span<const double> pooled, std::size_t n_a, double threshold, std::size_t begin,
                        std::size_t end, std::uint64_t seed, std::size_t block) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(block)};
  std::mt19937_64 rng(seq);
  std::vector<double> work(pooled.begin(), pooled.end());
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const std::size_t n = work.size(), n_b = n - n_a;
  std::size_t count = 0;
  for (std::size_t r = begin; r < end; ++r) {
    // Partial Fisher-Yates: the first n_a slots become a uniform random subset.
    double sum_a = 0;
    for (std::size_t i = 0; i < n_a; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(work[i], work[pick(rng)]);
      sum_a += work[i];
    }
    count += statistic(sum_a, total, n_a, n_b) >= threshold;
  }
  return count;
}

void check_samples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("permutation_test: both samples must be non-empty");
}

std::vector<double> pool(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  return pooled;
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidArgument("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  double out = 1;
  for (std::size_t i = 1; i <= k; ++i) out = out * double(n - k + i) / double(i);
  return std::round(out);
}

namespace serial {
std::size_t count_extreme_resamples(std::span<const double> pooled, std::size_t n_a, double threshold,
                                    std::size_t resamples, std::uint64_t seed) {
  std::size_t count = 0;
  for (std::size_t b = 0; b < kBlocks; ++b)
    count += count_block(pooled, n_a, threshold, b * resamples / kBlocks, (b + 1) * resamples / kBlocks, seed, b);
  return count;
}
}  // namespace serial

namespace omp {
std::size_t count_extreme_resamples(std::span<const double> pooled, std::size_t n_a, double threshold,
                                    std::size_t resamples, std::uint64_t seed) {
  std::size_t count = 0;
  const long blocks = long(kBlocks);
#pragma omp parallel for reduction(+ : count) schedule(static)
  for (long b = 0; b < blocks; ++b)
    count += count_block(pooled, n_a, threshold, std::size_t(b) * resamples / kBlocks,
                         std::size_t(b + 1) * resamples / kBlocks, seed, std::size_t(b));
  return count;
}
}  // namespace omp

PermutationResult permutation_test_monte_carlo(std::span<const double> a, std::span<const double> b,
                                               const PermutationOptions& options) {
  check_samples(a, b);
  const auto pooled = pool(a, b);
  PermutationResult res;
  res.observed = std::abs(mean(a) - mean(b));
  res.permutations = options.resamples;
  const double threshold = res.observed - tolerance(pooled);
  const std::size_t hits = omp::count_extreme_resamples(pooled, a.size(), threshold, options.resamples, options.seed);
  res.p_value = double(1 + hits) / double(1 + options.resamples);
  return res;
}

PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                   const PermutationOptions& options) {
  check_samples(a, b);
  const std::size_t n_a = a.size(), n = a.size() + b.size();
  if (binomial(n, n_a) > options.exact_limit) return permutation_test_monte_carlo(a, b, options);

  const auto pooled = pool(a, b);
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  PermutationResult res;
  res.exact = true;
  res.observed = std::abs(mean(a) - mean(b));
  const double threshold = res.observed - tolerance(pooled);

  // Enumerate index subsets of size n_a in lexicographic order.
  std::vector<std::size_t> idx(n_a);
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t hits = 0, splits = 0;
  for (;;) {
    double sum_a = 0;
    for (auto i : idx) sum_a += pooled[i];
    hits += statistic(sum_a, total, n_a, n - n_a) >= threshold;
    ++splits;
    std::size_t i = n_a;
    while (i > 0 && idx[i - 1] == n - n_a + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < n_a; ++j) idx[j] = idx[j - 1] + 1;
  }
  res.permutations = splits;
  res.p_value = double(hits) / double(splits);
  return res;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("kendall_tau: lists differ in length");
  if (x.size() < 2) throw InvalidArgument("kendall_tau: need at least two observations");
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0) ++ties_x;
      if (dy == 0) ++ties_y;
      if (dx == 0 || dy == 0) continue;
      ((dx > 0) == (dy > 0) ? concordant : discordant)++;
    }
  const double pairs = double(n) * double(n - 1) / 2;
  const double denom = std::sqrt((pairs - double(ties_x)) * (pairs - double(ties_y)));
  if (denom == 0) throw InvalidArgument("kendall_tau: undefined for a constant list");
  return double(concordant - discordant) / denom;
}

}  // namespace vlgen::eval
