#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vlgen::eval {

struct PermutationOptions {
  std::size_t resamples = 10000;
  std::uint64_t seed = 0;
  // Exact enumeration when C(|a|+|b|, |a|) does not exceed this.
  double exact_limit = 20000;
};

struct PermutationResult {
  double p_value = 1.0;
  double observed = 0.0;  // |mean(a) - mean(b)|
  bool exact = false;
  std::size_t permutations = 0;  // splits enumerated or resamples drawn
};

// Two-sided permutation test on the absolute difference of means. Monte
// Carlo mode uses the add-one estimator (1 + #{>= observed}) / (1 + R).
// Throws InvalidArgument if either sample is empty.
PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                   const PermutationOptions& options = {});

// Always Monte Carlo; used to cross-check exact mode.
PermutationResult permutation_test_monte_carlo(std::span<const double> a, std::span<const double> b,
                                               const PermutationOptions& options = {});

// Kendall tau-b. Throws InvalidArgument on length mismatch, n < 2, or a
// constant list (tau undefined).
double kendall_tau(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> xs);

// Binomial coefficient as a double (saturates at +inf).
double binomial(std::size_t n, std::size_t k);

namespace serial {
// Reference Monte Carlo count: resamples with statistic >= threshold,
// blocks visited in order.
std::size_t count_extreme_resamples(std::span<const double> pooled, std::size_t n_a, double threshold,
                                    std::size_t resamples, std::uint64_t seed);
}  // namespace serial

namespace omp {
// Same count, blocks distributed over threads.
std::size_t count_extreme_resamples(std::span<const double> pooled, std::size_t n_a, double threshold,
                                    std::size_t resamples, std::uint64_t seed);
}  // namespace omp

}  // namespace vlgen::eval
