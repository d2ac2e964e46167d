#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace trajshap {

// A coalition of up to 63 features as a bitmask; bit i set = feature i present.
using Coalition = uint64_t;

inline Coalition full_coalition(int n) { return (Coalition{1} << n) - 1; }

// Deterministic, thread-safe set function. Called at most once per coalition
// by the exact engine; the sampler memoizes too.
using CoalitionValue = std::function<double(Coalition)>;

struct ShapleyResult {
  std::vector<double> phi;
  std::vector<double> stderr_;  // per feature; empty for the exact method
  double nu_empty = 0.0;
  double nu_full = 0.0;
  int64_t evaluations = 0;  // distinct coalition evaluations
};

struct ExactShapleyOptions {
  int max_features = 12;  // 2^n evaluations; hard ceiling 18 for exact factorial weights
  int workers = 1;
};

// phi_i = sum_{S not containing i} |S|! (n-1-|S|)! (nu(S+i) - nu(S)) / n!
// Every coalition value is computed once (parallel over coalitions, fixed
// reduction order). Constant-difference features therefore come out exactly
// zero and additive games with dyadic weights are recovered bit-exactly.
ShapleyResult shapley_exact_game(int n, const CoalitionValue& nu,
                                 const ExactShapleyOptions& options = {});

struct SampledShapleyOptions {
  int permutations = 2000;
  uint64_t seed = 0;
  int workers = 1;
};

// Mean marginal contribution over seeded uniform permutations, with the
// per-feature standard error (sample stddev / sqrt(m)). Deterministic given
// the seed, for any worker count.
ShapleyResult shapley_sampled_game(int n, const CoalitionValue& nu,
                                   const SampledShapleyOptions& options);

}  // namespace trajshap
