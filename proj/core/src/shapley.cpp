#include "trajshap/shapley.hpp"

#include <bit>
#include <cmath>
#include <unordered_map>

#include "trajshap/errors.hpp"
#include "trajshap/parallel.hpp"
#include "trajshap/rng.hpp"

namespace trajshap {
namespace {

// exact in double up to 18!
double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::vector<double> evaluate_all(const std::vector<Coalition>& coalitions, const CoalitionValue& nu,
                                 int workers) {
  std::vector<double> values(coalitions.size());
  parallel_for(coalitions.size(), workers, [&](size_t i) { values[i] = nu(coalitions[i]); });
  return values;
}

}  // namespace

ShapleyResult shapley_exact_game(int n, const CoalitionValue& nu, const ExactShapleyOptions& options) {
  const int cap = std::min(options.max_features, 18);
  if (n > cap)
    throw TooManyFeaturesError("exact enumeration over " + std::to_string(n) +
                               " features exceeds the cap of " + std::to_string(cap) +
                               "; use the permutation sampler");
  ShapleyResult result;
  if (n == 0) {
    result.nu_empty = result.nu_full = nu(0);
    result.evaluations = 1;
    return result;
  }

  const size_t count = size_t{1} << n;
  std::vector<Coalition> coalitions(count);
  for (size_t mask = 0; mask < count; ++mask) coalitions[mask] = mask;
  const std::vector<double> table = evaluate_all(coalitions, nu, options.workers);

  std::vector<double> weight(n);  // |S|! (n-1-|S|)!
  for (int s = 0; s < n; ++s) weight[s] = factorial(s) * factorial(n - 1 - s);
  const double total = factorial(n);

  result.phi.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const Coalition bit = Coalition{1} << i;
    double acc = 0.0;
    for (Coalition mask = 0; mask < count; ++mask) {
      if (mask & bit) continue;
      acc += weight[std::popcount(mask)] * (table[mask | bit] - table[mask]);
    }
    result.phi[i] = acc / total;
  }
  result.nu_empty = table[0];
  result.nu_full = table[count - 1];
  result.evaluations = static_cast<int64_t>(count);
  return result;
}

ShapleyResult shapley_sampled_game(int n, const CoalitionValue& nu,
                                   const SampledShapleyOptions& options) {
  if (n > 63) throw TooManyFeaturesError("coalition masks support at most 63 features");
  ShapleyResult result;
  if (n == 0) {
    result.nu_empty = result.nu_full = nu(0);
    result.evaluations = 1;
    return result;
  }
  const int m = std::max(1, options.permutations);
  const RngStream root = RngStream::root(options.seed);

  // All permutations up front, then the distinct prefix coalitions in first-use
  // order. ν is evaluated once per distinct coalition, in parallel; the
  // accumulation below is sequential and independent of the worker count.
  std::vector<std::vector<int>> perms(m);
  std::vector<Coalition> distinct;
  std::unordered_map<Coalition, size_t> index_of;
  auto intern = [&](Coalition c) {
    auto [it, inserted] = index_of.try_emplace(c, distinct.size());
    if (inserted) distinct.push_back(c);
    return it->second;
  };
  intern(0);
  std::vector<int> identity(n);
  for (int i = 0; i < n; ++i) identity[i] = i;
  for (int p = 0; p < m; ++p) {
    perms[p] = identity;
    seeded_shuffle(perms[p], root.sub(static_cast<uint64_t>(p)));
    Coalition prefix = 0;
    for (int i : perms[p]) {
      prefix |= Coalition{1} << i;
      intern(prefix);
    }
  }
  const std::vector<double> values = evaluate_all(distinct, nu, options.workers);

  std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
  for (int p = 0; p < m; ++p) {
    Coalition prefix = 0;
    double prev = values[index_of.at(prefix)];
    for (int i : perms[p]) {
      prefix |= Coalition{1} << i;
      const double cur = values[index_of.at(prefix)];
      const double marginal = cur - prev;
      sum[i] += marginal;
      sum_sq[i] += marginal * marginal;
      prev = cur;
    }
  }

  result.phi.assign(n, 0.0);
  result.stderr_.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double mean = sum[i] / m;
    result.phi[i] = mean;
    if (m > 1) {
      const double var = std::max(0.0, (sum_sq[i] - m * mean * mean) / (m - 1));
      result.stderr_[i] = std::sqrt(var / m);
    }
  }
  result.nu_empty = values[index_of.at(0)];
  result.nu_full = values[index_of.at(full_coalition(n))];
  result.evaluations = static_cast<int64_t>(distinct.size());
  return result;
}

}  // namespace trajshap
