#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace stochfv {

// Runs body(i) for i in [0, count) on up to `workers` threads. Tasks are
// handed out through a shared atomic counter; the body must only write to
// slots owned by its own index. Rethrows the first task exception after all
// threads join. workers <= 1 runs inline.
void parallel_for(std::int64_t count, int workers,
                  const std::function<void(std::int64_t)>& body);

// Fixed-shape pairwise tree sum of f(lo), ..., f(hi - 1). The association
// order depends only on (lo, hi), never on thread schedule, so accumulated
// statistics are bit-stable for any worker count.
template <class F>
double pairwise_sum(std::int64_t lo, std::int64_t hi, F&& f) {
  const std::int64_t count = hi - lo;
  if (count <= 0) return 0.0;
  if (count == 1) return f(lo);
  if (count == 2) return f(lo) + f(lo + 1);
  const std::int64_t mid = lo + count / 2;
  return pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f);
}

// Same tree shape for vector-valued summands. f(k, acc) must either fill or
// add into acc; here f(k) returns the summand for leaf k.
template <class F>
std::vector<double> pairwise_sum_vectors(std::int64_t lo, std::int64_t hi, F&& f) {
  const std::int64_t count = hi - lo;
  if (count == 1) return f(lo);
  const std::int64_t mid = lo + count / 2;
  std::vector<double> left = pairwise_sum_vectors(lo, mid, f);
  const std::vector<double> right = pairwise_sum_vectors(mid, hi, f);
  for (std::size_t i = 0; i < left.size(); ++i) left[i] += right[i];
  return left;
}

}  // namespace stochfv
