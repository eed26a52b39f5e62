#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace subshap {

using BigInt = boost::multiprecision::cpp_int;

// Exact C(n, r); zero when r < 0 or r > n (the convention the certification
// formulas rely on for vanishing terms).
BigInt binomial(long n, long r);

// C(an, ar) / C(bn, br) as a double, computed from the exact integer ratio so
// the result stays meaningful even when both coefficients overflow a double.
// The denominator must be nonzero.
double binomial_ratio(long an, long ar, long bn, long br);

// C(n, r) as double; may round for large arguments, exact below 2^53.
double binomial_double(long n, long r);

// C(n, r) if it is <= cap, otherwise cap + 1 (overflow-safe feasibility probe).
unsigned long long binomial_capped(long n, long r, unsigned long long cap);

// Visits every k-subset of {0..d-1} in lexicographic order, reusing a single
// index buffer. fn receives the buffer by const reference and must not retain it.
template <typename Fn>
void for_each_combination(int d, int k, Fn&& fn) {
  std::vector<int> c(static_cast<size_t>(k));
  if (k == 0) {
    fn(static_cast<const std::vector<int>&>(c));
    return;
  }
  if (k > d) return;
  std::iota(c.begin(), c.end(), 0);
  for (;;) {
    fn(static_cast<const std::vector<int>&>(c));
    int i = k - 1;
    while (i >= 0 && c[static_cast<size_t>(i)] == d - k + i) --i;
    if (i < 0) break;
    ++c[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) c[static_cast<size_t>(j)] = c[static_cast<size_t>(j - 1)] + 1;
  }
}

}  // namespace subshap
