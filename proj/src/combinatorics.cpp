#include "subshap/combinatorics.hpp"

#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

namespace subshap {

namespace mp = boost::multiprecision;

BigInt binomial(long n, long r) {
  if (r < 0 || r > n || n < 0) return 0;
  r = std::min(r, n - r);
  BigInt result = 1;
  // multiply/divide interleaved; each prefix product C(n-r+i, i) is integral
  for (long i = 1; i <= r; ++i) {
    result *= (n - r + i);
    result /= i;
  }
  return result;
}

double binomial_ratio(long an, long ar, long bn, long br) {
  const BigInt den = binomial(bn, br);
  if (den == 0) throw std::invalid_argument("binomial_ratio: zero denominator");
  const BigInt num = binomial(an, ar);
  if (num == 0) return 0.0;
  const mp::cpp_rational ratio(num, den);
  return ratio.convert_to<double>();
}

double binomial_double(long n, long r) {
  return binomial(n, r).convert_to<double>();
}

unsigned long long binomial_capped(long n, long r, unsigned long long cap) {
  const BigInt value = binomial(n, r);
  if (value > cap) return cap + 1;
  return value.convert_to<unsigned long long>();
}

}  // namespace subshap
