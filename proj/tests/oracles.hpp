#pragma once

// Slow reference implementations used to check the library.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

inline std::vector<double> ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j] < x[i]) ++less;
      if (x[j] == x[i]) ++equal;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

// Pair enumeration: tau-b = (C - D) / sqrt((n0 - n1)(n0 - n2)).
inline double kendall(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  long long c = 0, d = 0, ta = 0, tb = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0) ++ta;
      if (db == 0) ++tb;
      if (da == 0 || db == 0) continue;
      (da * db > 0 ? c : d)++;
    }
  const long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
  return static_cast<double>(c - d) / std::sqrt(static_cast<double>(n0 - ta) * static_cast<double>(n0 - tb));
}

// Random vector with planted ties: values drawn from a small pool part of the time.
inline std::vector<double> tied_vector(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_int_distribution<int> pool(0, 9);
  std::bernoulli_distribution tie(0.3);
  std::vector<double> x(n);
  for (auto& v : x) v = tie(gen) ? pool(gen) * 0.5 : u(gen);
  return x;
}

}  // namespace oracle
