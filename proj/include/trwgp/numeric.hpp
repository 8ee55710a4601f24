#ifndef TRWGP_NUMERIC_HPP
#define TRWGP_NUMERIC_HPP

// Shared numeric helpers: shifted log-sum-exp, dense row-major tables,
// the seedable generator used for model synthesis, and value printing
// that round-trips doubles through text.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace trwgp {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Floor for log-domain table entries; exp(log_floor) underflows to 0 but the
// log stays finite so differences of log tables remain well defined.
constexpr double log_floor = -700.0;

inline double log_sum_exp(std::span<const double> v)
{
  double m = neg_inf;
  for (double x : v)
    if (x > m)
      m = x;
  if (m == neg_inf)
    return neg_inf;
  double s = 0.0;
  for (double x : v)
    s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_sum_exp(const double* v, int n)
{
  return log_sum_exp(std::span<const double>(v, static_cast<size_t>(n)));
}

// x * log(x) with the 0 log 0 = 0 convention used by all entropy sums.
inline double xlogx(double x)
{
  assert(x >= 0.0);
  return x > 0.0 ? x * std::log(x) : 0.0;
}

inline double clamp_log(double x) { return x < log_floor ? log_floor : x; }

// Dense row-major table of doubles. Used for edge potentials, dual
// variables, conditionals and pairwise joints.
struct table
{
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  table() = default;
  table(int r, int c, double fill = 0.0)
    : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill)
  {
    assert(r >= 0 && c >= 0);
  }

  double& operator()(int r, int c)
  {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return a[static_cast<size_t>(r) * cols + c];
  }

  double operator()(int r, int c) const
  {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return a[static_cast<size_t>(r) * cols + c];
  }

  std::span<double> row(int r)
  {
    assert(r >= 0 && r < rows);
    return std::span<double>(a).subspan(static_cast<size_t>(r) * cols, cols);
  }

  std::span<const double> row(int r) const
  {
    assert(r >= 0 && r < rows);
    return std::span<const double>(a).subspan(static_cast<size_t>(r) * cols, cols);
  }

  table transposed() const
  {
    table t(cols, rows);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        t(c, r) = (*this)(r, c);
    return t;
  }
};

inline double max_abs_diff(const table& x, const table& y)
{
  assert(x.rows == y.rows && x.cols == y.cols);
  double m = 0.0;
  for (size_t i = 0; i < x.a.size(); ++i)
    m = std::max(m, std::abs(x.a[i] - y.a[i]));
  return m;
}

// Deterministic generator for model synthesis. The algorithm is pinned so
// outputs are reproducible across platforms: std::mt19937_64 seeded with the
// given value; uniform doubles take the top 53 bits of one 64-bit draw,
// u = (word >> 11) * 2^-53 in [0, 1), then scale to [lo, hi).
class rng
{
public:
  explicit rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi)
  {
    const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  std::uint64_t word() { return eng_(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n)
  {
    assert(n > 0);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t w;
    do {
      w = eng_();
    } while (w >= limit);
    return w % n;
  }

private:
  std::mt19937_64 eng_;
};

// 17 significant digits: enough for binary64 text round-trips.
inline std::string format_value(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// Running compensated (Neumaier) sum; keeps long accumulations of small
// update deltas from drifting.
struct compensated_sum
{
  double s = 0.0;
  double c = 0.0;

  void add(double x)
  {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }

  double value() const { return s + c; }
};

} // namespace trwgp

#endif
