#include "capsim/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace capsim {

namespace {

// Continued fraction for the incomplete beta function, modified Lentz
// iteration with the standard even/odd coefficients:
//   d_{2m}   = m (b - m) x / ((a + 2m - 1)(a + 2m))
//   d_{2m+1} = -(a + m)(a + b + m) x / ((a + 2m)(a + 2m + 1))
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-14;
  constexpr double kTiny = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  return h;  // converged to working precision in practice well before this
}

struct SampleStats {
  double mean;
  double var;  // n-1 denominator
  std::size_t n;
};

SampleStats describe(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return SampleStats{mean, ss / static_cast<double>(n - 1), n};
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  // Use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) to stay in the region where
  // the continued fraction converges quickly.
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(ln_front) * beta_cf(a, b, x) / a;
  return 1.0 - std::exp(ln_front) * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double x, double df) {
  if (df <= 0.0) throw std::invalid_argument("student_t_cdf: df must be > 0");
  // P(|T| > |x|) = I_{df/(df+x^2)}(df/2, 1/2)
  const double tail = incomplete_beta(0.5 * df, 0.5, df / (df + x * x));
  return x >= 0.0 ? 1.0 - 0.5 * tail : 0.5 * tail;
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("welch_t_test: both samples need n >= 2");

  const SampleStats sa = describe(a);
  const SampleStats sb = describe(b);
  const double va_n = sa.var / static_cast<double>(sa.n);
  const double vb_n = sb.var / static_cast<double>(sb.n);

  TTestResult result;
  if (va_n == 0.0 && vb_n == 0.0) {
    result.degenerate = true;
    if (sa.mean == sb.mean) {
      result.t = 0.0;
      result.p = 1.0;
    } else {
      result.t = sa.mean > sb.mean ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
      result.p = 0.0;
    }
    result.df = static_cast<double>(sa.n + sb.n - 2);
    return result;
  }

  result.t = (sa.mean - sb.mean) / std::sqrt(va_n + vb_n);
  // Welch-Satterthwaite degrees of freedom.
  result.df = (va_n + vb_n) * (va_n + vb_n) /
              (va_n * va_n / static_cast<double>(sa.n - 1) +
               vb_n * vb_n / static_cast<double>(sb.n - 1));
  // Two-sided p straight from the tail identity P(|T| > t) = I_x(df/2, 1/2)
  // with x = df/(df + t^2); going through the CDF would cancel for large t.
  result.p = incomplete_beta(0.5 * result.df, 0.5,
                             result.df / (result.df + result.t * result.t));
  return result;
}

}  // namespace capsim
