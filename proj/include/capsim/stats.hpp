#pragma once

#include <vector>

namespace capsim {

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
  // Both samples had zero variance. With equal means t=0, p=1; with unequal
  // means the test is undefined and p is reported as 0.
  bool degenerate = false;
};

/// Welch's unequal-variance two-sample t-test, two-sided p-value.
/// Both samples need at least 2 values.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation
/// (modified Lentz), relative tolerance ~1e-12.
double incomplete_beta(double a, double b, double x);

/// Student-t CDF at x with df degrees of freedom (df may be fractional).
double student_t_cdf(double x, double df);

}  // namespace capsim
