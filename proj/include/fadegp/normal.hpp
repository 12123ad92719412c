#pragma once

namespace fadegp {

double norm_pdf(double x);
double log_norm_pdf(double x);
double norm_cdf(double x);

// log Phi(x). Complementary-error-function route for x > -38, Mills-series
// asymptotic below; absolute error under 1e-12 across [-38, 8].
double log_norm_cdf(double x);

// phi(x)/Phi(x); stays finite for arbitrarily negative x (~ -x there).
double inverse_mills(double x);

// Phi^{-1}(p) for p in (0, 1); Wichura's PPND16.
double norm_quantile(double p);

}  // namespace fadegp
