#pragma once

#include "acss/crt.hpp"

namespace acss {

// Welch t-test of mean(b) - mean(a): Upper tests mean(b) > mean(a).
double welch_t_pvalue(const Vec& a, const Vec& b, Side side = Side::Upper);

// Debiased lasso for the coefficient of x in y ~ beta x + Z xi: lasso on [x, Z],
// one-step correction with the nodewise residual of x on Z, plug-in noise
// variance RSS / (n - |support|). Lambdas on the (1/2n) loss scale.
struct DebiasedLasso {
    double estimate = 0.0;
    double se = 0.0;
    double pval = 1.0;
};
DebiasedLasso debiased_lasso(const Vec& y, const Vec& x, const Mat& z, double lambda, double node_lambda,
                             Side side = Side::Upper, const SolverOptions& opts = {});

}  // namespace acss
