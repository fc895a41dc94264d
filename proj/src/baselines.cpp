#include "acss/baselines.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>

namespace acss {

namespace {

double tail(double z, double df, Side side) {
    auto sf = [&](double t) {
        if (!std::isfinite(df)) return boost::math::cdf(boost::math::complement(boost::math::normal(), t));
        return boost::math::cdf(boost::math::complement(boost::math::students_t(df), t));
    };
    switch (side) {
    case Side::Upper: return sf(z);
    case Side::Lower: return sf(-z);
    case Side::TwoSided: return std::min(1.0, 2.0 * sf(std::abs(z)));
    }
    return 1.0;
}

}  // namespace

double welch_t_pvalue(const Vec& a, const Vec& b, Side side) {
    if (a.size() < 2 || b.size() < 2) throw DimensionError("t-test: need two observations per group");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double va = (a.array() - a.mean()).square().sum() / (na - 1.0);
    const double vb = (b.array() - b.mean()).square().sum() / (nb - 1.0);
    const double qa = va / na, qb = vb / nb;
    const double se = std::sqrt(qa + qb);
    if (!(se > 0.0)) return 1.0;
    const double df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    return tail((b.mean() - a.mean()) / se, df, side);
}

DebiasedLasso debiased_lasso(const Vec& y, const Vec& x, const Mat& z, double lambda, double node_lambda, Side side,
                             const SolverOptions& opts) {
    const Index n = z.rows(), d = z.cols();
    if (y.size() != n || x.size() != n) throw DimensionError("debiased lasso: dimension mismatch");
    Mat w(n, d + 1);
    w << x, z;
    const Vec beta = fit_lasso(y, w, lambda, opts);
    const Vec res = y - w * beta;
    const Vec gamma = fit_lasso(x, z, node_lambda, opts);
    const Vec r = x - z * gamma;
    const double rx = r.dot(x);
    DebiasedLasso out;
    if (std::abs(rx) < 1e-12) return out;
    out.estimate = beta[0] + r.dot(res) / rx;
    Index support = 0;
    for (Index j = 0; j <= d; ++j) support += (beta[j] != 0.0);
    const double dof = std::max<double>(1.0, static_cast<double>(n - support));
    const double s2 = res.squaredNorm() / dof;
    out.se = std::sqrt(s2) * r.norm() / std::abs(rx);
    out.pval = tail(out.estimate / out.se, std::numeric_limits<double>::infinity(), side);
    return out;
}

}  // namespace acss
