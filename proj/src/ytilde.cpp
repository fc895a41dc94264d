#include "acss/crt.hpp"

#include <cmath>
#include <stdexcept>

namespace acss {

double default_ytilde_lambda(const Mat& Z) {
    const double n = static_cast<double>(Z.rows());
    const double d = static_cast<double>(std::max<Index>(Z.cols(), 2));
    return 2.0 * std::sqrt(std::log(d)) * Z.colwise().norm().maxCoeff() / std::sqrt(n);
}

YtildeResult solve_ytilde(const Vec& Y, const Mat& Z, double lambda, const YtildeOptions& opts) {
    if (Y.size() != Z.rows()) throw DimensionError("ytilde: Y and Z disagree");
    if (!(lambda > 0.0)) throw DomainError("ytilde: lambda must be positive");
    const double ny = Y.norm();
    if (!(ny > 0.0)) throw DomainError("ytilde: Y must be nonzero");
    const Vec e = Y / ny;
    YtildeResult res;

    // Box constraint slack at the spherical optimum.
    if (Z.cols() == 0 || (Z.transpose() * e).cwiseAbs().maxCoeff() <= lambda) {
        res.y = e;
        res.objective = ny;
        return res;
    }

    const Index n = Y.size(), d = Z.cols();
    Eigen::LLT<Mat> llt(Mat::Identity(n, n) + Z * Z.transpose());
    Vec y = Vec::Zero(n), s = Vec::Zero(n), v = Vec::Zero(d), u1 = Vec::Zero(n), u2 = Vec::Zero(d);
    double rho = 1.0;
    auto finalize = [&](const Vec& cand) {
        Vec f = cand;
        const double nf = f.norm();
        if (nf > 1.0) f /= nf;
        const double box = (Z.transpose() * f).cwiseAbs().maxCoeff();
        if (box > lambda) f *= lambda / box;
        return f;
    };
    double best_primal = -1e300, best_dual = 1e300;
    Vec best_y = Vec::Zero(n);
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        y = llt.solve(e / rho + (s - u1) + Z * (v - u2));
        const Vec zy = Z.transpose() * y;
        const Vec s_old = s, v_old = v;
        s = y + u1;
        if (s.norm() > 1.0) s.normalize();
        v = (zy + u2).cwiseMax(-lambda).cwiseMin(lambda);
        u1 += y - s;
        u2 += zy - v;

        if (it % 10 == 9) {
            const Vec f = finalize(s);
            const double primal = e.dot(f);
            const Vec z = rho * u2;
            const double dual = (e - Z * z).norm() + lambda * z.lpNorm<1>();
            if (primal > best_primal) {
                best_primal = primal;
                best_y = f;
            }
            best_dual = std::min(best_dual, dual);
            if (best_dual - best_primal <= opts.tol * std::max(1.0, std::abs(best_primal))) break;

            const double r = std::sqrt((y - s).squaredNorm() + (zy - v).squaredNorm());
            const double dres = rho * ((s - s_old) + Z * (v - v_old)).norm();
            if (r > 10.0 * dres) {
                rho *= 2.0;
                u1 /= 2.0;
                u2 /= 2.0;
            } else if (dres > 10.0 * r) {
                rho /= 2.0;
                u1 *= 2.0;
                u2 *= 2.0;
            }
        }
    }
    const double gap = best_dual - best_primal;
    if (gap > 1e-6 * std::max(1.0, std::abs(best_primal)))
        throw std::runtime_error("ytilde: no convergence (duality gap " + std::to_string(gap) + ")");
    res.y = best_y;
    res.objective = ny * best_primal;
    res.dual_gap = ny * gap;
    res.iterations = it;
    return res;
}

}  // namespace acss
