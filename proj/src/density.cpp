#include "acss/density.hpp"

#include <cmath>
#include <limits>

namespace acss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::optional<double> logdet_pd(const Mat& M) {
    if (M.size() == 0) return 0.0;
    Eigen::LLT<Mat> llt(M);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Vec diag = llt.matrixL().toDenseMatrix().diagonal();
    if (!(diag.minCoeff() > 0.0)) return std::nullopt;
    return 2.0 * diag.array().log().sum();
}

bool pd_beyond(const Mat& M, double eig_tol) {
    if (M.size() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > eig_tol;
}

double gaussian_log_density(const Vec& x, const Vec& mean, double var) {
    const double n = static_cast<double>(x.size());
    return -0.5 * (x - mean).squaredNorm() / var - 0.5 * n * std::log(2.0 * M_PI * var);
}

ActiveSets stat_active(const PenaltySpec& pen, const GroupStructure& groups, const Vec& theta) {
    ActiveSets a;
    for (std::size_t j = 0; j < groups.size(); ++j) {
        if (pen.per_group[j].nonsmooth() && groups.group_norm(theta, j) <= 1e-8) continue;
        a.groups.push_back(j);
        a.coords.insert(a.coords.end(), groups[j].begin(), groups[j].end());
    }
    std::sort(a.coords.begin(), a.coords.end());
    return a;
}

}  // namespace

ConditioningStat make_penalized_stat(const FitResult& fit, double sigma) {
    ConditioningStat s;
    s.variant = StatVariant::Penalized;
    s.theta_hat = fit.theta_hat;
    s.g_hat = fit.g_hat;
    s.sigma = sigma;
    return s;
}

ConditioningStat make_mtle_stat(const FitResult& fit, double sigma, Index h, const Vec& x_observed) {
    if (!fit.trim_set) throw DomainError("mtle stat: fit has no trim set");
    ConditioningStat s;
    s.variant = StatVariant::Mtle;
    s.theta_hat = fit.theta_hat;
    s.g_hat = fit.g_hat;
    s.sigma = sigma;
    s.kept = *fit.trim_set;
    s.h = h;
    s.x_fixed = x_observed;
    return s;
}

std::vector<Index> trim_positions(const ModelSpec& model, const std::vector<Index>& kept) {
    const ObsMask m = trim_mask(model, kept);
    std::vector<Index> pos;
    for (Index i = 0; i < model.dim_obs(); ++i)
        if (m[static_cast<std::size_t>(i)]) pos.push_back(i);
    return pos;
}

Vec embed_sub(const ModelSpec& model, const ConditioningStat& stat, const Vec& x_sub) {
    const auto pos = trim_positions(model, stat.kept);
    if (x_sub.size() != static_cast<Index>(pos.size())) throw DimensionError("mtle: sub-vector length must be |J|");
    Vec x = stat.x_fixed;
    for (std::size_t k = 0; k < pos.size(); ++k) x[pos[k]] = x_sub[static_cast<Index>(k)];
    return x;
}

Vec extract_sub(const ModelSpec& model, const ConditioningStat& stat, const Vec& x_full) {
    const auto pos = trim_positions(model, stat.kept);
    Vec s(static_cast<Index>(pos.size()));
    for (std::size_t k = 0; k < pos.size(); ++k) s[static_cast<Index>(k)] = x_full[pos[k]];
    return s;
}

std::optional<double> f_pen_logdet(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                                   const PenaltySpec& penalty, const GroupStructure& groups) {
    const ActiveSets act = stat_active(penalty, groups, stat.theta_hat);
    if (act.coords.empty()) return 0.0;
    Mat M;
    try {
        M = restricted_second_order(model, x, stat.theta_hat, penalty, groups, act);
    } catch (const KnotError&) {
        return std::nullopt;
    }
    return logdet_pd(M);
}

Vec implied_w(const ModelSpec& model, const Vec& x, const ConditioningStat& stat, const PenaltySpec& penalty,
              const GroupStructure& groups) {
    const ObsMask mask = stat.variant == StatVariant::Mtle ? trim_mask(model, stat.kept) : ObsMask{};
    const Vec grad = score(model, stat.theta_hat, x, mask) + smooth_penalty_gradient(penalty, groups, stat.theta_hat);
    return (stat.g_hat - grad) / stat.sigma;
}

bool membership_indicator(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                          const PenaltySpec& penalty, const GroupStructure& groups, const SolverOptions& opts) {
    const Vec& th = stat.theta_hat;
    if (!model.in_domain(th)) return false;
    switch (stat.variant) {
    case StatVariant::GaussianAdditive:
    case StatVariant::GaussianAcss: return true;
    case StatVariant::Penalized: {
        // With w implied by (x, g_hat) the first-order equations hold identically;
        // what remains is regularity and the second-order clause.
        const ActiveSets act = stat_active(penalty, groups, th);
        for (std::size_t j = 0; j < groups.size(); ++j) {
            const auto& p = penalty.per_group[j];
            if (!p.nonsmooth()) continue;
            const double r = groups.group_norm(th, j);
            if (r > 1e-8) {
                if (at_knot(p, r)) return false;
            } else if (groups.gather(stat.g_hat, j).norm() > rho_prime(p, 0.0) + opts.kkt_tol) {
                return false;
            }
        }
        if (act.coords.empty()) return true;
        return pd_beyond(restricted_second_order(model, x, th, penalty, groups, act), opts.eig_tol);
    }
    case StatVariant::Mtle: {
        std::vector<double> key;
        const auto pool = trim_pool(model);
        if (stat.h < static_cast<Index>(pool.size())) {
            // strict ordering at the boundary
            key.resize(pool.size());
            for (std::size_t k = 0; k < pool.size(); ++k) key[k] = obs_log_density(model, th, x, pool[k]);
            std::vector<double> sorted = key;
            std::nth_element(sorted.begin(), sorted.begin() + stat.h, sorted.end(), std::greater<>());
            const double below = sorted[static_cast<std::size_t>(stat.h)];
            const double above = *std::min_element(sorted.begin(), sorted.begin() + stat.h);
            if (!(above - below > 1e-12 * (1.0 + std::abs(above)))) return false;
        }
        if (select_trim(model, x, th, stat.h) != stat.kept) return false;
        return pd_beyond(hessian(model, th, x, trim_mask(model, stat.kept)), opts.eig_tol);
    }
    }
    return false;
}

double log_unnorm_density(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                          const PenaltySpec& penalty, const GroupStructure& groups, const SolverOptions& opts) {
    switch (stat.variant) {
    case StatVariant::GaussianAdditive:
    case StatVariant::GaussianAcss: return gaussian_log_density(x, stat.mean, stat.var);
    case StatVariant::Mtle: return log_unnorm_density_mtle(model, extract_sub(model, stat, x), stat, opts);
    case StatVariant::Penalized: break;
    }
    if (!(stat.sigma > 0.0)) throw DomainError("density: sigma must be positive");
    if (!membership_indicator(model, x, stat, penalty, groups, opts)) return kNegInf;
    double v = -neg_loglik(model, stat.theta_hat, x, {});
    const double d = static_cast<double>(model.dim_param());
    const Vec w = implied_w(model, x, stat, penalty, groups);
    v -= 0.5 * d * w.squaredNorm();
    if (stat.hessian_det) {
        const auto ld = f_pen_logdet(model, x, stat, penalty, groups);
        if (!ld) return kNegInf;
        v += *ld;
    }
    return v;
}

double log_unnorm_density_mtle(const ModelSpec& model, const Vec& x_sub, const ConditioningStat& stat,
                               const SolverOptions& opts) {
    if (stat.variant != StatVariant::Mtle) throw DomainError("mtle density: wrong variant");
    if (!(stat.sigma > 0.0)) throw DomainError("density: sigma must be positive");
    const Vec x = embed_sub(model, stat, x_sub);
    const auto groups = GroupStructure::singletons(model.dim_param());
    const auto pen = PenaltySpec::none(groups.size());
    if (!membership_indicator(model, x, stat, pen, groups, opts)) return kNegInf;
    const ObsMask mask = trim_mask(model, stat.kept);
    double v = -neg_loglik(model, stat.theta_hat, x, mask);
    const double d = static_cast<double>(model.dim_param());
    v -= 0.5 * d * implied_w(model, x, stat, pen, groups).squaredNorm();
    if (stat.hessian_det) {
        const auto ld = logdet_pd(hessian(model, stat.theta_hat, x, mask));
        if (!ld) return kNegInf;
        v += *ld;
    }
    return v;
}

}  // namespace acss
