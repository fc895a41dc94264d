#include "acss/sampler.hpp"
#include "acss/rng.hpp"
#include "acss/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace acss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

CopySet iid_gaussian(const Vec& mean, double var, int M, Rng& rng, Proposal prop) {
    if (M < 1) throw DomainError("sampler: M must be positive");
    CopySet cs;
    cs.proposal = prop;
    const double sd = std::sqrt(var);
    for (int m = 0; m < M; ++m) cs.copies.push_back(mean + sd * standard_normal(mean.size(), rng));
    cs.weights.assign(static_cast<std::size_t>(M) + 1, 1.0);
    cs.log_weights.assign(static_cast<std::size_t>(M) + 1, 0.0);
    return cs;
}

struct SphereBlock {
    std::vector<Index> pos;
    double gamma;
};

std::vector<SphereBlock> sphere_blocks(const ModelSpec& model, const ConditioningStat& stat) {
    if (model.kind() != ModelKind::BehrensFisher) throw DomainError("sphere proposal: behrens-fisher only");
    std::vector<Index> g0, g1;
    if (stat.variant == StatVariant::Mtle) {
        g0 = stat.kept;
    } else {
        for (Index i = 0; i < model.n0(); ++i) g0.push_back(i);
    }
    for (Index i = model.n0(); i < model.dim_obs(); ++i) g1.push_back(i);
    return {{g0, stat.theta_hat[1]}, {g1, stat.theta_hat[2]}};
}

Vec gather(const Vec& x, const std::vector<Index>& pos) {
    Vec v(static_cast<Index>(pos.size()));
    for (std::size_t k = 0; k < pos.size(); ++k) v[static_cast<Index>(k)] = x[pos[k]];
    return v;
}

Vec direction(double mu, Index p) {
    return Vec::Constant(p, (mu < 0 ? -1.0 : 1.0) / std::sqrt(static_cast<double>(p)));
}

}  // namespace

Sample perturb_observation(const Vec& x, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) throw DomainError("perturb: sigma must be nonnegative");
    return Sample{x + sigma * standard_normal(x.size(), rng), std::nullopt, {}};
}

ConditioningStat gaussian_additive_law(const Mat& B, const FitResult& fit, double nu, double sigma) {
    if (!(sigma > 0.0) || !(nu > 0.0)) throw DomainError("additive sampler: sigma and nu must be positive");
    const double n = static_cast<double>(B.rows());
    if (fit.g_hat.size() != B.rows()) throw DimensionError("additive sampler: g_hat must have length n");
    const double shrink = 1.0 / (1.0 + n / (sigma * sigma * nu * nu));
    ConditioningStat s;
    s.variant = StatVariant::GaussianAdditive;
    s.theta_hat = fit.theta_hat;
    s.g_hat = fit.g_hat;
    s.sigma = sigma;
    s.mean = B * fit.theta_hat - shrink * (n / (sigma * sigma)) * fit.g_hat;
    s.var = nu * nu * shrink;
    return s;
}

CopySet sample_copies_gaussian_additive(const Mat& B, const FitResult& fit, double nu, double sigma, int M, Rng& rng) {
    const auto law = gaussian_additive_law(B, fit, nu, sigma);
    return iid_gaussian(law.mean, law.var, M, rng, Proposal::GaussianAdditive);
}

ConditioningStat gaussian_acss_law(const Vec& mu_hat, const Vec& x_noise, double nu, double sigma) {
    if (mu_hat.size() != x_noise.size()) throw DimensionError("gaussian acss: dimension mismatch");
    if (!(sigma > 0.0) || !(nu > 0.0)) throw DomainError("gaussian acss: sigma and nu must be positive");
    const double s2 = sigma * sigma, v2 = nu * nu;
    ConditioningStat s;
    s.variant = StatVariant::GaussianAcss;
    s.sigma = sigma;
    s.mean = (s2 * mu_hat + v2 * x_noise) / (s2 + v2);
    s.var = s2 * v2 / (s2 + v2);
    return s;
}

CopySet sample_copies_gaussian_acss(const Vec& mu_hat, const Vec& x_noise, double nu, double sigma, int M, Rng& rng) {
    const auto law = gaussian_acss_law(mu_hat, x_noise, nu, sigma);
    return iid_gaussian(law.mean, law.var, M, rng, Proposal::GaussianAcss);
}

double sphere_log_q(const ModelSpec& model, const ConditioningStat& stat, const Vec& x) {
    double lq = 0.0;
    const double mu = stat.theta_hat[0];
    for (const auto& blk : sphere_blocks(model, stat)) {
        const Vec v = gather(x, blk.pos);
        const Index p = v.size();
        const double r = v.norm();
        if (r == 0.0) continue;
        const double kappa = r * std::abs(mu) * std::sqrt(static_cast<double>(p)) / blk.gamma;
        lq += vmf_log_kernel(v / r, direction(mu, p), kappa);
    }
    return lq;
}

CopySet sample_copies_sphere(const ModelSpec& model, const ConditioningStat& stat, const Vec& x, int M, Rng& rng,
                             const SolverOptions& opts) {
    if (M < 1) throw DomainError("sampler: M must be positive");
    const auto blocks = sphere_blocks(model, stat);
    const auto groups = GroupStructure::singletons(model.dim_param());
    const auto pen = PenaltySpec::none(groups.size());
    const double mu = stat.theta_hat[0];

    CopySet cs;
    cs.proposal = Proposal::SphereVmf;
    cs.log_weights.push_back(log_importance_weight(model, x, stat, pen, groups, sphere_log_q(model, stat, x), opts));
    for (int m = 0; m < M; ++m) {
        Vec c = x;
        double lq = 0.0;
        for (const auto& blk : blocks) {
            const Vec v = gather(x, blk.pos);
            const Index p = v.size();
            const double r = v.norm();
            const double kappa = r * std::abs(mu) * std::sqrt(static_cast<double>(p)) / blk.gamma;
            const Vec dir = direction(mu, p);
            const Vec u = sample_vmf(dir, kappa, rng);
            lq += vmf_log_kernel(u, dir, kappa);
            for (std::size_t k = 0; k < blk.pos.size(); ++k) c[blk.pos[k]] = r * u[static_cast<Index>(k)];
        }
        cs.log_weights.push_back(log_importance_weight(model, c, stat, pen, groups, lq, opts));
        cs.copies.push_back(std::move(c));
    }
    cs.weights = normalize_log_weights(cs.log_weights);
    return cs;
}

double log_importance_weight(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                             const PenaltySpec& penalty, const GroupStructure& groups, double log_q,
                             const SolverOptions& opts) {
    const double lp = log_unnorm_density(model, x, stat, penalty, groups, opts);
    if (lp == kNegInf) return kNegInf;
    if (log_q == kNegInf) throw DomainError("importance weight: proposal density vanishes on the target's support");
    return lp - log_q;
}

double importance_weight(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                         const PenaltySpec& penalty, const GroupStructure& groups, double log_q,
                         const SolverOptions& opts) {
    return std::exp(log_importance_weight(model, x, stat, penalty, groups, log_q, opts));
}

std::vector<double> normalize_log_weights(const std::vector<double>& log_w) {
    double mx = kNegInf;
    for (double v : log_w)
        if (!std::isnan(v)) mx = std::max(mx, v);
    std::vector<double> w;
    if (mx == kNegInf) return std::vector<double>(log_w.size(), 0.0);
    w.reserve(log_w.size());
    for (double v : log_w) w.push_back(std::isnan(v) ? 0.0 : std::exp(v - mx));
    return w;
}

double pval_unweighted(double t_obs, const std::vector<double>& t_copies) {
    if (t_copies.empty()) throw DomainError("pval: no copies");
    std::size_t c = 1;
    for (double t : t_copies) c += (t >= t_obs);
    return static_cast<double>(c) / static_cast<double>(t_copies.size() + 1);
}

double pval_weighted(double t_obs, const std::vector<double>& t_copies, const std::vector<double>& weights) {
    if (t_copies.empty()) throw DomainError("pval: no copies");
    if (weights.size() != t_copies.size() + 1) throw DimensionError("pval: need one weight per copy plus the observed");
    double num = weights[0], den = weights[0];
    for (std::size_t i = 0; i < t_copies.size(); ++i) {
        if (!(weights[i + 1] >= 0.0)) throw DomainError("pval: negative weight");
        den += weights[i + 1];
        if (t_copies[i] >= t_obs) num += weights[i + 1];
    }
    if (!(den > 0.0)) throw DomainError("pval: all weights zero");
    return std::min(1.0, num / den);
}

PValueReport run_acss(const ModelSpec& model, const Sample& data, const AcssConfig& cfg) {
    if (!cfg.statistic) throw DomainError("run_acss: statistic required");
    Rng rng(cfg.seed);
    const Index d = model.dim_param();
    const GroupStructure groups = cfg.groups ? *cfg.groups : GroupStructure::singletons(d);
    const PenaltySpec pen = cfg.penalty.per_group.empty() ? PenaltySpec::none(groups.size()) : cfg.penalty;

    PValueReport rep;
    rep.method = cfg.method;
    rep.weighted = cfg.weighted;
    rep.t_obs = cfg.statistic(data.x);

    CopySet cs;
    if (cfg.estimator == EstimatorKind::Fixed) {
        // Singleton null: copies are i.i.d. from the known law, weights identically 1.
        cs.proposal = Proposal::IidModel;
        for (int m = 0; m < cfg.M; ++m) cs.copies.push_back(sample_data(model, cfg.fixed_theta, rng).x);
        cs.weights.assign(static_cast<std::size_t>(cfg.M) + 1, 1.0);
        cs.log_weights.assign(static_cast<std::size_t>(cfg.M) + 1, 0.0);
        rep.ssosp = true;
    } else {
        const Perturbation pert = draw_perturbation(rng, d, cfg.sigma);
        SolverOptions so = cfg.solver;
        so.seed = split_seed(cfg.seed, {hash_name("mtle-starts")});
        FitResult fit;
        ConditioningStat stat;
        if (cfg.estimator == EstimatorKind::Mtle) {
            fit = fit_mtle(model, data, pert, cfg.h, so);
            if (fit.ssosp) stat = make_mtle_stat(fit, cfg.sigma, cfg.h, data.x);
        } else {
            fit = fit_penalized(model, data.x, pert, pen, groups, so, {}, std::nullopt);
            if (fit.ssosp) stat = make_penalized_stat(fit, cfg.sigma);
        }
        rep.ssosp = fit.ssosp;
        if (!fit.ssosp) {
            rep.pval = 1.0;  // degenerate copies X~ = X
            return rep;
        }
        stat.hessian_det = cfg.hessian_det;
        switch (cfg.proposal) {
        case Proposal::SphereVmf: cs = sample_copies_sphere(model, stat, data.x, cfg.M, rng, so); break;
        case Proposal::IidModel: {
            cs.proposal = Proposal::IidModel;
            auto lq = [&](const Vec& x) { return -neg_loglik(model, stat.theta_hat, x, {}); };
            cs.log_weights.push_back(log_importance_weight(model, data.x, stat, pen, groups, lq(data.x), so));
            for (int m = 0; m < cfg.M; ++m) {
                Vec c = sample_data(model, stat.theta_hat, rng).x;
                cs.log_weights.push_back(log_importance_weight(model, c, stat, pen, groups, lq(c), so));
                cs.copies.push_back(std::move(c));
            }
            cs.weights = normalize_log_weights(cs.log_weights);
            break;
        }
        default: throw DomainError("run_acss: proposal not available for this estimator");
        }
    }
    for (const auto& c : cs.copies) rep.t_copies.push_back(cfg.statistic(c));
    if (cfg.weighted) {
        if (std::all_of(cs.weights.begin(), cs.weights.end(), [](double w) { return w == 0.0; })) {
            rep.pval = 1.0;
            return rep;
        }
        rep.pval = pval_weighted(rep.t_obs, rep.t_copies, cs.weights);
    } else {
        rep.pval = pval_unweighted(rep.t_obs, rep.t_copies);
    }
    return rep;
}

}  // namespace acss
