#include "acss/crt.hpp"
#include "acss/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace acss {

namespace {

struct Svd {
    Mat U;     // n* x d
    Vec lam;   // singular values
    Mat V;
};

Svd thin_svd(const Mat& z) {
    Eigen::JacobiSVD<Mat> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec s = svd.singularValues();
    if (s.size() < z.cols() || s.minCoeff() <= 1e-10 * std::max(1.0, s.maxCoeff()))
        throw SingularError("crt: Z* lacks full column rank");
    return {svd.matrixU(), s, svd.matrixV()};
}

void require_tall(const CrtProblem& p) {
    if (p.n() + p.m() <= p.d()) throw SingularError("crt: need n* > d");
}

CopySet copies_from_law(const CopyLaw& law, int M, Rng& rng, Proposal prop) {
    if (M < 1) throw DomainError("crt: M must be positive");
    CopySet cs;
    cs.proposal = prop;
    for (int m = 0; m < M; ++m) cs.copies.push_back(law.sample(rng));
    cs.weights.assign(static_cast<std::size_t>(M) + 1, 1.0);
    cs.log_weights.assign(static_cast<std::size_t>(M) + 1, 0.0);
    return cs;
}

double normal_sf(double z) { return boost::math::cdf(boost::math::complement(boost::math::normal(), z)); }

}  // namespace

Vec CrtProblem::x_star() const {
    Vec v(n() + m());
    v << x, xu;
    return v;
}

Mat CrtProblem::z_star() const {
    Mat s(n() + m(), d());
    if (m() > 0) s << z, zu;
    else s = z;
    return s;
}

void CrtProblem::validate() const {
    if (n() < 1) throw DimensionError("crt: empty problem");
    if (z.rows() != n() || (y.size() != 0 && y.size() != n())) throw DimensionError("crt: labeled rows disagree");
    if (m() > 0 && (zu.rows() != m() || zu.cols() != d())) throw DimensionError("crt: unlabeled rows disagree");
    if (!(noise_sd > 0.0)) throw DomainError("crt: noise sd must be positive");
}

double CopyLaw::quad(const Vec& a) const {
    if (a.size() != out_dim()) throw DimensionError("copy law: coefficient length");
    switch (kind) {
    case Cov::ScaledIdentity: return scale * a.squaredNorm();
    case Cov::Projection: {
        const Vec ua = U.topRows(out_dim()).transpose() * a;
        return scale * (a.squaredNorm() + (ua.array().square() * (D.array() - 1.0)).sum());
    }
    case Cov::Explicit: return a.dot(cov.topLeftCorner(out_dim(), out_dim()) * a);
    }
    return 0.0;
}

Vec CopyLaw::sample(Rng& rng) const {
    const Vec e = standard_normal(dim(), rng);
    Vec x;
    switch (kind) {
    case Cov::ScaledIdentity: x = mean + std::sqrt(scale) * e; break;
    case Cov::Projection: {
        const Vec ue = U.transpose() * e;
        x = mean + std::sqrt(scale) * (e + U * ((D.array().sqrt() - 1.0).matrix().cwiseProduct(ue)));
        break;
    }
    case Cov::Explicit: {
        Eigen::SelfAdjointEigenSolver<Mat> es(cov);
        const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        x = mean + es.eigenvectors() * ev.cwiseProduct(es.eigenvectors().transpose() * e);
        break;
    }
    }
    return n_out < 0 ? x : Vec(x.head(n_out));
}

CopyLaw css_law(const CrtProblem& p) {
    p.validate();
    require_tall(p);
    const Mat zs = p.z_star();
    const Svd s = thin_svd(zs);
    CopyLaw law;
    const Vec xs = p.x_star();
    law.mean = s.U * (s.U.transpose() * xs);
    law.kind = CopyLaw::Cov::Projection;  // nu^2 (I - P)
    law.scale = p.noise_sd * p.noise_sd;
    law.U = s.U;
    law.D = Vec::Zero(s.U.cols());
    law.n_out = p.n();
    return law;
}

CopySet css_copies(const CrtProblem& p, int M, Rng& rng) {
    const CopyLaw law = css_law(p);
    // Full augmented copies (labeled rows first) so Z*^T X~* = Z*^T X* can be checked.
    CopyLaw full = law;
    full.n_out = -1;
    return copies_from_law(full, M, rng, Proposal::IidModel);
}

CopyLaw acss_ols_law(const CrtProblem& p, const Perturbation& pert, Vec* theta_out) {
    p.validate();
    require_tall(p);
    if (!(pert.sigma > 0.0)) throw DomainError("acss-ols: sigma must be positive");
    const double nu = p.noise_sd;
    const Mat zs = p.z_star();
    const Svd s = thin_svd(zs);
    const double d = static_cast<double>(p.d());
    // Work on X*/nu so the unit-variance closed form applies.
    const FitResult f = fit_ols_perturbed(p.x_star() / nu, zs, pert);
    if (theta_out) *theta_out = nu * f.theta_hat;
    CopyLaw law;
    law.mean = nu * (zs * f.theta_hat);
    law.kind = CopyLaw::Cov::Projection;
    law.scale = nu * nu;
    law.U = s.U;
    law.D = (1.0 + (d / (pert.sigma * pert.sigma)) * s.lam.array().square()).inverse().matrix();
    law.n_out = p.n();
    return law;
}

CopySet acss_crt_copies_ols(const CrtProblem& p, double sigma, int M, Rng& rng) {
    const Perturbation pert = draw_perturbation(rng, p.d(), sigma);
    CopyLaw law = acss_ols_law(p, pert);
    law.n_out = -1;
    return copies_from_law(law, M, rng, Proposal::IidModel);
}

double coupled_copy_gap(const CrtProblem& p, double sigma, Rng& rng) {
    p.validate();
    require_tall(p);
    const Mat zs = p.z_star();
    const Svd s = thin_svd(zs);
    const double nu = p.noise_sd;
    const Perturbation pert = draw_perturbation(rng, p.d(), sigma);
    const Vec eps = nu * standard_normal(zs.rows(), rng);
    const Vec xs = p.x_star();
    const Vec Pxs = s.U * (s.U.transpose() * xs);
    const Vec ue = s.U.transpose() * eps;
    const Vec css = Pxs + eps - s.U * ue;
    const double d = static_cast<double>(p.d());
    const Vec root = (1.0 + (d / (sigma * sigma)) * s.lam.array().square()).rsqrt().matrix();
    // Z (Z^T Z)^{-1} W = U Lambda^{-1} V^T W
    const Vec shift = nu * sigma * (s.U * (s.V.transpose() * pert.w).cwiseQuotient(s.lam));
    const Vec acss = Pxs + shift + eps + s.U * (root.array() - 1.0).matrix().cwiseProduct(ue);
    return (css - acss).squaredNorm();
}

double coupling_bound(const CrtProblem& p, double sigma) {
    const Svd s = thin_svd(p.z_star());
    const double d = static_cast<double>(p.d());
    return p.noise_sd * p.noise_sd * 4.0 * sigma * sigma / d * s.lam.array().square().inverse().sum();
}

double coupling_expectation(const CrtProblem& p, double sigma) {
    const Svd s = thin_svd(p.z_star());
    const double d = static_cast<double>(p.d());
    const double s2 = sigma * sigma;
    const auto l2 = s.lam.array().square();
    return p.noise_sd * p.noise_sd * (s2 / d * l2.inverse().sum() + (s2 / (s2 + d * l2)).sum());
}

CopyLaw acss_gaussian_law(const CrtProblem& p, const Vec& theta_hat, const Vec& x_noise, double sigma) {
    p.validate();
    const auto st = gaussian_acss_law(p.z * theta_hat, x_noise, p.noise_sd, sigma);
    CopyLaw law;
    law.mean = st.mean;
    law.kind = CopyLaw::Cov::ScaledIdentity;
    law.scale = st.var;
    return law;
}

CopySet acss_crt_copies_gaussian(const CrtProblem& p, const Vec& theta_hat, const Vec& x_noise, double sigma, int M,
                                 Rng& rng) {
    return copies_from_law(acss_gaussian_law(p, theta_hat, x_noise, sigma), M, rng, Proposal::GaussianAcss);
}

double distilled_statistic(const CrtProblem& p, const Vec& theta_hat, const Vec& xi_hat, const Vec& x) {
    if (x.size() != p.n() || theta_hat.size() != p.d() || xi_hat.size() != p.d())
        throw DimensionError("distilled statistic: dimension mismatch");
    return (p.y - p.z * xi_hat).dot(x - p.z * theta_hat);
}

double resampling_free_pvalue(const CopyLaw& law, const Vec& a, double b, double t_obs, Side side) {
    const double m = a.dot(law.mean.head(law.out_dim())) + b;
    const double v = law.quad(a);
    if (!(v > 0.0)) {
        if (t_obs == m) return 1.0;
        const bool above = t_obs > m;
        switch (side) {
        case Side::Upper: return above ? 0.0 : 1.0;
        case Side::Lower: return above ? 1.0 : 0.0;
        case Side::TwoSided: return 0.0;
        }
    }
    const double z = (t_obs - m) / std::sqrt(v);
    switch (side) {
    case Side::Upper: return normal_sf(z);
    case Side::Lower: return normal_sf(-z);
    case Side::TwoSided: return std::min(1.0, 2.0 * normal_sf(std::abs(z)));
    }
    return 1.0;
}

double resampling_free_pvalue(const CrtProblem& p, const CopyLaw& law, double t_obs, const Vec& theta_hat,
                              const Vec& xi_hat, Side side) {
    const Vec a = p.y - p.z * xi_hat;
    return resampling_free_pvalue(law, a, -a.dot(p.z * theta_hat), t_obs, side);
}

// ---- estimators ----

Vec fit_crt_estimator(const CrtEstimatorSpec& spec, const Vec& x, const Mat& z, const SolverOptions& opts) {
    const Index n = z.rows(), d = z.cols();
    const double rn = std::sqrt(static_cast<double>(n));
    switch (spec.kind) {
    case CrtEstimator::Iht: return fit_iht(x, z, spec.sparsity);
    case CrtEstimator::Ols: {
        Eigen::ColPivHouseholderQR<Mat> qr(z);
        if (qr.rank() < d) throw SingularError("ols: design lacks full column rank");
        return qr.solve(x);
    }
    case CrtEstimator::Oracle: throw DomainError("oracle estimator has no fit");
    default: break;
    }
    // (1/2n)||x - Z theta||^2 = 1/2 ||x/sqrt(n) - (Z/sqrt(n)) theta||^2
    const ModelSpec model = ModelSpec::gaussian_linear(z / rn, 1.0);
    GroupStructure groups = GroupStructure::singletons(d);
    GroupPenalty pen;
    switch (spec.kind) {
    case CrtEstimator::Lasso: pen = GroupPenalty::l1(spec.lambda); break;
    case CrtEstimator::Scad: pen = GroupPenalty::scad(spec.lambda, spec.shape > 0 ? spec.shape : 3.7); break;
    case CrtEstimator::Mcp: pen = GroupPenalty::mcp(spec.lambda, spec.shape > 0 ? spec.shape : 3.0); break;
    case CrtEstimator::GroupScad:
        groups = GroupStructure::contiguous(d, spec.group_size);
        pen = GroupPenalty::scad(spec.lambda, spec.shape > 0 ? spec.shape : 3.7);
        break;
    default: break;
    }
    SolverOptions o = opts;
    o.max_iter = std::min(o.max_iter, 20000);
    const FitResult f = fit_penalized(model, x / rn, Perturbation{Vec::Zero(d), 0.0},
                                      PenaltySpec::uniform(groups.size(), pen), groups, o, {}, Vec::Zero(d));
    return f.theta_hat;
}

Vec fit_lasso(const Vec& y, const Mat& z, double lambda, const SolverOptions& opts) {
    CrtEstimatorSpec s;
    s.kind = CrtEstimator::Lasso;
    s.lambda = lambda;
    return fit_crt_estimator(s, y, z, opts);
}

Vec fit_relaxed_lasso(const Vec& y, const Mat& z, double lambda, const SolverOptions& opts) {
    const Vec l = fit_lasso(y, z, lambda, opts);
    std::vector<Index> S;
    for (Index j = 0; j < l.size(); ++j)
        if (l[j] != 0.0) S.push_back(j);
    // keep the largest coefficients if the support would saturate the rows
    const auto cap = static_cast<std::size_t>(std::max<Index>(z.rows() - 1, 0));
    if (S.size() > cap) {
        std::stable_sort(S.begin(), S.end(), [&](Index a, Index b) { return std::abs(l[a]) > std::abs(l[b]); });
        S.resize(cap);
        std::sort(S.begin(), S.end());
    }
    Vec out = Vec::Zero(z.cols());
    if (S.empty()) return out;
    Mat zs(z.rows(), static_cast<Index>(S.size()));
    for (std::size_t k = 0; k < S.size(); ++k) zs.col(static_cast<Index>(k)) = z.col(S[k]);
    const Vec c = zs.colPivHouseholderQr().solve(y);
    for (std::size_t k = 0; k < S.size(); ++k) out[S[k]] = c[static_cast<Index>(k)];
    return out;
}

Vec fit_iht(const Vec& x, const Mat& z, Index sparsity, int max_iter) {
    const Index d = z.cols();
    if (sparsity < 1 || sparsity > std::min<Index>(d, z.rows())) throw DomainError("iht: sparsity out of range");
    auto top = [&](const Vec& v) {
        std::vector<Index> idx(static_cast<std::size_t>(d));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::partial_sort(idx.begin(), idx.begin() + sparsity, idx.end(),
                          [&](Index a, Index b) { return std::abs(v[a]) > std::abs(v[b]) || (std::abs(v[a]) == std::abs(v[b]) && a < b); });
        idx.resize(static_cast<std::size_t>(sparsity));
        std::sort(idx.begin(), idx.end());
        return idx;
    };
    auto refit = [&](const std::vector<Index>& S) {
        Mat zs(z.rows(), static_cast<Index>(S.size()));
        for (std::size_t k = 0; k < S.size(); ++k) zs.col(static_cast<Index>(k)) = z.col(S[k]);
        const Vec c = zs.colPivHouseholderQr().solve(x);
        Vec th = Vec::Zero(d);
        for (std::size_t k = 0; k < S.size(); ++k) th[S[k]] = c[static_cast<Index>(k)];
        return th;
    };
    auto rss = [&](const Vec& th) { return (x - z * th).squaredNorm(); };

    // Normalized IHT: step from the gradient restricted to the current support,
    // halved until the residual sum of squares decreases.
    auto niht = [&](std::vector<Index> S) {
        Vec th = refit(S);
        double f = rss(th);
        for (int it = 0; it < max_iter; ++it) {
            const Vec g = z.transpose() * (x - z * th);
            Vec gs = Vec::Zero(d);
            for (Index j : S) gs[j] = g[j];
            const double den = (z * gs).squaredNorm();
            double step = den > 0.0 ? gs.squaredNorm() / den : 1.0 / z.colwise().squaredNorm().maxCoeff();
            bool moved = false;
            for (int bt = 0; bt < 30 && !moved; ++bt, step *= 0.5) {
                const auto S2 = top(th + step * g);
                if (S2 == S) break;
                const Vec cand = refit(S2);
                const double fc = rss(cand);
                if (fc < f * (1.0 - 1e-12)) {
                    S = S2;
                    th = cand;
                    f = fc;
                    moved = true;
                }
            }
            if (!moved) break;
        }
        return std::make_pair(S, f);
    };
    // Single-coordinate swaps until no swap lowers the RSS.
    auto swaps = [&](std::vector<Index> S, double f) {
        for (int pass = 0; pass < 20; ++pass) {
            bool improved = false;
            for (std::size_t a = 0; a < S.size(); ++a) {
                for (Index k = 0; k < d; ++k) {
                    if (std::find(S.begin(), S.end(), k) != S.end()) continue;
                    auto T = S;
                    T[a] = k;
                    std::sort(T.begin(), T.end());
                    const double fc = rss(refit(T));
                    if (fc < f * (1.0 - 1e-12)) {
                        S = T;
                        f = fc;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) break;
        }
        return std::make_pair(S, f);
    };

    std::vector<std::vector<Index>> starts{top(z.transpose() * x)};
    {
        // forward stepwise (orthogonal matching pursuit)
        std::vector<Index> S;
        Vec r = x;
        for (Index k = 0; k < sparsity; ++k) {
            Vec c = (z.transpose() * r).cwiseAbs();
            for (Index j : S) c[j] = -1.0;
            Index j;
            c.maxCoeff(&j);
            S.push_back(j);
            std::sort(S.begin(), S.end());
            r = x - z * refit(S);
        }
        starts.push_back(S);
    }
    std::vector<Index> best;
    double fbest = std::numeric_limits<double>::infinity();
    for (const auto& s0 : starts) {
        auto [S, f] = niht(s0);
        std::tie(S, f) = swaps(S, f);
        if (f < fbest) {
            fbest = f;
            best = S;
        }
    }
    return refit(best);
}

PValueReport run_crt(const CrtProblem& p, const CrtConfig& cfg) {
    p.validate();
    if (p.y.size() != p.n()) throw DimensionError("crt: Y required");
    Rng rng(cfg.seed);
    PValueReport rep;
    rep.method = cfg.method;
    rep.ssosp = true;

    Vec theta_hat;
    CopyLaw law;
    switch (cfg.mechanism) {
    case CopyMechanism::Oracle: {
        if (cfg.theta0.size() != p.d()) throw DimensionError("crt: oracle needs theta0");
        theta_hat = cfg.theta0;
        law.mean = p.z * theta_hat;
        law.scale = p.noise_sd * p.noise_sd;
        break;
    }
    case CopyMechanism::Css: {
        law = css_law(p);
        theta_hat = p.z_star().colPivHouseholderQr().solve(p.x_star());
        break;
    }
    case CopyMechanism::AcssOls: {
        const Perturbation pert = draw_perturbation(rng, p.d(), cfg.sigma);
        law = acss_ols_law(p, pert, &theta_hat);
        break;
    }
    case CopyMechanism::AcssGaussian: {
        const Vec x_noise = perturb_observation(p.x, cfg.sigma, rng).x;
        if (cfg.estimator.kind == CrtEstimator::Oracle) {
            if (cfg.theta0.size() != p.d()) throw DimensionError("crt: oracle estimator needs theta0");
            theta_hat = cfg.theta0;
        } else {
            theta_hat = fit_crt_estimator(cfg.estimator, x_noise, p.z, cfg.solver);
        }
        law = acss_gaussian_law(p, theta_hat, x_noise, cfg.sigma);
        break;
    }
    }

    Vec a;
    double b = 0.0;
    if (cfg.statistic == CrtStatistic::Distilled) {
        const Vec xi = cfg.xi_refit ? fit_relaxed_lasso(p.y, p.z, cfg.xi_lambda, cfg.solver)
                                    : fit_lasso(p.y, p.z, cfg.xi_lambda, cfg.solver);
        a = p.y - p.z * xi;
        b = -a.dot(p.z * theta_hat);
    } else {
        const double lam = cfg.ytilde_lambda > 0 ? cfg.ytilde_lambda : default_ytilde_lambda(p.z);
        a = solve_ytilde(p.y, p.z, lam).y;
    }
    rep.t_obs = a.dot(p.x) + b;
    if (cfg.M <= 0) {
        rep.pval = resampling_free_pvalue(law, a, b, rep.t_obs, cfg.side);
        return rep;
    }
    for (int m = 0; m < cfg.M; ++m) rep.t_copies.push_back(a.dot(law.sample(rng).head(p.n())) + b);
    if (cfg.side == Side::Lower) {
        std::vector<double> neg;
        for (double t : rep.t_copies) neg.push_back(-t);
        rep.pval = pval_unweighted(-rep.t_obs, neg);
    } else if (cfg.side == Side::TwoSided) {
        const double c = a.dot(law.mean.head(p.n())) + b;
        std::vector<double> dev;
        for (double t : rep.t_copies) dev.push_back(std::abs(t - c));
        rep.pval = pval_unweighted(std::abs(rep.t_obs - c), dev);
    } else {
        rep.pval = pval_unweighted(rep.t_obs, rep.t_copies);
    }
    return rep;
}

}  // namespace acss
