#include "acss/baselines.hpp"
#include "acss/bench.hpp"
#include "acss/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

namespace acss {

namespace {

constexpr std::uint64_t kDataKey = 0x64617461ULL;  // shared by every method at one (grid, rep)

std::uint64_t data_seed(const ExperimentConfig& cfg, std::size_t g, int rep) {
    return split_seed(cfg.master_seed, {hash_name(to_string(cfg.experiment)), kDataKey, g, static_cast<std::uint64_t>(rep)});
}

// ---- behrens-fisher ----

Vec bf_data(const BehrensFisherParams& p, double mu1, Rng& rng) {
    Vec x(p.n0 + p.n1);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::student_t_distribution<double> t1(1.0);
    for (Index i = 0; i < p.n0; ++i) x[i] = p.mu0 + std::sqrt(p.gamma0) * nd(rng);
    for (Index i = 0; i < p.n1; ++i) x[p.n0 + i] = mu1 + std::sqrt(p.gamma1) * nd(rng);
    for (Index i = 0; i < std::min(p.m, p.n0); ++i) x[i] = 3.0 + std::abs(t1(rng));
    return x;
}

double bf_pvalue(const ExperimentConfig& cfg, const std::string& method, const Vec& x, std::uint64_t seed) {
    const auto& p = cfg.bf;
    const bool absdiff = p.statistic == "absdiff";
    const Side side = absdiff ? Side::TwoSided : Side::Upper;
    if (method == "t-test" || method == "oracle-t-test") {
        const Index skip = method == "oracle-t-test" ? std::min(p.m, p.n0) : 0;
        return welch_t_pvalue(x.segment(skip, p.n0 - skip), x.tail(p.n1), side);
    }
    const Index n0 = p.n0, n1 = p.n1;
    const ModelSpec model = ModelSpec::behrens_fisher(n0, n1);
    AcssConfig ac;
    ac.statistic = [n0, n1, absdiff](const Vec& v) {
        const double diff = v.tail(n1).mean() - v.head(n0).mean();
        return absdiff ? std::abs(diff) : diff;
    };
    ac.proposal = Proposal::SphereVmf;
    ac.M = cfg.M;
    ac.hessian_det = p.hessian_det;
    ac.seed = seed;
    ac.method = method;
    ac.solver.restarts = 10;
    if (method == "acss-mle") {
        ac.estimator = EstimatorKind::Penalized;
        ac.sigma = p.sigma_mle;
    } else if (method == "acss-mtle") {
        ac.estimator = EstimatorKind::Mtle;
        ac.sigma = p.sigma_mtle;
        ac.h = p.h;
    } else {
        throw ConfigError("behrens-fisher: unknown method '" + method + "'");
    }
    return run_acss(model, Sample{x, std::nullopt, {}}, ac).pval;
}

// ---- ci-test ----

CrtProblem ci_data(const CiTestParams& p, double beta, Rng& rng) {
    CrtProblem prob;
    prob.noise_sd = p.nu;
    const Index nt = p.n + p.m_unlabeled;
    Mat z(nt, p.d);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Index j = 0; j < p.d; ++j)
        for (Index i = 0; i < nt; ++i) z(i, j) = nd(rng);
    Vec theta = Vec::Zero(p.d);
    theta.head(std::min(p.theta_k, p.d)).setConstant(p.theta_value);
    Vec xi = Vec::Zero(p.d);
    xi.head(std::min(p.xi_k, p.d)).setConstant(p.xi_value);
    const Vec xall = z * theta + p.nu * standard_normal(nt, rng);
    prob.z = z.topRows(p.n);
    prob.x = xall.head(p.n);
    prob.y = beta * prob.x + prob.z * xi + standard_normal(p.n, rng);
    if (p.m_unlabeled > 0) {
        prob.zu = z.bottomRows(p.m_unlabeled);
        prob.xu = xall.tail(p.m_unlabeled);
    } else {
        prob.zu = Mat(0, p.d);
        prob.xu = Vec(0);
    }
    return prob;
}

double default_lambda(CrtEstimator k) {
    switch (k) {
    case CrtEstimator::Lasso: return 0.4;
    case CrtEstimator::Scad: return 0.4;
    case CrtEstimator::Mcp: return 0.4;
    case CrtEstimator::GroupScad: return 0.4;
    default: return 0.0;
    }
}

double ci_pvalue(const ExperimentConfig& cfg, const std::string& method, const CrtProblem& prob, std::uint64_t seed,
                 double sigma_override) {
    const auto& p = cfg.ci;
    if (method == "debiased-lasso-baseline")
        return debiased_lasso(prob.y, prob.x, prob.z, p.debiased_lambda, p.node_lambda, Side::Upper).pval;

    CrtConfig cc;
    cc.seed = seed;
    cc.method = method;
    cc.xi_lambda = p.xi_lambda;
    cc.xi_refit = p.xi_refit;
    cc.side = Side::Upper;
    cc.M = 0;
    auto it = p.sigma_by_method.find(method);
    cc.sigma = sigma_override > 0 ? sigma_override : (it != p.sigma_by_method.end() ? it->second : p.sigma);

    Vec theta0 = Vec::Zero(p.d);
    theta0.head(std::min(p.theta_k, p.d)).setConstant(p.theta_value);
    if (method == "oracle-crt") {
        // the Gaussian-aCSS pipeline with the true theta0 in place of an estimate
        cc.mechanism = CopyMechanism::AcssGaussian;
        cc.estimator.kind = CrtEstimator::Oracle;
        cc.theta0 = theta0;
    } else if (method == "exact-crt") {
        // copies from the exact null law N(Z theta0, nu^2 I)
        cc.mechanism = CopyMechanism::Oracle;
        cc.theta0 = theta0;
    } else if (method == "css") {
        if (prob.n() + prob.m() <= prob.d()) throw DomainError("css requires n + m > d");
        cc.mechanism = CopyMechanism::Css;
    } else if (method == "acss-ols") {
        cc.mechanism = CopyMechanism::AcssOls;
    } else {
        static const std::map<std::string, CrtEstimator> kinds = {
            {"acss-lasso", CrtEstimator::Lasso}, {"acss-scad", CrtEstimator::Scad},
            {"acss-mcp", CrtEstimator::Mcp},     {"acss-group-scad", CrtEstimator::GroupScad},
            {"acss-iht", CrtEstimator::Iht},
        };
        auto k = kinds.find(method);
        if (k == kinds.end()) throw ConfigError("ci-test: unknown method '" + method + "'");
        cc.mechanism = CopyMechanism::AcssGaussian;
        cc.estimator.kind = k->second;
        auto l = p.lambda_by_method.find(method);
        cc.estimator.lambda = l != p.lambda_by_method.end() ? l->second : default_lambda(k->second);
        cc.estimator.group_size = p.group_size;
        cc.estimator.sparsity = p.sparsity;
    }
    return run_crt(prob, cc).pval;
}

// ---- validity suites ----

double validity_pvalue(const ExperimentConfig& cfg, const std::string& method, std::uint64_t dseed, std::uint64_t seed) {
    Rng drng(dseed);
    if (cfg.suite == "exchangeability") {
        // Singleton null with a known parameter: copies are exactly exchangeable.
        const Index n = 20, d = 3;
        Rng zr(split_seed(cfg.master_seed, {hash_name("design")}));
        const Mat z = Eigen::MatrixXd::NullaryExpr(n, d, [&]() { return std::normal_distribution<double>(0, 1)(zr); });
        const ModelSpec model = ModelSpec::gaussian_linear(z, 1.0);
        const Vec theta = Vec::LinSpaced(d, 0.5, -0.5);
        const Sample data = sample_data(model, theta, drng);
        AcssConfig ac;
        ac.estimator = EstimatorKind::Fixed;
        ac.fixed_theta = theta;
        ac.M = std::min(cfg.M, 199);
        ac.seed = seed;
        ac.statistic = [z](const Vec& x) { return z.col(0).dot(x) + 0.5 * x.array().abs().sum(); };
        if (method == "unweighted") ac.weighted = false;
        else if (method == "weighted") ac.weighted = true;
        else throw ConfigError("exchangeability: unknown method '" + method + "'");
        return run_acss(model, data, ac).pval;
    }
    if (cfg.suite == "resampling-free") {
        CiTestParams p;
        p.n = 30;
        p.d = 10;
        p.m_unlabeled = 20;
        p.theta_k = 3;
        p.xi_k = 3;
        const CrtProblem prob = ci_data(p, 0.0, drng);
        CrtConfig cc;
        cc.seed = seed;
        cc.method = method;
        cc.M = 0;
        if (method == "exact-crt") {
            cc.mechanism = CopyMechanism::Oracle;
            cc.theta0 = Vec::Zero(p.d);
            cc.theta0.head(p.theta_k).setConstant(p.theta_value);
        } else if (method == "css") {
            cc.mechanism = CopyMechanism::Css;
        } else if (method == "exact-crt-resampled") {
            cc.mechanism = CopyMechanism::Oracle;
            cc.theta0 = Vec::Zero(p.d);
            cc.theta0.head(p.theta_k).setConstant(p.theta_value);
            cc.M = std::min(cfg.M, 199);
        } else {
            throw ConfigError("resampling-free: unknown method '" + method + "'");
        }
        return run_crt(prob, cc).pval;
    }
    throw ConfigError("unknown validity suite '" + cfg.suite + "'");
}

}  // namespace

std::uint64_t row_seed(const ExperimentConfig& cfg, const std::string& method, std::size_t grid_idx, int rep) {
    return split_seed(cfg.master_seed, {hash_name(to_string(cfg.experiment)), hash_name(method), grid_idx,
                                        static_cast<std::uint64_t>(rep)});
}

ExperimentRow run_row(const ExperimentConfig& cfg, std::size_t mi, std::size_t gi, int rep) {
    ExperimentRow row;
    row.experiment = to_string(cfg.experiment);
    row.method = cfg.methods.at(mi);
    row.grid = cfg.grid.at(gi);
    row.rep = rep;
    row.seed = row_seed(cfg, row.method, gi, rep);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const std::uint64_t ds = data_seed(cfg, gi, rep);
        Rng drng(ds);
        switch (cfg.experiment) {
        case Experiment::BehrensFisher: row.pval = bf_pvalue(cfg, row.method, bf_data(cfg.bf, row.grid, drng), row.seed); break;
        case Experiment::CiTest: row.pval = ci_pvalue(cfg, row.method, ci_data(cfg.ci, row.grid, drng), row.seed, 0.0); break;
        case Experiment::SigmaSweep: {
            // grid holds sigma; the beta = 0 data are shared across sigma values
            Rng srng(data_seed(cfg, 0, rep));
            row.pval = ci_pvalue(cfg, row.method, ci_data(cfg.ci, 0.0, srng), row.seed, row.grid);
            break;
        }
        case Experiment::ValiditySuite: row.pval = validity_pvalue(cfg, row.method, ds, row.seed); break;
        }
        if (!std::isfinite(row.pval)) throw std::runtime_error("non-finite p-value");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        row.pval = 1.0;
        row.error = e.what();
        std::replace(row.error.begin(), row.error.end(), ',', ';');
        std::replace(row.error.begin(), row.error.end(), '\n', ' ');
        std::replace(row.error.begin(), row.error.end(), '"', '\'');
        if (row.error.empty()) row.error = "error";
    }
    row.reject = row.error.empty() && row.pval <= cfg.alpha;
    row.ms = std::round(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() * 1000.0) / 1000.0;
    return row;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    const std::size_t nm = cfg.methods.size(), ng = cfg.grid.size();
    const std::size_t R = static_cast<std::size_t>(std::max(cfg.replications, 0));
    const std::size_t total = nm * ng * R;
    std::vector<ExperimentRow> rows(total);
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::atomic<bool> stop{false};
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= total || stop) return;
            const std::size_t mi = k / (ng * R), gi = (k / R) % ng;
            const int rep = static_cast<int>(k % R);
            try {
                rows[k] = run_row(cfg, mi, gi, rep);
            } catch (...) {
                if (!stop.exchange(true)) fatal = std::current_exception();
                return;
            }
        }
    };
    const int nt = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(total, 1))));
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);
    return rows;  // index order = (method, grid, rep)
}

}  // namespace acss
