// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion; exit 1 if any fails.
// Optional arguments restrict the run to the listed criterion numbers.
#include "acss/bench.hpp"
#include "acss/crt.hpp"
#include "acss/density.hpp"
#include "acss/rng.hpp"
#include "acss/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>

using namespace acss;

namespace {

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Mat random_matrix(Index r, Index c, Rng& rng) {
    Mat M(r, c);
    for (Index j = 0; j < c; ++j) M.col(j) = standard_normal(r, rng);
    return M;
}

double rate(const std::vector<SummaryRow>& t, const std::string& m, double g) {
    const SummaryRow* s = find_summary(t, m, g);
    return s ? s->rate : std::nan("");
}

double se(const std::vector<SummaryRow>& t, const std::string& m, double g) {
    const SummaryRow* s = find_summary(t, m, g);
    return s ? s->se : std::nan("");
}

// Nondecreasing along the grid, each step allowed to drop by 2 SE of the difference.
bool monotone(const std::vector<SummaryRow>& t, const std::string& m, const std::vector<double>& grid,
              std::ostringstream& why) {
    bool ok = true;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double a = rate(t, m, grid[k]), b = rate(t, m, grid[k + 1]);
        const double s = std::hypot(se(t, m, grid[k]), se(t, m, grid[k + 1]));
        if (!(b >= a - 2 * s)) {
            ok = false;
            why << " [" << m << " drops " << a << "->" << b << " at " << grid[k + 1] << "]";
        }
    }
    return ok;
}

std::string rates_line(const std::vector<SummaryRow>& t, const std::vector<std::string>& methods,
                        const std::vector<double>& grid) {
    std::ostringstream os;
    os.precision(3);
    for (const auto& m : methods) {
        os << ' ' << m << '=';
        for (std::size_t k = 0; k < grid.size(); ++k) os << (k ? "/" : "") << rate(t, m, grid[k]);
    }
    return os.str();
}

// Empirical mean and covariance of draws against (mu, Sigma), within 4 SE per entry.
bool law_matches(const std::vector<Vec>& draws, const Vec& mu, const Mat& Sigma, double& worst) {
    const Index n = mu.size();
    const double N = static_cast<double>(draws.size());
    Vec m = Vec::Zero(n);
    for (const auto& x : draws) m += x;
    m /= N;
    Mat C = Mat::Zero(n, n);
    for (const auto& x : draws) C += (x - m) * (x - m).transpose();
    C /= N;
    worst = 0.0;
    for (Index i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(m[i] - mu[i]) / std::sqrt(Sigma(i, i) / N));
        for (Index j = 0; j < n; ++j) {
            const double v = (Sigma(i, i) * Sigma(j, j) + Sigma(i, j) * Sigma(i, j)) / N;
            worst = std::max(worst, std::abs(C(i, j) - Sigma(i, j)) / std::sqrt(v));
        }
    }
    return worst <= 4.0;
}

struct Outcome {
    bool pass;
    std::string detail;
};

// ---- criteria ----

Outcome c1_bf_validity() {
    auto cfg = default_config(Experiment::BehrensFisher);
    cfg.grid = {0.0};
    cfg.replications = 1000;
    const auto t = summarize(run_experiment(cfg, threads()), cfg.alpha);
    bool ok = true;
    for (const auto& m : cfg.methods) {
        const double r = rate(t, m, 0.0);
        ok = ok && r >= 0.07 && r <= 0.13;
    }
    return {ok, "rates at mu1=0:" + rates_line(t, cfg.methods, cfg.grid) + " (band [0.07, 0.13])"};
}

Outcome c2_bf_ordering() {
    auto cfg = default_config(Experiment::BehrensFisher);
    cfg.grid = {0.6, 0.8, 1.0};
    cfg.replications = 300;
    cfg.methods = {"acss-mtle", "acss-mle", "oracle-t-test"};
    const auto t = summarize(run_experiment(cfg, threads()), cfg.alpha);
    bool ok = true;
    for (double g : cfg.grid) {
        ok = ok && rate(t, "acss-mtle", g) - rate(t, "acss-mle", g) >= 0.08;
        ok = ok && rate(t, "oracle-t-test", g) >= rate(t, "acss-mtle", g) - 2 * se(t, "acss-mtle", g);
    }
    return {ok, "power at mu1=0.6/0.8/1.0:" + rates_line(t, cfg.methods, cfg.grid)};
}

Outcome c3_ci_pattern() {
    auto cfg = default_config(Experiment::CiTest);
    cfg.replications = 500;
    cfg.methods = {"oracle-crt", "acss-mcp", "acss-group-scad", "acss-iht", "acss-lasso", "debiased-lasso-baseline"};
    const auto t = summarize(run_experiment(cfg, threads()), cfg.alpha);
    bool ok = true;
    std::ostringstream why;
    for (const char* m : {"acss-mcp", "acss-group-scad", "acss-iht", "oracle-crt"}) ok = ok && rate(t, m, 0.0) <= 0.13;
    for (const char* m : {"acss-lasso", "debiased-lasso-baseline"}) ok = ok && rate(t, m, 0.0) >= 0.15;
    const double gap = std::abs(rate(t, "acss-iht", 0.6) - rate(t, "oracle-crt", 0.6));
    ok = ok && gap <= 0.1;
    for (const char* m : {"acss-mcp", "acss-group-scad", "acss-iht", "oracle-crt"})
        ok = monotone(t, m, cfg.grid, why) && ok;
    std::ostringstream os;
    os.precision(3);
    os << "beta=" << cfg.grid.front() << ".." << cfg.grid.back() << ':' << rates_line(t, cfg.methods, cfg.grid)
       << "; |iht - oracle| at 0.6 = " << gap << why.str();
    return {ok, os.str()};
}

Outcome c4_sigma_sweep() {
    auto cfg = default_config(Experiment::SigmaSweep);
    cfg.replications = 500;
    const auto t = summarize(run_experiment(cfg, threads()), cfg.alpha);
    bool ok = true;
    std::ostringstream why;
    for (const auto& m : cfg.methods) ok = monotone(t, m, cfg.grid, why) && ok;
    return {ok, "type-I over sigma:" + rates_line(t, cfg.methods, cfg.grid) + why.str()};
}

Outcome c5_exchangeability() {
    auto cfg = default_config(Experiment::ValiditySuite);
    cfg.suite = "exchangeability";
    cfg.methods = validity_suite_methods(cfg.suite);
    cfg.replications = 2000;
    const auto checks = check_validity(run_experiment(cfg, threads()));
    bool ok = !checks.empty();
    std::ostringstream os;
    os.precision(3);
    for (const auto& c : checks) {
        ok = ok && c.pass;
        os << ' ' << c.name << "@" << c.alpha << '=' << c.rate << "<=" << c.alpha + 2 * c.se;
    }
    return {ok, "2000 reps:" + os.str()};
}

Outcome c6_weight_algebra() {
    Rng rng(6);
    bool ok = true;
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int M = 1 + static_cast<int>(uniform01(rng) * 50);
        std::vector<double> t(static_cast<std::size_t>(M)), w(static_cast<std::size_t>(M) + 1);
        for (auto& v : t) v = std::round(4 * std::normal_distribution<double>()(rng)) / 4;  // ties on purpose
        for (auto& v : w) v = uniform01(rng);
        const double t0 = std::round(4 * std::normal_distribution<double>()(rng)) / 4;
        const double p = pval_weighted(t0, t, w);
        std::vector<double> w2 = w, wc = w;
        for (auto& v : w2) v *= 1024.0;
        const double c = 0.1 + 10 * uniform01(rng);
        for (auto& v : wc) v *= c;
        ok = ok && pval_weighted(t0, t, w2) == p;
        worst = std::max(worst, std::abs(pval_weighted(t0, t, wc) - p) / p);
        ok = ok && pval_weighted(t0, t, std::vector<double>(w.size(), 1.0)) == pval_unweighted(t0, t);
    }
    ok = ok && worst <= 1e-14;
    std::ostringstream os;
    os << "1000 cases; power-of-two scaling and uniform reduction bitwise equal; arbitrary scaling rel. diff "
       << worst;
    return {ok, os.str()};
}

Outcome c7_sampler_laws() {
    Rng rng(7);
    const int N = 100000;
    double w1 = 0, w2 = 0, w3 = 0;

    // gaussian additive: n = 4
    const Mat B = random_matrix(4, 4, rng);
    FitResult fit;
    fit.theta_hat = standard_normal(4, rng);
    fit.g_hat = standard_normal(4, rng);
    const double nu = 1.3, sigma = 0.9;
    const auto add = sample_copies_gaussian_additive(B, fit, nu, sigma, N, rng);
    const double shrink = 1.0 / (1.0 + 4.0 / (sigma * sigma * nu * nu));
    const Vec mu1 = B * fit.theta_hat - shrink * (4.0 / (sigma * sigma)) * fit.g_hat;
    const bool a = law_matches(add.copies, mu1, nu * nu * shrink * Mat::Identity(4, 4), w1);

    // gaussian acss: n = 5
    const Vec muh = standard_normal(5, rng), xn = standard_normal(5, rng);
    const auto ga = sample_copies_gaussian_acss(muh, xn, nu, sigma, N, rng);
    const double s = sigma * sigma / (sigma * sigma + nu * nu);
    const bool b = law_matches(ga.copies, s * muh + (1 - s) * xn, s * nu * nu * Mat::Identity(5, 5), w2);

    // perturbed-OLS CRT law: n* = 5, d = 2
    CrtProblem p;
    p.z = random_matrix(3, 2, rng);
    p.zu = random_matrix(2, 2, rng);
    p.x = standard_normal(3, rng);
    p.xu = standard_normal(2, rng);
    p.y = standard_normal(3, rng);
    p.noise_sd = nu;
    const Perturbation pert = draw_perturbation(rng, 2, sigma);
    Vec th;
    CopyLaw law = acss_ols_law(p, pert, &th);
    law.n_out = -1;
    std::vector<Vec> draws;
    for (int i = 0; i < N; ++i) draws.push_back(law.sample(rng));
    const Mat zs = p.z_star();
    // theta_ols = (Z^T Z)^{-1} (Z^T X* + sigma nu W)
    const Vec th_ref = (zs.transpose() * zs).ldlt().solve(zs.transpose() * p.x_star() + sigma * nu * pert.w);
    const Mat cov = nu * nu * (Mat::Identity(5, 5) + (2.0 / (sigma * sigma)) * zs * zs.transpose()).inverse();
    const bool c = (th - th_ref).norm() < 1e-10 && law_matches(draws, zs * th_ref, cov, w3);

    std::ostringstream os;
    os.precision(3);
    os << "1e5 copies, worst |z| per entry: additive " << w1 << ", gaussian-acss " << w2 << ", ols-crt " << w3;
    return {a && b && c, os.str()};
}

Outcome c8_css_sufficiency() {
    Rng rng(8);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const Index n = 10 + rep % 20, m = rep % 7, d = 2 + rep % 6;
        CrtProblem p;
        p.z = random_matrix(n, d, rng);
        p.x = p.z * standard_normal(d, rng) + standard_normal(n, rng);
        p.y = standard_normal(n, rng);
        if (m > 0) {
            p.zu = random_matrix(m, d, rng);
            p.xu = standard_normal(m, rng);
        }
        const auto cs = css_copies(p, 20, rng);
        const Mat zs = p.z_star();
        for (const auto& c : cs.copies)
            worst = std::max(worst, (zs.transpose() * (c - p.x_star())).cwiseAbs().maxCoeff());
    }
    std::ostringstream os;
    os << "100 instances x 20 copies, max |Z*^T (X~ - X*)| = " << worst;
    return {worst <= 1e-8, os.str()};
}

Outcome c9_coupling() {
    Rng rng(9);
    bool ok = true;
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        CrtProblem p;
        p.z = random_matrix(30, 10, rng);
        p.zu = random_matrix(10, 10, rng);
        p.x = standard_normal(30, rng);
        p.xu = standard_normal(10, rng);
        p.y = standard_normal(30, rng);
        for (double sigma : {0.5, 2.0}) {
            double s = 0, s2 = 0;
            const int N = 10000;
            for (int i = 0; i < N; ++i) {
                const double g = coupled_copy_gap(p, sigma, rng);
                s += g;
                s2 += g * g;
            }
            const double mean = s / N, sem = std::sqrt((s2 / N - mean * mean) / N);
            const double bound = coupling_bound(p, sigma);
            ok = ok && mean <= bound + 4 * sem;
            worst = std::max(worst, mean / bound);
        }
    }
    std::ostringstream os;
    os.precision(3);
    os << "20 instances x sigma {0.5, 2}, 1e4 gaps each; max mean/bound = " << worst;
    return {ok, os.str()};
}

double enumerate_mtle(const Mat& Z, const Vec& x, const Vec& pt, Index h) {
    const Index n = Z.rows();
    double best = 1e300;
    std::vector<int> sel(static_cast<std::size_t>(n), 0);
    std::fill(sel.begin() + (n - h), sel.end(), 1);
    do {
        std::vector<Index> J;
        for (Index i = 0; i < n; ++i)
            if (sel[static_cast<std::size_t>(i)]) J.push_back(i);
        Mat ZJ(h, Z.cols());
        Vec xJ(h);
        for (Index k = 0; k < h; ++k) {
            ZJ.row(k) = Z.row(J[static_cast<std::size_t>(k)]);
            xJ[k] = x[J[static_cast<std::size_t>(k)]];
        }
        const Vec th = (ZJ.transpose() * ZJ).ldlt().solve(ZJ.transpose() * xJ - pt);
        best = std::min(best, 0.5 * (xJ - ZJ * th).squaredNorm() + pt.dot(th));
    } while (std::next_permutation(sel.begin(), sel.end()));
    return best;
}

Outcome c10_solvers() {
    Rng rng(10);
    // lasso on orthonormal designs vs soft thresholding
    double lasso_err = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 12, d = 6;
        const Mat Z = Eigen::HouseholderQR<Mat>(random_matrix(n, d, rng)).householderQ() * Mat::Identity(n, d);
        const Vec x = 2 * standard_normal(n, rng);
        const double lam = 0.2 + uniform01(rng);
        const auto f = fit_penalized(ModelSpec::gaussian_linear(Z, 1.0), Sample{x, std::nullopt, {}},
                                     Perturbation{Vec::Zero(d), 0.0}, PenaltySpec::uniform(d, GroupPenalty::l1(lam)),
                                     GroupStructure::singletons(d));
        const Vec ls = Z.transpose() * x;
        for (Index j = 0; j < d; ++j) {
            const double soft = std::copysign(std::max(0.0, std::abs(ls[j]) - lam), ls[j]);
            lasso_err = std::max(lasso_err, std::abs(f.theta_hat[j] - soft));
        }
    }
    // scad / mcp prox vs a 10^4-point grid
    double prox_excess = -1e300;
    for (int rep = 0; rep < 1000; ++rep) {
        const double lam = 0.1 + 2 * uniform01(rng);
        const GroupPenalty p = rep % 2 ? GroupPenalty::scad(lam, 2.1 + 3 * uniform01(rng))
                                       : GroupPenalty::mcp(lam, 1.1 + 3 * uniform01(rng));
        const double z = 6 * uniform01(rng), step = 0.1 + 3 * uniform01(rng);
        auto obj = [&](double r) { return 0.5 * (r - z) * (r - z) + step * rho(p, r); };
        const double f = obj(prox_radius(p, z, step));
        double best = 1e300;
        for (int k = 0; k < 10000; ++k) best = std::min(best, obj(8.0 * k / 9999));
        prox_excess = std::max(prox_excess, f - best);
    }
    // mtle vs exhaustive enumeration
    double mtle_err = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 8 + rep % 5, h = n - 2 - rep % 2;
        const Mat Z = random_matrix(n, 2, rng);
        Vec x = Z * Vec::Constant(2, 1.0) + 0.5 * standard_normal(n, rng);
        x[0] += 8;
        x[1] -= 6;
        const auto m = ModelSpec::gaussian_linear(Z, 1.0);
        const Perturbation pert = draw_perturbation(rng, 2, 0.5);
        SolverOptions o;
        o.seed = 100 + static_cast<std::uint64_t>(rep);
        const auto f = fit_mtle(m, Sample{x, std::nullopt, {}}, pert, h, o);
        const double got = f.objective - neg_loglik_constant(m, f.theta_hat, trim_mask(m, *f.trim_set));
        const double want = enumerate_mtle(Z, x, pert.term(), h);
        mtle_err = std::max(mtle_err, std::abs(got - want) / std::max(1.0, std::abs(want)));
    }
    std::ostringstream os;
    os << "lasso max err " << lasso_err << "; prox excess over grid " << prox_excess << "; mtle rel. err "
       << mtle_err;
    return {lasso_err <= 1e-6 && prox_excess <= 1e-9 && mtle_err <= 1e-8, os.str()};
}

double fd_logdet(const ModelSpec& model, const Vec& x, const Vec& theta, const PenaltySpec& pen,
                 const GroupStructure& groups) {
    auto F = [&](const Vec& th) {
        Vec g = score(model, th, x, {}) + smooth_penalty_gradient(pen, groups, th);
        for (std::size_t j = 0; j < groups.size(); ++j) {
            const auto& p = pen.per_group[j];
            const double r = groups.group_norm(th, j);
            if (!p.nonsmooth() || r <= 0.0) continue;
            for (Index i : groups[j]) g[i] += rho_prime(p, r) * th[i] / r;
        }
        return g;
    };
    const Index k = theta.size();
    Mat J(k, k);
    const double h = 1e-5;
    for (Index b = 0; b < k; ++b) {
        Vec tp = theta, tm = theta;
        tp[b] += h;
        tm[b] -= h;
        J.col(b) = (F(tp) - F(tm)) / (2 * h);
    }
    return std::log(std::abs(J.determinant()));
}

Outcome c11_logdet() {
    Rng rng(11);
    double worst = 0.0;
    int n = 0;
    for (int rep = 0; rep < 30; ++rep) {
        const Mat Z = random_matrix(8, 3, rng);
        const ModelSpec m = ModelSpec::gaussian_linear(Z, 0.8);
        GroupStructure groups({{0, 1}, {2}}, 3);
        PenaltySpec pen;
        pen.per_group = {GroupPenalty::group_l2(0.5 + 0.1 * rep), GroupPenalty::group_l2(0.3)};
        const Vec th = standard_normal(3, rng);
        ConditioningStat s;
        s.theta_hat = th;
        s.g_hat = Vec::Zero(3);
        const Vec x = standard_normal(8, rng);
        const auto ld = f_pen_logdet(m, x, s, pen, groups);
        if (!ld) continue;
        ++n;
        worst = std::max(worst, std::abs(*ld - fd_logdet(m, x, th, pen, groups)) / std::max(1.0, std::abs(*ld)));
    }
    const ModelSpec bf = ModelSpec::behrens_fisher(4, 5);
    GroupStructure g3 = GroupStructure::singletons(3);
    PenaltySpec pen3;
    pen3.per_group = {GroupPenalty::group_l2(0.4), GroupPenalty::none(), GroupPenalty::none()};
    for (int rep = 0; rep < 10; ++rep) {
        const Vec x = standard_normal(9, rng);
        Vec th(3);
        th << 0.2 + 0.1 * rep, 0.8, 1.5;
        ConditioningStat s;
        s.theta_hat = th;
        s.g_hat = Vec::Zero(3);
        const auto ld = f_pen_logdet(bf, x, s, pen3, g3);
        if (!ld) continue;
        ++n;
        worst = std::max(worst, std::abs(*ld - fd_logdet(bf, x, th, pen3, g3)) / std::max(1.0, std::abs(*ld)));
    }
    std::ostringstream os;
    os << n << " toys (gaussian-linear and behrens-fisher), max rel. err " << worst;
    return {n >= 30 && worst <= 1e-4, os.str()};
}

Outcome c12_ytilde() {
    Rng rng(12);
    double infeas = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Mat Z = random_matrix(20, 30, rng);
        const Vec Y = standard_normal(20, rng);
        const double lam = (0.2 + 0.6 * uniform01(rng)) * (Z.transpose() * Y).cwiseAbs().maxCoeff() / Y.norm();
        const auto r = solve_ytilde(Y, Z, lam);
        infeas = std::max({infeas, r.y.norm() - 1.0, (Z.transpose() * r.y).cwiseAbs().maxCoeff() - lam});
    }
    Mat Z(2, 2);
    Z << 1.0, 0.3, -0.2, 1.0;
    Vec Y(2);
    Y << 0.3, 0.4;
    const double lam = 0.5;
    const auto r = solve_ytilde(Y, Z, lam);
    double best = -1e300;
    for (int i = 0; i < 1000; ++i)
        for (int j = 0; j < 1000; ++j) {
            Vec y(2);
            y << -1.0 + 2.0 * i / 999, -1.0 + 2.0 * j / 999;
            if (y.norm() > 1.0 || (Z.transpose() * y).cwiseAbs().maxCoeff() > lam) continue;
            best = std::max(best, Y.dot(y));
        }
    const double grid_gap = std::abs(r.objective - best);
    const Mat Zs = random_matrix(10, 3, rng);
    const Vec Ys = standard_normal(10, rng);
    const bool slack = solve_ytilde(Ys, Zs, 1e6).y == Vec(Ys / Ys.norm());
    std::ostringstream os;
    os << "max infeasibility " << infeas << "; |obj - grid| = " << grid_gap << "; slack exact " << slack;
    return {infeas <= 1e-8 && grid_gap <= 1e-3 && slack, os.str()};
}

Outcome c13_resampling_free() {
    Rng rng(13);
    CrtProblem p;
    p.z = random_matrix(30, 5, rng);
    p.zu = random_matrix(20, 5, rng);
    p.x = p.z * Vec::Ones(5) + standard_normal(30, rng);
    p.xu = p.zu * Vec::Ones(5) + standard_normal(20, rng);
    p.y = p.z.col(0) + standard_normal(30, rng);
    const Vec a = p.y - p.z * fit_lasso(p.y, p.z, 0.3);
    const double crit = 1.63 / std::sqrt(10000.0);
    std::vector<std::pair<std::string, CopyLaw>> laws;
    laws.emplace_back("css", css_law(p));
    laws.emplace_back("acss-ols", acss_ols_law(p, draw_perturbation(rng, 5, 0.7)));
    const Vec xn = perturb_observation(p.x, 0.7, rng).x;
    laws.emplace_back("acss-gaussian", acss_gaussian_law(p, fit_iht(xn, p.z, 3), xn, 0.7));
    bool ok = true;
    std::ostringstream os;
    os.precision(3);
    os << "KS vs analytic normal (1% critical " << crit << "):";
    for (auto& [name, law] : laws) {
        const double mu = a.dot(law.mean.head(law.out_dim())), sd = std::sqrt(law.quad(a));
        std::vector<double> u;
        for (int i = 0; i < 10000; ++i) {
            const double t = a.dot(law.sample(rng).head(p.n()));
            u.push_back(0.5 * std::erfc(-(t - mu) / (sd * std::sqrt(2.0))));
        }
        std::sort(u.begin(), u.end());
        double D = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            D = std::max({D, (i + 1) / 1e4 - u[i], u[i] - i / 1e4});
        ok = ok && D < crit;
        os << ' ' << name << '=' << D;
    }
    return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"behrens-fisher validity", c1_bf_validity},
        {"behrens-fisher robustness ordering", c2_bf_ordering},
        {"ci-test validity/failure pattern", c3_ci_pattern},
        {"sigma-sweep monotone type-I", c4_sigma_sweep},
        {"exact-exchangeability super-uniformity", c5_exchangeability},
        {"weighted p-value algebra", c6_weight_algebra},
        {"closed-form sampler laws", c7_sampler_laws},
        {"css sufficiency invariant", c8_css_sufficiency},
        {"coupling bound", c9_coupling},
        {"solver oracles", c10_solvers},
        {"density determinant", c11_logdet},
        {"ytilde program", c12_ytilde},
        {"resampling-free consistency", c13_resampling_free},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str(), sec);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
