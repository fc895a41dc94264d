#pragma once

#include "acss/sampler.hpp"

#include <optional>
#include <string>
#include <vector>

namespace acss {

/// Test of X independent of Y given Z, with X | Z ~ N(Z theta, nu^2 I).
/// Optional unlabeled rows (Xu, Zu) carry X and Z but no Y.
struct CrtProblem {
    Vec x;
    Vec y;
    Mat z;
    Vec xu;
    Mat zu;
    double noise_sd = 1.0;

    Index n() const { return x.size(); }
    Index m() const { return xu.size(); }
    Index d() const { return z.cols(); }
    Vec x_star() const;
    Mat z_star() const;
    void validate() const;
};

/// Gaussian law N(mean, Sigma) over the augmented rows; copies keep the first n_out rows.
struct CopyLaw {
    enum class Cov { ScaledIdentity, Projection, Explicit };

    Vec mean;
    Cov kind = Cov::ScaledIdentity;
    double scale = 1.0;  // ScaledIdentity: Sigma = scale I; Projection: Sigma = scale (I + U diag(D - 1) U^T)
    Mat U;               // orthonormal columns
    Vec D;
    Mat cov;             // Explicit
    Index n_out = -1;    // rows kept in a copy; -1 = all

    Index dim() const { return mean.size(); }
    Index out_dim() const { return n_out < 0 ? dim() : n_out; }
    // a^T Sigma a for a supported on the kept rows.
    double quad(const Vec& a) const;
    Vec sample(Rng& rng) const;
};

enum class Side { Upper, Lower, TwoSided };

// Copies span all n* rows, labeled rows first.
CopySet css_copies(const CrtProblem& p, int M, Rng& rng);
CopyLaw css_law(const CrtProblem& p);

// Perturbed-OLS copy law N(Z* theta_ols, nu^2 (I + (d/sigma^2) Z* Z*^T)^{-1}), sampled through the thin SVD.
CopyLaw acss_ols_law(const CrtProblem& p, const Perturbation& pert, Vec* theta_out = nullptr);
CopySet acss_crt_copies_ols(const CrtProblem& p, double sigma, int M, Rng& rng);

// ||X~*_css - X~*_acss||^2 under the shared (eps0, W) coupling.
double coupled_copy_gap(const CrtProblem& p, double sigma, Rng& rng);
// 4 sigma^2 (1/d) sum lambda_i^{-2} with lambda_i^2 the eigenvalues of Z*^T Z*.
double coupling_bound(const CrtProblem& p, double sigma);
// Exact E gap: nu^2 (sigma^2/d sum lambda^-2 + sum_i sigma^2/(sigma^2 + d lambda_i^2)).
double coupling_expectation(const CrtProblem& p, double sigma);

// N(s Z theta_hat + (1 - s) x_noise, s nu^2 I), s = sigma^2/(sigma^2 + nu^2).
CopyLaw acss_gaussian_law(const CrtProblem& p, const Vec& theta_hat, const Vec& x_noise, double sigma);
CopySet acss_crt_copies_gaussian(const CrtProblem& p, const Vec& theta_hat, const Vec& x_noise, double sigma, int M,
                                 Rng& rng);

// T = (Y - Z xi)^T (x - Z theta).
double distilled_statistic(const CrtProblem& p, const Vec& theta_hat, const Vec& xi_hat, const Vec& x);

// P(T~ >= t_obs) (or the lower/two-sided analogue) for T~ = a^T X~ + b, X~ ~ law.
double resampling_free_pvalue(const CopyLaw& law, const Vec& a, double b, double t_obs, Side side = Side::Upper);
// Distilled-statistic form: a = Y - Z xi_hat, b = -a^T Z theta_hat.
double resampling_free_pvalue(const CrtProblem& p, const CopyLaw& law, double t_obs, const Vec& theta_hat,
                              const Vec& xi_hat, Side side = Side::Upper);

struct YtildeOptions {
    int max_iter = 20000;
    double tol = 1e-10;  // relative duality gap
};

struct YtildeResult {
    Vec y;
    double objective = 0.0;
    double dual_gap = 0.0;
    int iterations = 0;
};

// argmax Y^T y s.t. ||Z^T y||_inf <= lambda, ||y|| <= 1. Certified by the
// square-root-lasso dual min_z ||Y - Z z|| + lambda ||z||_1.
YtildeResult solve_ytilde(const Vec& Y, const Mat& Z, double lambda, const YtildeOptions& opts = {});
double default_ytilde_lambda(const Mat& Z);

// ---- estimators for theta in the CRT ----

enum class CrtEstimator { Lasso, Scad, Mcp, GroupScad, Iht, Ols, Oracle };

struct CrtEstimatorSpec {
    CrtEstimator kind = CrtEstimator::Lasso;
    double lambda = 0.4;     // on the per-observation loss (1/2n)||x - Z theta||^2
    double shape = 0.0;      // scad a / mcp gamma; 0 = default
    Index group_size = 5;    // group-scad
    Index sparsity = 5;      // iht
};

// Penalized fit of x on Z with loss (1/2n)||x - Z theta||^2.
Vec fit_crt_estimator(const CrtEstimatorSpec& spec, const Vec& x, const Mat& z, const SolverOptions& opts = {});
Vec fit_lasso(const Vec& y, const Mat& z, double lambda, const SolverOptions& opts = {});
// Lasso selection, then least squares on the selected columns (support capped at n - 1).
Vec fit_relaxed_lasso(const Vec& y, const Mat& z, double lambda, const SolverOptions& opts = {});
// Best-subset approximation with `sparsity` nonzeros: normalized IHT from the marginal
// screen and from forward stepwise, then single swaps; least squares on the support.
Vec fit_iht(const Vec& x, const Mat& z, Index sparsity, int max_iter = 500);

enum class CopyMechanism { Css, AcssOls, AcssGaussian, Oracle };
enum class CrtStatistic { Distilled, YtildeInner };

struct CrtConfig {
    CopyMechanism mechanism = CopyMechanism::AcssGaussian;
    CrtEstimatorSpec estimator;
    double sigma = 0.7;
    CrtStatistic statistic = CrtStatistic::Distilled;
    double xi_lambda = 0.3;    // lasso for xi_hat
    bool xi_refit = false;     // least squares on the lasso support (relaxed lasso)
    double ytilde_lambda = 0;  // 0 = default_ytilde_lambda
    int M = 0;                 // 0 = resampling-free
    Side side = Side::Upper;
    Vec theta0;                // oracle mechanism, or the oracle estimator under AcssGaussian
    std::uint64_t seed = 0;
    SolverOptions solver;
    std::string method = "crt";
};

PValueReport run_crt(const CrtProblem& p, const CrtConfig& cfg);

}  // namespace acss
