#pragma once

#include "acss/density.hpp"

#include <functional>
#include <string>
#include <vector>

namespace acss {

enum class Proposal { IidModel, GaussianAdditive, GaussianAcss, SphereVmf, Degenerate };

struct CopySet {
    std::vector<Vec> copies;
    std::vector<double> weights;      // M + 1, observed data first; max weight is 1
    std::vector<double> log_weights;  // unnormalized, -inf where excluded
    Proposal proposal = Proposal::Degenerate;

    std::size_t size() const { return copies.size(); }
};

struct PValueReport {
    double pval = 1.0;
    double t_obs = 0.0;
    std::vector<double> t_copies;
    std::string method;
    bool weighted = false;
    bool ssosp = false;
};

// X_noise = X + sigma U, U ~ N(0, I_n).
Sample perturb_observation(const Vec& x, double sigma, Rng& rng);

// N(B theta - (1 + n/(sigma^2 nu^2))^{-1} (n/sigma^2) g, nu^2 (1 + n/(sigma^2 nu^2))^{-1} I).
CopySet sample_copies_gaussian_additive(const Mat& B, const FitResult& fit, double nu, double sigma, int M, Rng& rng);
ConditioningStat gaussian_additive_law(const Mat& B, const FitResult& fit, double nu, double sigma);

// N(s mu_hat + (1-s) x_noise, s nu^2 I) with s = sigma^2 / (sigma^2 + nu^2).
CopySet sample_copies_gaussian_acss(const Vec& mu_hat, const Vec& x_noise, double nu, double sigma, int M, Rng& rng);
ConditioningStat gaussian_acss_law(const Vec& mu_hat, const Vec& x_noise, double nu, double sigma);

// Behrens-Fisher proposal: each group (for mtle, the kept part of group 0) is redrawn
// from N(mu_hat 1, gamma_k I) conditioned on its sum of squares, a vMF law scaled
// to the sphere. Weighted by the target density over the proposal density.
CopySet sample_copies_sphere(const ModelSpec& model, const ConditioningStat& stat, const Vec& x, int M, Rng& rng,
                             const SolverOptions& opts = {});

// Sphere proposal's log density (common normalizers dropped) at x.
double sphere_log_q(const ModelSpec& model, const ConditioningStat& stat, const Vec& x);

// log target - log q; -inf where the indicator fails. Raises when q vanishes on
// a point of positive target density.
double log_importance_weight(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                             const PenaltySpec& penalty, const GroupStructure& groups, double log_q,
                             const SolverOptions& opts = {});
double importance_weight(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                         const PenaltySpec& penalty, const GroupStructure& groups, double log_q,
                         const SolverOptions& opts = {});

// Rescale so the largest weight is 1 (all zeros if every entry is -inf).
std::vector<double> normalize_log_weights(const std::vector<double>& log_w);

double pval_unweighted(double t_obs, const std::vector<double>& t_copies);
// weights: observed first, then one per copy.
double pval_weighted(double t_obs, const std::vector<double>& t_copies, const std::vector<double>& weights);

using Statistic = std::function<double(const Vec& x)>;

enum class EstimatorKind { Penalized, Mtle, Fixed };

struct AcssConfig {
    EstimatorKind estimator = EstimatorKind::Penalized;
    PenaltySpec penalty;
    std::optional<GroupStructure> groups;  // default: singletons
    double sigma = 1.0;
    int M = 200;
    Proposal proposal = Proposal::IidModel;
    Statistic statistic;
    bool weighted = true;
    bool hessian_det = true;
    Index h = 0;          // mtle
    Vec fixed_theta;      // EstimatorKind::Fixed
    SolverOptions solver;
    std::uint64_t seed = 0;
    std::string method = "acss";
};

// Perturb, fit, and either fall back to the degenerate copy set (p-value 1) or
// sample copies, weight them, and compute the p-value.
PValueReport run_acss(const ModelSpec& model, const Sample& data, const AcssConfig& cfg);

}  // namespace acss
