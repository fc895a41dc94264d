#pragma once

#include "acss/model.hpp"
#include "acss/penalty.hpp"

#include <optional>
#include <string>
#include <vector>

namespace acss {

/// W ~ N(0, I_d / d), scaled by sigma inside every objective.
struct Perturbation {
    Vec w;
    double sigma = 0.0;

    Vec term() const { return sigma * w; }
};

Perturbation draw_perturbation(Rng& rng, Index d, double sigma);

struct SolverOptions {
    int max_iter = 50000;
    double kkt_tol = 1e-8;
    double eig_tol = 1e-8;
    double step_init = 1.0;
    int restarts = 10;           // MTLE random starts
    double active_tol = 1e-8;
    bool newton_polish = true;
    std::uint64_t seed = 0;      // MTLE start subsets
};

struct FitResult {
    Vec theta_hat;
    Vec g_hat;
    ActiveSets active;
    bool ssosp = false;
    double objective = 0.0;
    int iterations = 0;
    double grad_residual = 0.0;
    std::optional<std::vector<Index>> trim_set;  // MTLE only, ascending

    Vec perturb_term;        // sigma * w used by the fit
    bool converged = false;
    std::string diagnostic;  // first failed clause when !ssosp
};

// Penalized objective L(theta; x) + R(theta) + sigma w^T theta + sum_j rho_j(||theta_Gj||),
// +inf outside the model domain.
double penalized_objective(const ModelSpec& model, const Vec& x, const Vec& theta, const Vec& perturb_term,
                           const PenaltySpec& penalty, const GroupStructure& groups, const ObsMask& mask = {});

// grad L + grad R + sigma w
Vec smooth_gradient(const ModelSpec& model, const Vec& x, const Vec& theta, const Vec& perturb_term,
                    const PenaltySpec& penalty, const GroupStructure& groups, const ObsMask& mask = {});

// Norm of the first-order residual: on active groups grad + rho'(r) theta/r, on
// inactive groups the excess of ||grad_G|| over rho'(0).
double kkt_residual(const Vec& grad, const Vec& theta, const PenaltySpec& penalty, const GroupStructure& groups,
                    double active_tol = 1e-8);

FitResult fit_penalized(const ModelSpec& model, const Sample& data, const Perturbation& pert,
                        const PenaltySpec& penalty, const GroupStructure& groups, const SolverOptions& opts = {});

// Same, on a subset of observations and from a given start.
FitResult fit_penalized(const ModelSpec& model, const Vec& x, const Perturbation& pert, const PenaltySpec& penalty,
                        const GroupStructure& groups, const SolverOptions& opts, const ObsMask& mask,
                        std::optional<Vec> start);

// (Z*^T Z*)^{-1} (Z*^T X* + sigma W)
FitResult fit_ols_perturbed(const Vec& x_star, const Mat& z_star, const Perturbation& pert);

// Top-h observations of the trimming pool at theta by log density; ties by
// lower index. Returned ascending.
std::vector<Index> select_trim(const ModelSpec& model, const Vec& x, const Vec& theta, Index h);

// Trim set J as an observation mask: kept pool points plus all non-pool rows.
ObsMask trim_mask(const ModelSpec& model, const std::vector<Index>& kept);

FitResult fit_mtle(const ModelSpec& model, const Sample& data, const Perturbation& pert, Index h,
                   const SolverOptions& opts = {});

struct SsospReport {
    bool ok = false;
    std::string reason;
};

SsospReport ssosp_report_penalized(const ModelSpec& model, const Vec& x, const FitResult& fit,
                                   const PenaltySpec& penalty, const GroupStructure& groups,
                                   const SolverOptions& opts = {});
bool check_ssosp_penalized(const ModelSpec& model, const Sample& data, const FitResult& fit,
                           const PenaltySpec& penalty, const GroupStructure& groups, const SolverOptions& opts = {});

SsospReport ssosp_report_mtle(const ModelSpec& model, const Vec& x, const FitResult& fit, Index h,
                              const SolverOptions& opts = {});
bool check_ssosp_mtle(const ModelSpec& model, const Sample& data, const FitResult& fit, Index h,
                      const SolverOptions& opts = {});

// Second-order matrix of the penalized objective restricted to S(theta):
// (hess L + hess R + penalty curvature)_S. Throws KnotError on an active knot.
Mat restricted_second_order(const ModelSpec& model, const Vec& x, const Vec& theta, const PenaltySpec& penalty,
                            const GroupStructure& groups, const ActiveSets& active, const ObsMask& mask = {});

// grad L(theta_hat; x) + grad R + sigma w
Vec gradient_statistic(const ModelSpec& model, const Sample& data, const FitResult& fit, const Perturbation& pert,
                       const PenaltySpec& penalty, const GroupStructure& groups);
Vec gradient_statistic(const ModelSpec& model, const Sample& data, const FitResult& fit, const Perturbation& pert);

// Gaussian-additive variant: (B theta_hat - x) / nu^2 + sigma w, with w of length n.
Vec gradient_statistic_additive(const Mat& B, const Vec& x, const Vec& theta_hat, double nu, const Perturbation& pert);

// Gaussian-additive estimator: argmin ||(x - sigma nu^2 w) - B theta||^2/(2 nu^2) + R + sum rho,
// with w of length n.
FitResult fit_additive(const Mat& B, const Vec& x, double nu, const Perturbation& pert, const PenaltySpec& penalty,
                       const GroupStructure& groups, const SolverOptions& opts = {});

}  // namespace acss
