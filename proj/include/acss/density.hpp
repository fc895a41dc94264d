#pragma once

#include "acss/estimator.hpp"

#include <optional>
#include <vector>

namespace acss {

enum class StatVariant { Penalized, Mtle, GaussianAdditive, GaussianAcss };

/// What the copies condition on. For the Gaussian closed-form variants the
/// density is the sampling law itself.
struct ConditioningStat {
    StatVariant variant = StatVariant::Penalized;
    Vec theta_hat;
    Vec g_hat;  // grad L(theta_hat; X) + grad R + sigma w (zero-free form kept for penalized fits)
    double sigma = 1.0;
    bool hessian_det = true;  // false: the weight without the determinant factor

    // mtle
    std::vector<Index> kept;  // retained pool points, ascending
    Index h = 0;
    Vec x_fixed;              // observed data; rows outside J stay at these values

    // gaussian closed forms: copy law N(mean, var * I)
    Vec mean;
    double var = 0.0;
};

ConditioningStat make_penalized_stat(const FitResult& fit, double sigma);
ConditioningStat make_mtle_stat(const FitResult& fit, double sigma, Index h, const Vec& x_observed);

// Positions of J (kept pool points and every non-pool row), ascending.
std::vector<Index> trim_positions(const ModelSpec& model, const std::vector<Index>& kept);
Vec embed_sub(const ModelSpec& model, const ConditioningStat& stat, const Vec& x_sub);
Vec extract_sub(const ModelSpec& model, const ConditioningStat& stat, const Vec& x_full);

// log det of the restricted second-order matrix at (theta_hat, x); nullopt when it
// is not positive definite or an active group sits on a knot. Empty S gives 0.
std::optional<double> f_pen_logdet(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                                   const PenaltySpec& penalty, const GroupStructure& groups);

// Is theta_hat an SSOSP at (x, implied w)? For mtle, x is the full vector.
bool membership_indicator(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                          const PenaltySpec& penalty, const GroupStructure& groups, const SolverOptions& opts = {});

// Implied perturbation w(x) = (g_hat - grad L(theta_hat; x) - grad R) / sigma.
Vec implied_w(const ModelSpec& model, const Vec& x, const ConditioningStat& stat, const PenaltySpec& penalty,
              const GroupStructure& groups);

// log of f(x; theta_hat) exp(-d ||g_hat - grad L||^2 / (2 sigma^2)) F_pen 1{x in X}; -inf when excluded.
double log_unnorm_density(const ModelSpec& model, const Vec& x, const ConditioningStat& stat,
                          const PenaltySpec& penalty, const GroupStructure& groups, const SolverOptions& opts = {});

// Trimmed version on the sub-vector x_J (length |J|); rows outside J held at stat.x_fixed.
double log_unnorm_density_mtle(const ModelSpec& model, const Vec& x_sub, const ConditioningStat& stat,
                               const SolverOptions& opts = {});

}  // namespace acss
