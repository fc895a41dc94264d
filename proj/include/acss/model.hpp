#pragma once

#include "acss/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace acss {

enum class ModelKind { GaussianLinear, BehrensFisher, Custom };

struct Sample {
    Vec x;
    std::optional<Vec> y;
    // Empty means every row is labeled.
    std::vector<bool> labeled;
};

// Selects the observations entering a (trimmed) likelihood. Empty = all.
using ObsMask = std::vector<bool>;

// Caller-supplied family, used for test oracles. Subset likelihoods are not
// available for custom models.
struct CustomCallbacks {
    std::function<double(const Vec& theta, const Vec& x)> neg_loglik;
    std::function<Vec(const Vec& theta, const Vec& x)> score;
    std::function<Mat(const Vec& theta, const Vec& x)> hessian;
    std::function<Vec(const Vec& theta, Rng& rng)> sample;
    std::function<bool(const Vec& theta)> in_domain;
};

/// A parametric family {P_theta} over R^n.
///
/// gaussian-linear: X ~ N(Z theta, nu^2 I_n).
/// behrens-fisher:  theta = (mu, var0, var1); the first n0 coordinates of X are
///                  i.i.d. N(mu, var0), the remaining n1 are i.i.d. N(mu, var1).
class ModelSpec {
public:
    static ModelSpec gaussian_linear(Mat design, double noise_sd);
    static ModelSpec behrens_fisher(Index n0, Index n1);
    static ModelSpec custom(Index dim_param, Index dim_obs, CustomCallbacks callbacks);

    ModelKind kind() const { return kind_; }
    Index dim_param() const { return d_; }
    Index dim_obs() const { return n_; }

    const Mat& design() const { return design_; }
    double noise_sd() const { return nu_; }
    Index n0() const { return n0_; }
    Index n1() const { return n1_; }
    const CustomCallbacks& callbacks() const { return custom_; }

    bool in_domain(const Vec& theta) const;
    void require_domain(const Vec& theta) const;
    void require_obs(const Vec& x) const;

private:
    ModelSpec() = default;

    ModelKind kind_ = ModelKind::Custom;
    Index d_ = 0;
    Index n_ = 0;
    Mat design_;
    double nu_ = 1.0;
    Index n0_ = 0;
    Index n1_ = 0;
    CustomCallbacks custom_;
};

// -log f(x; theta), additive 1/2 log(2 pi var) terms included.
double neg_loglik(const ModelSpec& model, const Vec& theta, const Sample& data);
// -grad_theta log f(x; theta)
Vec score(const ModelSpec& model, const Vec& theta, const Sample& data);
// -hess_theta log f(x; theta)
Mat hessian(const ModelSpec& model, const Vec& theta, const Sample& data);

Sample sample_data(const ModelSpec& model, const Vec& theta, Rng& rng);

// The same quantities restricted to the observations selected by `mask`.
double neg_loglik(const ModelSpec& model, const Vec& theta, const Vec& x, const ObsMask& mask);
Vec score(const ModelSpec& model, const Vec& theta, const Vec& x, const ObsMask& mask);
Mat hessian(const ModelSpec& model, const Vec& theta, const Vec& x, const ObsMask& mask);

// Sum of the 1/2 log(2 pi var) terms over the selected observations.
double neg_loglik_constant(const ModelSpec& model, const Vec& theta, const ObsMask& mask = {});

// log density of the single observation x_i (ranking key for trimming).
double obs_log_density(const ModelSpec& model, const Vec& theta, const Vec& x, Index i);

// Observations that trimming may discard: all rows for gaussian-linear, the
// first group for behrens-fisher.
std::vector<Index> trim_pool(const ModelSpec& model);

// Initial parameter inside the domain (zero, or moment estimates for behrens-fisher).
Vec default_start(const ModelSpec& model, const Vec& x);

}  // namespace acss
