#include "acss/model.hpp"
#include "acss/rng.hpp"

#include <cmath>
#include <numbers>

namespace acss {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

bool selected(const ObsMask& mask, Index i) {
    return mask.empty() || mask[static_cast<std::size_t>(i)];
}

void check_mask(const ModelSpec& model, const ObsMask& mask) {
    if (!mask.empty() && static_cast<Index>(mask.size()) != model.dim_obs())
        throw DimensionError("observation mask length does not match the model");
}

bool all_selected(const ObsMask& mask) {
    for (bool b : mask)
        if (!b) return false;
    return true;
}

struct GroupSums {
    double count[2] = {0.0, 0.0};
    double resid[2] = {0.0, 0.0};  // sum (x - mu)
    double sq[2] = {0.0, 0.0};     // sum (x - mu)^2
};

GroupSums bf_sums(const ModelSpec& model, double mu, const Vec& x, const ObsMask& mask) {
    GroupSums s;
    for (Index i = 0; i < model.dim_obs(); ++i) {
        if (!selected(mask, i)) continue;
        const int k = i < model.n0() ? 0 : 1;
        const double r = x[i] - mu;
        s.count[k] += 1.0;
        s.resid[k] += r;
        s.sq[k] += r * r;
    }
    return s;
}

}  // namespace

ModelSpec ModelSpec::gaussian_linear(Mat design, double noise_sd) {
    if (design.rows() < 1 || design.cols() < 1)
        throw DomainError("gaussian-linear: design must be nonempty");
    if (!(noise_sd > 0.0) || !std::isfinite(noise_sd))
        throw DomainError("gaussian-linear: noise sd must be positive");
    ModelSpec m;
    m.kind_ = ModelKind::GaussianLinear;
    m.n_ = design.rows();
    m.d_ = design.cols();
    m.design_ = std::move(design);
    m.nu_ = noise_sd;
    return m;
}

ModelSpec ModelSpec::behrens_fisher(Index n0, Index n1) {
    if (n0 < 1 || n1 < 1) throw DomainError("behrens-fisher: group sizes must be positive");
    ModelSpec m;
    m.kind_ = ModelKind::BehrensFisher;
    m.d_ = 3;
    m.n0_ = n0;
    m.n1_ = n1;
    m.n_ = n0 + n1;
    return m;
}

ModelSpec ModelSpec::custom(Index dim_param, Index dim_obs, CustomCallbacks callbacks) {
    if (dim_param < 1 || dim_obs < 1) throw DomainError("custom model: dimensions must be positive");
    if (!callbacks.neg_loglik || !callbacks.score || !callbacks.hessian)
        throw DomainError("custom model: density, score and hessian callbacks are required");
    ModelSpec m;
    m.kind_ = ModelKind::Custom;
    m.d_ = dim_param;
    m.n_ = dim_obs;
    m.custom_ = std::move(callbacks);
    return m;
}

bool ModelSpec::in_domain(const Vec& theta) const {
    if (theta.size() != d_ || !theta.allFinite()) return false;
    switch (kind_) {
    case ModelKind::GaussianLinear: return true;
    case ModelKind::BehrensFisher: return theta[1] > 0.0 && theta[2] > 0.0;
    case ModelKind::Custom: return !custom_.in_domain || custom_.in_domain(theta);
    }
    return false;
}

void ModelSpec::require_domain(const Vec& theta) const {
    if (theta.size() != d_) throw DimensionError("parameter has the wrong dimension");
    if (!in_domain(theta)) throw DomainError("parameter outside the model domain");
}

void ModelSpec::require_obs(const Vec& x) const {
    if (x.size() != n_) throw DimensionError("observation vector has the wrong length");
}

double neg_loglik(const ModelSpec& model, const Vec& theta, const Vec& x, const ObsMask& mask) {
    model.require_domain(theta);
    model.require_obs(x);
    check_mask(model, mask);
    switch (model.kind()) {
    case ModelKind::GaussianLinear: {
        const double var = model.noise_sd() * model.noise_sd();
        const Vec r = x - model.design() * theta;
        double q = 0.0, cnt = 0.0;
        for (Index i = 0; i < r.size(); ++i)
            if (selected(mask, i)) {
                q += r[i] * r[i];
                cnt += 1.0;
            }
        return 0.5 * cnt * (kLog2Pi + std::log(var)) + 0.5 * q / var;
    }
    case ModelKind::BehrensFisher: {
        const auto s = bf_sums(model, theta[0], x, mask);
        double v = 0.0;
        for (int k = 0; k < 2; ++k) {
            const double g = theta[1 + k];
            v += 0.5 * s.count[k] * (kLog2Pi + std::log(g)) + 0.5 * s.sq[k] / g;
        }
        return v;
    }
    case ModelKind::Custom:
        if (!all_selected(mask)) throw DomainError("custom model: subset likelihood unavailable");
        return model.callbacks().neg_loglik(theta, x);
    }
    return 0.0;
}

Vec score(const ModelSpec& model, const Vec& theta, const Vec& x, const ObsMask& mask) {
    model.require_domain(theta);
    model.require_obs(x);
    check_mask(model, mask);
    switch (model.kind()) {
    case ModelKind::GaussianLinear: {
        const double var = model.noise_sd() * model.noise_sd();
        Vec r = model.design() * theta - x;
        if (!mask.empty())
            for (Index i = 0; i < r.size(); ++i)
                if (!mask[static_cast<std::size_t>(i)]) r[i] = 0.0;
        return model.design().transpose() * r / var;
    }
    case ModelKind::BehrensFisher: {
        const auto s = bf_sums(model, theta[0], x, mask);
        Vec g(3);
        g[0] = -s.resid[0] / theta[1] - s.resid[1] / theta[2];
        for (int k = 0; k < 2; ++k) {
            const double v = theta[1 + k];
            g[1 + k] = 0.5 * s.count[k] / v - 0.5 * s.sq[k] / (v * v);
        }
        return g;
    }
    case ModelKind::Custom:
        if (!all_selected(mask)) throw DomainError("custom model: subset likelihood unavailable");
        return model.callbacks().score(theta, x);
    }
    return {};
}

Mat hessian(const ModelSpec& model, const Vec& theta, const Vec& x, const ObsMask& mask) {
    model.require_domain(theta);
    model.require_obs(x);
    check_mask(model, mask);
    switch (model.kind()) {
    case ModelKind::GaussianLinear: {
        const double var = model.noise_sd() * model.noise_sd();
        const Mat& Z = model.design();
        if (mask.empty()) return Z.transpose() * Z / var;
        Mat H = Mat::Zero(Z.cols(), Z.cols());
        for (Index i = 0; i < Z.rows(); ++i)
            if (mask[static_cast<std::size_t>(i)])
                H.selfadjointView<Eigen::Lower>().rankUpdate(Z.row(i).transpose());
        H = H.selfadjointView<Eigen::Lower>();
        return H / var;
    }
    case ModelKind::BehrensFisher: {
        const auto s = bf_sums(model, theta[0], x, mask);
        Mat H = Mat::Zero(3, 3);
        H(0, 0) = s.count[0] / theta[1] + s.count[1] / theta[2];
        for (int k = 0; k < 2; ++k) {
            const double v = theta[1 + k];
            H(0, 1 + k) = H(1 + k, 0) = s.resid[k] / (v * v);
            H(1 + k, 1 + k) = -0.5 * s.count[k] / (v * v) + s.sq[k] / (v * v * v);
        }
        return H;
    }
    case ModelKind::Custom:
        if (!all_selected(mask)) throw DomainError("custom model: subset likelihood unavailable");
        return model.callbacks().hessian(theta, x);
    }
    return {};
}

double neg_loglik(const ModelSpec& model, const Vec& theta, const Sample& data) {
    return neg_loglik(model, theta, data.x, ObsMask{});
}

Vec score(const ModelSpec& model, const Vec& theta, const Sample& data) {
    return score(model, theta, data.x, ObsMask{});
}

Mat hessian(const ModelSpec& model, const Vec& theta, const Sample& data) {
    return hessian(model, theta, data.x, ObsMask{});
}

double neg_loglik_constant(const ModelSpec& model, const Vec& theta, const ObsMask& mask) {
    model.require_domain(theta);
    check_mask(model, mask);
    double c = 0.0;
    for (Index i = 0; i < model.dim_obs(); ++i) {
        if (!selected(mask, i)) continue;
        switch (model.kind()) {
        case ModelKind::GaussianLinear:
            c += 0.5 * (kLog2Pi + 2.0 * std::log(model.noise_sd()));
            break;
        case ModelKind::BehrensFisher:
            c += 0.5 * (kLog2Pi + std::log(theta[i < model.n0() ? 1 : 2]));
            break;
        case ModelKind::Custom:
            return 0.0;
        }
    }
    return c;
}

double obs_log_density(const ModelSpec& model, const Vec& theta, const Vec& x, Index i) {
    switch (model.kind()) {
    case ModelKind::GaussianLinear: {
        const double var = model.noise_sd() * model.noise_sd();
        const double r = x[i] - model.design().row(i).dot(theta);
        return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * r * r / var;
    }
    case ModelKind::BehrensFisher: {
        const double var = theta[i < model.n0() ? 1 : 2];
        const double r = x[i] - theta[0];
        return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * r * r / var;
    }
    case ModelKind::Custom:
        break;
    }
    throw DomainError("custom model: per-observation density unavailable");
}

std::vector<Index> trim_pool(const ModelSpec& model) {
    std::vector<Index> pool;
    const Index m = model.kind() == ModelKind::BehrensFisher ? model.n0() : model.dim_obs();
    if (model.kind() == ModelKind::Custom) throw DomainError("custom model: trimming unavailable");
    for (Index i = 0; i < m; ++i) pool.push_back(i);
    return pool;
}

Vec default_start(const ModelSpec& model, const Vec& x) {
    if (model.kind() != ModelKind::BehrensFisher) return Vec::Zero(model.dim_param());
    const Vec g0 = x.head(model.n0());
    const Vec g1 = x.tail(model.n1());
    const double mu = x.mean();
    Vec t(3);
    t[0] = mu;
    t[1] = std::max((g0.array() - mu).square().mean(), 1e-3);
    t[2] = std::max((g1.array() - mu).square().mean(), 1e-3);
    return t;
}

Sample sample_data(const ModelSpec& model, const Vec& theta, Rng& rng) {
    model.require_domain(theta);
    Sample s;
    switch (model.kind()) {
    case ModelKind::GaussianLinear:
        s.x = model.design() * theta + model.noise_sd() * standard_normal(model.dim_obs(), rng);
        break;
    case ModelKind::BehrensFisher: {
        s.x = standard_normal(model.dim_obs(), rng);
        for (Index i = 0; i < model.dim_obs(); ++i)
            s.x[i] = theta[0] + std::sqrt(theta[i < model.n0() ? 1 : 2]) * s.x[i];
        break;
    }
    case ModelKind::Custom:
        if (!model.callbacks().sample) throw DomainError("custom model: no forward sampler supplied");
        s.x = model.callbacks().sample(theta, rng);
        model.require_obs(s.x);
        break;
    }
    return s;
}

}  // namespace acss
