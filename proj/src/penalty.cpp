#include "acss/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace acss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// rho'(r) = alpha + beta * r on [lo, hi].
struct Piece {
    double lo, hi, alpha, beta;
};

std::vector<Piece> pieces(const GroupPenalty& p) {
    const double l = p.lambda;
    switch (p.kind) {
    case PenaltyKind::None:
    case PenaltyKind::Ridge: return {{0.0, kInf, 0.0, 0.0}};
    case PenaltyKind::L1:
    case PenaltyKind::GroupL2: return {{0.0, kInf, l, 0.0}};
    case PenaltyKind::Scad: {
        const double a = p.shape;
        return {{0.0, l, l, 0.0}, {l, a * l, a * l / (a - 1.0), -1.0 / (a - 1.0)}, {a * l, kInf, 0.0, 0.0}};
    }
    case PenaltyKind::Mcp: {
        const double g = p.shape;
        return {{0.0, g * l, l, -1.0 / g}, {g * l, kInf, 0.0, 0.0}};
    }
    }
    return {};
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

GroupPenalty GroupPenalty::ridge(double tau) {
    GroupPenalty p{PenaltyKind::Ridge, 0.0, 0.0, tau};
    p.validate();
    return p;
}
GroupPenalty GroupPenalty::l1(double lambda) {
    GroupPenalty p{PenaltyKind::L1, lambda, 0.0, 0.0};
    p.validate();
    return p;
}
GroupPenalty GroupPenalty::group_l2(double lambda) {
    GroupPenalty p{PenaltyKind::GroupL2, lambda, 0.0, 0.0};
    p.validate();
    return p;
}
GroupPenalty GroupPenalty::scad(double lambda, double a) {
    GroupPenalty p{PenaltyKind::Scad, lambda, a, 0.0};
    p.validate();
    return p;
}
GroupPenalty GroupPenalty::mcp(double lambda, double gamma) {
    GroupPenalty p{PenaltyKind::Mcp, lambda, gamma, 0.0};
    p.validate();
    return p;
}

void GroupPenalty::validate() const {
    switch (kind) {
    case PenaltyKind::None: return;
    case PenaltyKind::Ridge:
        if (!(tau > 0.0)) throw DomainError("ridge: tau must be positive");
        return;
    case PenaltyKind::L1:
    case PenaltyKind::GroupL2:
        if (!(lambda > 0.0)) throw DomainError("penalty: lambda must be positive");
        return;
    case PenaltyKind::Scad:
        if (!(lambda > 0.0) || !(shape > 2.0)) throw DomainError("scad: need lambda > 0 and a > 2");
        return;
    case PenaltyKind::Mcp:
        if (!(lambda > 0.0) || !(shape > 1.0)) throw DomainError("mcp: need lambda > 0 and gamma > 1");
        return;
    }
}

GroupStructure::GroupStructure(std::vector<std::vector<Index>> groups, Index dim)
    : groups_(std::move(groups)), dim_(dim) {
    std::vector<int> seen(static_cast<std::size_t>(std::max<Index>(dim, 0)), 0);
    for (const auto& g : groups_) {
        if (g.empty()) throw DomainError("group structure: empty group");
        for (Index i : g) {
            if (i < 0 || i >= dim) throw DomainError("group structure: index out of range");
            if (seen[static_cast<std::size_t>(i)]++) throw DomainError("group structure: overlapping groups");
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw DomainError("group structure: groups do not cover every coordinate");
}

GroupStructure GroupStructure::singletons(Index dim) {
    std::vector<std::vector<Index>> g;
    for (Index i = 0; i < dim; ++i) g.push_back({i});
    return GroupStructure(std::move(g), dim);
}

GroupStructure GroupStructure::contiguous(Index dim, Index group_size) {
    if (group_size < 1) throw DomainError("group size must be positive");
    std::vector<std::vector<Index>> g;
    for (Index s = 0; s < dim; s += group_size) {
        std::vector<Index> block;
        for (Index i = s; i < std::min(dim, s + group_size); ++i) block.push_back(i);
        g.push_back(std::move(block));
    }
    return GroupStructure(std::move(g), dim);
}

Vec GroupStructure::gather(const Vec& theta, std::size_t j) const {
    const auto& g = groups_[j];
    Vec b(static_cast<Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) b[static_cast<Index>(k)] = theta[g[k]];
    return b;
}

void GroupStructure::scatter(const Vec& block, std::size_t j, Vec& theta) const {
    const auto& g = groups_[j];
    for (std::size_t k = 0; k < g.size(); ++k) theta[g[k]] = block[static_cast<Index>(k)];
}

double GroupStructure::group_norm(const Vec& theta, std::size_t j) const {
    double s = 0.0;
    for (Index i : groups_[j]) s += theta[i] * theta[i];
    return std::sqrt(s);
}

PenaltySpec PenaltySpec::uniform(std::size_t groups, GroupPenalty p) {
    p.validate();
    return PenaltySpec{std::vector<GroupPenalty>(groups, p)};
}

bool PenaltySpec::has_nonsmooth() const {
    return std::any_of(per_group.begin(), per_group.end(), [](const GroupPenalty& p) { return p.nonsmooth(); });
}

void PenaltySpec::validate(const GroupStructure& groups) const {
    if (per_group.size() != groups.size())
        throw DimensionError("penalty spec: one penalty per group required");
    for (const auto& p : per_group) p.validate();
}

double rho(const GroupPenalty& p, double t) {
    const double l = p.lambda;
    switch (p.kind) {
    case PenaltyKind::None:
    case PenaltyKind::Ridge: return 0.0;
    case PenaltyKind::L1:
    case PenaltyKind::GroupL2: return l * t;
    case PenaltyKind::Scad: {
        const double a = p.shape;
        if (t <= l) return l * t;
        if (t <= a * l) return (2.0 * a * l * t - t * t - l * l) / (2.0 * (a - 1.0));
        return 0.5 * (a + 1.0) * l * l;
    }
    case PenaltyKind::Mcp: {
        const double g = p.shape;
        if (t <= g * l) return l * t - t * t / (2.0 * g);
        return 0.5 * g * l * l;
    }
    }
    return 0.0;
}

double rho_prime(const GroupPenalty& p, double t) {
    if (t < 0.0) throw DomainError("rho': argument must be nonnegative");
    const double l = p.lambda;
    switch (p.kind) {
    case PenaltyKind::None:
    case PenaltyKind::Ridge: return 0.0;
    case PenaltyKind::L1:
    case PenaltyKind::GroupL2: return l;
    case PenaltyKind::Scad:
        if (t <= l) return l;
        return std::max(p.shape * l - t, 0.0) / (p.shape - 1.0);
    case PenaltyKind::Mcp: return std::max(l - t / p.shape, 0.0);
    }
    return 0.0;
}

bool at_knot(const GroupPenalty& p, double t) {
    switch (p.kind) {
    case PenaltyKind::Scad: return near(t, p.lambda) || near(t, p.shape * p.lambda);
    case PenaltyKind::Mcp: return near(t, p.shape * p.lambda);
    default: return false;
    }
}

double rho_second(const GroupPenalty& p, double t) {
    if (!(t > 0.0)) throw DomainError("rho'': argument must be positive");
    if (at_knot(p, t)) throw KnotError("rho'' undefined at a penalty knot");
    switch (p.kind) {
    case PenaltyKind::Scad: return (t > p.lambda && t < p.shape * p.lambda) ? -1.0 / (p.shape - 1.0) : 0.0;
    case PenaltyKind::Mcp: return t < p.shape * p.lambda ? -1.0 / p.shape : 0.0;
    default: return 0.0;
    }
}

double penalty_value(const PenaltySpec& spec, const GroupStructure& groups, const Vec& theta) {
    if (theta.size() != groups.dim()) throw DimensionError("penalty: parameter dimension mismatch");
    if (spec.per_group.size() != groups.size()) throw DimensionError("penalty: group count mismatch");
    double v = 0.0;
    for (std::size_t j = 0; j < groups.size(); ++j)
        if (spec.per_group[j].nonsmooth()) v += rho(spec.per_group[j], groups.group_norm(theta, j));
    return v;
}

double smooth_penalty_value(const PenaltySpec& spec, const GroupStructure& groups, const Vec& theta) {
    double v = 0.0;
    for (std::size_t j = 0; j < groups.size(); ++j)
        if (spec.per_group[j].kind == PenaltyKind::Ridge) {
            const double r = groups.group_norm(theta, j);
            v += spec.per_group[j].tau * r * r;
        }
    return v;
}

Vec smooth_penalty_gradient(const PenaltySpec& spec, const GroupStructure& groups, const Vec& theta) {
    Vec g = Vec::Zero(theta.size());
    for (std::size_t j = 0; j < groups.size(); ++j)
        if (spec.per_group[j].kind == PenaltyKind::Ridge)
            for (Index i : groups[j]) g[i] = 2.0 * spec.per_group[j].tau * theta[i];
    return g;
}

Mat smooth_penalty_hessian(const PenaltySpec& spec, const GroupStructure& groups) {
    Mat H = Mat::Zero(groups.dim(), groups.dim());
    for (std::size_t j = 0; j < groups.size(); ++j)
        if (spec.per_group[j].kind == PenaltyKind::Ridge)
            for (Index i : groups[j]) H(i, i) = 2.0 * spec.per_group[j].tau;
    return H;
}

double prox_radius(const GroupPenalty& p, double z, double step) {
    if (!p.nonsmooth()) return z;
    auto objective = [&](double r) { return 0.5 * (r - z) * (r - z) + step * rho(p, r); };
    std::vector<double> cand{0.0};
    for (const auto& pc : pieces(p)) {
        cand.push_back(pc.lo);
        if (std::isfinite(pc.hi)) cand.push_back(pc.hi);
        const double curv = 1.0 + step * pc.beta;
        if (curv > 0.0) {
            double r = (z - step * pc.alpha) / curv;
            cand.push_back(std::clamp(r, pc.lo, pc.hi));
        }
    }
    std::sort(cand.begin(), cand.end());
    double best_r = 0.0, best = objective(0.0);
    for (double r : cand) {
        const double f = objective(r);
        const double tie = 1e-15 * (1.0 + std::abs(best));
        if (f < best - tie || (std::abs(f - best) <= tie && r > best_r)) {
            best = f;
            best_r = r;
        }
    }
    return best_r;
}

Vec prox(const GroupPenalty& p, const Vec& v, double step) {
    if (!p.nonsmooth()) return v;
    const double z = v.norm();
    if (z == 0.0) return Vec::Zero(v.size());
    const double r = prox_radius(p, z, step);
    if (r == 0.0) return Vec::Zero(v.size());
    return v * (r / z);
}

ActiveSets active_sets(const GroupStructure& groups, const Vec& theta, double tol) {
    if (theta.size() != groups.dim()) throw DimensionError("active sets: dimension mismatch");
    ActiveSets a;
    for (std::size_t j = 0; j < groups.size(); ++j)
        if (groups.group_norm(theta, j) > tol) {
            a.groups.push_back(j);
            a.coords.insert(a.coords.end(), groups[j].begin(), groups[j].end());
        }
    std::sort(a.coords.begin(), a.coords.end());
    return a;
}

Mat penalty_curvature(const PenaltySpec& spec, const GroupStructure& groups, const Vec& theta,
                      const ActiveSets& active) {
    const Index d = groups.dim();
    Mat C = Mat::Zero(d, d);
    for (std::size_t j : active.groups) {
        const auto& p = spec.per_group[j];
        if (!p.nonsmooth()) continue;
        const Vec b = groups.gather(theta, j);
        const double r = b.norm();
        const Vec u = b / r;
        const Index k = b.size();
        const Mat block = rho_prime(p, r) / r * (Mat::Identity(k, k) - u * u.transpose()) +
                          rho_second(p, r) * (u * u.transpose());
        const auto& g = groups[j];
        for (Index a = 0; a < k; ++a)
            for (Index c = 0; c < k; ++c) C(g[static_cast<std::size_t>(a)], g[static_cast<std::size_t>(c)]) = block(a, c);
    }
    return C;
}

}  // namespace acss
