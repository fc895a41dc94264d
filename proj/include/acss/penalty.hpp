#pragma once

#include "acss/types.hpp"

#include <vector>

namespace acss {

enum class PenaltyKind { None, Ridge, L1, GroupL2, Scad, Mcp };

/// Penalty rho_j applied to the Euclidean norm of one group.
///
/// SCAD:  rho'(t) = lambda                             for t <= lambda,
///                = max(a lambda - t, 0) / (a - 1)      for t > lambda.
/// MCP:   rho'(t) = max(lambda - t / gamma, 0).
/// Ridge is tau * ||theta_G||^2 and belongs to the smooth part of the objective.
struct GroupPenalty {
    PenaltyKind kind = PenaltyKind::None;
    double lambda = 0.0;  // l1, group-l2, scad, mcp
    double shape = 0.0;   // scad a (> 2), mcp gamma (> 1)
    double tau = 0.0;     // ridge

    static GroupPenalty none() { return {}; }
    static GroupPenalty ridge(double tau);
    static GroupPenalty l1(double lambda);
    static GroupPenalty group_l2(double lambda);
    static GroupPenalty scad(double lambda, double a = 3.7);
    static GroupPenalty mcp(double lambda, double gamma = 3.0);

    bool nonsmooth() const {
        return kind == PenaltyKind::L1 || kind == PenaltyKind::GroupL2 ||
               kind == PenaltyKind::Scad || kind == PenaltyKind::Mcp;
    }
    void validate() const;
};

/// Ordered partition G_1..G_J of {0..d-1}.
class GroupStructure {
public:
    explicit GroupStructure(std::vector<std::vector<Index>> groups, Index dim);

    static GroupStructure singletons(Index dim);
    static GroupStructure contiguous(Index dim, Index group_size);

    Index dim() const { return dim_; }
    std::size_t size() const { return groups_.size(); }
    const std::vector<Index>& operator[](std::size_t j) const { return groups_[j]; }

    Vec gather(const Vec& theta, std::size_t j) const;
    void scatter(const Vec& block, std::size_t j, Vec& theta) const;
    double group_norm(const Vec& theta, std::size_t j) const;

private:
    std::vector<std::vector<Index>> groups_;
    Index dim_;
};

struct PenaltySpec {
    std::vector<GroupPenalty> per_group;

    static PenaltySpec uniform(std::size_t groups, GroupPenalty p);
    static PenaltySpec none(std::size_t groups) { return uniform(groups, GroupPenalty::none()); }

    bool has_nonsmooth() const;
    void validate(const GroupStructure& groups) const;
};

// Raised when rho'' is requested at a point where rho' has a kink.
class KnotError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ActiveSets {
    std::vector<std::size_t> groups;  // A: active group indices
    std::vector<Index> coords;        // S: union of their coordinates, ascending
};

double rho(const GroupPenalty& p, double t);
double rho_prime(const GroupPenalty& p, double t);
double rho_second(const GroupPenalty& p, double t);
// True when rho'' is undefined at t (t > 0).
bool at_knot(const GroupPenalty& p, double t);

// Sum over groups of rho_j(||theta_Gj||); ridge groups excluded.
double penalty_value(const PenaltySpec& spec, const GroupStructure& groups, const Vec& theta);

// R(theta) = sum over ridge groups of tau ||theta_G||^2, with derivatives.
double smooth_penalty_value(const PenaltySpec& spec, const GroupStructure& groups, const Vec& theta);
Vec smooth_penalty_gradient(const PenaltySpec& spec, const GroupStructure& groups, const Vec& theta);
Mat smooth_penalty_hessian(const PenaltySpec& spec, const GroupStructure& groups);

// argmin_u 1/2 ||u - v||^2 + step * rho(||u||). Global minimizer, ties to larger ||u||.
Vec prox(const GroupPenalty& p, const Vec& v, double step);
double prox_radius(const GroupPenalty& p, double radius, double step);

ActiveSets active_sets(const GroupStructure& groups, const Vec& theta, double tol = 1e-8);

// d x d matrix sum_{j in A} I_{d,j} s'_j I_{d,j}^T: the Jacobian of the
// active-group subgradient map theta_G -> rho'(||theta_G||) theta_G / ||theta_G||.
Mat penalty_curvature(const PenaltySpec& spec, const GroupStructure& groups, const Vec& theta,
                      const ActiveSets& active);

}  // namespace acss
