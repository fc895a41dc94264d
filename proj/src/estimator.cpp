#include "acss/estimator.hpp"
#include "acss/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace acss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Groups carrying a nonsmooth penalty are active when their norm exceeds tol;
// unpenalized (none/ridge) groups always belong to S.
ActiveSets effective_active(const PenaltySpec& pen, const GroupStructure& groups, const Vec& theta, double tol) {
    ActiveSets a;
    for (std::size_t j = 0; j < groups.size(); ++j) {
        if (pen.per_group[j].nonsmooth() && groups.group_norm(theta, j) <= tol) continue;
        a.groups.push_back(j);
        a.coords.insert(a.coords.end(), groups[j].begin(), groups[j].end());
    }
    std::sort(a.coords.begin(), a.coords.end());
    return a;
}

Mat restrict(const Mat& M, const std::vector<Index>& s) {
    const Index k = static_cast<Index>(s.size());
    Mat R(k, k);
    for (Index a = 0; a < k; ++a)
        for (Index b = 0; b < k; ++b) R(a, b) = M(s[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(b)]);
    return R;
}

struct Problem {
    const ModelSpec& model;
    const Vec& x;
    const Vec& pt;
    const PenaltySpec& pen;
    const GroupStructure& groups;
    const ObsMask& mask;

    double smooth(const Vec& th) const {
        if (!model.in_domain(th)) return kInf;
        const double v = neg_loglik(model, th, x, mask) + smooth_penalty_value(pen, groups, th) + pt.dot(th);
        return std::isfinite(v) ? v : kInf;
    }
    Vec grad(const Vec& th) const {
        return score(model, th, x, mask) + smooth_penalty_gradient(pen, groups, th) + pt;
    }
    double total(const Vec& th) const {
        const double s = smooth(th);
        return std::isfinite(s) ? s + penalty_value(pen, groups, th) : kInf;
    }
    Vec prox(const Vec& v, double step) const {
        Vec out = v;
        for (std::size_t j = 0; j < groups.size(); ++j)
            if (pen.per_group[j].nonsmooth()) groups.scatter(acss::prox(pen.per_group[j], groups.gather(v, j), step), j, out);
        return out;
    }
    // Residual of the first-order equations on S only.
    Vec restricted_residual(const Vec& th, const ActiveSets& act) const {
        Vec g = grad(th);
        for (std::size_t j : act.groups) {
            const auto& p = pen.per_group[j];
            if (!p.nonsmooth()) continue;
            const double r = groups.group_norm(th, j);
            for (Index i : groups[j]) g[i] += rho_prime(p, r) * th[i] / r;
        }
        Vec out(static_cast<Index>(act.coords.size()));
        for (std::size_t k = 0; k < act.coords.size(); ++k) out[static_cast<Index>(k)] = g[act.coords[k]];
        return out;
    }
};

bool same_pattern(const PenaltySpec& pen, const GroupStructure& groups, const Vec& a, const Vec& b, double tol) {
    for (std::size_t j = 0; j < groups.size(); ++j)
        if (pen.per_group[j].nonsmooth() && ((groups.group_norm(a, j) > tol) != (groups.group_norm(b, j) > tol)))
            return false;
    return true;
}

// Damped Newton on the active set with the zero pattern frozen. Returns true if theta improved.
bool newton_polish(const Problem& P, Vec& theta, const SolverOptions& opts) {
    const ActiveSets act = effective_active(P.pen, P.groups, theta, opts.active_tol);
    if (act.coords.empty()) return false;
    Vec th = theta;
    double F = P.total(th);
    bool moved = false;
    for (int it = 0; it < 40; ++it) {
        const Vec r = P.restricted_residual(th, act);
        if (r.norm() <= 1e-3 * opts.kkt_tol) break;
        Mat M;
        try {
            M = restricted_second_order(P.model, P.x, th, P.pen, P.groups, act, P.mask);
        } catch (const KnotError&) {
            break;
        }
        Eigen::LLT<Mat> llt(M);
        if (llt.info() != Eigen::Success) break;
        const Vec delta = -llt.solve(r);
        if (!delta.allFinite()) break;
        double a = 1.0;
        bool ok = false;
        for (int bt = 0; bt < 40; ++bt, a *= 0.5) {
            Vec cand = th;
            for (std::size_t k = 0; k < act.coords.size(); ++k) cand[act.coords[k]] += a * delta[static_cast<Index>(k)];
            if (!same_pattern(P.pen, P.groups, cand, th, opts.active_tol)) continue;
            const double Fc = P.total(cand);
            if (!std::isfinite(Fc)) continue;
            if (Fc > F + 1e-9 * (1.0 + std::abs(F))) continue;
            if (Fc < F || P.restricted_residual(cand, act).norm() < r.norm()) {
                th = cand;
                F = std::min(F, Fc);
                ok = true;
                break;
            }
        }
        if (!ok) break;
        moved = true;
    }
    if (moved) theta = th;
    return moved;
}

std::vector<std::size_t> ordered_pool(const ModelSpec& model, const Vec& x, const Vec& theta, std::vector<double>& key) {
    const auto pool = trim_pool(model);
    key.resize(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k) key[k] = obs_log_density(model, theta, x, pool[k]);
    std::vector<std::size_t> ord(pool.size());
    for (std::size_t k = 0; k < ord.size(); ++k) ord[k] = k;
    std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
    return ord;
}

// Moment estimates over the selected observations (behrens-fisher starts).
Vec masked_moments(const ModelSpec& model, const Vec& x, const ObsMask& mask) {
    const Index n0 = model.n0();
    double sum = 0.0, cnt = 0.0;
    for (Index i = 0; i < x.size(); ++i)
        if (mask.empty() || mask[static_cast<std::size_t>(i)]) sum += x[i], cnt += 1.0;
    const double mu = sum / cnt;
    Vec th(3);
    th[0] = mu;
    for (int g = 0; g < 2; ++g) {
        double ss = 0.0, c = 0.0;
        for (Index i = g ? n0 : 0; i < (g ? x.size() : n0); ++i)
            if (mask.empty() || mask[static_cast<std::size_t>(i)]) ss += (x[i] - mu) * (x[i] - mu), c += 1.0;
        th[1 + g] = std::max(ss / c, 1e-6);
    }
    return th;
}

FitResult fit_core(const ModelSpec& model, const Vec& x, const Vec& pt, const PenaltySpec& pen,
                   const GroupStructure& groups, const SolverOptions& opts, const ObsMask& mask, std::optional<Vec> start) {
    const Index d = model.dim_param();
    model.require_obs(x);
    if (groups.dim() != d || pt.size() != d) throw DimensionError("fit: dimension mismatch");
    pen.validate(groups);
    const Problem P{model, x, pt, pen, groups, mask};

    Vec th = start ? *start : default_start(model, x);
    model.require_domain(th);
    // Perturbed objectives can be unbounded below (e.g. a negative sigma*w on a
    // variance coordinate); runaway iterates mean there is no stationary point nearby.
    const double start_norm = th.norm();
    const double runaway = 1e6 * (1.0 + start_norm);
    double drift_norm = start_norm, drift_resid = kInf;
    FitResult res;
    res.perturb_term = pt;

    double Lc = 1.0 / opts.step_init;
    Vec y = th;
    double t = 1.0;
    double F = P.total(th);
    int it = 0;
    double resid = kkt_residual(P.grad(th), th, pen, groups, opts.active_tol);
    bool diverged = false;

    if (opts.newton_polish && !pen.has_nonsmooth()) {
        newton_polish(P, th, opts);
        F = P.total(th);
        y = th;
        resid = kkt_residual(P.grad(th), th, pen, groups, opts.active_tol);
    }
    Vec last_polish_at = Vec::Constant(d, kInf);

    while (resid > opts.kkt_tol && it < opts.max_iter) {
        ++it;
        double fy = P.smooth(y);
        if (!std::isfinite(fy)) {
            y = th;
            t = 1.0;
            fy = P.smooth(y);
        }
        const Vec gy = P.grad(y);
        Vec nxt;
        double fn = kInf;
        bool found = false;
        for (int bt = 0; bt < 80; ++bt) {
            nxt = P.prox(y - gy / Lc, 1.0 / Lc);
            fn = P.smooth(nxt);
            const Vec dl = nxt - y;
            if (std::isfinite(fn) && fn <= fy + gy.dot(dl) + 0.5 * Lc * dl.squaredNorm() + 1e-13 * (1.0 + std::abs(fy))) {
                found = true;
                break;
            }
            Lc *= 2.0;
        }
        if (!found) {
            diverged = true;
            break;
        }
        const double Fn = fn + penalty_value(pen, groups, nxt);
        if (Fn > F && (y - th).squaredNorm() > 0.0) {
            y = th;  // monotone restart
            t = 1.0;
            continue;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const Vec prev = th;
        th = nxt;
        F = std::min(F, Fn);
        y = th + ((t - 1.0) / tn) * (th - prev);
        t = tn;
        Lc = std::max(Lc * 0.95, 1e-12);
        if (!th.allFinite() || th.norm() > runaway) {
            diverged = true;
            break;
        }
        // Slow drift toward infinity: far from the start, still growing, residual not shrinking.
        if (it % 1000 == 0) {
            const double nrm = th.norm();
            const double r = kkt_residual(P.grad(th), th, pen, groups, opts.active_tol);
            if (nrm > 1e3 * (1.0 + start_norm) && nrm > 2.0 * drift_norm && r > 0.5 * drift_resid) {
                diverged = true;
                break;
            }
            drift_norm = nrm;
            drift_resid = r;
        }
        if (it % 10 == 0) {
            resid = kkt_residual(P.grad(th), th, pen, groups, opts.active_tol);
            if (resid <= opts.kkt_tol) break;
            // Polish once the zero pattern settles near the solution.
            if (opts.newton_polish && resid < 1e-2 && same_pattern(pen, groups, th, last_polish_at, opts.active_tol) ) {
                Vec cand = th;
                if (newton_polish(P, cand, opts)) {
                    const double rc = kkt_residual(P.grad(cand), cand, pen, groups, opts.active_tol);
                    const double Fc = P.total(cand);
                    if (rc < resid && Fc <= F + 1e-9 * (1.0 + std::abs(F))) {
                        th = cand;
                        F = Fc;
                        y = th;
                        t = 1.0;
                        resid = rc;
                    }
                }
            }
            last_polish_at = th;
        }
    }
    resid = kkt_residual(P.grad(th), th, pen, groups, opts.active_tol);

    res.theta_hat = th;
    res.iterations = it;
    res.objective = P.total(th);
    res.g_hat = P.grad(th);
    res.active = effective_active(pen, groups, th, opts.active_tol);
    res.grad_residual = resid;
    res.converged = !diverged && resid <= opts.kkt_tol;
    if (diverged) res.diagnostic = "diverged";
    else if (!res.converged) res.diagnostic = "max-iter";
    return res;
}

}  // namespace

Perturbation draw_perturbation(Rng& rng, Index d, double sigma) {
    if (d < 1) throw DimensionError("perturbation: d must be positive");
    if (!(sigma >= 0.0)) throw DomainError("perturbation: sigma must be nonnegative");
    return Perturbation{standard_normal(d, rng) / std::sqrt(static_cast<double>(d)), sigma};
}

double penalized_objective(const ModelSpec& model, const Vec& x, const Vec& theta, const Vec& perturb_term,
                           const PenaltySpec& penalty, const GroupStructure& groups, const ObsMask& mask) {
    return Problem{model, x, perturb_term, penalty, groups, mask}.total(theta);
}

Vec smooth_gradient(const ModelSpec& model, const Vec& x, const Vec& theta, const Vec& perturb_term,
                    const PenaltySpec& penalty, const GroupStructure& groups, const ObsMask& mask) {
    return Problem{model, x, perturb_term, penalty, groups, mask}.grad(theta);
}

double kkt_residual(const Vec& grad, const Vec& theta, const PenaltySpec& penalty, const GroupStructure& groups,
                    double active_tol) {
    double s = 0.0;
    for (std::size_t j = 0; j < groups.size(); ++j) {
        const auto& p = penalty.per_group[j];
        const Vec g = groups.gather(grad, j);
        if (!p.nonsmooth()) {
            s += g.squaredNorm();
            continue;
        }
        const Vec b = groups.gather(theta, j);
        const double r = b.norm();
        if (r > active_tol) {
            s += (g + rho_prime(p, r) * b / r).squaredNorm();
        } else {
            const double ex = std::max(0.0, g.norm() - rho_prime(p, 0.0));
            s += ex * ex;
        }
    }
    return std::sqrt(s);
}

FitResult fit_penalized(const ModelSpec& model, const Vec& x, const Perturbation& pert, const PenaltySpec& penalty,
                        const GroupStructure& groups, const SolverOptions& opts, const ObsMask& mask,
                        std::optional<Vec> start) {
    if (pert.w.size() != model.dim_param()) throw DimensionError("fit: perturbation length must equal d");
    FitResult r = fit_core(model, x, pert.term(), penalty, groups, opts, mask, std::move(start));
    if (r.converged) {
        const auto rep = ssosp_report_penalized(model, x, r, penalty, groups, opts);
        r.ssosp = rep.ok;
        r.diagnostic = rep.reason;
    }
    return r;
}

FitResult fit_penalized(const ModelSpec& model, const Sample& data, const Perturbation& pert,
                        const PenaltySpec& penalty, const GroupStructure& groups, const SolverOptions& opts) {
    return fit_penalized(model, data.x, pert, penalty, groups, opts, {}, std::nullopt);
}

FitResult fit_ols_perturbed(const Vec& x_star, const Mat& z_star, const Perturbation& pert) {
    const Index d = z_star.cols();
    if (x_star.size() != z_star.rows() || pert.w.size() != d) throw DimensionError("ols: dimension mismatch");
    Eigen::ColPivHouseholderQR<Mat> qr(z_star);
    if (qr.rank() < d) throw SingularError("ols: design lacks full column rank");
    const Mat G = z_star.transpose() * z_star;
    const Vec rhs = z_star.transpose() * x_star + pert.term();
    FitResult r;
    r.theta_hat = G.ldlt().solve(rhs);
    // The closed form is stationary for 1/2||X - Z theta||^2 - sigma W^T theta.
    r.perturb_term = -pert.term();
    r.g_hat = z_star.transpose() * (z_star * r.theta_hat - x_star) + r.perturb_term;
    r.grad_residual = r.g_hat.norm();
    r.objective = 0.5 * (x_star - z_star * r.theta_hat).squaredNorm() + r.perturb_term.dot(r.theta_hat);
    r.active.coords.resize(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i) {
        r.active.coords[static_cast<std::size_t>(i)] = i;
        r.active.groups.push_back(static_cast<std::size_t>(i));
    }
    r.ssosp = true;
    r.converged = true;
    return r;
}

std::vector<Index> select_trim(const ModelSpec& model, const Vec& x, const Vec& theta, Index h) {
    std::vector<double> key;
    const auto ord = ordered_pool(model, x, theta, key);
    if (h < 0 || h > static_cast<Index>(ord.size())) throw DomainError("trim: h out of range");
    const auto pool = trim_pool(model);
    std::vector<Index> kept;
    for (Index k = 0; k < h; ++k) kept.push_back(pool[ord[static_cast<std::size_t>(k)]]);
    std::sort(kept.begin(), kept.end());
    return kept;
}

ObsMask trim_mask(const ModelSpec& model, const std::vector<Index>& kept) {
    ObsMask m(static_cast<std::size_t>(model.dim_obs()), true);
    for (Index i : trim_pool(model)) m[static_cast<std::size_t>(i)] = false;
    for (Index i : kept) m[static_cast<std::size_t>(i)] = true;
    return m;
}

FitResult fit_mtle(const ModelSpec& model, const Sample& data, const Perturbation& pert, Index h,
                   const SolverOptions& opts) {
    if (model.kind() == ModelKind::Custom) throw DomainError("mtle: custom models unsupported");
    const Index d = model.dim_param();
    const auto pool = trim_pool(model);
    const Index np = static_cast<Index>(pool.size());
    const Index min_h = model.kind() == ModelKind::GaussianLinear ? d : 2;
    if (h < min_h || h > np) throw DomainError("mtle: need d <= h <= pool size");
    if (pert.w.size() != d) throw DimensionError("mtle: perturbation length must equal d");
    const Vec& x = data.x;
    const auto groups = GroupStructure::singletons(d);
    const auto pen = PenaltySpec::none(groups.size());
    const Vec pt = pert.term();

    struct Cand {
        Vec theta;
        std::vector<Index> kept;
        double obj = kInf;
        bool converged = false;
        int iters = 0;
        // Converged candidates first: a runaway fit drives an unbounded objective
        // below any local minimum but is not a stationary point.
        bool beats(const Cand& o) const {
            if (converged != o.converged) return converged;
            return obj < o.obj - 1e-12 * (1.0 + std::abs(o.obj));
        }
    };
    auto csteps = [&](Vec theta, int& iters) {
        Cand c;
        std::vector<Index> kept = select_trim(model, x, theta, h);
        for (int k = 0; k < 200; ++k) {
            const FitResult f = fit_core(model, x, pt, pen, groups, opts, trim_mask(model, kept), theta);
            iters += f.iterations + 1;
            theta = f.theta_hat;
            c.converged = f.converged;
            if (!f.converged) break;
            auto nk = select_trim(model, x, theta, h);
            if (nk == kept) break;
            kept = std::move(nk);
        }
        c.theta = theta;
        c.kept = kept;
        c.obj = Problem{model, x, pt, pen, groups, trim_mask(model, kept)}.total(theta);
        return c;
    };

    Cand best;
    int total_iters = 0;
    try {
        const FitResult full = fit_core(model, x, pt, pen, groups, opts, {}, std::nullopt);
        best = csteps(full.theta_hat, total_iters);
    } catch (const std::exception&) {
    }
    auto from_subset = [&](std::vector<Index> sub) {
        std::sort(sub.begin(), sub.end());
        try {
            const ObsMask m = trim_mask(model, sub);
            const Vec st = model.kind() == ModelKind::BehrensFisher ? masked_moments(model, x, m) : Vec::Zero(d);
            const FitResult f = fit_core(model, x, pt, pen, groups, opts, m, st);
            if (!f.converged) return;
            Cand c = csteps(f.theta_hat, total_iters);
            if (c.beats(best)) best = std::move(c);
        } catch (const std::exception&) {
        }
    };
    {
        // robust start: the h pool points closest to the pool median
        std::vector<double> v;
        for (Index i : pool) v.push_back(x[i]);
        std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
        const double med = v[v.size() / 2];
        std::vector<Index> ord(pool.begin(), pool.end());
        std::stable_sort(ord.begin(), ord.end(), [&](Index a, Index b) { return std::abs(x[a] - med) < std::abs(x[b] - med); });
        ord.resize(static_cast<std::size_t>(h));
        if (model.kind() == ModelKind::BehrensFisher) from_subset(ord);
    }
    Rng rng(opts.seed);
    std::vector<Index> idx(pool.begin(), pool.end());
    for (int s = 0; s < opts.restarts; ++s) {
        std::shuffle(idx.begin(), idx.end(), rng);
        from_subset(std::vector<Index>(idx.begin(), idx.begin() + h));
    }
    if (!std::isfinite(best.obj)) throw DomainError("mtle: no feasible start");

    const ObsMask m = trim_mask(model, best.kept);
    FitResult r = fit_core(model, x, pt, pen, groups, opts, m, best.theta);
    r.iterations += total_iters;
    r.trim_set = best.kept;
    if (r.converged) {
        const auto rep = ssosp_report_mtle(model, x, r, h, opts);
        r.ssosp = rep.ok;
        r.diagnostic = rep.reason;
    }
    return r;
}

Mat restricted_second_order(const ModelSpec& model, const Vec& x, const Vec& theta, const PenaltySpec& penalty,
                            const GroupStructure& groups, const ActiveSets& active, const ObsMask& mask) {
    for (std::size_t j : active.groups) {
        const auto& p = penalty.per_group[j];
        if (p.nonsmooth() && at_knot(p, groups.group_norm(theta, j))) throw KnotError("active group on a knot");
    }
    Mat H = hessian(model, theta, x, mask) + smooth_penalty_hessian(penalty, groups);
    H += penalty_curvature(penalty, groups, theta, active);
    return restrict(H, active.coords);
}

SsospReport ssosp_report_penalized(const ModelSpec& model, const Vec& x, const FitResult& fit,
                                   const PenaltySpec& penalty, const GroupStructure& groups,
                                   const SolverOptions& opts) {
    const Vec& th = fit.theta_hat;
    if (!model.in_domain(th)) return {false, "domain"};
    const ActiveSets act = effective_active(penalty, groups, th, opts.active_tol);
    for (std::size_t j : act.groups) {
        const auto& p = penalty.per_group[j];
        if (p.nonsmooth() && at_knot(p, groups.group_norm(th, j))) return {false, "knot"};
    }
    const Vec pt = fit.perturb_term.size() == th.size() ? fit.perturb_term : Vec::Zero(th.size());
    const Vec g = smooth_gradient(model, x, th, pt, penalty, groups);
    if (kkt_residual(g, th, penalty, groups, opts.active_tol) > opts.kkt_tol) return {false, "kkt"};
    if (act.coords.empty()) return {true, ""};
    const Mat M = restricted_second_order(model, x, th, penalty, groups, act);
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > opts.eig_tol)) return {false, "not-positive-definite"};
    return {true, ""};
}

bool check_ssosp_penalized(const ModelSpec& model, const Sample& data, const FitResult& fit,
                           const PenaltySpec& penalty, const GroupStructure& groups, const SolverOptions& opts) {
    return ssosp_report_penalized(model, data.x, fit, penalty, groups, opts).ok;
}

SsospReport ssosp_report_mtle(const ModelSpec& model, const Vec& x, const FitResult& fit, Index h,
                              const SolverOptions& opts) {
    if (!fit.trim_set) return {false, "no-trim-set"};
    const Vec& th = fit.theta_hat;
    if (!model.in_domain(th)) return {false, "domain"};
    std::vector<double> key;
    const auto ord = ordered_pool(model, x, th, key);
    const auto pool = trim_pool(model);
    if (h < static_cast<Index>(ord.size())) {
        const double a = key[ord[static_cast<std::size_t>(h - 1)]];
        const double b = key[ord[static_cast<std::size_t>(h)]];
        if (!(a - b > 1e-12 * (1.0 + std::abs(a)))) return {false, "tie"};
    }
    if (select_trim(model, x, th, h) != *fit.trim_set) return {false, "selection"};
    const ObsMask m = trim_mask(model, *fit.trim_set);
    const Vec pt = fit.perturb_term.size() == th.size() ? fit.perturb_term : Vec::Zero(th.size());
    if ((score(model, th, x, m) + pt).norm() > opts.kkt_tol) return {false, "kkt"};
    Eigen::SelfAdjointEigenSolver<Mat> es(hessian(model, th, x, m), Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > opts.eig_tol)) return {false, "not-positive-definite"};
    return {true, ""};
}

bool check_ssosp_mtle(const ModelSpec& model, const Sample& data, const FitResult& fit, Index h,
                      const SolverOptions& opts) {
    return ssosp_report_mtle(model, data.x, fit, h, opts).ok;
}

Vec gradient_statistic(const ModelSpec& model, const Sample& data, const FitResult& fit, const Perturbation& pert,
                       const PenaltySpec& penalty, const GroupStructure& groups) {
    if (pert.w.size() != model.dim_param()) throw DimensionError("gradient statistic: perturbation length");
    return score(model, fit.theta_hat, data) + smooth_penalty_gradient(penalty, groups, fit.theta_hat) + pert.term();
}

Vec gradient_statistic(const ModelSpec& model, const Sample& data, const FitResult& fit, const Perturbation& pert) {
    if (pert.w.size() != model.dim_param()) throw DimensionError("gradient statistic: perturbation length");
    return score(model, fit.theta_hat, data) + pert.term();
}

Vec gradient_statistic_additive(const Mat& B, const Vec& x, const Vec& theta_hat, double nu, const Perturbation& pert) {
    if (pert.w.size() != B.rows() || x.size() != B.rows()) throw DimensionError("additive gradient: w must have length n");
    return (B * theta_hat - x) / (nu * nu) + pert.term();
}

FitResult fit_additive(const Mat& B, const Vec& x, double nu, const Perturbation& pert, const PenaltySpec& penalty,
                       const GroupStructure& groups, const SolverOptions& opts) {
    if (pert.w.size() != B.rows()) throw DimensionError("additive fit: w must have length n");
    const ModelSpec model = ModelSpec::gaussian_linear(B, nu);
    const Perturbation lifted{B.transpose() * pert.w, pert.sigma};
    FitResult r = fit_penalized(model, x, lifted, penalty, groups, opts, {}, Vec::Zero(B.cols()));
    r.g_hat = gradient_statistic_additive(B, x, r.theta_hat, nu, pert);
    return r;
}

}  // namespace acss
