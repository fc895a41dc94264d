#include "acss/estimator.hpp"
#include "acss/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace acss;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double a : v) out[i++] = a;
    return out;
}

Perturbation zero_pert(Index d) { return Perturbation{Vec::Zero(d), 0.0}; }

Mat random_matrix(Index r, Index c, Rng& rng) {
    Mat M(r, c);
    for (Index j = 0; j < c; ++j) M.col(j) = standard_normal(r, rng);
    return M;
}

Mat orthonormal_columns(Index n, Index d, Rng& rng) {
    Eigen::HouseholderQR<Mat> qr(random_matrix(n, d, rng));
    return qr.householderQ() * Mat::Identity(n, d);
}

double soft(double z, double l) { return std::copysign(std::max(std::abs(z) - l, 0.0), z); }

// Best trimmed objective over all size-h subsets, each refit in closed form (Gaussian linear).
double enumerate_mtle(const Mat& Z, const Vec& x, double nu, const Vec& pt, Index h, Vec& best_theta,
                      std::vector<Index>& best_set) {
    const Index n = Z.rows();
    double best = 1e300;
    std::vector<int> sel(static_cast<std::size_t>(n), 0);
    std::fill(sel.begin(), sel.begin() + h, 1);
    std::sort(sel.begin(), sel.end());
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
        const Mat G = ZJ.transpose() * ZJ / (nu * nu);
        const Vec th = G.ldlt().solve(ZJ.transpose() * xJ / (nu * nu) - pt);
        const double obj = 0.5 * (xJ - ZJ * th).squaredNorm() / (nu * nu) + pt.dot(th);
        if (obj < best) {
            best = obj;
            best_theta = th;
            best_set = J;
        }
    } while (std::next_permutation(sel.begin(), sel.end()));
    return best;
}

}  // namespace

TEST_CASE("perturbation draws") {
    Rng a(4), b(4);
    CHECK(draw_perturbation(a, 5, 1.0).w == draw_perturbation(b, 5, 1.0).w);
    Rng rng(1);
    double s = 0, s2 = 0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        const double w = draw_perturbation(rng, 1, 1.0).w[0];
        s += w;
        s2 += w * w;
    }
    const double var = s2 / N - (s / N) * (s / N);
    CHECK(std::abs(var - 1.0) < 4 * std::sqrt(2.0 / N));
    const Perturbation p = draw_perturbation(rng, 3, 0.0);
    CHECK(p.term().norm() == 0.0);
}

TEST_CASE("scalar fits") {
    const auto m = ModelSpec::gaussian_linear(Mat::Ones(1, 1), 1.0);
    const auto g = GroupStructure::singletons(1);
    Sample s{vec({3}), std::nullopt, {}};
    auto f = fit_penalized(m, s, zero_pert(1), PenaltySpec::uniform(1, GroupPenalty::l1(1)), g);
    CHECK(f.theta_hat[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(f.ssosp);
    CHECK(f.g_hat[0] == doctest::Approx(-1.0));
    CHECK(gradient_statistic(m, s, f, zero_pert(1))[0] == doctest::Approx(-1.0));

    s.x = vec({2});
    f = fit_penalized(m, s, zero_pert(1), PenaltySpec::uniform(1, GroupPenalty::ridge(0.5)), g);
    CHECK(f.theta_hat[0] == doctest::Approx(1.0));
    CHECK(f.ssosp);

    s.x = vec({1});
    f = fit_penalized(m, s, Perturbation{vec({0.25}), 2.0}, PenaltySpec::none(1), g);
    CHECK(f.theta_hat[0] == doctest::Approx(0.5));
    CHECK(f.g_hat.norm() < 1e-8);
}

TEST_CASE("lasso equals soft-thresholded least squares on orthogonal designs") {
    Rng rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 12, d = 6;
        const Mat Z = orthonormal_columns(n, d, rng);
        const Vec x = 2 * standard_normal(n, rng);
        const double lam = 0.2 + uniform01(rng);
        const auto m = ModelSpec::gaussian_linear(Z, 1.0);
        const auto g = GroupStructure::singletons(d);
        const auto pen = PenaltySpec::uniform(d, GroupPenalty::l1(lam));
        const auto f = fit_penalized(m, Sample{x, std::nullopt, {}}, zero_pert(d), pen, g);
        const Vec ls = Z.transpose() * x;
        for (Index j = 0; j < d; ++j) CHECK(std::abs(f.theta_hat[j] - soft(ls[j], lam)) < 1e-6);
        CHECK(f.ssosp);
    }
}

TEST_CASE("convex solver matches a long-run reference") {
    Rng rng(33);
    for (int rep = 0; rep < 200; ++rep) {
        const Index n = 15, d = 5;
        const Mat Z = random_matrix(n, d, rng);
        const Vec x = standard_normal(n, rng);
        const auto m = ModelSpec::gaussian_linear(Z, 1.0);
        const bool grouped = rep % 2;
        const auto g = grouped ? GroupStructure({{0, 1}, {2, 3, 4}}, d) : GroupStructure::singletons(d);
        const auto pen = grouped ? PenaltySpec::uniform(2, GroupPenalty::group_l2(1.5))
                                 : PenaltySpec::uniform(d, GroupPenalty::l1(1.0));
        const Perturbation p = draw_perturbation(rng, d, 1.0);
        SolverOptions o;
        o.newton_polish = false;
        const auto f = fit_penalized(m, x, p, pen, g, o, {}, std::nullopt);
        SolverOptions ref = o;
        ref.max_iter *= 10;
        ref.kkt_tol *= 1e-3;
        const auto r = fit_penalized(m, x, p, pen, g, ref, {}, std::nullopt);
        CHECK(std::abs(f.objective - r.objective) <= 1e-8 * (1 + std::abs(r.objective)));
        // polishing reaches the same point
        const auto q = fit_penalized(m, x, p, pen, g, SolverOptions{}, {}, std::nullopt);
        CHECK(std::abs(q.objective - r.objective) <= 1e-8 * (1 + std::abs(r.objective)));
    }
}

TEST_CASE("perturbation enters unpenalized fits linearly") {
    Rng rng(2);
    const Mat Z = random_matrix(10, 3, rng);
    const auto m = ModelSpec::gaussian_linear(Z, 0.8);
    const Vec x = standard_normal(10, rng);
    const auto g = GroupStructure::singletons(3);
    const Perturbation p = draw_perturbation(rng, 3, 1.7);
    const auto a = fit_penalized(m, x, p, PenaltySpec::none(3), g, {}, {}, std::nullopt);
    const auto b = fit_penalized(m, x, zero_pert(3), PenaltySpec::none(3), g, {}, {}, std::nullopt);
    const Mat H = Z.transpose() * Z / 0.64;
    CHECK(((a.theta_hat - b.theta_hat) + p.sigma * H.ldlt().solve(p.w)).norm() < 1e-8);
}

TEST_CASE("behrens-fisher mle with perturbation is an ssosp") {
    Rng rng(12);
    const auto m = ModelSpec::behrens_fisher(20, 15);
    const Sample s = sample_data(m, vec({0.3, 1.0, 2.0}), rng);
    const auto g = GroupStructure::singletons(3);
    const Perturbation p = draw_perturbation(rng, 3, 5.0);
    const auto f = fit_penalized(m, s, p, PenaltySpec::none(3), g);
    CHECK(f.ssosp);
    CHECK(f.grad_residual < 1e-8);
    CHECK(check_ssosp_penalized(m, s, f, PenaltySpec::none(3), g));
}

TEST_CASE("ols closed form") {
    const Perturbation z1{Vec::Zero(1), 0.0};
    CHECK(fit_ols_perturbed(vec({6}), Mat::Constant(1, 1, 2.0), z1).theta_hat[0] == doctest::Approx(3.0));
    const Vec x = vec({1, 2, 3});
    CHECK(fit_ols_perturbed(x, Mat::Identity(3, 3), Perturbation{Vec::Zero(3), 0.0}).theta_hat == x);
    Rng rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const Mat Z = random_matrix(8, 3, rng);
        const Vec xs = standard_normal(8, rng);
        const Perturbation p = draw_perturbation(rng, 3, 2.0);
        const auto f = fit_ols_perturbed(xs, Z, p);
        CHECK((Z.transpose() * (Z * f.theta_hat - xs) - p.term()).norm() < 1e-10);
        CHECK(f.ssosp);
    }
    Mat S(3, 2);
    S << 1, 2, 2, 4, 3, 6;
    CHECK_THROWS_AS(fit_ols_perturbed(x, S, Perturbation{Vec::Zero(2), 0.0}), SingularError);
}

TEST_CASE("ssosp checks") {
    Mat Z(3, 2);
    Z << 1, 2, 2, 4, 3, 6;
    const auto m = ModelSpec::gaussian_linear(Z, 1.0);
    const auto g = GroupStructure::singletons(2);
    const Vec x = vec({1, 2, 3.5});
    // ridge-only: strictly convex
    const auto r = fit_penalized(m, x, zero_pert(2), PenaltySpec::uniform(2, GroupPenalty::ridge(0.1)), g, {}, {},
                                 std::nullopt);
    CHECK(r.ssosp);
    // unpenalized, rank-deficient: singular Hessian
    FitResult f;
    f.theta_hat = Eigen::Vector2d(0.2, 0.4);
    f.perturb_term = Vec::Zero(2);
    CHECK_FALSE(check_ssosp_penalized(m, Sample{x, std::nullopt, {}}, f, PenaltySpec::none(2), g));
    // idempotent
    CHECK(check_ssosp_penalized(m, Sample{x, std::nullopt, {}}, r, PenaltySpec::uniform(2, GroupPenalty::ridge(0.1)), g) ==
          check_ssosp_penalized(m, Sample{x, std::nullopt, {}}, r, PenaltySpec::uniform(2, GroupPenalty::ridge(0.1)), g));
}

TEST_CASE("nonconvex fits reach an ssosp") {
    Rng rng(44);
    int ok = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const Mat Z = random_matrix(30, 8, rng);
        Vec th0 = Vec::Zero(8);
        th0.head(3).setConstant(2.0);
        const Vec x = Z * th0 + standard_normal(30, rng);
        const auto m = ModelSpec::gaussian_linear(Z, 1.0);
        const auto g = GroupStructure::singletons(8);
        const auto pen = PenaltySpec::uniform(8, rep % 2 ? GroupPenalty::scad(3.0) : GroupPenalty::mcp(3.0));
        const auto f = fit_penalized(m, x, draw_perturbation(rng, 8, 1.0), pen, g, {}, {}, std::nullopt);
        ok += f.ssosp;
        CHECK(f.grad_residual <= 1e-8);
    }
    CHECK(ok >= 18);
}

TEST_CASE("mtle small example") {
    const auto m = ModelSpec::gaussian_linear(Mat::Ones(3, 1), 1.0);
    const Sample s{vec({0, 0.2, 100}), std::nullopt, {}};
    const auto f = fit_mtle(m, s, zero_pert(1), 2);
    CHECK(f.theta_hat[0] == doctest::Approx(0.1));
    REQUIRE(f.trim_set);
    CHECK(*f.trim_set == std::vector<Index>{0, 1});
    CHECK(f.ssosp);
    CHECK(check_ssosp_mtle(m, s, f, 2));
    const auto full = fit_mtle(m, s, zero_pert(1), 3);
    const auto pf = fit_penalized(m, s, zero_pert(1), PenaltySpec::none(1), GroupStructure::singletons(1));
    CHECK(std::abs(full.theta_hat[0] - pf.theta_hat[0]) < 1e-8);
}

TEST_CASE("mtle boundary tie is not an ssosp") {
    const auto m = ModelSpec::gaussian_linear(Mat::Ones(4, 1), 1.0);
    // symmetric about the kept mean: points 1 and -1 tie at the boundary for h = 3 ... use duplicates
    const Sample s{vec({0, 0, 5, 5}), std::nullopt, {}};
    const auto f = fit_mtle(m, s, zero_pert(1), 3);
    CHECK_FALSE(f.ssosp);
}

TEST_CASE("mtle matches exhaustive subset enumeration") {
    Rng rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 8 + rep % 5, d = 2, h = n - 2 - rep % 2;
        const Mat Z = random_matrix(n, d, rng);
        Vec x = Z * vec({1.0, -1.0}) + 0.5 * standard_normal(n, rng);
        x[0] += 8;
        x[1] -= 6;
        const auto m = ModelSpec::gaussian_linear(Z, 1.0);
        const Perturbation p = draw_perturbation(rng, d, 0.5);
        SolverOptions o;
        o.seed = 100 + static_cast<std::uint64_t>(rep);
        const auto f = fit_mtle(m, Sample{x, std::nullopt, {}}, p, h, o);
        Vec bt;
        std::vector<Index> bs;
        const double best = enumerate_mtle(Z, x, 1.0, p.term(), h, bt, bs);
        CHECK(f.objective - neg_loglik_constant(m, f.theta_hat, trim_mask(m, *f.trim_set)) ==
              doctest::Approx(best).epsilon(1e-8));
        CHECK(*f.trim_set == bs);
        CHECK((f.theta_hat - bt).norm() < 1e-6);
    }
}

TEST_CASE("mtle dominates random subset refits") {
    Rng rng(9);
    const Index n = 30, d = 3, h = 24;
    const Mat Z = random_matrix(n, d, rng);
    Vec x = Z * vec({1, 2, 3}) + standard_normal(n, rng);
    for (Index i = 0; i < 6; ++i) x[i] += 10;
    const auto m = ModelSpec::gaussian_linear(Z, 1.0);
    const Perturbation p = draw_perturbation(rng, d, 1.0);
    const auto f = fit_mtle(m, Sample{x, std::nullopt, {}}, p, h);
    const auto g = GroupStructure::singletons(d);
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int rep = 0; rep < 50; ++rep) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<Index> sub(idx.begin(), idx.begin() + h);
        const ObsMask mask = trim_mask(m, sub);
        const auto r = fit_penalized(m, x, p, PenaltySpec::none(d), g, {}, mask, std::nullopt);
        CHECK(f.objective <= r.objective + 1e-9);
    }
}

TEST_CASE("behrens-fisher mtle trims group 0 only") {
    Rng rng(5);
    const auto m = ModelSpec::behrens_fisher(50, 50);
    Sample s = sample_data(m, vec({0, 1, 2}), rng);
    for (Index i = 0; i < 5; ++i) s.x[i] = 3 + std::abs(std::tan(M_PI * (uniform01(rng) - 0.5)));
    const auto f = fit_mtle(m, s, draw_perturbation(rng, 3, 1.0), 45);
    REQUIRE(f.trim_set);
    CHECK(f.trim_set->size() == 45);
    for (Index i : *f.trim_set) CHECK(i >= 5);
    INFO(f.diagnostic, " ", f.grad_residual, " ", f.iterations);
    CHECK(f.ssosp);
}

TEST_CASE("unbounded perturbed objective is reported, not an ssosp") {
    // sigma*w on gamma1 of -10 with n1 = 4: n^2 + 8 c S < 0, so no local minimum exists.
    const auto m = ModelSpec::behrens_fisher(4, 4);
    const Vec x = vec({-1, 1, 0.5, -0.5, 2, -2, 1, -1});
    const auto f = fit_penalized(m, Sample{x, std::nullopt, {}}, Perturbation{vec({0, 0, -1}), 10.0},
                                 PenaltySpec::none(3), GroupStructure::singletons(3));
    CHECK_FALSE(f.ssosp);
    CHECK(f.iterations < 5000);
}

TEST_CASE("gradient statistic variants") {
    const Mat B = Mat::Identity(3, 3);
    const Vec x = vec({1, 2, 3});
    const Vec th = vec({0.5, 0.5, 0.5});
    CHECK((gradient_statistic_additive(B, x, th, 1.0, Perturbation{Vec::Zero(3), 0.0}) - (th - x)).norm() == 0.0);
    CHECK_THROWS_AS(gradient_statistic_additive(B, x, th, 1.0, Perturbation{Vec::Zero(2), 1.0}), DimensionError);
    Rng rng(3);
    const Perturbation p = draw_perturbation(rng, 3, 1.0);
    const auto f = fit_additive(B, x, 1.0, p, PenaltySpec::uniform(3, GroupPenalty::ridge(0.1)),
                                GroupStructure::singletons(3));
    // stationarity of the additive loss: B^T g_hat + grad R = 0
    CHECK((B.transpose() * f.g_hat + 0.2 * f.theta_hat).norm() < 1e-8);
}
