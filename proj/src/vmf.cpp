#include "acss/vmf.hpp"
#include "acss/rng.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>

namespace acss {

Vec sample_vmf(const Vec& mu, double kappa, Rng& rng) {
    const Index p = mu.size();
    if (p < 2) throw DimensionError("vmf: dimension must be at least 2");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw DomainError("vmf: kappa must be finite and nonnegative");
    const double pm1 = static_cast<double>(p - 1);
    // Wood (1994); b written to avoid cancellation at large kappa.
    const double b = pm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + pm1 * pm1));
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + pm1 * std::log1p(-x0 * x0);
    std::gamma_distribution<double> ga(0.5 * pm1, 1.0);
    double w = 0.0;
    for (;;) {
        const double g1 = ga(rng), g2 = ga(rng);
        const double z = g1 / (g1 + g2);
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        const double u = uniform01(rng);
        if (kappa * w + pm1 * std::log1p(-x0 * w) - c >= std::log(u)) break;
    }
    Vec v = standard_normal(p, rng);
    v -= v.dot(mu) * mu;
    v.normalize();
    return w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
}

double vmf_log_kernel(const Vec& u, const Vec& mu, double kappa) { return kappa * mu.dot(u); }

double vmf_mean_resultant(Index p, double kappa) {
    if (kappa == 0.0) return 0.0;
    const double nu = 0.5 * static_cast<double>(p);
    return boost::math::cyl_bessel_i(nu, kappa) / boost::math::cyl_bessel_i(nu - 1.0, kappa);
}

}  // namespace acss
