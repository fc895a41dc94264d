#pragma once

#include "acss/types.hpp"

namespace acss {

// One draw from the von Mises-Fisher law on the unit sphere in R^p (p >= 2)
// with mean direction `mu` (unit) and concentration kappa >= 0.
Vec sample_vmf(const Vec& mu, double kappa, Rng& rng);

// kappa mu^T u: the log density up to the normalizing constant.
double vmf_log_kernel(const Vec& u, const Vec& mu, double kappa);

// Mean resultant length A_p(kappa) = I_{p/2}(kappa) / I_{p/2-1}(kappa).
double vmf_mean_resultant(Index p, double kappa);

}  // namespace acss
