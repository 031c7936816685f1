#pragma once

#include <cmath>
#include <limits>

#include "ttsc/error.hpp"

namespace ttsc {

struct WeibullParams {
  double shape = 1.0;  // k
  double scale = 1.0;  // lambda

  bool valid() const {
    return std::isfinite(shape) && std::isfinite(scale) && shape > 0.0 && scale > 0.0;
  }
};

/// log f_W(x; k, lambda) for x > 0.
inline double weibull_log_pdf(double x, const WeibullParams& p) {
  if (!(x > 0.0)) throw Error(ErrorCode::kDomainError, "Weibull density needs x > 0");
  const double log_z = std::log(x) - std::log(p.scale);
  return std::log(p.shape) - std::log(p.scale) + (p.shape - 1.0) * log_z -
         std::exp(p.shape * log_z);
}

/// f_W(x; k, lambda) = (k/lambda) (x/lambda)^(k-1) exp(-(x/lambda)^k).
inline double weibull_pdf(double x, const WeibullParams& p) {
  if (!(x > 0.0)) throw Error(ErrorCode::kDomainError, "Weibull density needs x > 0");
  const double z = x / p.scale;
  return (p.shape / p.scale) * std::pow(z, p.shape - 1.0) * std::exp(-std::pow(z, p.shape));
}

inline double weibull_cdf(double x, const WeibullParams& p) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-std::pow(x / p.scale, p.shape));
}

inline double weibull_mean(const WeibullParams& p) {
  return p.scale * std::tgamma(1.0 + 1.0 / p.shape);
}

}  // namespace ttsc
