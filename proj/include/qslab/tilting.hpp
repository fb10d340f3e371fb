#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "qslab/errors.hpp"
#include "qslab/lattice_pmf.hpp"

namespace qslab {

struct TiltResult {
    LatticePmf tilted;
    double alpha = 0.0;
    double gamma = 1.0;      // normalizer E e^{alpha Y}
    double log_gamma = 0.0;  // always finite even when gamma itself overflows
};

// Exponential tilt: tilted(x) = p(x) e^{alpha x} / gamma.
//
// Evaluated entirely in shifted log-space, exp(alpha (x - x0) - log gamma')
// with x0 the support midpoint, so the reweighting stays stable for
// |alpha| * span up to about 700. gamma = exp(log_gamma) may still over- or
// underflow double range for large |alpha * x0|; that raises range_error,
// as does an endpoint weight underflowing to zero (the tilted law must keep
// the support of the input).
inline TiltResult tilt(const LatticePmf& p, double alpha) {
    if (!std::isfinite(alpha)) throw std::invalid_argument("tilt: alpha not finite");
    if (alpha == 0.0) return TiltResult{p, 0.0, 1.0, 0.0};

    const double x0 = 0.5 * (static_cast<double>(p.min()) + static_cast<double>(p.max()));
    const double half_span = 0.5 * static_cast<double>(p.max() - p.min());
    if (std::fabs(alpha) * half_span > 705.0)
        throw std::range_error("tilt: |alpha| * span beyond stable range");

    const std::size_t n = p.size();
    std::vector<double> shifted(n);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(p.offset() + static_cast<std::int64_t>(i));
        shifted[i] = p.probs()[i] * std::exp(alpha * (x - x0));
        sum += shifted[i];
    }
    const double log_gamma_shifted = std::log(static_cast<double>(sum));
    const double inv = 1.0 / static_cast<double>(sum);
    for (double& w : shifted) w *= inv;
    if (shifted.front() == 0.0 || shifted.back() == 0.0)
        throw std::range_error("tilt: endpoint weight underflowed; support would change");

    const double log_gamma = log_gamma_shifted + alpha * x0;
    const double gamma = std::exp(log_gamma);
    if (!std::isfinite(gamma) || gamma == 0.0)
        throw std::range_error("tilt: normalizer outside representable range");
    return TiltResult{LatticePmf(p.offset(), std::move(shifted)), alpha, gamma, log_gamma};
}

// Find alpha with |E Y^{(alpha)} - target_mean| <= tol. The tilted mean is
// strictly increasing in alpha (its derivative is the tilted variance), so
// an expanding bracket from [-1, 1] followed by bisection suffices. The
// tolerance is on the mean, not on alpha.
inline double solve_tilt(const LatticePmf& p, double target_mean, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("solve_tilt: tol must be positive");
    if (p.size() == 1) {
        if (std::fabs(static_cast<double>(p.min()) - target_mean) <= tol) return 0.0;
        throw infeasible_error("solve_tilt: degenerate law cannot reach target");
    }
    if (!(target_mean > static_cast<double>(p.min()) &&
          target_mean < static_cast<double>(p.max())))
        throw infeasible_error("solve_tilt: target outside the open support hull");

    const auto mean_at = [&p](double a) { return moments(tilt(p, a).tilted).mean; };
    const double half_span = 0.5 * static_cast<double>(p.max() - p.min());
    const double alpha_cap = 690.0 / std::max(half_span, 1e-12);

    double lo = -1.0, hi = 1.0;
    while (mean_at(std::min(hi, alpha_cap)) < target_mean) {
        if (hi >= alpha_cap)
            throw infeasible_error("solve_tilt: target unreachable within stable tilt range");
        lo = hi;
        hi = std::min(hi * 2.0, alpha_cap);
    }
    hi = std::min(hi, alpha_cap);
    while (mean_at(std::max(lo, -alpha_cap)) > target_mean) {
        if (lo <= -alpha_cap)
            throw infeasible_error("solve_tilt: target unreachable within stable tilt range");
        hi = lo;
        lo = std::max(lo * 2.0, -alpha_cap);
    }
    lo = std::max(lo, -alpha_cap);

    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 400; ++iter) {
        mid = 0.5 * (lo + hi);
        const double m = mean_at(mid);
        if (std::fabs(m - target_mean) <= tol) return mid;
        if (m < target_mean)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(mid)))
            break;
    }
    if (std::fabs(mean_at(mid) - target_mean) <= tol) return mid;
    throw infeasible_error("solve_tilt: bisection did not reach the requested tolerance");
}

}  // namespace qslab
