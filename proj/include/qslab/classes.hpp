#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qslab/errors.hpp"
#include "qslab/lattice_pmf.hpp"

namespace qslab {

// Parameters of the distribution classes used by the smoothing machinery:
// scale r, number of summands s, and the variance constant c1 in (0, 1).
struct ClassParams {
    double r = 1.0;
    int s = 1;
    double c1 = 0.5;

    void validate() const {
        if (!(r > 0.0)) throw std::invalid_argument("ClassParams: r must be positive");
        if (s < 1) throw std::invalid_argument("ClassParams: s must be >= 1");
        if (!(c1 > 0.0 && c1 < 1.0)) throw std::invalid_argument("ClassParams: c1 not in (0,1)");
    }
};

// Outcome of a D_r membership test with per-clause diagnostics.
struct DrCheck {
    bool in_class = false;
    bool mean_ok = false;      // |E X| <= 1e-9
    bool support_ok = false;   // support within [-4r, 4r]
    bool variance_ok = false;  // Var X >= c1 (r/2)^2
    double mean = 0.0;
    double variance = 0.0;
    double variance_floor = 0.0;
    std::string violation;  // empty when in_class
};

inline constexpr double kClassMeanTol = 1e-9;

// Membership in D_r: mean zero (to tolerance; truncation-derived laws carry
// float error), support bounded by 4r, variance at least c1 (r/2)^2.
//
// `center` shifts the law off-lattice before the clauses are evaluated:
// passing the conditional mean z checks the law of X - z exactly, which is
// how the truncated decomposition parts enter the class.
inline DrCheck is_in_class_Dr(const LatticePmf& p, const ClassParams& params,
                              double center = 0.0) {
    params.validate();
    DrCheck check;
    const Moments m = moments(p);
    check.mean = m.mean - center;
    check.variance = m.variance;
    check.variance_floor = params.c1 * (params.r / 2.0) * (params.r / 2.0);
    check.mean_ok = std::fabs(check.mean) <= kClassMeanTol;
    check.support_ok = static_cast<double>(p.min()) - center >= -4.0 * params.r &&
                       static_cast<double>(p.max()) - center <= 4.0 * params.r;
    check.variance_ok = m.variance >= check.variance_floor;
    check.in_class = check.mean_ok && check.support_ok && check.variance_ok;
    if (!check.mean_ok)
        check.violation = "mean clause: |E X| = " + std::to_string(std::fabs(check.mean));
    else if (!check.support_ok)
        check.violation = "support clause: support exceeds [-4r, 4r]";
    else if (!check.variance_ok)
        check.violation = "variance clause: Var X = " + std::to_string(m.variance) +
                          " < " + std::to_string(check.variance_floor);
    return check;
}

// s-fold convolution of D_r members, i.e. a representative of B_{r,s}.
// Every component must pass the class check; the failing index is reported.
inline LatticePmf build_Brs(const std::vector<LatticePmf>& components,
                            const ClassParams& params) {
    params.validate();
    if (static_cast<int>(components.size()) != params.s)
        throw std::invalid_argument("build_Brs: expected exactly s = " +
                                    std::to_string(params.s) + " components, got " +
                                    std::to_string(components.size()));
    for (std::size_t i = 0; i < components.size(); ++i) {
        const DrCheck check = is_in_class_Dr(components[i], params);
        if (!check.in_class)
            throw class_membership_error(
                "build_Brs: component " + std::to_string(i) + " not in D_r (" +
                    check.violation + ")",
                static_cast<int>(i));
    }
    LatticePmf acc = components.front();
    for (std::size_t i = 1; i < components.size(); ++i) acc = convolve(acc, components[i]);
    return acc;
}

}  // namespace qslab
