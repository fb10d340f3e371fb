#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qslab/errors.hpp"
#include "qslab/fft.hpp"
#include "qslab/lattice_pmf.hpp"
#include "qslab/quicksort_dist.hpp"
#include "qslab/rng.hpp"

namespace qslab {

// Reference bounds on the limiting density and its derivative; accepted
// estimates must stay within these, padded by kBoundPad.
inline constexpr double kDensitySupBound = 16.0;
inline constexpr double kDensitySlopeBound = 2466.0;
inline constexpr double kBoundPad = 0.05;

// Fraction of probability mass allowed to fall outside a grid before a
// check refuses to run (and before the MC estimator auto-extends).
inline constexpr double kGridMassTol = 1e-4;

struct GridSpec {
    double lo = -3.0;
    double hi = 5.0;
    double step = 0.005;

    std::size_t points() const {
        if (!(step > 0.0) || !(hi > lo)) throw std::invalid_argument("GridSpec: bad bounds");
        return static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
    }
    double x(std::size_t i) const { return lo + static_cast<double>(i) * step; }
};

struct DensityMeta {
    std::int64_t n = 0;           // sample size of Q_n (MC method)
    std::int64_t iterations = 0;  // fixed-point method
    std::int64_t samples = 0;
    double bandwidth = 0.0;
    std::uint64_t seed = 0;
};

// Gridded approximation of the limiting density f with provenance metadata.
struct DensityEstimate {
    enum class Method { mc_kde, fixed_point };

    GridSpec grid;
    std::vector<double> values;
    Method method = Method::mc_kde;
    DensityMeta meta;

    bool covers(double x) const { return x >= grid.lo && x <= grid.hi; }

    double value_at(double x) const {
        if (!covers(x)) throw coverage_error("DensityEstimate: x outside grid");
        const double pos = (x - grid.lo) / grid.step;
        const auto i = std::min(static_cast<std::size_t>(pos), values.size() - 2);
        const double t = pos - static_cast<double>(i);
        return values[i] * (1.0 - t) + values[i + 1] * t;
    }

    double integral() const {
        long double s = 0.0L;
        for (std::size_t i = 0; i + 1 < values.size(); ++i) s += values[i] + values[i + 1];
        return static_cast<double>(s) * 0.5 * grid.step;
    }

    // F(x_i) by cumulative trapezoid.
    std::vector<double> cdf_values() const {
        std::vector<double> out(values.size(), 0.0);
        long double s = 0.0L;
        for (std::size_t i = 1; i < values.size(); ++i) {
            s += 0.5L * (values[i - 1] + values[i]) * grid.step;
            out[i] = static_cast<double>(s);
        }
        return out;
    }

    double max_value() const { return *std::max_element(values.begin(), values.end()); }

    double max_abs_slope() const {
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < values.size(); ++i)
            worst = std::max(worst, std::fabs(values[i + 1] - values[i]) / grid.step);
        return worst;
    }

    void validate() const {
        if (values.size() != grid.points())
            throw std::invalid_argument("DensityEstimate: value count does not match grid");
        for (double v : values)
            if (!(v >= 0.0)) throw std::invalid_argument("DensityEstimate: negative value");
        if (std::fabs(integral() - 1.0) > 0.01)
            throw mass_drift_error("DensityEstimate: integral " + std::to_string(integral()));
        if (max_value() > kDensitySupBound * (1.0 + kBoundPad))
            throw std::invalid_argument("DensityEstimate: sup exceeds padded bound");
        if (max_abs_slope() > kDensitySlopeBound * (1.0 + kBoundPad))
            throw std::invalid_argument("DensityEstimate: slope exceeds padded bound");
    }
};

namespace detail {

// Discrete Gaussian smoothing of a mass vector (in bins), kernel truncated
// at 8 standard deviations.
inline std::vector<double> gaussian_smooth_masses(const std::vector<double>& masses,
                                                  double bandwidth, double step) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(8.0 * bandwidth / step));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    long double ksum = 0.0L;
    for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
        const double z = static_cast<double>(j) * step / bandwidth;
        kernel[static_cast<std::size_t>(j + radius)] = std::exp(-0.5 * z * z);
        ksum += kernel[static_cast<std::size_t>(j + radius)];
    }
    for (double& k : kernel) k = static_cast<double>(k / ksum);

    const auto n = static_cast<std::ptrdiff_t>(masses.size());
    std::vector<double> out(masses.size(), 0.0);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double w = masses[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
            std::ptrdiff_t k = i + j;
            if (k < 0) k = 0;  // clamp edge mass so the total is conserved
            if (k >= n) k = n - 1;
            out[static_cast<std::size_t>(k)] += w * kernel[static_cast<std::size_t>(j + radius)];
        }
    }
    return out;
}

}  // namespace detail

struct McDensityOptions {
    unsigned threads = 0;       // 0: hardware concurrency
    unsigned shards = 64;       // fixed shard count; results do not depend on `threads`
};

// Kernel density estimate over `samples` draws of (Q_n - q_n)/n. Sampling
// is sharded with seeds derived by derive_seed(seed, shard); the grid
// auto-extends when more than kGridMassTol of the draws fall outside.
inline DensityEstimate estimate_density_mc(std::int64_t n, std::int64_t samples,
                                           double bandwidth, GridSpec grid,
                                           std::uint64_t seed, McDensityOptions opts = {}) {
    if (n < 1000) throw std::invalid_argument("estimate_density_mc: n must be >= 1000");
    if (samples < 10000) throw std::invalid_argument("estimate_density_mc: samples >= 10^4");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("estimate_density_mc: bandwidth <= 0");

    const double qn = mean_recurrence(static_cast<int>(n)).back();

    const unsigned shards = std::max(1u, opts.shards);
    std::vector<std::vector<double>> shard_draws(shards);
    unsigned hw = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    std::atomic<unsigned> next_shard{0};
    const auto worker = [&]() {
        for (;;) {
            const unsigned shard = next_shard.fetch_add(1);
            if (shard >= shards) return;
            const std::int64_t count = samples / shards + (shard < samples % shards ? 1 : 0);
            Xoshiro256ss rng(derive_seed(seed, shard));
            auto& draws = shard_draws[shard];
            draws.reserve(static_cast<std::size_t>(count));
            for (std::int64_t i = 0; i < count; ++i)
                draws.push_back((static_cast<double>(sample_qn(n, rng)) - qn) / static_cast<double>(n));
        }
    };
    pool.reserve(hw);
    for (unsigned t = 0; t < hw; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(samples));
    for (const auto& shard : shard_draws) draws.insert(draws.end(), shard.begin(), shard.end());

    std::int64_t outside = 0;
    double dmin = draws.front(), dmax = draws.front();
    for (const double z : draws) {
        dmin = std::min(dmin, z);
        dmax = std::max(dmax, z);
        if (z < grid.lo || z > grid.hi) ++outside;
    }
    if (static_cast<double>(outside) > kGridMassTol * static_cast<double>(samples)) {
        const double want_lo = dmin - 5.0 * bandwidth, want_hi = dmax + 5.0 * bandwidth;
        if (want_lo < grid.lo)
            grid.lo -= std::ceil((grid.lo - want_lo) / grid.step) * grid.step;
        if (want_hi > grid.hi)
            grid.hi += std::ceil((want_hi - grid.hi) / grid.step) * grid.step;
    }

    const std::size_t points = grid.points();
    std::vector<double> masses(points, 0.0);
    for (const double z : draws) {
        double pos = (z - grid.lo) / grid.step;
        pos = std::clamp(pos, 0.0, static_cast<double>(points - 1));
        const auto i = std::min(static_cast<std::size_t>(pos), points - 2);
        const double t = pos - static_cast<double>(i);
        masses[i] += (1.0 - t);
        masses[i + 1] += t;
    }
    const double inv = 1.0 / static_cast<double>(samples);
    for (double& m : masses) m *= inv;

    std::vector<double> smooth = detail::gaussian_smooth_masses(masses, bandwidth, grid.step);
    for (double& v : smooth) v /= grid.step;

    DensityEstimate est{grid, std::move(smooth), DensityEstimate::Method::mc_kde,
                        DensityMeta{n, 0, samples, bandwidth, seed}};
    est.validate();
    return est;
}

struct FixedPointOptions {
    unsigned u_points = 256;            // midpoint rule resolution (even)
    double final_smooth_bandwidth = 0.01;
    double drift_tol = 0.05;
};

// Iterates the distributional map Z -> U Z + (1-U) Z' + C(U) on a gridded
// law starting from a point mass at zero, where U ~ Uniform(0,1), Z and Z'
// are independent copies, and the toll is
//   C(u) = 1 + 2 u ln u + 2 (1-u) ln(1-u),
// whose mean over U is zero. The u-integral uses the midpoint rule paired
// as (u, 1-u); each pair costs one grid convolution. The map is evaluated
// deterministically; `seed` is recorded in the metadata for provenance.
inline DensityEstimate estimate_density_fixed_point(GridSpec grid, std::int64_t iterations,
                                                    std::uint64_t seed,
                                                    FixedPointOptions opts = {}) {
    if (iterations < 1) throw std::invalid_argument("estimate_density_fixed_point: iterations >= 1");
    const std::size_t points = grid.points();
    const unsigned m_u = opts.u_points + (opts.u_points % 2);  // force even

    // mass representation: masses[i] is the probability in bin i
    std::vector<double> masses(points, 0.0);
    {
        const double pos = (0.0 - grid.lo) / grid.step;
        const auto i = std::min(static_cast<std::size_t>(pos), points - 2);
        const double t = pos - static_cast<double>(i);
        masses[i] = 1.0 - t;
        masses[i + 1] = t;
    }

    const auto toll = [](double u) {
        return 1.0 + 2.0 * u * std::log(u) + 2.0 * (1.0 - u) * std::log1p(-u);
    };

    // scale the mass vector by factor f (mass at x -> mass at f x)
    const auto scaled = [&](const std::vector<double>& in, double f) {
        std::vector<double> out(points, 0.0);
        for (std::size_t i = 0; i < points; ++i) {
            const double w = in[i];
            if (w == 0.0) continue;
            const double x = grid.x(i) * f;
            double pos = (x - grid.lo) / grid.step;
            pos = std::clamp(pos, 0.0, static_cast<double>(points - 1));
            const auto j = std::min(static_cast<std::size_t>(pos), points - 2);
            const double t = pos - static_cast<double>(j);
            out[j] += w * (1.0 - t);
            out[j + 1] += w * t;
        }
        return out;
    };

    const std::size_t conv_len = 2 * points - 1;
    const std::size_t fft_n = fft::next_pow2(conv_len);

    for (std::int64_t it = 0; it < iterations; ++it) {
        std::vector<double> next(points, 0.0);
        for (unsigned j = 0; j < m_u / 2; ++j) {
            const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(m_u);
            const double weight = 2.0 / static_cast<double>(m_u);

            const auto a = scaled(masses, u);
            const auto b = scaled(masses, 1.0 - u);
            auto fa = fft::forward_half(a, fft_n);
            const auto fb = fft::forward_half(b, fft_n);
            for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
            const auto conv = fft::inverse_half(fa, fft_n);

            // conv[k] is mass at x = 2 lo + k step; shift by the toll and
            // splat back onto the grid
            const double fb_pos = (grid.lo + toll(u)) / grid.step;
            const double base = std::floor(fb_pos);
            const double t = fb_pos - base;
            const auto ibase = static_cast<std::ptrdiff_t>(base);
            for (std::size_t k = 0; k < conv_len; ++k) {
                const double w = conv[k] * weight;
                if (w <= 0.0) continue;
                const std::ptrdiff_t idx = ibase + static_cast<std::ptrdiff_t>(k);
                const std::ptrdiff_t lo_idx =
                    std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(points) - 1);
                const std::ptrdiff_t hi_idx = std::clamp<std::ptrdiff_t>(
                    idx + 1, 0, static_cast<std::ptrdiff_t>(points) - 1);
                next[static_cast<std::size_t>(lo_idx)] += w * (1.0 - t);
                next[static_cast<std::size_t>(hi_idx)] += w * t;
            }
        }
        masses = std::move(next);
        long double total = 0.0L;
        for (double w : masses) total += w;
        if (std::fabs(static_cast<double>(total) - 1.0) > opts.drift_tol)
            throw mass_drift_error("estimate_density_fixed_point: mass drift " +
                                   std::to_string(static_cast<double>(total) - 1.0));
    }

    masses = detail::gaussian_smooth_masses(masses, opts.final_smooth_bandwidth, grid.step);
    std::vector<double> values(points);
    for (std::size_t i = 0; i < points; ++i) values[i] = masses[i] / grid.step;

    DensityEstimate est{grid, std::move(values), DensityEstimate::Method::fixed_point,
                        DensityMeta{0, iterations, 0, opts.final_smooth_bandwidth, seed}};
    est.validate();
    return est;
}

// Exact histogram of a lattice law mapped to the normalized scale; used as
// the degenerate self-comparison density in the checks. Without smoothing
// the histogram oscillates at the lattice spacing 1/n whenever that exceeds
// the grid step; pass a bandwidth comparable to the KDE default to compare
// against the same object the estimators produce.
inline DensityEstimate density_from_pmf(const LatticePmf& pmf, std::int64_t n, double qn,
                                        const GridSpec& grid, double bandwidth = 0.0) {
    const std::size_t points = grid.points();
    std::vector<double> masses(points, 0.0);
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        const double z =
            (static_cast<double>(pmf.offset() + static_cast<std::int64_t>(i)) - qn) /
            static_cast<double>(n);
        double pos = (z - grid.lo) / grid.step;
        pos = std::clamp(pos, 0.0, static_cast<double>(points - 1));
        const auto j = std::min(static_cast<std::size_t>(pos), points - 2);
        const double t = pos - static_cast<double>(j);
        masses[j] += pmf.probs()[i] * (1.0 - t);
        masses[j + 1] += pmf.probs()[i] * t;
    }
    if (bandwidth > 0.0) masses = detail::gaussian_smooth_masses(masses, bandwidth, grid.step);
    std::vector<double> values(points);
    for (std::size_t i = 0; i < points; ++i) values[i] = masses[i] / grid.step;
    return DensityEstimate{grid, std::move(values), DensityEstimate::Method::mc_kde,
                           DensityMeta{n, 0, 0, bandwidth, 0}};
}

struct SemiLocalReport {
    std::int64_t n = 0;
    double delta_n = 0.0;  // 2 C n^{-1/6} = m / n
    double sup_deviation = 0.0;
    double c_used = 1.0;
    double worst_interval_lo = 0.0;  // half-open (lo, lo+m]
};

// Throws coverage_error when the law carries more than kGridMassTol of mass
// outside the x-range of the estimate.
inline void require_grid_coverage(const LatticePmf& pmf, std::int64_t n, double qn,
                                  const GridSpec& grid) {
    const double inside =
        interval_prob(pmf, qn + grid.lo * static_cast<double>(n), qn + grid.hi * static_cast<double>(n));
    if (1.0 - inside > kGridMassTol)
        throw coverage_error("density grid covers too little of the law (outside mass " +
                             std::to_string(1.0 - inside) + ")");
}

// Sup over aligned half-open intervals I of length m = 2 C n^{5/6} of
//   |P(Q_n in I) - (m/n) f(x_I)| * (n/m),
// with x_I the midpoint map. Intervals slide by `stride` lattice steps
// (default ceil(m/64)).
inline SemiLocalReport semi_local_check(const LatticePmf& pmf, std::int64_t n, double qn,
                                        const DensityEstimate& d, double c_used,
                                        std::int64_t stride = 0) {
    require_grid_coverage(pmf, n, qn, d.grid);
    const double m = 2.0 * c_used * std::pow(static_cast<double>(n), 5.0 / 6.0);
    if (stride <= 0) stride = std::max<std::int64_t>(1, std::llround(m / 64.0));

    const PrefixCdf cdf(pmf);
    SemiLocalReport report;
    report.n = n;
    report.c_used = c_used;
    report.delta_n = m / static_cast<double>(n);

    const std::int64_t a_begin = pmf.min() - static_cast<std::int64_t>(std::ceil(m));
    const std::int64_t a_end = pmf.max();
    for (std::int64_t a = a_begin; a <= a_end; a += stride) {
        const double p = cdf.half_open(static_cast<double>(a), static_cast<double>(a) + m);
        const double x_mid = (static_cast<double>(a) + m / 2.0 - qn) / static_cast<double>(n);
        if (!d.covers(x_mid)) continue;
        const double dev =
            std::fabs(p - report.delta_n * d.value_at(x_mid)) / report.delta_n;
        if (dev > report.sup_deviation) {
            report.sup_deviation = dev;
            report.worst_interval_lo = static_cast<double>(a);
        }
    }
    return report;
}

struct DensityBoundsReport {
    double sup_value = 0.0;
    double max_abs_slope = 0.0;
    double sup_bound = kDensitySupBound * (1.0 + kBoundPad);
    double slope_bound = kDensitySlopeBound * (1.0 + kBoundPad);
    bool sup_ok = false;
    bool slope_ok = false;
    bool pass = false;
    std::string violation;
};

inline DensityBoundsReport density_bounds_check(const DensityEstimate& d) {
    DensityBoundsReport rep;
    rep.sup_value = d.max_value();
    rep.max_abs_slope = d.max_abs_slope();
    rep.sup_ok = rep.sup_value <= rep.sup_bound;
    rep.slope_ok = rep.max_abs_slope <= rep.slope_bound;
    rep.pass = rep.sup_ok && rep.slope_ok;
    if (!rep.sup_ok)
        rep.violation = "sup clause: " + std::to_string(rep.sup_value);
    else if (!rep.slope_ok)
        rep.violation = "slope clause: " + std::to_string(rep.max_abs_slope);
    return rep;
}

// Kolmogorov distance between the exact normalized CDF of a lattice law and
// the estimate's CDF, evaluated at the grid points.
inline double kolmogorov_distance(const LatticePmf& pmf, std::int64_t n, double qn,
                                  const DensityEstimate& d) {
    const auto est_cdf = d.cdf_values();
    const PrefixCdf cdf(pmf);
    double worst = 0.0;
    for (std::size_t i = 0; i < est_cdf.size(); ++i) {
        const double x = d.grid.x(i);
        const double exact = cdf.cdf(static_cast<std::int64_t>(
            std::floor(qn + x * static_cast<double>(n))));
        worst = std::max(worst, std::fabs(exact - est_cdf[i]));
    }
    return worst;
}

// ---- serialization ------------------------------------------------------

inline void write_density_csv(std::ostream& os, const DensityEstimate& d) {
    os << "x,f_hat\n";
    char buf[96];
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", d.grid.x(i), d.values[i]);
        os << buf;
    }
}

inline void to_json(nlohmann::json& j, const DensityMeta& m) {
    j = nlohmann::json{{"n", m.n},
                       {"iterations", m.iterations},
                       {"samples", m.samples},
                       {"bandwidth", m.bandwidth},
                       {"seed", m.seed}};
}

inline void to_json(nlohmann::json& j, const DensityEstimate& d) {
    j = nlohmann::json{{"grid", {{"lo", d.grid.lo}, {"hi", d.grid.hi}, {"step", d.grid.step}}},
                       {"method", d.method == DensityEstimate::Method::mc_kde ? "mc_kde"
                                                                              : "fixed_point"},
                       {"meta", d.meta}};
}

inline void to_json(nlohmann::json& j, const SemiLocalReport& r) {
    j = nlohmann::json{{"n", r.n},
                       {"delta_n", r.delta_n},
                       {"sup_deviation", r.sup_deviation},
                       {"C_used", r.c_used},
                       {"worst_interval_lo", r.worst_interval_lo}};
}

}  // namespace qslab
