#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qslab/classes.hpp"
#include "qslab/errors.hpp"
#include "qslab/lattice_pmf.hpp"
#include "qslab/limit_density.hpp"

namespace qslab {

// Statement S(n, m, eps, gamma): every half-open length-m interval I has
//   (i)  |P(Q_n in I) - (m/n) f(x)| <= eps m/n for all x with q_n + n x in I,
//   (ii) P(Q_n in I) <= gamma m/n.
struct SmoothingStatement {
    std::int64_t n = 0;
    double m = 1.0;
    double eps = 0.0;
    double gamma = 1.0;

    void validate() const {
        if (n < 1 || !(m >= 1.0) || !(eps > 0.0) || !(gamma >= 1.0))
            throw std::invalid_argument("SmoothingStatement: need n>=1, m>=1, eps>0, gamma>=1");
    }
};

// Half-open interval (lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

struct SmoothingReport {
    double measured_eps = 0.0;            // point sup plus the certified interior slack
    double measured_eps_at_points = 0.0;  // sup over the evaluated x positions only
    double interior_slack = 0.0;          // slope-bound certificate for unevaluated x
    double measured_gamma = 0.0;
    Interval worst_interval_i;
    Interval worst_interval_ii;

    bool holds(const SmoothingStatement& target) const {
        return measured_eps <= target.eps && measured_gamma <= target.gamma;
    }
};

// Measure the two clauses of S(n, m, *, *) against a density estimate.
// Clause (i) quantifies over all x with q_n + n x in I; f is evaluated at
// both endpoints and the midpoint, and the interior is certified by the
// slope bound (adding kDensitySlopeBound * (m/n) / 2 as explicit slack).
// Intervals slide by `stride` lattice steps, default ceil(m/64); clause (i)
// is evaluated where the density grid has coverage, which is why the
// estimate must cover all but kGridMassTol of the law's mass.
inline SmoothingReport check_statement_S(const LatticePmf& pmf, std::int64_t n, double qn,
                                         double m, const DensityEstimate& d,
                                         std::int64_t stride = 0) {
    if (std::fabs(moments(pmf).mean - qn) > 1e-6)
        throw std::invalid_argument("check_statement_S: qn does not match the law's mean");
    require_grid_coverage(pmf, n, qn, d.grid);
    if (stride <= 0) stride = std::max<std::int64_t>(1, std::llround(m / 64.0));

    const PrefixCdf cdf(pmf);
    const double m_over_n = m / static_cast<double>(n);
    SmoothingReport rep;
    rep.interior_slack = kDensitySlopeBound * m_over_n * 0.5;

    const std::int64_t a_begin = pmf.min() - static_cast<std::int64_t>(std::ceil(m));
    const std::int64_t a_end = pmf.max();
    for (std::int64_t a = a_begin; a <= a_end; a += stride) {
        const double lo = static_cast<double>(a);
        const double p = cdf.half_open(lo, lo + m);

        const double gamma_here = p / m_over_n;
        if (gamma_here > rep.measured_gamma) {
            rep.measured_gamma = gamma_here;
            rep.worst_interval_ii = Interval{lo, lo + m};
        }

        const double x_candidates[3] = {(lo - qn) / static_cast<double>(n),
                                        (lo + m / 2.0 - qn) / static_cast<double>(n),
                                        (lo + m - qn) / static_cast<double>(n)};
        for (const double x : x_candidates) {
            if (!d.covers(x)) continue;
            const double dev = std::fabs(p - m_over_n * d.value_at(x)) / m_over_n;
            if (dev > rep.measured_eps_at_points) {
                rep.measured_eps_at_points = dev;
                rep.worst_interval_i = Interval{lo, lo + m};
            }
        }
    }
    rep.measured_eps = rep.measured_eps_at_points + rep.interior_slack;
    return rep;
}

// Max over strided length-m windows J of (max - min over length-ell
// half-open subintervals I of J of P(Q_n in I)), normalized by ell/n.
inline double window_flatness(const LatticePmf& pmf, std::int64_t n, double ell, double m,
                              std::int64_t stride = 0) {
    if (ell > m) throw std::invalid_argument("window_flatness: ell > m");
    if (!(ell > 0.0)) throw std::invalid_argument("window_flatness: ell <= 0");
    if (stride <= 0) stride = std::max<std::int64_t>(1, std::llround(m / 64.0));

    const PrefixCdf cdf(pmf);
    double worst = 0.0;
    const std::int64_t a_begin = pmf.min() - static_cast<std::int64_t>(std::ceil(m));
    const std::int64_t a_end = pmf.max();
    for (std::int64_t a = a_begin; a <= a_end; a += stride) {
        const auto b_last = static_cast<std::int64_t>(
            std::floor(static_cast<double>(a) + m - ell));
        double lo_p = 2.0, hi_p = -1.0;
        for (std::int64_t b = a; b <= b_last; ++b) {
            const double p = cdf.half_open(static_cast<double>(b), static_cast<double>(b) + ell);
            lo_p = std::min(lo_p, p);
            hi_p = std::max(hi_p, p);
        }
        if (hi_p >= lo_p) worst = std::max(worst, hi_p - lo_p);
    }
    return worst / (ell / static_cast<double>(n));
}

// ---- eta bound calculators ----------------------------------------------

struct EtaBound {
    double value = 0.0;
    std::string dominant;                 // label of the largest term
    std::vector<std::string> warnings;    // violated preconditions, if any
};

namespace detail {

inline std::string pick_dominant(const std::vector<std::pair<std::string, double>>& terms) {
    std::string label = terms.front().first;
    double best = terms.front().second;
    for (const auto& [name, v] : terms)
        if (v > best) {
            best = v;
            label = name;
        }
    return label;
}

}  // namespace detail

// Core-round bound eta = C (e^{-c lambda^2} + lambda m / sqrt(r n)
//                          + r / ell + (n / ell) e^{-c n / r}).
// Preconditions r0 <= r <= c n, m >= ell >= c_prime r, lambda m <= sqrt(rn)
// are reported as warnings, never silently ignored.
inline EtaBound eta_core(double n, double m, double ell, double r, double lambda, double C,
                         double c, double r0 = 20.0, double c_prime = 2.0) {
    EtaBound out;
    if (r < r0) out.warnings.push_back("r < r0");
    if (r > c * n) out.warnings.push_back("r > c n");
    if (ell > m) out.warnings.push_back("ell > m");
    if (ell < c_prime * r) out.warnings.push_back("ell < C' r");
    if (lambda * m > std::sqrt(r * n)) out.warnings.push_back("lambda m > sqrt(r n)");

    const double t1 = std::exp(-c * lambda * lambda);
    const double t2 = lambda * m / std::sqrt(r * n);
    const double t3 = r / ell;
    const double t4 = n / ell * std::exp(-c * n / r);
    out.value = C * (t1 + t2 + t3 + t4);
    out.dominant = detail::pick_dominant({{"exp_lambda_term", t1},
                                          {"lambda_m_term", t2},
                                          {"r_over_ell_term", t3},
                                          {"tail_failure_term", t4}});
    return out;
}

// Binomial-round bound eta = C (e^{-c lambda^2} + lambda m / sqrt(n)
//                               + n e^{-c n}). The lambda m <= sqrt(n)
// hypothesis is flagged at its boundary as well as beyond it.
inline EtaBound eta_bin(double n, double m, double lambda, double C, double c) {
    EtaBound out;
    if (lambda * m >= std::sqrt(n) * (1.0 - 1e-12))
        out.warnings.push_back("lambda m at or beyond sqrt(n)");
    if (lambda > c * std::sqrt(n) / 20.0) out.warnings.push_back("lambda > c sqrt(n)/20");

    const double t1 = std::exp(-c * lambda * lambda);
    const double t2 = lambda * m / std::sqrt(n);
    const double t3 = n * std::exp(-c * n);
    out.value = C * (t1 + t2 + t3);
    out.dominant = detail::pick_dominant(
        {{"exp_lambda_term", t1}, {"lambda_m_term", t2}, {"expansion_failure_term", t3}});
    return out;
}

// ---- parameter schedules -------------------------------------------------

// Default per-round budget constant. Chosen so the cascade's worst-case
// product 17 exp(sum_k eta_k) stays below 18 for every n: the summed budget
// is at most 5 eta_1 and n^{-1/18} log n peaks at 18/e (n = e^18), giving
// 5 * 0.002 * 2^{-1/3} * 18/e = 0.0526 < log(18/17).
inline constexpr double kDefaultScheduleBudget = 0.002;

struct ScheduleRound {
    int k = 0;
    double m = 0.0;
    double ell = 0.0;
    double r = 0.0;
    double lambda = 0.0;
    double eta = 0.0;
    double eps = 0.0;
    double gamma = 0.0;
};

// The K-round cascade: K = floor(log2(n)/2) + 1 halving rounds from
// m_1 = 2 C n^{5/6} down to m_K = Theta(n^{1/3}), followed by one
// binomial round (row K carries ell = 1, r = 0 and the binomial-round eta).
struct ScheduleParams {
    int K = 0;
    std::vector<ScheduleRound> rounds;
    double final_eps = 0.0;
    double final_gamma = 0.0;
};

inline ScheduleParams schedule(std::int64_t n, double c_start = 1.0,
                               double c_hat = kDefaultScheduleBudget) {
    if (n < 4) throw std::invalid_argument("schedule: n >= 4 required");
    ScheduleParams sched;
    sched.K = static_cast<int>(std::floor(0.5 * std::log2(static_cast<double>(n)))) + 1;
    const double lambda = std::log(static_cast<double>(n));
    const double n56 = std::pow(static_cast<double>(n), 5.0 / 6.0);
    const double n13 = std::cbrt(static_cast<double>(n));

    double eps = c_start * (1.0 + kDensitySlopeBound) *
                 std::pow(static_cast<double>(n), -1.0 / 6.0);
    double gamma = 17.0;
    for (int k = 1; k <= sched.K; ++k) {
        ScheduleRound round;
        round.k = k;
        round.m = 4.0 * c_start * n56 * std::pow(2.0, -k);
        round.lambda = lambda;
        round.eps = eps;
        round.gamma = gamma;
        if (k < sched.K) {
            round.ell = round.m / 2.0;
            round.r = std::pow(round.m * round.ell, 2.0 / 3.0) / n13;
            round.eta = c_hat * std::pow(2.0, -k / 3.0) *
                        std::pow(static_cast<double>(n), -1.0 / 18.0) * lambda;
        } else {
            round.ell = 1.0;
            round.r = 0.0;
            round.eta = c_hat * std::pow(static_cast<double>(n), -1.0 / 6.0) * lambda;
        }
        sched.rounds.push_back(round);
        eps = eps + gamma * round.eta;
        gamma = gamma * (1.0 + round.eta);
    }
    sched.final_eps = eps;
    sched.final_gamma = gamma;

    const double m_K = sched.rounds.back().m;
    if (!(m_K >= c_start * n13 && m_K <= 4.0 * c_start * n13))
        throw std::logic_error("schedule: m_K not within a factor 4 of n^{1/3}");
    return sched;
}

struct SoftRound {
    int i = 0;
    double omega = 0.0;
    double m = 0.0;
    double ell = 0.0;
    double r = 0.0;
    double lambda = 0.0;
    double m_over_sqrt_rn = 0.0;  // = omega^{-0.1}
    double r_over_ell = 0.0;      // = omega^{-0.3}
};

// Omega-squaring schedule: each round maps m = n/omega to ell = n/omega^1.5
// with r = n/omega^1.8 and lambda = log omega, and the next round starts
// from omega^1.5; stops with the first round whose ell is at most n^0.4.
inline std::vector<SoftRound> soft_schedule(std::int64_t n, double omega0) {
    const double nd = static_cast<double>(n);
    if (!(omega0 > 1.0) || omega0 > std::pow(nd, 0.9))
        throw std::invalid_argument("soft_schedule: need 1 < omega0 <= n^0.9");
    std::vector<SoftRound> rounds;
    const double ell_stop = std::pow(nd, 0.4);
    double omega = omega0;
    for (int i = 0; i < 400; ++i) {
        SoftRound round;
        round.i = i;
        round.omega = omega;
        round.m = nd / omega;
        round.ell = nd / std::pow(omega, 1.5);
        round.r = nd / std::pow(omega, 1.8);
        round.lambda = std::log(omega);
        round.m_over_sqrt_rn = round.m / std::sqrt(round.r * nd);
        round.r_over_ell = round.r / round.ell;
        rounds.push_back(round);
        if (round.ell <= ell_stop) break;
        omega = std::pow(omega, 1.5);
    }
    return rounds;
}

// ---- empirical lemma checks ----------------------------------------------

struct TiltRatioCheck {
    double ratio = 0.0;
    double abs_dev = 0.0;           // |ratio - 1|
    double term_r_over_ell = 0.0;
    double term_lambda_m = 0.0;     // lambda m / (r sqrt(s))
    std::vector<std::string> warnings;
};

struct TiltRatioOptions {
    double window_k = 4.0;   // K in the hypothesis lambda m/(r sqrt(s)) <= K
    double c_prime = 2.0;    // C' in ell >= C' r
};

// Ratio P(X in I2) / P(X in I1) for equal-length subintervals of a window
// J, with the two bound terms for constant fitting.
inline TiltRatioCheck tilt_ratio_check(const LatticePmf& x, const ClassParams& params,
                                       const Interval& i1, const Interval& i2,
                                       const Interval& j, double lambda,
                                       TiltRatioOptions opts = {}) {
    params.validate();
    const double ell = i1.length();
    if (std::fabs(i2.length() - ell) > 1e-9)
        throw std::invalid_argument("tilt_ratio_check: I1 and I2 must have equal length");
    if (i1.lo < j.lo - 1e-9 || i1.hi > j.hi + 1e-9 || i2.lo < j.lo - 1e-9 ||
        i2.hi > j.hi + 1e-9)
        throw std::invalid_argument("tilt_ratio_check: intervals must lie inside J");

    TiltRatioCheck out;
    const double m = j.length();
    const double rsqrt_s = params.r * std::sqrt(static_cast<double>(params.s));
    out.term_r_over_ell = params.r / ell;
    out.term_lambda_m = lambda * m / rsqrt_s;
    if (lambda < 1.0) out.warnings.push_back("lambda < 1");
    if (ell < opts.c_prime * params.r) out.warnings.push_back("ell < C' r");
    if (m < ell) out.warnings.push_back("m < ell");
    if (out.term_lambda_m > opts.window_k) out.warnings.push_back("lambda m/(r sqrt s) > K");
    const double window = opts.window_k * lambda * rsqrt_s;
    if (j.lo < -window || j.hi > window)
        out.warnings.push_back("J outside [-K lambda r sqrt(s), K lambda r sqrt(s)]");

    const double p1 = interval_prob(x, i1.lo, i1.hi);
    const double p2 = interval_prob(x, i2.lo, i2.hi);
    if (p1 == 0.0) throw std::domain_error("tilt_ratio_check: P(X in I1) = 0, ratio undefined");
    out.ratio = p2 / p1;
    out.abs_dev = std::fabs(out.ratio - 1.0);
    return out;
}

struct TailBoundCheck {
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// P(X in [t, t+ell]) against (C ell / (r sqrt s)) e^{-c t^2 / (r^2 s)}.
inline TailBoundCheck tail_bound_check(const LatticePmf& x, const ClassParams& params,
                                       double t, double ell, double C, double c) {
    params.validate();
    if (t < 0.0) throw std::invalid_argument("tail_bound_check: t < 0");
    if (ell < params.r) throw std::invalid_argument("tail_bound_check: ell < r");
    TailBoundCheck out;
    out.measured = closed_interval_prob(x, t, t + ell);
    const double s = static_cast<double>(params.s);
    out.bound = C * ell / (params.r * std::sqrt(s)) *
                std::exp(-c * t * t / (params.r * params.r * s));
    out.pass = out.measured <= out.bound;
    return out;
}

// exp(-2 a^2 / sum (alpha_i + beta_i)^2); returns 1 at a = 0 and 0 when all
// spans vanish with a > 0.
inline double azuma_bound(const std::vector<double>& increment_spans, double a) {
    if (a < 0.0) throw std::invalid_argument("azuma_bound: a < 0");
    long double denom = 0.0L;
    for (const double s : increment_spans) {
        if (s < 0.0) throw std::invalid_argument("azuma_bound: negative span");
        denom += static_cast<long double>(s) * s;
    }
    if (denom == 0.0L) return a > 0.0 ? 0.0 : 1.0;
    return std::exp(static_cast<double>(-2.0L * a * a / denom));
}

struct BerryEsseenCheck {
    double sup_dist = 0.0;
    double bound = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double rho = 0.0;  // sum of absolute third central moments
};

// Build S as the convolution of the components, then compare its exact CDF
// with the normal CDF at every support point (both one-sided limits).
inline BerryEsseenCheck berry_esseen_check(const std::vector<LatticePmf>& components,
                                           double a_const = 0.56) {
    if (components.empty()) throw std::invalid_argument("berry_esseen_check: no components");
    LatticePmf sum = components.front();
    long double rho = moments(components.front()).abs_third_central;
    for (std::size_t i = 1; i < components.size(); ++i) {
        sum = convolve(sum, components[i]);
        rho += moments(components[i]).abs_third_central;
    }
    const Moments m = moments(sum);
    if (!(m.variance > 0.0)) throw std::domain_error("berry_esseen_check: degenerate sum");

    BerryEsseenCheck out;
    out.mu = m.mean;
    out.sigma = std::sqrt(m.variance);
    out.rho = static_cast<double>(rho);
    out.bound = a_const * out.rho / (m.variance * out.sigma);

    const auto phi = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
    long double cdf = 0.0L;
    for (std::size_t i = 0; i < sum.size(); ++i) {
        const double x = static_cast<double>(sum.offset() + static_cast<std::int64_t>(i));
        const double norm = phi((x - out.mu) / out.sigma);
        out.sup_dist = std::max(out.sup_dist, std::fabs(static_cast<double>(cdf) - norm));
        cdf += sum.probs()[i];
        out.sup_dist = std::max(out.sup_dist, std::fabs(static_cast<double>(cdf) - norm));
    }
    return out;
}

// P(B = k+1) / P(B = k) for B ~ Bi(s, p): ((s-k)/(k+1)) (p/(1-p)).
inline double binomial_ratio(std::int64_t s, double p, std::int64_t k) {
    if (k < 0 || k > s - 1) throw std::invalid_argument("binomial_ratio: k out of range");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("binomial_ratio: p outside (0,1)");
    return (static_cast<double>(s - k) / static_cast<double>(k + 1)) * (p / (1.0 - p));
}

// ---- serialization ------------------------------------------------------

inline void to_json(nlohmann::json& j, const SmoothingReport& r) {
    j = nlohmann::json{
        {"measured_eps", r.measured_eps},
        {"measured_eps_at_points", r.measured_eps_at_points},
        {"interior_slack", r.interior_slack},
        {"measured_gamma", r.measured_gamma},
        {"worst_interval_i", {r.worst_interval_i.lo, r.worst_interval_i.hi}},
        {"worst_interval_ii", {r.worst_interval_ii.lo, r.worst_interval_ii.hi}}};
}

inline void to_json(nlohmann::json& j, const ScheduleRound& r) {
    j = nlohmann::json{{"k", r.k},     {"m", r.m},       {"ell", r.ell}, {"r", r.r},
                       {"lambda", r.lambda}, {"eta", r.eta}, {"eps", r.eps}, {"gamma", r.gamma}};
}

inline void to_json(nlohmann::json& j, const ScheduleParams& s) {
    j = nlohmann::json{{"K", s.K},
                       {"rounds", s.rounds},
                       {"final_eps", s.final_eps},
                       {"final_gamma", s.final_gamma}};
}

inline void write_schedule_csv(std::ostream& os, const ScheduleParams& s) {
    os << "k,m,ell,r,lambda,eta,eps,gamma\n";
    char buf[256];
    for (const auto& r : s.rounds) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.k,
                      r.m, r.ell, r.r, r.lambda, r.eta, r.eps, r.gamma);
        os << buf;
    }
}

inline void to_json(nlohmann::json& j, const SoftRound& r) {
    j = nlohmann::json{{"i", r.i},           {"omega", r.omega},
                       {"m", r.m},           {"ell", r.ell},
                       {"r", r.r},           {"lambda", r.lambda},
                       {"m_over_sqrt_rn", r.m_over_sqrt_rn},
                       {"r_over_ell", r.r_over_ell}};
}

inline void write_soft_schedule_csv(std::ostream& os, const std::vector<SoftRound>& rounds) {
    os << "i,omega,m,ell,r,lambda,m_over_sqrt_rn,r_over_ell\n";
    char buf[256];
    for (const auto& r : rounds) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.i,
                      r.omega, r.m, r.ell, r.r, r.lambda, r.m_over_sqrt_rn, r.r_over_ell);
        os << buf;
    }
}

}  // namespace qslab
