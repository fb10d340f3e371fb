// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the binary exits nonzero if any criterion fails. Shared heavy inputs
// (the exact-law table to n = 256 and the two density estimates) are built
// once up front.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "qslab/qslab.hpp"

using namespace qslab;

namespace {

struct Harness {
    int failures = 0;
    int index = 0;

    void run(const std::string& name, const std::function<bool(std::string&)>& body) {
        ++index;
        std::string detail;
        bool ok = false;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ok = body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %2d: %-32s (%6.1f s)%s%s\n", ok ? "PASS" : "FAIL", index,
                    name.c_str(), secs, detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

LatticePmf symmetric_uniform(int r) {
    std::vector<std::pair<std::int64_t, double>> entries;
    for (int k = 1; k <= r; ++k) {
        entries.emplace_back(-k, 1.0);
        entries.emplace_back(k, 1.0);
    }
    return from_point_masses(entries);
}

LatticePmf brs_family(int r, int s) {
    const auto member = symmetric_uniform(r);
    LatticePmf acc = member;
    for (int i = 1; i < s; ++i) acc = convolve(acc, member);
    return acc;
}

std::string fmt(const char* format, ...) {
    char buffer[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buffer, sizeof(buffer), format, args);
    va_end(args);
    return buffer;
}

}  // namespace

int main() {
    const FittedConstants fc;
    Harness harness;

    std::printf("building shared inputs (exact table to 256, densities)...\n");
    const QnTable table(256);
    const GridSpec grid;
    const auto mc = estimate_density_mc(10000, 1000000, 0.02, grid, 20170116);
    const auto fp = estimate_density_fixed_point(grid, 30, 1);
    std::printf("shared inputs ready\n\n");

    // 1. oracle equivalence
    harness.run("oracle equivalence n <= 8", [&](std::string& detail) {
        double worst = 0.0;
        for (int n = 0; n <= 8; ++n) {
            const auto oracle = brute_force_pmf(n);
            const auto& dp = table.pmf(n);
            if (dp.min() != oracle.min() || dp.max() != oracle.max()) return false;
            for (std::int64_t x = dp.min(); x <= dp.max(); ++x)
                worst = std::max(worst, std::fabs(dp.at(x) - oracle.at(x)));
        }
        detail = fmt("max pointwise diff %.2e (tol 1e-12)", worst);
        return worst <= 1e-12;
    });

    // 2. exact law of Q_3
    harness.run("exact law of Q_3", [&](std::string& detail) {
        const auto& q3 = table.pmf(3);
        const bool law_ok = q3.size() == 2 && q3.min() == 2 &&
                            std::fabs(q3.at(2) - 1.0 / 3.0) < 1e-15 &&
                            std::fabs(q3.at(3) - 2.0 / 3.0) < 1e-15;
        const bool mean_ok = std::fabs(table.mean(3) - 8.0 / 3.0) < 1e-15;
        detail = fmt("P(2)=%.15f, q_3=%.15f", q3.at(2), table.mean(3));
        return law_ok && mean_ok;
    });

    // 3. mean consistency to n = 256
    harness.run("mean consistency n <= 256", [&](std::string& detail) {
        double worst_rel = 0.0;
        for (int n = 0; n <= 256; ++n) {
            const double qn = table.mean(n);
            worst_rel = std::max(worst_rel,
                                 std::fabs(moments(table.pmf(n)).mean - qn) / (1.0 + qn));
        }
        detail = fmt("worst |mean - q_n|/(1+q_n) = %.2e (tol 1e-9)", worst_rel);
        return worst_rel <= 1e-9;
    });

    // 4. phase-one identity fuzzing
    harness.run("phase-one count identity", [&](std::string& detail) {
        Xoshiro256ss pick(424242);
        int violations = 0;
        for (int rep = 0; rep < 10000; ++rep) {
            const auto r = static_cast<std::int64_t>(2 * (1 + pick.uniform_below(40)));
            const auto n = static_cast<std::int64_t>(r + 1 + pick.uniform_below(5000));
            const auto res = run_phase1(n, r, pick.next());
            std::int64_t total = 0;
            for (const auto len : res.sublists) total += len;
            if (static_cast<std::int64_t>(res.sublists.size()) != res.active_steps + 1 ||
                total != n - res.active_steps)
                ++violations;
        }
        detail = fmt("%d violations in 10^4 runs", violations);
        return violations == 0;
    });

    // 5. medium-sublist concentration bound
    harness.run("medium-sublist tail bound", [&](std::string& detail) {
        std::string parts;
        bool ok = true;
        for (const std::int64_t n : {4000, 8000}) {
            const std::int64_t r = 20;
            std::int64_t below = 0;
            const double threshold = static_cast<double>(n) / (3.0 * static_cast<double>(r));
            for (int i = 0; i < 10000; ++i) {
                const auto res =
                    run_phase1(n, r,
                               derive_seed(101, static_cast<std::uint64_t>(i) +
                                                    static_cast<std::uint64_t>(n)));
                if (static_cast<double>(count_medium_sublists(res, r)) <= threshold) ++below;
            }
            const double empirical = below / 10000.0;
            const double bound = std::exp(-static_cast<double>(n) / (400.0 * r));
            parts += fmt("n=%lld: %.4f<=%.4f ", static_cast<long long>(n), empirical, bound);
            ok = ok && empirical <= bound;
        }
        detail = parts;
        return ok;
    });

    // 6. xi formula
    harness.run("xi ensemble mean", [&](std::string& detail) {
        const std::int64_t n = 1000, r = 20;
        long double sum = 0.0L;
        for (int i = 0; i < 10000; ++i)
            sum += static_cast<long double>(
                count_medium_sublists(run_phase1(n, r, derive_seed(7, i)), r));
        const double mean = static_cast<double>(sum) / 10000.0;
        detail = fmt("mean %.3f vs xi %.3f", mean, xi(n, r));
        return std::fabs(mean - xi(n, r)) <= 0.05 * xi(n, r);
    });

    // 7. truncated-decomposition class membership
    harness.run("truncated parts in class D_r", [&](std::string& detail) {
        const QnTable part_table(40);
        int conditioned = 0, failures = 0;
        std::uint64_t seed = 0;
        while (conditioned < 1000 && seed < 20000) {
            const auto s = sample_truncated_decomposition(4000, 40, fc.c1, fc.c2,
                                                          derive_seed(1234, seed++), part_table);
            if (!s.e_occurred) continue;
            ++conditioned;
            for (std::size_t p = 0; p < s.b_parts.size(); ++p) {
                const auto law = truncated_part_law(part_table, s.part_scales[p]);
                const auto check =
                    is_in_class_Dr(law.conditional, ClassParams{40.0, 1, fc.c1}, law.z);
                const bool contained =
                    std::fabs(static_cast<double>(s.b_parts[p]) - s.centers[p]) <= 160.0;
                if (!check.in_class || !contained) ++failures;
            }
        }
        detail = fmt("%d conditioned samples, %d failures", conditioned, failures);
        return conditioned == 1000 && failures == 0;
    });

    // 8. tilting suite
    harness.run("tilting identities", [&](std::string& detail) {
        const auto base =
            from_point_masses({{-3, 1.0}, {-1, 2.0}, {0, 1.0}, {2, 2.0}, {4, 1.0}});

        const auto identity = tilt(base, 0.0);
        bool ok = identity.gamma == 1.0;
        for (std::size_t i = 0; i < base.size(); ++i)
            ok = ok && identity.tilted.probs()[i] == base.probs()[i];

        const auto other = from_point_masses({{-2, 1.0}, {1, 1.0}, {3, 2.0}});
        const auto lhs = tilt(convolve(base, other), 0.4).tilted;
        const auto rhs = convolve(tilt(base, 0.4).tilted, tilt(other, 0.4).tilted);
        double worst_rel = 0.0;
        for (std::int64_t x = lhs.min(); x <= lhs.max(); ++x) {
            const double a = lhs.at(x), b = rhs.at(x);
            if (a == 0.0 && b == 0.0) continue;
            worst_rel = std::max(worst_rel, std::fabs(a - b) / std::max(a, b));
        }
        ok = ok && worst_rel <= 1e-12;

        const double target = moments(base).mean + 0.7;
        const double alpha = solve_tilt(base, target, 1e-10);
        const double round_trip = std::fabs(moments(tilt(base, alpha).tilted).mean - target);
        ok = ok && round_trip <= 1e-9;

        double worst_fd = 0.0;
        const double h = 1e-4;
        for (int i = 0; i <= 20; ++i) {
            const double a = -1.0 + 0.1 * i;
            const double derivative = (moments(tilt(base, a + h).tilted).mean -
                                       moments(tilt(base, a - h).tilted).mean) /
                                      (2.0 * h);
            const double variance = moments(tilt(base, a).tilted).variance;
            worst_fd = std::max(worst_fd, std::fabs(derivative - variance) / variance);
        }
        ok = ok && worst_fd <= 1e-6;
        detail = fmt("commutation %.1e, round-trip %.1e, derivative %.1e", worst_rel,
                     round_trip, worst_fd);
        return ok;
    });

    // 9. normal approximation of 400-fold sums
    harness.run("normal approximation bound", [&](std::string& detail) {
        const std::vector<LatticePmf> components(400,
                                                 from_point_masses({{-1, 1.0}, {1, 1.0}}));
        const auto check = berry_esseen_check(components, fc.be_A);
        detail = fmt("sup %.4f <= bound %.4f", check.sup_dist, check.bound);
        return check.sup_dist <= check.bound;
    });

    // 10. interval tail bound
    harness.run("interval tail bound", [&](std::string& detail) {
        const auto x = brs_family(10, 400);
        const ClassParams params{10.0, 400, 0.2};
        const double rs = 10.0 * 20.0;
        bool ok = true;
        double worst = 0.0;
        for (const double t : {0.0, rs, 2.0 * rs}) {
            const auto check = tail_bound_check(x, params, t, 10.0, fc.tail_C, fc.tail_c);
            ok = ok && check.pass;
            if (check.bound > 0.0) worst = std::max(worst, check.measured / check.bound);
        }
        detail = fmt("worst measured/bound = %.3f", worst);
        return ok;
    });

    // 11. averaging inequality
    harness.run("averaging inequality", [&](std::string& detail) {
        const auto& pmf = table.pmf(256);
        const PrefixCdf cdf(pmf);
        Xoshiro256ss rng(9001);
        int violations = 0;
        for (int rep = 0; rep < 1000; ++rep) {
            const auto ell = static_cast<std::int64_t>(1 + rng.uniform_below(200));
            const auto mult = static_cast<std::int64_t>(1 + rng.uniform_below(8));
            const std::int64_t m = ell * mult;
            const std::int64_t a =
                pmf.min() - m +
                static_cast<std::int64_t>(
                    rng.uniform_below(static_cast<std::uint64_t>(pmf.max() - pmf.min() + m)));
            const double pj = cdf.half_open(static_cast<double>(a), static_cast<double>(a + m));
            double min_p = 2.0, max_p = -1.0;
            for (std::int64_t b = a; b + ell <= a + m; ++b) {
                const double p =
                    cdf.half_open(static_cast<double>(b), static_cast<double>(b + ell));
                min_p = std::min(min_p, p);
                max_p = std::max(max_p, p);
            }
            const double avg = pj * static_cast<double>(ell) / static_cast<double>(m);
            if (!(min_p <= avg + 1e-12 && avg <= max_p + 1e-12)) ++violations;
        }
        detail = fmt("%d violations in 10^3 draws", violations);
        return violations == 0;
    });

    // 12. density estimates
    harness.run("density estimate quality", [&](std::string& detail) {
        const bool integral_ok = std::fabs(mc.integral() - 1.0) <= 0.01;
        const bool sup_ok = mc.max_value() <= kDensitySupBound;
        const bool slope_ok = mc.max_abs_slope() <= kDensitySlopeBound;
        double cross = 0.0;
        for (std::size_t i = 0; i < mc.values.size(); ++i) {
            const double x = grid.x(i);
            if (x < -2.0 || x > 2.0) continue;
            cross = std::max(cross, std::fabs(mc.values[i] - fp.values[i]));
        }
        detail = fmt("integral %.4f, sup %.3f, slope %.2f, cross %.4f", mc.integral(),
                     mc.max_value(), mc.max_abs_slope(), cross);
        return integral_ok && sup_ok && slope_ok && cross <= fc.density_cross_sup;
    });

    // 13. semi-local window bound
    harness.run("semi-local gamma bound", [&](std::string& detail) {
        const int n = 256;
        const double m = 2.0 * std::pow(256.0, 5.0 / 6.0);
        const auto rep = check_statement_S(table.pmf(n), n, table.mean(n), m, mc);
        detail = fmt("measured gamma %.3f <= 17", rep.measured_gamma);
        return rep.measured_gamma <= 17.0;
    });

    // 14. pointwise distance to the density
    harness.run("pointwise llt regression", [&](std::string& detail) {
        const double pins[3] = {fc.llt_sup_64, fc.llt_sup_128, fc.llt_sup_256};
        const int ns[3] = {64, 128, 256};
        double sups[3];
        bool ok = true;
        for (int i = 0; i < 3; ++i) {
            const auto& pmf = table.pmf(ns[i]);
            const double qn = table.mean(ns[i]);
            double sup = 0.0;
            for (std::int64_t x = pmf.min(); x <= pmf.max(); ++x) {
                const double z = (static_cast<double>(x) - qn) / ns[i];
                if (!mc.covers(z)) continue;
                sup = std::max(sup, std::fabs(ns[i] * pmf.at(x) - mc.value_at(z)));
            }
            sups[i] = sup;
            ok = ok && sup <= pins[i] * (1.0 + fc.regression_slack);
            if (i > 0) ok = ok && sups[i] <= sups[i - 1] * (1.0 + fc.regression_slack);
        }
        detail = fmt("sups %.4f, %.4f, %.4f", sups[0], sups[1], sups[2]);
        return ok;
    });

    // 15. schedule integrity
    harness.run("schedule integrity", [&](std::string& detail) {
        bool ok = true;
        std::string parts;
        for (const std::int64_t n :
             {std::int64_t{1} << 10, std::int64_t{1} << 12, std::int64_t{1} << 16}) {
            const auto sched = schedule(n, 1.0, fc.schedule_c_hat);
            const int expect_k =
                static_cast<int>(std::floor(0.5 * std::log2(static_cast<double>(n)))) + 1;
            ok = ok && sched.K == expect_k;
            for (int k = 0; k + 1 < sched.K; ++k) {
                const double ratio = sched.rounds[k].m / sched.rounds[k].ell;
                ok = ok && std::fabs(ratio - 2.0) < 1e-12;
            }
            const double m_k = sched.rounds.back().m;
            const double n13 = std::cbrt(static_cast<double>(n));
            ok = ok && m_k >= n13 && m_k <= 4.0 * n13;
            ok = ok && sched.final_gamma <= 18.0;
            parts += fmt("K(%lld)=%d G=%.3f ", static_cast<long long>(n), sched.K,
                         sched.final_gamma);
        }
        detail = parts;
        return ok;
    });

    std::printf("\n%d of %d criteria passed\n", harness.index - harness.failures,
                harness.index);
    return harness.failures == 0 ? 0 : 1;
}
