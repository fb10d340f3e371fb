#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <queue>
#include <vector>

#include "qslab/errors.hpp"
#include "qslab/lattice_pmf.hpp"
#include "qslab/quicksort_dist.hpp"
#include "qslab/rng.hpp"

namespace qslab {

// Terminal state of Phase I: every sublist of length >= r+1 has been split.
// Zero-length sublists count; after T active steps there are T+1 sublists
// of total length n - T.
struct Phase1Result {
    std::vector<std::int64_t> sublists;  // in creation order
    std::int64_t active_steps = 0;       // T
    std::int64_t comparisons = 0;
};

namespace detail {

// Largest-first sublist scheduler; ties broken toward the earliest-created
// sublist so runs are reproducible. Any selection policy gives the same
// law for the terminal sublist multiset, which is permutation-determined.
class SplitQueue {
public:
    explicit SplitQueue(std::int64_t first_len, std::int64_t split_min) : split_min_(split_min) {
        push(first_len);
    }

    bool has_work() const { return !heap_.empty(); }

    // Pops the largest splittable sublist and returns its length.
    std::int64_t pop() {
        const auto [len, neg_idx] = heap_.top();
        heap_.pop();
        alive_[static_cast<std::size_t>(-neg_idx)] = 0;
        return len;
    }

    void push(std::int64_t len) {
        items_.push_back(len);
        alive_.push_back(1);
        if (len >= split_min_)
            heap_.emplace(len, -static_cast<std::int64_t>(items_.size() - 1));
    }

    std::vector<std::int64_t> surviving() const {
        std::vector<std::int64_t> out;
        out.reserve(items_.size());
        for (std::size_t i = 0; i < items_.size(); ++i)
            if (alive_[i]) out.push_back(items_[i]);
        return out;
    }

private:
    std::int64_t split_min_;
    std::vector<std::int64_t> items_;
    std::vector<char> alive_;
    std::priority_queue<std::pair<std::int64_t, std::int64_t>> heap_;
};

}  // namespace detail

// For n <= r, Phase I ends immediately with the single original list.
inline Phase1Result run_phase1(std::int64_t n, std::int64_t r, Xoshiro256ss& rng) {
    if (r % 2 != 0) throw std::invalid_argument("run_phase1: r must be even");
    if (r < 2 || n < 0) throw std::invalid_argument("run_phase1: need r >= 2 and n >= 0");
    detail::SplitQueue queue(n, r + 1);
    Phase1Result res;
    while (queue.has_work() && res.active_steps < n) {
        const std::int64_t len = queue.pop();
        const auto pivot = static_cast<std::int64_t>(rng.uniform_1_to_n(static_cast<std::uint64_t>(len)));
        queue.push(pivot - 1);
        queue.push(len - pivot);
        ++res.active_steps;
        res.comparisons += len - 1;
    }
    res.sublists = queue.surviving();
    return res;
}

inline Phase1Result run_phase1(std::int64_t n, std::int64_t r, std::uint64_t seed) {
    Xoshiro256ss rng(seed);
    return run_phase1(n, r, rng);
}

// X_{n,r}: number of terminal sublists with length in [r/2, r].
inline std::int64_t count_medium_sublists(const Phase1Result& res, std::int64_t r) {
    std::int64_t count = 0;
    for (const std::int64_t len : res.sublists)
        if (len >= r / 2 && len <= r) ++count;
    return count;
}

// E X_{n,r}: zero below r/2, one through r, then (n+1)/(r+1) (which also
// matches at n = r).
inline double xi(std::int64_t n, std::int64_t r) {
    if (n < 0) throw std::invalid_argument("xi: n < 0");
    if (r < 2 || r % 2 != 0) throw std::invalid_argument("xi: r must be even and >= 2");
    if (n < r / 2) return 0.0;
    if (n <= r) return 1.0;
    return static_cast<double>(n + 1) / static_cast<double>(r + 1);
}

enum class DecompKind { plain, truncated, binomial };

// One realized split Q_n = A + B. `b_parts` holds the raw comparison counts
// of the selected instances (for the binomial kind, the per-instance counts
// minus 2, i.e. 0/1 values); everything else is accounted in `a`, so that
// the integer identity a + sum(b_parts) (+ 2*ceil(cn) for the binomial
// kind when E holds) = total_comparisons is exact on every run. For the
// truncated kind, `centers` holds z_{r_i}, and b_parts[i] - centers[i] is
// the centered part the class checks consume.
struct DecompositionSample {
    DecompKind kind = DecompKind::plain;
    std::int64_t a = 0;
    std::vector<std::int64_t> b_parts;
    std::vector<std::int64_t> part_scales;
    std::vector<double> centers;
    bool e_occurred = false;
    std::int64_t total_comparisons = 0;
    Phase1Result phase1;

    std::int64_t b_total() const {
        return std::accumulate(b_parts.begin(), b_parts.end(), std::int64_t{0});
    }
};

// Plain decomposition: select s = ceil(n/(3r)) medium sublists (earliest
// created first), run QuickSort on everything, and book the selected runs
// as B parts.
inline DecompositionSample sample_decomposition(std::int64_t n, std::int64_t r,
                                                std::uint64_t seed) {
    if (r % 2 != 0 || r < 20) throw std::invalid_argument("sample_decomposition: need even r >= 20");
    if (n < 5 * r) throw std::invalid_argument("sample_decomposition: need n >= 5r");
    Xoshiro256ss rng(seed);
    DecompositionSample out;
    out.kind = DecompKind::plain;
    out.phase1 = run_phase1(n, r, rng);

    const std::int64_t s = (n + 3 * r - 1) / (3 * r);
    out.e_occurred = count_medium_sublists(out.phase1, r) >= s;

    out.a = out.phase1.comparisons;
    out.total_comparisons = out.phase1.comparisons;
    std::int64_t selected = 0;
    for (const std::int64_t len : out.phase1.sublists) {
        const std::int64_t comps = sample_qn(len, rng);
        out.total_comparisons += comps;
        const bool medium = len >= r / 2 && len <= r;
        if (out.e_occurred && medium && selected < s) {
            out.b_parts.push_back(comps);
            out.part_scales.push_back(len);
            ++selected;
        } else {
            out.a += comps;
        }
    }
    return out;
}

// Conditional law of Q_{r'} given the truncation window
// [q_{r'} - 2r', q_{r'} + 2r'], plus its mean z_{r'}. The law centered at z
// is the D_r member the smoothing argument uses.
struct TruncatedPartLaw {
    LatticePmf conditional;
    double z = 0.0;  // E[Q_{r'} | window]
    std::int64_t r_prime = 0;
    double window_prob = 0.0;
};

inline TruncatedPartLaw truncated_part_law(const QnTable& table, std::int64_t r_prime) {
    if (r_prime > table.n_max())
        throw size_error("truncated_part_law: r' beyond the exact-pmf table");
    const LatticePmf& p = table.pmf(static_cast<int>(r_prime));
    const double q = table.mean(static_cast<int>(r_prime));
    const auto lo = static_cast<std::int64_t>(std::ceil(q - 2.0 * static_cast<double>(r_prime)));
    const auto hi = static_cast<std::int64_t>(std::floor(q + 2.0 * static_cast<double>(r_prime)));
    std::int64_t from = std::max(lo, p.min());
    std::int64_t to = std::min(hi, p.max());
    while (from <= to && p.at(from) == 0.0) ++from;
    while (to >= from && p.at(to) == 0.0) --to;
    if (from > to) throw std::invalid_argument("truncated_part_law: empty window");
    long double mass = 0.0L;
    for (std::int64_t x = from; x <= to; ++x) mass += p.at(x);
    std::vector<double> probs;
    probs.reserve(static_cast<std::size_t>(to - from + 1));
    for (std::int64_t x = from; x <= to; ++x)
        probs.push_back(static_cast<double>(p.at(x) / static_cast<double>(mass)));
    TruncatedPartLaw law{LatticePmf(from, std::move(probs)), 0.0, r_prime,
                         static_cast<double>(mass)};
    law.z = moments(law.conditional).mean;
    return law;
}

struct TruncatedDecompOptions {
    std::int64_t r0 = 20;
};

// Truncated decomposition: among t = ceil(n/(3r)) medium candidates, keep
// the first s = ceil(c2 n / r) whose comparison counts fall inside their
// truncation windows, and center those by z_{r_i}.
inline DecompositionSample sample_truncated_decomposition(std::int64_t n, std::int64_t r,
                                                          double c1, double c2,
                                                          std::uint64_t seed,
                                                          const QnTable& table,
                                                          TruncatedDecompOptions opts = {}) {
    if (r % 2 != 0) throw std::invalid_argument("sample_truncated_decomposition: r must be even");
    if (r < opts.r0) throw std::invalid_argument("sample_truncated_decomposition: r < r0");
    if (!(c1 > 0.0 && c1 < 1.0) || !(c2 > 0.0))
        throw std::invalid_argument("sample_truncated_decomposition: bad constants");
    if (static_cast<double>(r) > c2 * static_cast<double>(n))
        throw std::invalid_argument("sample_truncated_decomposition: need r <= c2 n");
    if (r > table.n_max())
        throw size_error("sample_truncated_decomposition: r beyond the exact-pmf table");

    Xoshiro256ss rng(seed);
    DecompositionSample out;
    out.kind = DecompKind::truncated;
    out.phase1 = run_phase1(n, r, rng);

    const std::int64_t t = (n + 3 * r - 1) / (3 * r);
    const auto s = static_cast<std::int64_t>(
        std::ceil(c2 * static_cast<double>(n) / static_cast<double>(r)));
    const bool expanded = count_medium_sublists(out.phase1, r) >= t;

    out.a = out.phase1.comparisons;
    out.total_comparisons = out.phase1.comparisons;

    struct Candidate {
        std::int64_t len;
        std::int64_t comps;
        bool window_hit;
    };
    std::vector<Candidate> candidates;
    std::int64_t taken = 0;
    for (const std::int64_t len : out.phase1.sublists) {
        const std::int64_t comps = sample_qn(len, rng);
        out.total_comparisons += comps;
        const bool medium = len >= r / 2 && len <= r;
        if (expanded && medium && taken < t) {
            const double q = table.mean(static_cast<int>(len));
            const bool hit = std::fabs(static_cast<double>(comps) - q) <=
                             2.0 * static_cast<double>(len);
            candidates.push_back({len, comps, hit});
            ++taken;
        } else {
            out.a += comps;
        }
    }

    std::int64_t hits = 0;
    for (const auto& cand : candidates) hits += cand.window_hit ? 1 : 0;
    out.e_occurred = expanded && hits >= s;

    std::int64_t kept = 0;
    for (const auto& cand : candidates) {
        if (out.e_occurred && cand.window_hit && kept < s) {
            out.b_parts.push_back(cand.comps);
            out.part_scales.push_back(cand.len);
            out.centers.push_back(truncated_part_law(table, cand.len).z);
            ++kept;
        } else {
            out.a += cand.comps;
        }
    }
    return out;
}

struct BinomialDecompOptions {
    std::int64_t n0 = 3;
    double c_max = 1.0 / 3.0;
};

// Binomial decomposition: expand (splitting only sublists of length >= 4)
// until ceil(cn) size-3 leaves exist; given success, the number of selected
// instances taking three comparisons is Bi(ceil(cn), 2/3).
inline DecompositionSample sample_binomial_decomposition(std::int64_t n, double c,
                                                         std::uint64_t seed,
                                                         BinomialDecompOptions opts = {}) {
    if (n < opts.n0) throw std::invalid_argument("sample_binomial_decomposition: n < n0");
    if (!(c > 0.0 && c <= opts.c_max))
        throw std::invalid_argument("sample_binomial_decomposition: c outside (0, c_max]");

    Xoshiro256ss rng(seed);
    DecompositionSample out;
    out.kind = DecompKind::binomial;
    const auto target = static_cast<std::int64_t>(std::ceil(c * static_cast<double>(n)));

    detail::SplitQueue queue(n, 4);
    std::int64_t count3 = (n == 3) ? 1 : 0;
    while (count3 < target && queue.has_work() && out.phase1.active_steps < n) {
        const std::int64_t len = queue.pop();
        const auto pivot = static_cast<std::int64_t>(rng.uniform_1_to_n(static_cast<std::uint64_t>(len)));
        const std::int64_t left = pivot - 1, right = len - pivot;
        queue.push(left);
        queue.push(right);
        count3 += (left == 3) + (right == 3);
        ++out.phase1.active_steps;
        out.phase1.comparisons += len - 1;
    }
    out.phase1.sublists = queue.surviving();
    out.e_occurred = count3 >= target;

    out.a = out.phase1.comparisons;
    out.total_comparisons = out.phase1.comparisons;
    std::int64_t selected = 0;
    for (const std::int64_t len : out.phase1.sublists) {
        const std::int64_t comps = sample_qn(len, rng);
        out.total_comparisons += comps;
        if (out.e_occurred && len == 3 && selected < target) {
            out.b_parts.push_back(comps - 2);
            out.part_scales.push_back(3);
            ++selected;
        } else {
            out.a += comps;
        }
    }
    return out;
}

// ---- ensemble CSV ------------------------------------------------------

inline void write_ensemble_header(std::ostream& os) {
    os << "# qslab-ensemble-schema v1\n";
    os << "seed,n,r,T,X_nr,E,A,B_total\n";
}

inline void write_ensemble_row(std::ostream& os, std::uint64_t seed, std::int64_t n,
                               std::int64_t r, const DecompositionSample& sample) {
    std::int64_t x = 0;
    if (sample.kind == DecompKind::binomial) {
        for (const std::int64_t len : sample.phase1.sublists) x += (len == 3) ? 1 : 0;
    } else {
        x = count_medium_sublists(sample.phase1, r);
    }
    os << seed << ',' << n << ',' << r << ',' << sample.phase1.active_steps << ',' << x << ','
       << (sample.e_occurred ? 1 : 0) << ',' << sample.a << ',' << sample.b_total() << '\n';
}

}  // namespace qslab
