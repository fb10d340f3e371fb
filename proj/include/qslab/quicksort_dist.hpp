#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <vector>

#include "qslab/errors.hpp"
#include "qslab/fft.hpp"
#include "qslab/lattice_pmf.hpp"
#include "qslab/rng.hpp"

namespace qslab {

// q_n = E Q_n: q_0 = q_1 = 0, q_n = (n-1) + (2/n) sum_{i<n} q_i.
inline std::vector<double> mean_recurrence(int n_max) {
    if (n_max < 0) throw std::invalid_argument("mean_recurrence: n_max < 0");
    std::vector<double> q(static_cast<std::size_t>(n_max) + 1, 0.0);
    long double running = 0.0L;  // sum of q_0..q_{n-1}
    for (int n = 2; n <= n_max; ++n) {
        running += q[static_cast<std::size_t>(n) - 1];
        q[static_cast<std::size_t>(n)] =
            static_cast<double>((n - 1) + 2.0L / n * running);
    }
    return q;
}

struct QnTableOptions {
    int n_max_cap = 512;
    // Up to this n the pivot-split sums use the direct product, which keeps
    // the far tails exact down to denormals and hence the support tight.
    int exact_tail_n = 64;
    // Above it, sums are accumulated in the frequency domain; entries below
    // this threshold are FFT noise and the support is trimmed there.
    double spectral_trim = 1e-15;
};

// Exact laws of Q_n for all n up to n_max, built from the pivot recurrence
//   law(Q_n) = (1/n) sum_i shift(law(Q_{i-1}) * law(Q_{n-i}), n-1),
// using the i <-> n+1-i pivot symmetry to halve the work.
class QnTable {
public:
    explicit QnTable(int n_max, QnTableOptions opts = {}) : opts_(opts) {
        if (n_max < 0) throw std::invalid_argument("QnTable: n_max < 0");
        if (n_max > opts.n_max_cap)
            throw size_error("QnTable: n_max " + std::to_string(n_max) +
                             " exceeds cap " + std::to_string(opts.n_max_cap));
        means_ = mean_recurrence(n_max);
        build(n_max);
    }

    int n_max() const { return static_cast<int>(pmfs_.size()) - 1; }

    const LatticePmf& pmf(int n) const {
        if (n < 0 || n > n_max()) throw std::invalid_argument("QnTable::pmf: n out of range");
        return pmfs_[static_cast<std::size_t>(n)];
    }

    double mean(int n) const {
        if (n < 0 || n > n_max()) throw std::invalid_argument("QnTable::mean: n out of range");
        return means_[static_cast<std::size_t>(n)];
    }

    const std::vector<double>& means() const { return means_; }

private:
    // Dense weights of pmfs_[k] laid out at absolute positions 0..max(),
    // so that spectra of different laws multiply with consistent alignment.
    std::vector<double> absolute_padded(int k) const {
        const LatticePmf& p = pmfs_[static_cast<std::size_t>(k)];
        std::vector<double> out(static_cast<std::size_t>(p.max()) + 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i)
            out[static_cast<std::size_t>(p.offset()) + i] = p.probs()[i];
        return out;
    }

    void verify_mean(int n) const {
        const double qn = means_[static_cast<std::size_t>(n)];
        const double got = moments(pmfs_[static_cast<std::size_t>(n)]).mean;
        if (std::fabs(got - qn) > 1e-9 * (1.0 + qn))
            throw mass_drift_error("QnTable: mean of law " + std::to_string(n) +
                                   " drifted from the recurrence value");
    }

    void build(int n_max) {
        pmfs_.reserve(static_cast<std::size_t>(n_max) + 1);
        pmfs_.push_back(LatticePmf::delta(0));  // n = 0
        if (n_max >= 1) pmfs_.push_back(LatticePmf::delta(0));
        if (n_max >= 2) pmfs_.push_back(LatticePmf::delta(1));

        for (int n = 3; n <= std::min(n_max, opts_.exact_tail_n); ++n) build_direct(n);

        if (n_max > opts_.exact_tail_n) {
            std::vector<std::vector<std::complex<double>>> spectra;
            std::size_t fft_n = 0;
            for (int n = opts_.exact_tail_n + 1; n <= n_max; ++n)
                build_spectral(n, spectra, fft_n);
        }
    }

    // Direct-product accumulation; exact to double rounding, keeps the full
    // support (min >= n-1, max = n(n-1)/2 exactly).
    void build_direct(int n) {
        const std::int64_t hi = static_cast<std::int64_t>(n - 1) * (n - 2) / 2;
        std::vector<double> acc(static_cast<std::size_t>(hi) + 1, 0.0);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (int i = 1; 2 * i <= n + 1; ++i) {
            const int a = i - 1, b = n - i;
            const double w = (2 * i == n + 1) ? inv_n : 2.0 * inv_n;
            const LatticePmf& pa = pmfs_[static_cast<std::size_t>(a)];
            const LatticePmf& pb = pmfs_[static_cast<std::size_t>(b)];
            const auto base =
                static_cast<std::size_t>(pa.offset()) + static_cast<std::size_t>(pb.offset());
            for (std::size_t ia = 0; ia < pa.size(); ++ia) {
                const double wa = w * pa.probs()[ia];
                if (wa == 0.0) continue;
                double* out = acc.data() + base + ia;
                const double* pq = pb.probs().data();
                const std::size_t nb = pb.size();
                for (std::size_t ib = 0; ib < nb; ++ib) out[ib] += wa * pq[ib];
            }
        }
        std::size_t first = 0, last = acc.size();
        while (first < last && acc[first] == 0.0) ++first;
        while (last > first && acc[last - 1] == 0.0) --last;
        std::vector<double> probs(acc.begin() + static_cast<std::ptrdiff_t>(first),
                                  acc.begin() + static_cast<std::ptrdiff_t>(last));
        pmfs_.emplace_back(static_cast<std::int64_t>(first) + (n - 1), std::move(probs));
        verify_mean(n);
    }

    // Frequency-domain accumulation: one spectrum per stored law, pairwise
    // products summed per pivot, a single inverse transform per n.
    void build_spectral(int n, std::vector<std::vector<std::complex<double>>>& spectra,
                        std::size_t& fft_n) {
        const std::size_t need =
            static_cast<std::size_t>(static_cast<std::int64_t>(n - 1) * (n - 2) / 2) + 1;
        if (fft_n < need) {
            fft_n = fft::next_pow2(need);
            spectra.clear();
        }
        while (spectra.size() < pmfs_.size())
            spectra.push_back(
                fft::forward_half(absolute_padded(static_cast<int>(spectra.size())), fft_n));

        const std::size_t half = fft_n / 2 + 1;
        std::vector<std::complex<double>> acc(half, {0.0, 0.0});
        for (int i = 1; 2 * i <= n + 1; ++i) {
            const auto& sa = spectra[static_cast<std::size_t>(i - 1)];
            const auto& sb = spectra[static_cast<std::size_t>(n - i)];
            const double w = (2 * i == n + 1) ? 1.0 : 2.0;
            for (std::size_t b = 0; b < half; ++b) acc[b] += w * sa[b] * sb[b];
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& v : acc) v *= inv_n;

        std::vector<double> time = fft::inverse_half(acc, fft_n);
        std::size_t first = 0, last = time.size();
        while (first < last && time[first] < opts_.spectral_trim) ++first;
        while (last > first && time[last - 1] < opts_.spectral_trim) --last;
        if (first == last) throw mass_drift_error("QnTable: spectral law lost all mass");
        std::vector<double> probs(time.begin() + static_cast<std::ptrdiff_t>(first),
                                  time.begin() + static_cast<std::ptrdiff_t>(last));
        for (double& v : probs) v = std::max(v, 0.0);

        pmfs_.emplace_back(static_cast<std::int64_t>(first) + (n - 1), std::move(probs));
        verify_mean(n);
        spectra.push_back(fft::forward_half(absolute_padded(n), fft_n));
    }

    QnTableOptions opts_;
    std::vector<double> means_;
    std::vector<LatticePmf> pmfs_;
};

// One-shot law of Q_n (builds the table up to n; prefer QnTable when several
// laws are needed).
inline LatticePmf exact_pmf(int n, QnTableOptions opts = {}) {
    return QnTable(n, opts).pmf(n);
}

// Independent oracle: enumerate all n! inputs and run QuickSort with the
// first element as pivot (equivalent in law to uniform random pivots), with
// exact integer counting. Hard-capped at n = 9.
inline LatticePmf brute_force_pmf(int n) {
    if (n < 0) throw std::invalid_argument("brute_force_pmf: n < 0");
    if (n > 9) throw size_error("brute_force_pmf: n > 9 not enumerable in reasonable time");
    if (n <= 1) return LatticePmf::delta(0);

    const auto count_comparisons = [](std::vector<int> v, const auto& self) -> std::int64_t {
        if (v.size() <= 1) return 0;
        const int pivot = v.front();
        std::vector<int> less, greater;
        for (std::size_t i = 1; i < v.size(); ++i)
            (v[i] < pivot ? less : greater).push_back(v[i]);
        return static_cast<std::int64_t>(v.size()) - 1 + self(std::move(less), self) +
               self(std::move(greater), self);
    };

    const std::int64_t worst = static_cast<std::int64_t>(n) * (n - 1) / 2;
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(worst) + 1, 0);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    std::uint64_t total = 0;
    do {
        ++counts[static_cast<std::size_t>(count_comparisons(perm, count_comparisons))];
        ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::size_t first = 0, last = counts.size();
    while (first < last && counts[first] == 0) ++first;
    while (last > first && counts[last - 1] == 0) --last;
    std::vector<double> probs;
    probs.reserve(last - first);
    for (std::size_t i = first; i < last; ++i)
        probs.push_back(static_cast<double>(counts[i]) / static_cast<double>(total));
    return LatticePmf(static_cast<std::int64_t>(first), std::move(probs));
}

// One draw of Q_n from a caller-owned generator. The comparison count
// depends only on the sizes of the recursive calls, so the simulation walks
// sizes with an explicit stack.
inline std::int64_t sample_qn(std::int64_t n, Xoshiro256ss& rng) {
    if (n < 0) throw std::invalid_argument("sample_qn: n < 0");
    std::int64_t total = 0;
    std::vector<std::int64_t> stack;
    if (n > 1) stack.push_back(n);
    while (!stack.empty()) {
        const std::int64_t len = stack.back();
        stack.pop_back();
        total += len - 1;
        const auto pivot = static_cast<std::int64_t>(rng.uniform_1_to_n(static_cast<std::uint64_t>(len)));
        if (pivot - 1 > 1) stack.push_back(pivot - 1);
        if (len - pivot > 1) stack.push_back(len - pivot);
    }
    return total;
}

inline std::int64_t sample_qn(std::int64_t n, std::uint64_t seed) {
    Xoshiro256ss rng(seed);
    return sample_qn(n, rng);
}

// The centered-and-rescaled view Q_n* = (Q_n - q_n) / n.
class NormalizedView {
public:
    NormalizedView(const LatticePmf& base, int n, double qn) : base_(&base), n_(n), qn_(qn) {
        if (n < 1) throw std::invalid_argument("NormalizedView: n must be >= 1");
        const double m = (moments(base).mean - qn) / n;
        if (std::fabs(m) > 1e-9)
            throw std::invalid_argument("NormalizedView: centered mean " + std::to_string(m) +
                                        " exceeds tolerance");
    }
    NormalizedView(const QnTable& table, int n) : NormalizedView(table.pmf(n), n, table.mean(n)) {}

    int n() const { return n_; }
    double qn() const { return qn_; }
    const LatticePmf& base() const { return *base_; }

    // P(Q_n* in [a, b])
    double prob_closed(double a, double b) const {
        return closed_interval_prob(*base_, qn_ + a * n_, qn_ + b * n_);
    }
    // P(Q_n* in (a, b])
    double prob_half_open(double a, double b) const {
        return interval_prob(*base_, qn_ + a * n_, qn_ + b * n_);
    }
    // F_n(x) = P(Q_n* <= x)
    double cdf(double x) const {
        return closed_interval_prob(*base_, static_cast<double>(base_->min()), qn_ + x * n_);
    }

private:
    const LatticePmf* base_;
    int n_;
    double qn_;
};

// min over n in [n_lo, n_hi] of min(P(Q_n* in [-2,-1]), P(Q_n* in [1,2])).
// This is the empirical stand-in for the variance constant c1; it is an
// honest minimum, and windows with no support mass make it zero.
inline double estimate_c1(const QnTable& table, int n_lo, int n_hi) {
    if (n_lo > n_hi) throw std::invalid_argument("estimate_c1: empty range");
    if (n_lo < 1 || n_hi > table.n_max())
        throw std::invalid_argument("estimate_c1: range outside table");
    double c1 = 1.0;
    for (int n = n_lo; n <= n_hi; ++n) {
        const NormalizedView view(table, n);
        c1 = std::min({c1, view.prob_closed(-2.0, -1.0), view.prob_closed(1.0, 2.0)});
    }
    return c1;
}

// Summary rows (n, q_n, variance, support_min, support_max).
inline void write_qn_summary_csv(std::ostream& os, const QnTable& table) {
    os << "n,q_n,variance,support_min,support_max\n";
    char buf[128];
    for (int n = 0; n <= table.n_max(); ++n) {
        const Moments m = moments(table.pmf(n));
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%lld,%lld\n", n, table.mean(n),
                      m.variance, static_cast<long long>(table.pmf(n).min()),
                      static_cast<long long>(table.pmf(n).max()));
        os << buf;
    }
}

}  // namespace qslab
