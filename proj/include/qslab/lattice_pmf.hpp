#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qslab/errors.hpp"
#include "qslab/fft.hpp"

namespace qslab {

inline constexpr double kMassTol = 1e-9;

// Finite-support probability mass function on the integer lattice.
// Stored as the smallest support point plus a dense weight vector whose
// first and last entries are strictly positive. Immutable after
// construction; all operations return new values.
//
// Unit mass is checked, never restored: a drift beyond kMassTol throws
// mass_drift_error instead of being silently renormalized.
class LatticePmf {
public:
    LatticePmf(std::int64_t offset, std::vector<double> probs)
        : offset_(offset), probs_(std::move(probs)) {
        validate();
    }

    static LatticePmf delta(std::int64_t point) { return LatticePmf(point, {1.0}); }

    // Uniform law on the integer range [lo, hi].
    static LatticePmf uniform_range(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw std::invalid_argument("uniform_range: hi < lo");
        const auto len = static_cast<std::size_t>(hi - lo + 1);
        return LatticePmf(lo, std::vector<double>(len, 1.0 / static_cast<double>(len)));
    }

    std::int64_t offset() const { return offset_; }
    std::int64_t min() const { return offset_; }
    std::int64_t max() const { return offset_ + static_cast<std::int64_t>(probs_.size()) - 1; }
    std::size_t size() const { return probs_.size(); }
    const std::vector<double>& probs() const { return probs_; }

    // Mass at lattice point x (zero outside the support window).
    double at(std::int64_t x) const {
        if (x < min() || x > max()) return 0.0;
        return probs_[static_cast<std::size_t>(x - offset_)];
    }

    double total_mass() const {
        long double s = 0.0L;
        for (double p : probs_) s += p;
        return static_cast<double>(s);
    }

private:
    void validate() const {
        if (probs_.empty()) throw std::invalid_argument("LatticePmf: empty weight vector");
        for (double p : probs_) {
            if (!(p >= 0.0)) throw std::invalid_argument("LatticePmf: negative or NaN weight");
        }
        if (probs_.front() <= 0.0 || probs_.back() <= 0.0)
            throw std::invalid_argument("LatticePmf: support not tight (zero end weight)");
        const double drift = std::fabs(total_mass() - 1.0);
        if (drift > kMassTol)
            throw mass_drift_error("LatticePmf: mass drift " + std::to_string(drift));
    }

    std::int64_t offset_;
    std::vector<double> probs_;
};

// Build a pmf from (point, weight) pairs. Duplicate points merge by
// summation; weights are normalized by their (positive) total.
inline LatticePmf from_point_masses(const std::vector<std::pair<std::int64_t, double>>& entries) {
    if (entries.empty()) throw std::invalid_argument("from_point_masses: empty input");
    std::map<std::int64_t, double> merged;
    long double total = 0.0L;
    for (const auto& [x, w] : entries) {
        if (!(w >= 0.0)) throw std::invalid_argument("from_point_masses: negative weight");
        merged[x] += w;
        total += w;
    }
    if (!(total > 0.0L)) throw std::invalid_argument("from_point_masses: all weights zero");
    while (!merged.empty() && merged.begin()->second == 0.0) merged.erase(merged.begin());
    while (!merged.empty() && std::prev(merged.end())->second == 0.0)
        merged.erase(std::prev(merged.end()));
    const std::int64_t lo = merged.begin()->first;
    const std::int64_t hi = std::prev(merged.end())->first;
    std::vector<double> probs(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (const auto& [x, w] : merged)
        probs[static_cast<std::size_t>(x - lo)] = static_cast<double>(w / static_cast<double>(total));
    return LatticePmf(lo, std::move(probs));
}

struct ConvolveOptions {
    enum class Path { automatic, schoolbook, transform };
    Path path = Path::automatic;
    // Combined support size below which the direct product is used.
    std::size_t schoolbook_threshold = 4096;
    std::size_t max_result_len = std::size_t{1} << 21;
};

namespace detail {

inline std::vector<double> convolve_schoolbook(const std::vector<double>& a,
                                               const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
    }
    return out;
}

// Transform-path results carry FFT roundoff ~1e-16; entries below this are
// indistinguishable from noise and get clamped/trimmed.
inline constexpr double kFftNoiseFloor = 1e-15;

}  // namespace detail

// Law of the independent sum. Offsets add; the transform path truncates
// values below the FFT noise floor (the schoolbook path is exact to double
// rounding and preserves arbitrarily small tail masses).
inline LatticePmf convolve(const LatticePmf& p, const LatticePmf& q,
                           const ConvolveOptions& opts = {}) {
    const std::size_t out_len = p.size() + q.size() - 1;
    if (out_len > opts.max_result_len)
        throw size_error("convolve: result support " + std::to_string(out_len) +
                         " exceeds cap " + std::to_string(opts.max_result_len));
    const bool direct =
        opts.path == ConvolveOptions::Path::schoolbook ||
        (opts.path == ConvolveOptions::Path::automatic &&
         p.size() + q.size() <= opts.schoolbook_threshold);
    std::vector<double> out;
    if (direct) {
        out = detail::convolve_schoolbook(p.probs(), q.probs());
        // end masses can underflow to exact zero in long convolution chains
        std::size_t first = 0, last = out.size();
        while (first < last && out[first] == 0.0) ++first;
        while (last > first && out[last - 1] == 0.0) --last;
        if (first == last) throw mass_drift_error("convolve: all mass underflowed");
        if (first != 0 || last != out.size()) {
            std::vector<double> trimmed(out.begin() + static_cast<std::ptrdiff_t>(first),
                                        out.begin() + static_cast<std::ptrdiff_t>(last));
            return LatticePmf(p.offset() + q.offset() + static_cast<std::int64_t>(first),
                              std::move(trimmed));
        }
    } else {
        out = fft::convolve_real(p.probs(), q.probs());
        for (double& v : out) {
            if (v < detail::kFftNoiseFloor) v = 0.0;
        }
        std::size_t first = 0, last = out.size();
        while (first < last && out[first] == 0.0) ++first;
        while (last > first && out[last - 1] == 0.0) --last;
        if (first == last) throw mass_drift_error("convolve: transform path lost all mass");
        std::vector<double> trimmed(out.begin() + static_cast<std::ptrdiff_t>(first),
                                    out.begin() + static_cast<std::ptrdiff_t>(last));
        return LatticePmf(p.offset() + q.offset() + static_cast<std::int64_t>(first),
                          std::move(trimmed));
    }
    return LatticePmf(p.offset() + q.offset(), std::move(out));
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double abs_third_central = 0.0;  // sum p(x) |x - mean|^3
};

inline Moments moments(const LatticePmf& p) {
    long double mean = 0.0L;
    for (std::size_t i = 0; i < p.size(); ++i)
        mean += static_cast<long double>(p.probs()[i]) *
                static_cast<long double>(p.offset() + static_cast<std::int64_t>(i));
    long double var = 0.0L, third = 0.0L;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const long double d =
            static_cast<long double>(p.offset() + static_cast<std::int64_t>(i)) - mean;
        const long double w = p.probs()[i];
        var += w * d * d;
        third += w * d * d * (d < 0 ? -d : d);
    }
    return Moments{static_cast<double>(mean), static_cast<double>(var),
                   static_cast<double>(third)};
}

// P(a < X <= b) over the half-open interval (a, b].
inline double interval_prob(const LatticePmf& p, double a, double b) {
    if (a > b) throw std::invalid_argument("interval_prob: a > b");
    const auto lo = static_cast<std::int64_t>(std::floor(a)) + 1;
    const auto hi = static_cast<std::int64_t>(std::floor(b));
    const std::int64_t from = std::max(lo, p.min());
    const std::int64_t to = std::min(hi, p.max());
    long double s = 0.0L;
    for (std::int64_t x = from; x <= to; ++x) s += p.at(x);
    return static_cast<double>(s);
}

// P(a <= X <= b) over the closed interval [a, b].
inline double closed_interval_prob(const LatticePmf& p, double a, double b) {
    if (a > b) throw std::invalid_argument("closed_interval_prob: a > b");
    const auto lo = static_cast<std::int64_t>(std::ceil(a));
    const auto hi = static_cast<std::int64_t>(std::floor(b));
    if (hi < lo) return 0.0;
    const std::int64_t from = std::max(lo, p.min());
    const std::int64_t to = std::min(hi, p.max());
    long double s = 0.0L;
    for (std::int64_t x = from; x <= to; ++x) s += p.at(x);
    return static_cast<double>(s);
}

// Cumulative sums for O(1) interval queries in the scanning checks.
class PrefixCdf {
public:
    explicit PrefixCdf(const LatticePmf& p) : offset_(p.offset()), cum_(p.size()) {
        long double s = 0.0L;
        for (std::size_t i = 0; i < p.size(); ++i) {
            s += p.probs()[i];
            cum_[i] = static_cast<double>(s);
        }
    }

    // P(X <= k)
    double cdf(std::int64_t k) const {
        if (k < offset_) return 0.0;
        const auto idx = static_cast<std::size_t>(k - offset_);
        if (idx >= cum_.size()) return cum_.back();
        return cum_[idx];
    }

    // P(a < X <= b)
    double half_open(double a, double b) const {
        const auto lo = static_cast<std::int64_t>(std::floor(a));
        const auto hi = static_cast<std::int64_t>(std::floor(b));
        return cdf(hi) - cdf(lo);
    }

    std::int64_t min() const { return offset_; }
    std::int64_t max() const { return offset_ + static_cast<std::int64_t>(cum_.size()) - 1; }

private:
    std::int64_t offset_;
    std::vector<double> cum_;
};

// ---- serialization ----------------------------------------------------

inline void to_json(nlohmann::json& j, const LatticePmf& p) {
    j = nlohmann::json{{"offset", p.offset()}, {"probs", p.probs()}};
}

inline LatticePmf pmf_from_json(const nlohmann::json& j) {
    return LatticePmf(j.at("offset").get<std::int64_t>(),
                      j.at("probs").get<std::vector<double>>());
}

// Two-column CSV (point, probability), full float precision.
inline void write_pmf_csv(std::ostream& os, const LatticePmf& p) {
    os << "point,probability\n";
    char buf[64];
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.probs()[i]);
        os << (p.offset() + static_cast<std::int64_t>(i)) << ',' << buf << '\n';
    }
}

inline LatticePmf read_pmf_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("read_pmf_csv: empty stream");
    std::vector<std::int64_t> points;
    std::vector<double> weights;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("read_pmf_csv: malformed row: " + line);
        points.push_back(std::stoll(line.substr(0, comma)));
        weights.push_back(std::stod(line.substr(comma + 1)));
    }
    if (points.empty()) throw std::invalid_argument("read_pmf_csv: no rows");
    const std::int64_t lo = *std::min_element(points.begin(), points.end());
    const std::int64_t hi = *std::max_element(points.begin(), points.end());
    std::vector<double> probs(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i)
        probs[static_cast<std::size_t>(points[i] - lo)] = weights[i];
    return LatticePmf(lo, std::move(probs));
}

}  // namespace qslab
