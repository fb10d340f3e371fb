#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "qslab/lattice_pmf.hpp"
#include "qslab/rng.hpp"

using namespace qslab;

namespace {

LatticePmf law_q3() { return from_point_masses({{2, 1.0}, {3, 2.0}}); }

LatticePmf random_pmf(Xoshiro256ss& rng, int max_points = 40) {
    const auto points = 1 + rng.uniform_below(static_cast<std::uint64_t>(max_points));
    const auto offset = static_cast<std::int64_t>(rng.uniform_below(200)) - 100;
    std::vector<std::pair<std::int64_t, double>> entries;
    for (std::uint64_t i = 0; i < points; ++i)
        entries.emplace_back(offset + static_cast<std::int64_t>(i), rng.uniform01() + 1e-3);
    return from_point_masses(entries);
}

}  // namespace

TEST_CASE("from_point_masses basic laws") {
    const auto delta5 = from_point_masses({{5, 1.0}});
    CHECK(delta5.min() == 5);
    CHECK(delta5.size() == 1);
    CHECK(delta5.at(5) == 1.0);

    const auto q3 = law_q3();
    CHECK(q3.at(2) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(q3.at(3) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));

    const auto merged = from_point_masses({{0, 0.5}, {0, 0.5}});
    CHECK(merged.size() == 1);
    CHECK(merged.at(0) == 1.0);
}

TEST_CASE("from_point_masses rejects bad input") {
    CHECK_THROWS_AS(from_point_masses({}), std::invalid_argument);
    CHECK_THROWS_AS(from_point_masses({{1, 0.0}, {2, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(from_point_masses({{1, -0.5}, {2, 1.5}}), std::invalid_argument);
}

TEST_CASE("mass drift is an error, not a silent fix") {
    CHECK_THROWS_AS(LatticePmf(0, {0.5, 0.4}), mass_drift_error);
    CHECK_THROWS_AS(LatticePmf(0, std::vector<double>{0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("convolve deltas and identity") {
    const auto d = convolve(LatticePmf::delta(2), LatticePmf::delta(3));
    CHECK(d.size() == 1);
    CHECK(d.at(5) == 1.0);

    const auto q3 = law_q3();
    const auto same = convolve(q3, LatticePmf::delta(0));
    REQUIRE(same.size() == q3.size());
    CHECK(same.offset() == q3.offset());
    for (std::size_t i = 0; i < q3.size(); ++i) CHECK(same.probs()[i] == q3.probs()[i]);
}

TEST_CASE("convolve law(Q3) with itself") {
    const auto q3 = law_q3();
    const auto c = convolve(q3, q3);
    CHECK(moments(c).mean == Catch::Approx(16.0 / 3.0).epsilon(1e-14));
    CHECK(c.at(4) == Catch::Approx(1.0 / 9.0).epsilon(1e-14));
    CHECK(c.at(5) == Catch::Approx(4.0 / 9.0).epsilon(1e-14));
    CHECK(c.at(6) == Catch::Approx(4.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("convolve respects the size cap") {
    ConvolveOptions opts;
    opts.max_result_len = 8;
    const auto a = LatticePmf::uniform_range(0, 5);
    CHECK_THROWS_AS(convolve(a, a, opts), size_error);
}

TEST_CASE("schoolbook and transform paths agree to 1e-10") {
    Xoshiro256ss rng(20260809);
    for (int rep = 0; rep < 4; ++rep) {
        // sizes straddling the default threshold
        std::vector<std::pair<std::int64_t, double>> ea, eb;
        for (int i = 0; i < 2100; ++i) ea.emplace_back(i, rng.uniform01() + 1e-4);
        for (int i = 0; i < 2050; ++i) eb.emplace_back(i - 400, rng.uniform01() + 1e-4);
        const auto a = from_point_masses(ea);
        const auto b = from_point_masses(eb);
        ConvolveOptions school, transform;
        school.path = ConvolveOptions::Path::schoolbook;
        transform.path = ConvolveOptions::Path::transform;
        const auto cs = convolve(a, b, school);
        const auto ct = convolve(a, b, transform);
        for (std::int64_t x = cs.min(); x <= cs.max(); ++x)
            CHECK(std::fabs(cs.at(x) - ct.at(x)) < 1e-10);
    }
}

TEST_CASE("convolution adds means and variances (randomized)") {
    Xoshiro256ss rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const auto a = random_pmf(rng);
        const auto b = random_pmf(rng);
        const auto c = convolve(a, b);
        const auto ma = moments(a), mb = moments(b), mc = moments(c);
        CHECK(std::fabs(mc.mean - (ma.mean + mb.mean)) < 1e-9);
        CHECK(std::fabs(mc.variance - (ma.variance + mb.variance)) < 1e-9);
        CHECK(std::fabs(c.total_mass() - 1.0) <= kMassTol);
    }
}

TEST_CASE("moments of simple laws") {
    const auto m7 = moments(LatticePmf::delta(7));
    CHECK(m7.mean == 7.0);
    CHECK(m7.variance == 0.0);
    CHECK(m7.abs_third_central == 0.0);

    const auto q3 = moments(law_q3());
    CHECK(q3.mean == Catch::Approx(8.0 / 3.0).epsilon(1e-15));
    CHECK(q3.variance == Catch::Approx(2.0 / 9.0).epsilon(1e-13));

    const auto rad = moments(from_point_masses({{-1, 1.0}, {1, 1.0}}));
    CHECK(rad.mean == 0.0);
    CHECK(rad.variance == 1.0);
    CHECK(rad.abs_third_central == 1.0);
}

TEST_CASE("interval_prob on half-open intervals") {
    const auto q3 = law_q3();
    CHECK(interval_prob(q3, 2.0, 3.0) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(interval_prob(q3, 2.5, 2.5) == 0.0);
    CHECK(interval_prob(q3, static_cast<double>(q3.min()) - 1.0,
                        static_cast<double>(q3.max())) == Catch::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(interval_prob(q3, 3.0, 2.0), std::invalid_argument);
}

TEST_CASE("half-open additivity over partitions") {
    Xoshiro256ss rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const auto p = random_pmf(rng);
        const double a = static_cast<double>(p.min()) - 2.0 + rng.uniform01();
        const double b = static_cast<double>(p.max()) + rng.uniform01();
        const double c = a + (b - a) * rng.uniform01();
        const double whole = interval_prob(p, a, b);
        const double split = interval_prob(p, a, c) + interval_prob(p, c, b);
        CHECK(whole == Catch::Approx(split).margin(1e-12));
    }
}

TEST_CASE("PrefixCdf matches direct interval sums") {
    Xoshiro256ss rng(13);
    const auto p = random_pmf(rng, 60);
    const PrefixCdf cdf(p);
    for (int rep = 0; rep < 200; ++rep) {
        const double a = static_cast<double>(p.min()) - 3.0 +
                         rng.uniform01() * static_cast<double>(p.size() + 4);
        const double b = a + rng.uniform01() * 20.0;
        CHECK(cdf.half_open(a, b) == Catch::Approx(interval_prob(p, a, b)).margin(1e-12));
    }
}

TEST_CASE("JSON round trip is lossless") {
    Xoshiro256ss rng(17);
    const auto p = random_pmf(rng);
    const nlohmann::json j = p;
    const auto q = pmf_from_json(j);
    REQUIRE(q.size() == p.size());
    CHECK(q.offset() == p.offset());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(q.probs()[i] == p.probs()[i]);
    const nlohmann::json j2 = q;
    CHECK(j.dump() == j2.dump());
}

TEST_CASE("CSV round trip is lossless") {
    Xoshiro256ss rng(19);
    const auto p = random_pmf(rng);
    std::stringstream ss;
    write_pmf_csv(ss, p);
    const std::string first = ss.str();
    std::stringstream in(first);
    const auto q = read_pmf_csv(in);
    REQUIRE(q.size() == p.size());
    CHECK(q.offset() == p.offset());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(q.probs()[i] == p.probs()[i]);
    std::stringstream ss2;
    write_pmf_csv(ss2, q);
    CHECK(first == ss2.str());
}
