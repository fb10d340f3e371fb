#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "qslab/constants.hpp"

using namespace qslab;

namespace {
const std::string kConstantsPath =
    (std::filesystem::path(QSLAB_SOURCE_DIR) / "data" / "fitted_constants.json").string();
}

TEST_CASE("checked-in constants file matches the built-in defaults") {
    const FittedConstants file = load_constants(kConstantsPath);
    const FittedConstants defaults;
    const nlohmann::json a = file, b = defaults;
    CHECK(a.dump(2) == b.dump(2));
}

TEST_CASE("constants round trip through JSON") {
    const FittedConstants defaults;
    const nlohmann::json j = defaults;
    const auto back = j.get<FittedConstants>();
    CHECK(back.c1 == defaults.c1);
    CHECK(back.tail_C == defaults.tail_C);
    CHECK(back.llt_sup_256 == defaults.llt_sup_256);
    CHECK(back.schema_version == defaults.schema_version);
}

TEST_CASE("pinned values satisfy their structural constraints") {
    const FittedConstants fc;
    CHECK(fc.c1 > 0.0);
    CHECK(fc.c1 < 1.0);
    CHECK(fc.c2 > 0.0);
    CHECK(fc.binomial_c <= fc.binomial_c_max);
    CHECK(fc.llt_sup_128 <= fc.llt_sup_64);
    CHECK(fc.llt_sup_256 <= fc.llt_sup_128);
    CHECK(fc.semi_local_sup_128 <= fc.semi_local_sup_64 * (1.0 + fc.regression_slack));
    CHECK(fc.semi_local_sup_256 <= fc.semi_local_sup_128 * (1.0 + fc.regression_slack));
}
