#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "qslab/smoothing.hpp"

namespace qslab {

// Constants the theory leaves abstract, pinned once from pilot runs and
// used as regression thresholds thereafter. The checked-in copy lives at
// data/fitted_constants.json and must stay in sync with defaults(); the
// fit_constants tool regenerates the file.
struct FittedConstants {
    int schema_version = 1;

    // class machinery
    double c1 = 0.009711500841877121;  // min window mass over n in [c1_lo, c1_hi]
    int c1_range_lo = 128;
    int c1_range_hi = 256;
    double c2 = 0.01;    // truncated-decomposition sizing constant
    double c3 = 0.08111728083308073;  // decomposition failure exponent in 1 - e^{-c3 n / r}
    double r0 = 20.0;

    // binomial decomposition
    double binomial_c = 0.05;
    double binomial_c_max = 1.0 / 3.0;

    // classical bound constants
    double be_A = 0.56;                     // Berry-Esseen absolute constant
    double tail_C = 1.0894028948962946;     // interval tail bound, fitted
    double tail_c = 0.125;                  // interval tail bound exponent, fitted
    double tilt_ratio_const = 10.0;
    double tilt_ratio_K = 4.0;
    double schedule_c_hat = kDefaultScheduleBudget;

    // pinned regression values from the pilot run
    double density_self_sup = 0.02;    // disjoint-seed MC agreement
    double density_cross_sup = 0.03;   // MC vs fixed-point agreement on |x| <= 2
    double semi_local_sup_64 = 0.046832511688809635;
    double semi_local_sup_128 = 0.040025651062402655;
    double semi_local_sup_256 = 0.036956635843820966;
    double llt_sup_64 = 0.12040981050241019;
    double llt_sup_128 = 0.06835717323581614;
    double llt_sup_256 = 0.041834600753446805;
    double regression_slack = 0.20;    // multiplicative slack on monotone sequences
    double flatness_round1_n256 = 0.39609442354569224;  // flatness at round-1 params
    double eta_fit_round1_n256 = 0.7569985993477494;    // fitted eta: flatness <= gamma * eta
};

inline void to_json(nlohmann::json& j, const FittedConstants& c) {
    j = nlohmann::json{{"schema_version", c.schema_version},
                       {"c1", c.c1},
                       {"c1_range_lo", c.c1_range_lo},
                       {"c1_range_hi", c.c1_range_hi},
                       {"c2", c.c2},
                       {"c3", c.c3},
                       {"r0", c.r0},
                       {"binomial_c", c.binomial_c},
                       {"binomial_c_max", c.binomial_c_max},
                       {"be_A", c.be_A},
                       {"tail_C", c.tail_C},
                       {"tail_c", c.tail_c},
                       {"tilt_ratio_const", c.tilt_ratio_const},
                       {"tilt_ratio_K", c.tilt_ratio_K},
                       {"schedule_c_hat", c.schedule_c_hat},
                       {"density_self_sup", c.density_self_sup},
                       {"density_cross_sup", c.density_cross_sup},
                       {"semi_local_sup_64", c.semi_local_sup_64},
                       {"semi_local_sup_128", c.semi_local_sup_128},
                       {"semi_local_sup_256", c.semi_local_sup_256},
                       {"llt_sup_64", c.llt_sup_64},
                       {"llt_sup_128", c.llt_sup_128},
                       {"llt_sup_256", c.llt_sup_256},
                       {"regression_slack", c.regression_slack},
                       {"flatness_round1_n256", c.flatness_round1_n256},
                       {"eta_fit_round1_n256", c.eta_fit_round1_n256}};
}

inline void from_json(const nlohmann::json& j, FittedConstants& c) {
    j.at("schema_version").get_to(c.schema_version);
    j.at("c1").get_to(c.c1);
    j.at("c1_range_lo").get_to(c.c1_range_lo);
    j.at("c1_range_hi").get_to(c.c1_range_hi);
    j.at("c2").get_to(c.c2);
    j.at("c3").get_to(c.c3);
    j.at("r0").get_to(c.r0);
    j.at("binomial_c").get_to(c.binomial_c);
    j.at("binomial_c_max").get_to(c.binomial_c_max);
    j.at("be_A").get_to(c.be_A);
    j.at("tail_C").get_to(c.tail_C);
    j.at("tail_c").get_to(c.tail_c);
    j.at("tilt_ratio_const").get_to(c.tilt_ratio_const);
    j.at("tilt_ratio_K").get_to(c.tilt_ratio_K);
    j.at("schedule_c_hat").get_to(c.schedule_c_hat);
    j.at("density_self_sup").get_to(c.density_self_sup);
    j.at("density_cross_sup").get_to(c.density_cross_sup);
    j.at("semi_local_sup_64").get_to(c.semi_local_sup_64);
    j.at("semi_local_sup_128").get_to(c.semi_local_sup_128);
    j.at("semi_local_sup_256").get_to(c.semi_local_sup_256);
    j.at("llt_sup_64").get_to(c.llt_sup_64);
    j.at("llt_sup_128").get_to(c.llt_sup_128);
    j.at("llt_sup_256").get_to(c.llt_sup_256);
    j.at("regression_slack").get_to(c.regression_slack);
    j.at("flatness_round1_n256").get_to(c.flatness_round1_n256);
    j.at("eta_fit_round1_n256").get_to(c.eta_fit_round1_n256);
}

inline FittedConstants load_constants(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_constants: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j.get<FittedConstants>();
}

inline void save_constants(const std::string& path, const FittedConstants& c) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_constants: cannot open " + path);
    const nlohmann::json j = c;
    out << j.dump(2) << '\n';
}

}  // namespace qslab
