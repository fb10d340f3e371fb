#pragma once

#include <stdexcept>
#include <string>

namespace qslab {

// Result support would exceed a configured cap, or an input is beyond a
// hard size limit (e.g. brute-force enumeration past 9!).
class size_error : public std::runtime_error {
public:
    explicit size_error(const std::string& what) : std::runtime_error(what) {}
};

// A probability vector drifted away from unit mass; never silently
// renormalized, so the bug surfaces where it happened.
class mass_drift_error : public std::runtime_error {
public:
    explicit mass_drift_error(const std::string& what) : std::runtime_error(what) {}
};

// A density estimate does not cover the x-range a check needs.
class coverage_error : public std::runtime_error {
public:
    explicit coverage_error(const std::string& what) : std::runtime_error(what) {}
};

// Root-finding target outside the attainable range (e.g. tilt mean outside
// the open support hull).
class infeasible_error : public std::runtime_error {
public:
    explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

// A convolution component failed its distribution-class membership check.
class class_membership_error : public std::runtime_error {
public:
    class_membership_error(const std::string& what, int component_index)
        : std::runtime_error(what), component_index(component_index) {}
    int component_index;
};

}  // namespace qslab
