#pragma once

#include <stdexcept>
#include <string>

namespace xgbvar {

// Input could not be parsed (CLI exit code 1).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A linear system has no solution, e.g. a function is not representable
// at the requested interaction depth (CLI exit code 2).
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// A computation would exceed a configured size budget (CLI exit code 3).
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace xgbvar
