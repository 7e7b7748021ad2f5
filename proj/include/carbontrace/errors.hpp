#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace carbontrace {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file (bad JSON, missing fields, wrong types).
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input that violates a model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// The dispatch problem has no feasible solution.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// An internal identity failed; indicates a bug or corrupted intermediate data.
class InternalError : public Error {
public:
    using Error::Error;
};

// Directed cycle found where a DAG was required. Carries one witness cycle.
class CycleError : public ValidationError {
public:
    CycleError(const std::string& what, std::vector<int> cycle)
        : ValidationError(what), cycle_(std::move(cycle)) {}

    const std::vector<int>& cycle() const { return cycle_; }

private:
    std::vector<int> cycle_;
};

}  // namespace carbontrace
