#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace symflow {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- expression language ----

struct SyntaxError : Error {
    std::size_t offset;  // byte offset into the source string
    SyntaxError(const std::string& msg, std::size_t off)
        : Error(msg + " (at offset " + std::to_string(off) + ")"), offset(off) {}
};

struct UnknownIdentifier : Error {
    std::string name;
    std::size_t offset;
    UnknownIdentifier(const std::string& id, std::size_t off)
        : Error("unknown identifier '" + id + "' (at offset " + std::to_string(off) + ")"),
          name(id), offset(off) {}
};

struct UnboundVariable : Error {
    std::string name;
    explicit UnboundVariable(const std::string& id)
        : Error("unbound variable '" + id + "'"), name(id) {}
};

struct DomainError : Error {
    using Error::Error;
};

// ---- homogeneous-space constants ----

struct NonScalarKilling : Error {
    using Error::Error;
};

struct AllBetaZero : Error {
    using Error::Error;
};

struct UnknownSpace : Error {
    using Error::Error;
};

struct InvalidBracketTable : Error {
    using Error::Error;
};

// ---- grids and curvature ----

struct GridTooCoarse : Error {
    using Error::Error;
};

// ---- time integration ----

struct PositivityLost : Error {
    double time;
    PositivityLost(const std::string& msg, double t)
        : Error(msg + " (t = " + std::to_string(t) + ")"), time(t) {}
};

struct StabilityBound : Error {
    using Error::Error;
};

struct IncompatibleData : Error {
    // residuals[j][i]: mismatch between the initial fiber derivative and the
    // boundary map at end j for field i
    std::vector<std::vector<double>> residuals;
    IncompatibleData(const std::string& msg, std::vector<std::vector<double>> res)
        : Error(msg), residuals(std::move(res)) {}
};

struct GaugeDegenerate : Error {
    using Error::Error;
};

// ---- diagnostics ----

struct DegenerateFit : Error {
    using Error::Error;
};

// ---- configuration and artifacts ----

struct ConfigError : Error {
    std::string pointer;  // JSON pointer of the offending entry
    ConfigError(const std::string& msg, std::string ptr)
        : Error(msg + " (at " + ptr + ")"), pointer(std::move(ptr)) {}
};

struct MissingArtifacts : Error {
    using Error::Error;
};

}  // namespace symflow
