#pragma once

#include <stdexcept>
#include <string>

namespace electroad {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments to a library call (bad dimensions, invalid ranges).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Newton iteration hit its cap, or an iterate left the admissible voltage band.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, int iterations) : Error(what), iterations_(iterations) {}
    int iterations() const noexcept { return iterations_; }

private:
    int iterations_;
};

/// The Newton Jacobian is numerically singular (operating point at or past the nose).
class SingularJacobian : public Error {
public:
    using Error::Error;
};

class PositionOutOfRange : public Error {
public:
    using Error::Error;
};

/// The two-bus quadratic has a negative discriminant.
class NoSolution : public Error {
public:
    using Error::Error;
};

/// Continuation step size underflowed before the fold was closed.
class TraceStall : public Error {
public:
    using Error::Error;
};

class InfeasibleAtOne : public Error {
public:
    using Error::Error;
};

/// Scenario document does not match the schema; key_path names the offending entry.
class SchemaError : public Error {
public:
    SchemaError(std::string key_path, const std::string& what)
        : Error(key_path.empty() ? what : key_path + ": " + what), key_path_(std::move(key_path)) {}
    const std::string& key_path() const noexcept { return key_path_; }

private:
    std::string key_path_;
};

/// A value is present and well typed but outside its physical range.
class UnitError : public Error {
public:
    UnitError(std::string key_path, const std::string& what)
        : Error(key_path + ": " + what), key_path_(std::move(key_path)) {}
    const std::string& key_path() const noexcept { return key_path_; }

private:
    std::string key_path_;
};

}  // namespace electroad

namespace electroad {

/// A time-stepped simulation failed to converge at `step` (1-based).
class StepNonConvergence : public NonConvergence {
public:
    StepNonConvergence(const std::string& what, int step, int sample = -1)
        : NonConvergence(what, 0), step_(step), sample_(sample) {}
    int step() const noexcept { return step_; }
    /// Monte Carlo sample index, or -1 for a deterministic run.
    int sample() const noexcept { return sample_; }

private:
    int step_;
    int sample_;
};

}  // namespace electroad
