#pragma once

#include <stdexcept>
#include <string>

namespace consensus {

// Root of the library's error hierarchy. Every failure the library can
// signal derives from this, so callers may catch consensus::Error to map
// any library failure to a process exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- input validation (graph / scenario construction) ----------------------

// Invalid user-supplied model input. InvalidProbability etc. derive from
// this so "ValidationError(InvalidProbability)" style handling works with a
// single catch clause.
struct ValidationError : Error {
    using Error::Error;
};

struct DisconnectedGraph : ValidationError {
    using ValidationError::ValidationError;
};

struct InvalidProbability : ValidationError {
    using ValidationError::ValidationError;
};

struct SelfLoop : ValidationError {
    using ValidationError::ValidationError;
};

struct DuplicateEdge : ValidationError {
    using ValidationError::ValidationError;
};

struct DimensionMismatch : ValidationError {
    using ValidationError::ValidationError;
};

// ---- numeric domain / resource limits ---------------------------------------

// Argument outside a function's mathematical domain (e.g. p <= 0, d < 0).
struct DomainError : Error {
    using Error::Error;
};

// Kronecker-scale computation refused because n exceeds the configured cap.
struct BudgetExceeded : Error {
    using Error::Error;
};

// Exhaustive enumeration refused because 2|E_c| exceeds the oracle budget.
struct TooLarge : Error {
    using Error::Error;
};

// ---- linear algebra ----------------------------------------------------------

// The chain lacks a unique stationary distribution (or the solve for it is
// rank-deficient / fails its residual check).
struct SingularChain : Error {
    using Error::Error;
};

// Dense eigensolver failed to converge or produced an invalid spectrum.
struct EigensolveFailure : Error {
    using Error::Error;
};

// Some product of eigenvalues hits 1, making the spectral bound infinite.
struct DegenerateSpectrum : Error {
    using Error::Error;
};

// ---- io ----------------------------------------------------------------------

// Malformed scenario file (syntax, missing keys, wrong types).
struct ParseError : Error {
    using Error::Error;
};

// ---- self-checks ---------------------------------------------------------------

// A closed form disagreed with ground truth (enumeration oracle or a
// mathematically guaranteed inequality). Carries the worst offender.
struct VerificationFailure : Error {
    using Error::Error;
};

// Monte Carlo ensemble finished with zero converged trials.
struct AllTrialsDiverged : Error {
    using Error::Error;
};

} // namespace consensus
