#pragma once

#include <stdexcept>
#include <string>

namespace mortv {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- numerics ---
class EmptyMatrixError : public Error {
public:
    using Error::Error;
};
class AllColumnsDegenerateError : public Error {
public:
    using Error::Error;
};
class RankTooLowError : public Error {
public:
    using Error::Error;
};
class SingularShiftError : public Error {
public:
    using Error::Error;
};
class ConvergenceFailureError : public Error {
public:
    using Error::Error;
};
class UnstablePencilError : public Error {
public:
    using Error::Error;
};
class SizeGuardError : public Error {
public:
    using Error::Error;
};

// --- systems / models ---
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};
class SingularStiffnessError : public Error {
public:
    using Error::Error;
};
class PositionOutOfRangeError : public Error {
public:
    using Error::Error;
};

// --- reduction ---
class SingularReducedEError : public Error {
public:
    using Error::Error;
};
class BasisDegenerateError : public Error {
public:
    using Error::Error;
};
class WrongCouplingError : public Error {
public:
    using Error::Error;
};
class SingularTransformationError : public Error {
public:
    using Error::Error;
};

// --- simulation ---
class SingularStepError : public Error {
public:
    using Error::Error;
};
class GridMismatchError : public Error {
public:
    using Error::Error;
};

// --- cli / io ---
class MissingDataError : public Error {
public:
    using Error::Error;
};
class ConfigError : public Error {
public:
    using Error::Error;
};
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace mortv
