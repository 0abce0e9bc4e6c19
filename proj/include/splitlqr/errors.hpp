#pragma once

#include <stdexcept>
#include <string>

namespace splitlqr {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- problem construction / validation ---

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NotSpd : public Error {
public:
    using Error::Error;
};

class NotBlockDiagonal : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

// --- Riccati / policy evaluation ---

class NotStabilizable : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

class NotStabilizing : public Error {
public:
    using Error::Error;
};

// --- split iteration ---

class SubproblemNotControllable : public Error {
public:
    using Error::Error;
};

class RiccatiFailure : public Error {
public:
    using Error::Error;
};

class AllSubsystemsUncontrollable : public Error {
public:
    using Error::Error;
};

// --- rate analysis ---

class DomainMismatch : public Error {
public:
    using Error::Error;
};

class NotOptimal : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

// --- harness ---

class ParseError : public Error {
public:
    using Error::Error;
};

class GenerationFailed : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace splitlqr
