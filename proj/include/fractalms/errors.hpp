#ifndef FRACTALMS_ERRORS_HPP
#define FRACTALMS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fractalms {

/// Base class for every failure raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the admissible domain (empty interval, t off [a,b], ...).
class domain_error : public error {
public:
    using error::error;
};

/// Request would exceed fixed memory limits (e.g. Koch level > 12).
class resource_error : public error {
public:
    using error::error;
};

/// A point that should lie on a curve does not (beyond snap tolerance).
class geometry_error : public error {
public:
    using error::error;
};

/// Limit classification or bracketing failed.
class estimation_error : public error {
public:
    using error::error;
};

/// Step size below what the staircase table can resolve.
class resolution_error : public error {
public:
    using error::error;
};

/// Staircase has a plateau where an inverse or quotient is needed.
class singularity_error : public error {
public:
    using error::error;
};

/// Integrand produced a non-finite value.
class evaluation_error : public error {
public:
    using error::error;
};

/// Mean-square integral existence pre-check failed.
class existence_error : public error {
public:
    using error::error;
};

/// A hard theorem-level invariant was observed to fail.
class invariant_violation : public error {
public:
    using error::error;
};

} // namespace fractalms

#endif // FRACTALMS_ERRORS_HPP
