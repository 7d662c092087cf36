#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace canspec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RankDeficientPair : public Error {
public:
    using Error::Error;
};

class PoleAt : public Error {
public:
    explicit PoleAt(double where)
        : Error("evaluation point collides with an atom at " + std::to_string(where)), location(where) {}
    double location;
};

class ConjugateCollision : public Error {
public:
    using Error::Error;
};

class SingularDenominator : public Error {
public:
    SingularDenominator(const std::string& what, double cond) : Error(what), condition(cond) {}
    double condition;
};

class NonMonotone : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class InvalidCoefficients : public Error {
public:
    InvalidCoefficients(const std::string& what, std::vector<std::size_t> bad)
        : Error(what), segments(std::move(bad)) {}
    std::vector<std::size_t> segments;
};

class OutOfInterval : public Error {
public:
    using Error::Error;
};

class NotRegular : public Error {
public:
    using Error::Error;
};

class UnsupportedDimension : public Error {
public:
    using Error::Error;
};

/// z lies on (or numerically at) the spectrum of the reference extension.
class SpectralPoint : public Error {
public:
    SpectralPoint(const std::string& what, double cond) : Error(what), condition(cond) {}
    double condition;
};

class NotInHalfPlane : public Error {
public:
    using Error::Error;
};

class NoShrinkage : public Error {
public:
    NoShrinkage(const std::string& what, double last_radius) : Error(what), radius(last_radius) {}
    double radius;
};

class QuadratureUnderResolved : public Error {
public:
    using Error::Error;
};

/// Malformed input document; `path` is a JSON path such as "segments[0].H".
class SchemaError : public Error {
public:
    SchemaError(std::string json_path, const std::string& what)
        : Error(json_path + ": " + what), path(std::move(json_path)) {}
    std::string path;
};

}  // namespace canspec
