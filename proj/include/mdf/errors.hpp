#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mdf {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside its documented domain (parameter range, invalid index).
struct DomainError : Error {
    using Error::Error;
};

// Malformed input text; `line` is 1-based within the offending stream.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t line_number)
        : Error(msg), line(line_number) {}
    std::size_t line = 0;
};

// Fewer data points than an operation needs.
struct InsufficientDataError : Error {
    using Error::Error;
};

// Coordinate set does not describe both surfaces of an airfoil.
struct IncompleteAirfoilError : Error {
    using Error::Error;
};

// Geometrically inconsistent airfoil (e.g. crossing surfaces).
struct InvalidAirfoilError : Error {
    using Error::Error;
};

// Point set cannot be partitioned into the requested segment runs.
struct PartitionError : Error {
    using Error::Error;
};

// A fitted curve crosses itself; carries the offending segment pair.
struct SelfIntersectionError : Error {
    SelfIntersectionError(const std::string& msg, int seg_a, int seg_b,
                          double t_a, double t_b)
        : Error(msg), segment_a(seg_a), segment_b(seg_b), param_a(t_a),
          param_b(t_b) {}
    int segment_a = 0;
    int segment_b = 0;
    double param_a = 0.0;
    double param_b = 0.0;
};

// Matrix/vector dimensions disagree.
struct ShapeError : Error {
    using Error::Error;
};

// Train-mode batch normalization on a single-row batch.
struct DegenerateBatchError : Error {
    using Error::Error;
};

// Missing or stale forward cache handed to a backward pass.
struct StateError : Error {
    using Error::Error;
};

// Empty or inconsistent dataset.
struct DataError : Error {
    using Error::Error;
};

// Training produced a non-finite loss; `epoch` is 1-based.
struct DivergenceError : Error {
    DivergenceError(const std::string& msg, int epoch_number)
        : Error(msg), epoch(epoch_number) {}
    int epoch = 0;
};

}  // namespace mdf
