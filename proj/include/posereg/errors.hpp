#pragma once

#include <stdexcept>
#include <string>

namespace posereg {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoVisibleKeypoints : Error {
    NoVisibleKeypoints() : Error("pose has no visible keypoints") {}
    explicit NoVisibleKeypoints(const std::string& what) : Error(what) {}
};

struct NonPositiveArea : Error {
    explicit NonPositiveArea(double area)
        : Error("instance area must be > 0, got " + std::to_string(area)) {}
};

struct InvalidScale : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct TapeMismatch : Error {
    using Error::Error;
};

struct NonFiniteLoss : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct MissingField : Error {
    explicit MissingField(const std::string& field) : Error("missing field: " + field) {}
};

struct InconsistentK : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct UnknownImageId : Error {
    explicit UnknownImageId(int id) : Error("unknown image id: " + std::to_string(id)) {}
};

} // namespace posereg
