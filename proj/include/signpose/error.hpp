// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace signpose {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed keypoint container. Carries the offending frame when known.
class ParseError : public Error {
public:
    enum class Kind { Malformed, UnknownLayout, FrameWidth, NonFinite };

    ParseError(Kind kind, const std::string& what, std::optional<std::size_t> frame = std::nullopt)
        : Error(what), kind_(kind), frame_(frame) {}

    Kind kind() const noexcept { return kind_; }
    std::optional<std::size_t> frame() const noexcept { return frame_; }

private:
    Kind kind_;
    std::optional<std::size_t> frame_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Input that an operation cannot handle, e.g. a frame with no visible joints.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class ManifestError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace signpose
