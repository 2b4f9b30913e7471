#pragma once

#include <stdexcept>
#include <string>

namespace pn {

// Base of every error raised by the library. Callers that only care about
// "something went wrong" catch this; tests match the concrete subclasses.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidQuality : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

class TruncatedFile : public Error {
public:
    using Error::Error;
};

class FeatureUnavailable : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class Unreachable : public Error {
public:
    using Error::Error;
};

class Degenerate : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss or weight.
class Divergence : public Error {
public:
    Divergence(int epoch, const std::string& what)
        : Error("training diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

} // namespace pn
