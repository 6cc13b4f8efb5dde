#pragma once

#include <stdexcept>
#include <string>

namespace sanet {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// shape / precondition violations (tensor dims, channel counts, ...)
class ShapeError : public Error {
public:
    using Error::Error;
};

// malformed files: STF containers, netpbm images, palettes
class FormatError : public Error {
public:
    using Error::Error;
};

// invalid argument values (bad config, out-of-range parameters)
class ValueError : public Error {
public:
    using Error::Error;
};

} // namespace sanet
