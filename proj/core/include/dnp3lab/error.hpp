#pragma once

#include <stdexcept>
#include <string>

namespace dnp3lab {

/// Base of every exception the library throws. Each module derives a typed
/// error carrying its own error-code enum.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Code>
class CodedError : public Error {
public:
    CodedError(Code code, const std::string& what) : Error(what), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

}  // namespace dnp3lab
