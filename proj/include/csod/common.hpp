#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace csod {

// Base error for anything that goes wrong inside the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad flags, bad config files, unknown keys. CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File system / parsing / numeric failures. CLI maps this to exit code 3.
class IoError : public Error {
public:
    using Error::Error;
};

template <class... Args>
std::string cat(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

template <class E = Error, class... Args>
void check(bool cond, Args&&... args) {
    if (!cond) throw E(cat(std::forward<Args>(args)...));
}

}  // namespace csod
