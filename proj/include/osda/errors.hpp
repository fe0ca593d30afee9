#pragma once

#include <stdexcept>
#include <string>

namespace osda {

// Base class for everything this library throws on purpose.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate an operation's preconditions.
class input_error : public error {
public:
    using error::error;
};

// A binary model file is malformed (bad magic, version, checksum, truncation).
class format_error : public error {
public:
    using error::error;
};

// A text input (feature CSV, config file) could not be parsed.
class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t line)
        : error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit parse_error(const std::string& what) : error(what) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

}  // namespace osda
