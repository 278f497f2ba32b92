#pragma once

#include <stdexcept>
#include <string>

namespace qsug {

// Library-wide error type. The kind drives the CLI exit code
// (data -> 2, io -> 3); everything else is a usage error handled
// by the argument parser.
class Error : public std::runtime_error {
public:
    enum class Kind { data, io };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

    static Error data(const std::string& what) { return Error(Kind::data, what); }
    static Error io(const std::string& what) { return Error(Kind::io, what); }

private:
    Kind kind_;
};

} // namespace qsug
