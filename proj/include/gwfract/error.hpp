#pragma once

#include <stdexcept>
#include <string>

namespace gwf {

enum class ErrorKind {
    InvalidInput,
    ResourceLimit,
    NotFound,
    Capability,
    DegenerateSample,
};

// Every failure the library reports carries a kind so the CLI can map it to an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::InvalidInput, what);
}

const char* to_string(ErrorKind kind) noexcept;

}  // namespace gwf
