#pragma once

#include <stdexcept>
#include <string>

namespace rfsei {

/// Error classes surfaced by the library. The CLI maps these onto exit codes.
enum class ErrorCode {
    Config,       ///< invalid parameters, specs or config files
    Io,           ///< file cannot be opened, read or written
    Format,       ///< bad magic or malformed structure
    Version,      ///< unsupported format version
    Truncated,    ///< file shorter than its header declares
    Checksum,     ///< CRC32 mismatch
    Shape,        ///< tensor/batch shape mismatch
    Numeric,      ///< NaN/Inf, divergence, undefined metric
    Degenerate,   ///< degenerate statistical fit (e.g. zero variance)
    Routing,      ///< capture routed to an unsupported modulation
    Internal,     ///< broken internal invariant
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what)
{
    if (!cond)
        throw Error(code, what);
}

}  // namespace rfsei
