#include "rfsei/error.hpp"

namespace rfsei {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::Version: return "version";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::Checksum: return "checksum";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::Routing: return "routing";
    case ErrorCode::Internal: return "internal";
    }
    return "unknown";
}

}  // namespace rfsei
