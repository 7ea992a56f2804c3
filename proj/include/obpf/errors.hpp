#pragma once

#include <stdexcept>
#include <string>

namespace obpf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Market clearing
struct NoIntersection : Error { using Error::Error; };
struct EmptyMarket : Error { using Error::Error; };

// Feature assembly / data access
struct MissingData : Error { using Error::Error; };
struct MissingHistory : Error { using Error::Error; };
struct NoReference : Error { using Error::Error; };

// Model training / prediction
struct Diverged : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// File ingest
struct MalformedRow : Error { using Error::Error; };
struct OffGridPrice : Error { using Error::Error; };

} // namespace obpf
