#pragma once

#include <stdexcept>
#include <string>

namespace tthf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// topology
struct DisconnectedGraph : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// data
struct InvalidShape : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct CountMismatch : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };

// model
struct EmptyShard : Error { using Error::Error; };
struct BatchTooLarge : Error { using Error::Error; };

// engine
struct InvalidLambda : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// analysis
struct HypothesisViolated : Error { using Error::Error; };
struct UnknownOptimum : Error { using Error::Error; };

// cli
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct IncompatibleRuns : Error { using Error::Error; };

}  // namespace tthf
