#pragma once

#include <stdexcept>
#include <string>

namespace thermo {

// Error categories map to CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericalError -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};

// thermal_data
struct MissingFrames final : DataError { using DataError::DataError; };
struct DimensionMismatch final : DataError { using DataError::DataError; };
struct UnreadableFile final : DataError { using DataError::DataError; };
struct ShapeInconsistent final : DataError { using DataError::DataError; };

// factorization
struct RankTooLarge final : DataError { using DataError::DataError; };
struct NegativeInput final : DataError { using DataError::DataError; };
struct NegativeLambda final : ConfigError { using ConfigError::ConfigError; };
struct BadLayerSizes final : ConfigError { using ConfigError::ConfigError; };

// embedding
struct EmptyMatrix final : DataError { using DataError::DataError; };
struct MissingReference final : DataError { using DataError::DataError; };

// thermomics
struct TooFewPixels final : DataError { using DataError::DataError; };
struct NoValidPairs final : DataError { using DataError::DataError; };
struct BadOffset final : ConfigError { using ConfigError::ConfigError; };
struct NotNormalized final : NumericalError { using NumericalError::NumericalError; };
struct ImageTooSmall final : DataError { using DataError::DataError; };

// hsic_selection
struct NonPositiveBandwidth final : ConfigError { using ConfigError::ConfigError; };
struct DegenerateKernel final : NumericalError { using NumericalError::NumericalError; };
struct SizeMismatch final : DataError { using DataError::DataError; };
struct BlockTooSmall final : ConfigError { using ConfigError::ConfigError; };
struct AllFeaturesDegenerate final : DataError { using DataError::DataError; };

// analysis
struct EmptySample final : DataError { using DataError::DataError; };
struct SingleClass final : DataError { using DataError::DataError; };
struct TooFewCases final : DataError { using DataError::DataError; };
struct ZeroNoiseStd final : NumericalError { using NumericalError::NumericalError; };
struct EmptyRegion final : DataError { using DataError::DataError; };

// phantom
struct UnstableTimestep final : ConfigError { using ConfigError::ConfigError; };
struct LesionOutOfBounds final : ConfigError { using ConfigError::ConfigError; };

// cli / pipeline
struct ConfigInvalid final : ConfigError { using ConfigError::ConfigError; };
struct MissingUpstreamArtifact final : DataError { using DataError::DataError; };

} // namespace thermo
