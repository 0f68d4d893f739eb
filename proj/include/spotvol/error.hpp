#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spotvol {

enum class ErrorKind {
    HourOutOfRange,
    MissingDay,
    EmptyTable,
    InsufficientData,
    InvalidSeries,
    ParseError,
    DuplicateRecord,
    NonFinite,
    InvalidSpec,
    IoError,
    InvalidConfig,
    DivergentChains,
    NonFiniteLogp,
    TooFewDraws,
    MisalignedFrames,
    ConstantColumn,
    MissingStandardizer,
    ModeUnsupported,
    MissingExogenous,
    HorizonZero,
    SeriesTooShort,
    SingularRegression,
    LagTooLarge,
    EmptySample,
    DegenerateData,
    RankDeficient,
    LengthMismatch,
    InsufficientFutureData,
    FeatureNotInModel,
    IncompatibleFit,
    InvalidFit,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace spotvol
