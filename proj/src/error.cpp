#include "spotvol/error.hpp"

namespace spotvol {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::HourOutOfRange: return "HourOutOfRange";
        case ErrorKind::MissingDay: return "MissingDay";
        case ErrorKind::EmptyTable: return "EmptyTable";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::InvalidSeries: return "InvalidSeries";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::DuplicateRecord: return "DuplicateRecord";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::DivergentChains: return "DivergentChains";
        case ErrorKind::NonFiniteLogp: return "NonFiniteLogp";
        case ErrorKind::TooFewDraws: return "TooFewDraws";
        case ErrorKind::MisalignedFrames: return "MisalignedFrames";
        case ErrorKind::ConstantColumn: return "ConstantColumn";
        case ErrorKind::MissingStandardizer: return "MissingStandardizer";
        case ErrorKind::ModeUnsupported: return "ModeUnsupported";
        case ErrorKind::MissingExogenous: return "MissingExogenous";
        case ErrorKind::HorizonZero: return "HorizonZero";
        case ErrorKind::SeriesTooShort: return "SeriesTooShort";
        case ErrorKind::SingularRegression: return "SingularRegression";
        case ErrorKind::LagTooLarge: return "LagTooLarge";
        case ErrorKind::EmptySample: return "EmptySample";
        case ErrorKind::DegenerateData: return "DegenerateData";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::InsufficientFutureData: return "InsufficientFutureData";
        case ErrorKind::FeatureNotInModel: return "FeatureNotInModel";
        case ErrorKind::IncompatibleFit: return "IncompatibleFit";
        case ErrorKind::InvalidFit: return "InvalidFit";
    }
    return "Unknown";
}

}  // namespace spotvol
