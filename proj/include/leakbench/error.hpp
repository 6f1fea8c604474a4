#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace leakbench {

/// Every failure raised by the library carries one of these kinds; the CLI
/// prints the kind name and maps it onto an exit code.
enum class ErrorKind {
    // dataio
    MalformedHeader,
    ChannelLengthMismatch,
    NonFiniteSample,
    LabelInconsistency,
    IoFailure,
    InvalidSpec,
    RecordTooShort,
    // signal
    InvalidBand,
    SignalTooShort,
    UnknownWavelet,
    IncompleteTree,
    // features
    SingularAutocorrelation,
    NonPositiveVariance,
    AllValuesNonFinite,
    UnknownFeature,
    // oversample
    TooFewMinority,
    // classify
    SingleClassTraining,
    NonFiniteInput,
    ShapeMismatch,
    // evaluate
    TooFewPerClass,
    SingleClass,
    LeakageNotAcknowledged,
    // cli
    SchemaError,
};

constexpr std::string_view error_name(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::ChannelLengthMismatch: return "ChannelLengthMismatch";
    case ErrorKind::NonFiniteSample: return "NonFiniteSample";
    case ErrorKind::LabelInconsistency: return "LabelInconsistency";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::RecordTooShort: return "RecordTooShort";
    case ErrorKind::InvalidBand: return "InvalidBand";
    case ErrorKind::SignalTooShort: return "SignalTooShort";
    case ErrorKind::UnknownWavelet: return "UnknownWavelet";
    case ErrorKind::IncompleteTree: return "IncompleteTree";
    case ErrorKind::SingularAutocorrelation: return "SingularAutocorrelation";
    case ErrorKind::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorKind::AllValuesNonFinite: return "AllValuesNonFinite";
    case ErrorKind::UnknownFeature: return "UnknownFeature";
    case ErrorKind::TooFewMinority: return "TooFewMinority";
    case ErrorKind::SingleClassTraining: return "SingleClassTraining";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::TooFewPerClass: return "TooFewPerClass";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::LeakageNotAcknowledged: return "LeakageNotAcknowledged";
    case ErrorKind::SchemaError: return "SchemaError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(error_name(kind)) + ": " + detail), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept { return error_name(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) {
    throw Error(kind, detail);
}

} // namespace leakbench
