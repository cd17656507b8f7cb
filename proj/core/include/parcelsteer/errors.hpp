#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace parcelsteer {

enum class ErrorKind {
    // volume_io
    NotFound,
    IoFailure,
    MalformedHeader,
    UnsupportedFormat,
    UnsupportedDatatype,
    NonFiniteSample,
    NegativeLabel,
    DimsMismatch,
    UnknownLabel,
    DuplicateLabel,
    MalformedMeta,
    // signal_metrics
    ZeroVariance,
    LengthMismatch,
    TooFewItems,
    InvalidRange,
    // parcellation engine
    EmptyAtlas,
    ThresholdOutOfRange,
    UnknownNode,
    NotALeaf,
    SingletonLeaf,
    ThresholdNotTighter,
    SameNode,
    ForbiddenKind,
    MalformedDocument,
    // slices
    IndexOutOfRange,
    InvalidPlane,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-readable kind (used
/// verbatim as `error_kind` by the HTTP layer) and an optional free-form detail.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string detail = {})
        : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

} // namespace parcelsteer
