#include "parcelsteer/errors.hpp"

namespace parcelsteer {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorKind::NonFiniteSample: return "NonFiniteSample";
    case ErrorKind::NegativeLabel: return "NegativeLabel";
    case ErrorKind::DimsMismatch: return "DimsMismatch";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::DuplicateLabel: return "DuplicateLabel";
    case ErrorKind::MalformedMeta: return "MalformedMeta";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFewItems: return "TooFewItems";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::EmptyAtlas: return "EmptyAtlas";
    case ErrorKind::ThresholdOutOfRange: return "ThresholdOutOfRange";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::NotALeaf: return "NotALeaf";
    case ErrorKind::SingletonLeaf: return "SingletonLeaf";
    case ErrorKind::ThresholdNotTighter: return "ThresholdNotTighter";
    case ErrorKind::SameNode: return "SameNode";
    case ErrorKind::ForbiddenKind: return "ForbiddenKind";
    case ErrorKind::MalformedDocument: return "MalformedDocument";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidPlane: return "InvalidPlane";
    }
    return "Unknown";
}

} // namespace parcelsteer
