#include "breathsense/error.hpp"

namespace breathsense {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
        case ErrorCode::CorruptHeader: return "CorruptHeader";
        case ErrorCode::CorruptPayload: return "CorruptPayload";
        case ErrorCode::EmptyAudio: return "EmptyAudio";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::MalformedLine: return "MalformedLine";
        case ErrorCode::NegativeDuration: return "NegativeDuration";
        case ErrorCode::UnknownClass: return "UnknownClass";
        case ErrorCode::ClipTooShort: return "ClipTooShort";
        case ErrorCode::NoOverlap: return "NoOverlap";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::SilentSignal: return "SilentSignal";
        case ErrorCode::SilentNoiseSlice: return "SilentNoiseSlice";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DegenerateBatch: return "DegenerateBatch";
        case ErrorCode::StaleCache: return "StaleCache";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::ShapeMismatchOnLoad: return "ShapeMismatchOnLoad";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::InsufficientSubjects: return "InsufficientSubjects";
        case ErrorCode::DataLeakage: return "DataLeakage";
        case ErrorCode::EmptyManifest: return "EmptyManifest";
        case ErrorCode::ModelFeatureMismatch: return "ModelFeatureMismatch";
        case ErrorCode::PortInUse: return "PortInUse";
        case ErrorCode::SessionAlreadyActive: return "SessionAlreadyActive";
        case ErrorCode::NoActiveSession: return "NoActiveSession";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace breathsense
