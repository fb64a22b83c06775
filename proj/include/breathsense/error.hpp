#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace breathsense {

enum class ErrorCode {
    // audio-io
    UnsupportedEncoding,
    CorruptHeader,
    CorruptPayload,
    EmptyAudio,
    IoError,
    // labels
    MalformedLine,
    NegativeDuration,
    UnknownClass,
    ClipTooShort,
    NoOverlap,
    // features
    EmptyInput,
    // augment
    SilentSignal,
    SilentNoiseSlice,
    // nn
    ShapeMismatch,
    DegenerateBatch,
    StaleCache,
    BadMagic,
    ShapeMismatchOnLoad,
    TruncatedPayload,
    // training
    EmptyDataset,
    InsufficientSubjects,
    DataLeakage,
    EmptyManifest,
    // inference / service
    ModelFeatureMismatch,
    PortInUse,
    SessionAlreadyActive,
    NoActiveSession,
    InvalidArgument,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace breathsense
