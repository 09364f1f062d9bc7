#include "glyphformer/error.hpp"

namespace glyphformer {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedFont: return "MalformedFont";
        case ErrorKind::UnsupportedFont: return "UnsupportedFont";
        case ErrorKind::MalformedGlyph: return "MalformedGlyph";
        case ErrorKind::CompositeDepthExceeded: return "CompositeDepthExceeded";
        case ErrorKind::UnsupportedCmap: return "UnsupportedCmap";
        case ErrorKind::GlyphOutOfRange: return "GlyphOutOfRange";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::NonFiniteCoordinate: return "NonFiniteCoordinate";
        case ErrorKind::SequenceTooLong: return "SequenceTooLong";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
        case ErrorKind::FontLoadError: return "FontLoadError";
        case ErrorKind::EmptyClass: return "EmptyClass";
        case ErrorKind::DivergenceDetected: return "DivergenceDetected";
        case ErrorKind::ConfigMismatch: return "ConfigMismatch";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace glyphformer
