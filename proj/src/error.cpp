#include "dtc/error.hpp"

namespace dtc {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::Io: return "IoError";
    case Errc::Format: return "FormatError";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::MaskedData: return "MaskedDataError";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::SingleClass: return "SingleClass";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::EmptyNode: return "EmptyNode";
    case Errc::WeakLearnerTooWeak: return "WeakLearnerTooWeak";
    case Errc::NoUsableRound: return "NoUsableRound";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::SpecMismatch: return "SpecMismatch";
    case Errc::ColumnMismatch: return "ColumnMismatch";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::Schema: return "SchemaError";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::Config: return "ConfigError";
  }
  return "Error";
}

}  // namespace dtc
