#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtc {

enum class Errc {
  Io,
  Format,
  UnknownColumn,
  UnknownLabel,
  NonNumericCell,
  EmptyDataset,
  MaskedData,
  TooFewSamples,
  EmptyInput,
  LengthMismatch,
  SingleClass,
  OutOfRange,
  EmptyNode,
  WeakLearnerTooWeak,
  NoUsableRound,
  KTooLarge,
  ShapeMismatch,
  SpecMismatch,
  ColumnMismatch,
  VersionMismatch,
  Schema,
  IndexOutOfRange,
  EmptyMatrix,
  Config,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the toolkit carries one of the codes above so
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dtc
