#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hgrade {

// Error categories surfaced by the toolkit. The CLI prints the category
// name as a single machine-parseable token, so names are stable API.
enum class Err {
  MissingColumn,
  MalformedEditMarker,
  GradeOutOfRange,
  OriginalMismatch,
  InsufficientRecords,
  DuplicateRecordId,
  CheckpointMissing,
  UnsupportedCombination,
  TruncationDroppedEdit,
  EmptyCorpus,
  DivergedLoss,
  MissingGrades,
  LengthMismatch,
  EmptyInput,
  MissingSplit,
  EmptyDenominator,
  NonFiniteGrade,
  ConfigInvalid,
  InputMissing,
  IoError,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::MissingColumn: return "MissingColumn";
    case Err::MalformedEditMarker: return "MalformedEditMarker";
    case Err::GradeOutOfRange: return "GradeOutOfRange";
    case Err::OriginalMismatch: return "OriginalMismatch";
    case Err::InsufficientRecords: return "InsufficientRecords";
    case Err::DuplicateRecordId: return "DuplicateRecordId";
    case Err::CheckpointMissing: return "CheckpointMissing";
    case Err::UnsupportedCombination: return "UnsupportedCombination";
    case Err::TruncationDroppedEdit: return "TruncationDroppedEdit";
    case Err::EmptyCorpus: return "EmptyCorpus";
    case Err::DivergedLoss: return "DivergedLoss";
    case Err::MissingGrades: return "MissingGrades";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::EmptyInput: return "EmptyInput";
    case Err::MissingSplit: return "MissingSplit";
    case Err::EmptyDenominator: return "EmptyDenominator";
    case Err::NonFiniteGrade: return "NonFiniteGrade";
    case Err::ConfigInvalid: return "ConfigInvalid";
    case Err::InputMissing: return "InputMissing";
    case Err::IoError: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Err category, const std::string& message)
      : std::runtime_error(std::string(err_name(category)) + ": " + message),
        category_(category) {}

  Err category() const noexcept { return category_; }

 private:
  Err category_;
};

// Non-fatal finding surfaced to the caller (mean-grade mismatches, gold-label
// contradictions, truncated edits during inference, ...).
struct Diag {
  std::string category;
  std::string message;
};

using DiagList = std::vector<Diag>;

inline void add_diag(DiagList* diags, std::string category, std::string message) {
  if (diags) diags->push_back({std::move(category), std::move(message)});
}

}  // namespace hgrade
