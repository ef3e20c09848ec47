#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chartsum {

enum class ErrorKind {
    // corpus
    Io,
    MissingColumn,
    DuplicateId,
    EmptyDialogue,
    CorpusTooSmall,
    MalformedFile,
    InvalidArgument,
    // section_parser
    UnmappedSection,
    AliasConflict,
    // rouge
    EmptyEvaluation,
    // tinylsg
    EmptyCorpus,
    DimensionMismatch,
    SequenceTooLong,
    EmptyTrainingSet,
    NonFiniteLoss,
    // pipeline
    SectionNeverObserved,
    MissingReference,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; `kind` is what callers branch on,
// `subject` carries the offending id/row/flag when there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message, std::string subject = {})
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind),
          subject_(std::move(subject)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    ErrorKind kind_;
    std::string subject_;
};

}  // namespace chartsum
