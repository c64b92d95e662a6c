#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace benthic {

// Stable, greppable identifiers for every domain failure. The CLI prints
// them as `error[<Code>]: <message>`.
enum class ErrorCode {
	InvalidArgument,
	EmptyDocument,
	BadIndent,
	IndentJump,
	MultipleRoots,
	DuplicateLeafName,
	DuplicateSiblingName,
	EmptyName,
	MalformedTree,
	UnknownNode,
	NotALeaf,
	UnknownLabel,
	DimensionMismatch,
	MalformedRow,
	RequestTooLarge,
	InvalidDimension,
	LabelOutOfRange,
	Diverged,
	LabelNotInTree,
	EmptyTrainingSet,
	NoTrainedPath,
	LengthMismatch,
	EmptyAnnotationSet,
	DuplicateKey,
	KeyMismatch,
	OverlappingSets,
	MalformedModel,
	IoFailure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
	Error(ErrorCode code, const std::string &message) : std::runtime_error(message), code_(code) {
	}

	ErrorCode code() const noexcept {
		return code_;
	}

private:
	ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
	throw Error(code, message);
}

} // namespace benthic
