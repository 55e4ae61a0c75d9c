#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emrc/taxonomy.hpp"

namespace emrc {

enum class IssueSeverity {
  Contradiction,
  FactualError,
  Unsupported,
};

std::string_view severity_id(IssueSeverity severity);

struct Issue {
  IssueSeverity severity = IssueSeverity::Unsupported;
  std::string note;

  bool operator==(const Issue&) const = default;
};

struct AnswerParse {
  char answer = '?';
  double confidence = 0.0;  // normalized to [0, 1]
  std::string rationale;    // empty when the reply carries none
};

struct JudgeParse {
  std::map<std::string, std::vector<Issue>> per_response;
  bool consistent = true;
};

/// Reads line-anchored "Department:"/"Dept:" and "Difficulty:"/"Diff:"
/// markers; values go through the taxonomy parsers with the given aliases.
/// Throws ParseFailure when either field cannot be resolved.
ClassificationPrediction parse_classification(const std::string& raw,
                                              const DepartmentAliases& aliases);

/// Primary: "Answer:" and "Confidence:" markers. Fallback: the last
/// standalone option letter anywhere in the text. Confidence is clamped to
/// [0, 100] and normalized; a missing confidence marker reads as 50.
/// Throws ParseFailure when no valid option letter can be extracted.
AnswerParse parse_answer(const std::string& raw, std::size_t option_count);

/// Scans "Issues[<id>]:" lines for the given agent ids. Total: unknown ids
/// are ignored, missing lines mean no issues, and an item without a
/// recognized severity prefix is kept as Unsupported with the item text as
/// its note. consistent is true iff every issue list is empty.
JudgeParse parse_judge(const std::string& raw, std::span<const std::string> agent_ids);

/// Final-answer extraction: "Answer:" marker, then the standalone-letter
/// fallback. Throws ParseFailure when nothing valid is found.
char parse_final(const std::string& raw, std::size_t option_count);

/// Value of the first line starting with "<key>:", if any.
std::optional<std::string> parse_labeled_line(const std::string& raw,
                                              std::string_view key);

}  // namespace emrc
