#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emrc/errors.hpp"

namespace emrc {

/// Fixed department vocabulary, in canonical declaration order.
enum class Department {
  InternalMedicine,
  Surgery,
  ObstetricsGynecology,
  Pediatrics,
  Neurology,
  Oncology,
  Otolaryngology,
  PsychiatryPsychology,
  EmergencyCriticalCare,
};

inline constexpr std::size_t kDepartmentCount = 9;

/// Query difficulty, totally ordered Low < Medium < High.
enum class Difficulty {
  Low,
  Medium,
  High,
};

inline constexpr std::size_t kDifficultyCount = 3;

std::span<const Department> all_departments();
std::span<const Difficulty> all_difficulties();

std::string_view department_id(Department dept);    // "InternalMedicine"
std::string_view department_code(Department dept);  // "IM"
std::string_view department_name(Department dept);  // "Internal Medicine"
std::string_view difficulty_id(Difficulty diff);    // "L"
std::string_view difficulty_name(Difficulty diff);  // "low"

constexpr std::size_t department_index(Department dept) {
  return static_cast<std::size_t>(dept);
}
constexpr std::size_t difficulty_index(Difficulty diff) {
  return static_cast<std::size_t>(diff);
}

/// Explicit sub-specialty to department mapping, loaded from a data file.
/// Nothing maps unless it is listed; the parser never guesses.
class DepartmentAliases {
 public:
  DepartmentAliases() = default;

  void add(std::string_view alias, Department target);
  std::optional<Department> lookup(std::string_view label) const;
  std::size_t size() const { return aliases_.size(); }

  static DepartmentAliases from_json(const nlohmann::json& doc);
  static DepartmentAliases load(const std::filesystem::path& path);

  /// The alias file shipped with the artifact (data/department_aliases.json),
  /// embedded at build time.
  static const DepartmentAliases& bundled();

 private:
  std::map<std::string, Department> aliases_;  // keys normalized
};

/// Matches canonical id, 2-letter code, or display name, case-insensitively
/// after trimming; a trailing parenthetical like "(IM)" is ignored.
/// Throws UnknownDepartmentError when nothing matches.
Department parse_department(std::string_view label);
Department parse_department(std::string_view label, const DepartmentAliases& aliases);

/// Accepts "low"/"L", "medium"/"M", "high"/"H" case-insensitively.
Difficulty parse_difficulty(std::string_view label);

struct ClassificationPrediction {
  Department dept;
  Difficulty diff;

  bool operator==(const ClassificationPrediction&) const = default;
};

inline constexpr std::size_t kMinOptions = 2;
inline constexpr std::size_t kMaxOptions = 10;  // A through J

constexpr char option_letter(std::size_t index) {
  return static_cast<char>('A' + index);
}

/// Index for an option letter, or nullopt when out of [A, A+count).
std::optional<std::size_t> option_index(char letter, std::size_t option_count);

/// One multiple-choice question. Options are stored in letter order, so
/// options[i] is the text for option_letter(i).
struct QueryRecord {
  std::string id;
  std::string stem;
  std::vector<std::string> options;
  std::optional<char> gold;
  std::optional<Department> dept_label;
  std::optional<Difficulty> diff_label;
  std::optional<std::string> subject;  // source-dataset category, for reporting

  bool has_option(char letter) const {
    return option_index(letter, options.size()).has_value();
  }
  bool labeled() const { return dept_label.has_value() && diff_label.has_value(); }

  /// Checks option count and gold validity; throws Error with a message.
  void validate() const;
};

/// Canonical JSON-lines record. Keys: id, stem, options (object letter->text),
/// optional gold, dept, diff, subject.
QueryRecord query_from_json(const nlohmann::json& doc);
nlohmann::json query_to_json(const QueryRecord& record);

}  // namespace emrc
