#include "emrc/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "emrc/bundled_aliases.hpp"

namespace emrc {
namespace {

using nlohmann::json;

constexpr std::array<Department, kDepartmentCount> kDepartments = {
    Department::InternalMedicine,     Department::Surgery,
    Department::ObstetricsGynecology, Department::Pediatrics,
    Department::Neurology,            Department::Oncology,
    Department::Otolaryngology,       Department::PsychiatryPsychology,
    Department::EmergencyCriticalCare,
};

constexpr std::array<Difficulty, kDifficultyCount> kDifficulties = {
    Difficulty::Low,
    Difficulty::Medium,
    Difficulty::High,
};

struct DepartmentNames {
  std::string_view id;
  std::string_view code;
  std::string_view name;
};

constexpr std::array<DepartmentNames, kDepartmentCount> kDepartmentNames = {{
    {"InternalMedicine", "IM", "Internal Medicine"},
    {"Surgery", "Su", "Surgery"},
    {"ObstetricsGynecology", "OG", "Obstetrics and Gynecology"},
    {"Pediatrics", "Pe", "Pediatrics"},
    {"Neurology", "Ne", "Neurology"},
    {"Oncology", "On", "Oncology"},
    {"Otolaryngology", "Ot", "Otolaryngology"},
    {"PsychiatryPsychology", "PP", "Psychiatry and Psychology"},
    {"EmergencyCriticalCare", "EC", "Emergency and Critical Care"},
}};

// Lowercases and strips everything but letters and digits, so that
// "Internal Medicine", "internal-medicine" and "InternalMedicine" collapse
// to the same key.
std::string normalize(std::string_view label) {
  std::string out;
  out.reserve(label.size());
  for (char ch : label) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  return out;
}

std::string_view strip_trailing_parenthetical(std::string_view label) {
  auto end = label.find_last_not_of(" \t\r\n");
  if (end == std::string_view::npos || label[end] != ')') return label;
  auto open = label.rfind('(', end);
  if (open == std::string_view::npos) return label;
  return label.substr(0, open);
}

const std::map<std::string, Department>& canonical_department_keys() {
  static const std::map<std::string, Department> keys = [] {
    std::map<std::string, Department> m;
    for (Department dept : kDepartments) {
      const auto& names = kDepartmentNames[department_index(dept)];
      m[normalize(names.id)] = dept;
      m[normalize(names.code)] = dept;
      m[normalize(names.name)] = dept;
    }
    return m;
  }();
  return keys;
}

std::optional<Department> match_department(std::string_view label,
                                           const DepartmentAliases* aliases) {
  const auto& canonical = canonical_department_keys();
  for (std::string_view candidate : {label, strip_trailing_parenthetical(label)}) {
    std::string key = normalize(candidate);
    if (key.empty()) continue;
    if (auto it = canonical.find(key); it != canonical.end()) return it->second;
    if (aliases) {
      if (auto hit = aliases->lookup(candidate)) return hit;
    }
  }
  return std::nullopt;
}

}  // namespace

std::span<const Department> all_departments() { return kDepartments; }
std::span<const Difficulty> all_difficulties() { return kDifficulties; }

std::string_view department_id(Department dept) {
  return kDepartmentNames[department_index(dept)].id;
}
std::string_view department_code(Department dept) {
  return kDepartmentNames[department_index(dept)].code;
}
std::string_view department_name(Department dept) {
  return kDepartmentNames[department_index(dept)].name;
}

std::string_view difficulty_id(Difficulty diff) {
  switch (diff) {
    case Difficulty::Low: return "L";
    case Difficulty::Medium: return "M";
    case Difficulty::High: return "H";
  }
  return "";
}

std::string_view difficulty_name(Difficulty diff) {
  switch (diff) {
    case Difficulty::Low: return "low";
    case Difficulty::Medium: return "medium";
    case Difficulty::High: return "high";
  }
  return "";
}

void DepartmentAliases::add(std::string_view alias, Department target) {
  std::string key = normalize(alias);
  if (key.empty()) {
    throw ConfigError("department alias must contain letters or digits");
  }
  aliases_[std::move(key)] = target;
}

std::optional<Department> DepartmentAliases::lookup(std::string_view label) const {
  auto it = aliases_.find(normalize(label));
  if (it == aliases_.end()) return std::nullopt;
  return it->second;
}

DepartmentAliases DepartmentAliases::from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("aliases") || !doc.at("aliases").is_object()) {
    throw ConfigError("alias file must be an object with an \"aliases\" object");
  }
  DepartmentAliases out;
  for (const auto& [alias, target] : doc.at("aliases").items()) {
    if (!target.is_string()) {
      throw ConfigError("alias target for \"" + alias + "\" must be a string");
    }
    out.add(alias, parse_department(target.get<std::string>()));
  }
  return out;
}

DepartmentAliases DepartmentAliases::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open alias file: " + path.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& ex) {
    throw ConfigError("malformed alias file " + path.string() + ": " + ex.what());
  }
  return from_json(doc);
}

const DepartmentAliases& DepartmentAliases::bundled() {
  static const DepartmentAliases instance =
      from_json(json::parse(detail::kBundledAliasesJson));
  return instance;
}

Department parse_department(std::string_view label) {
  if (auto dept = match_department(label, nullptr)) return *dept;
  throw UnknownDepartmentError(std::string(label));
}

Department parse_department(std::string_view label, const DepartmentAliases& aliases) {
  if (auto dept = match_department(label, &aliases)) return *dept;
  throw UnknownDepartmentError(std::string(label));
}

Difficulty parse_difficulty(std::string_view label) {
  std::string key = normalize(label);
  if (key == "l" || key == "low") return Difficulty::Low;
  if (key == "m" || key == "medium") return Difficulty::Medium;
  if (key == "h" || key == "high") return Difficulty::High;
  throw UnknownDifficultyError(std::string(label));
}

std::optional<std::size_t> option_index(char letter, std::size_t option_count) {
  if (letter < 'A' || static_cast<std::size_t>(letter - 'A') >= option_count) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(letter - 'A');
}

void QueryRecord::validate() const {
  if (id.empty()) throw Error("query record has empty id");
  if (options.size() < kMinOptions || options.size() > kMaxOptions) {
    throw Error("query " + id + " must have between 2 and 10 options, has " +
                std::to_string(options.size()));
  }
  if (gold && !has_option(*gold)) {
    throw Error("query " + id + " gold answer '" + std::string(1, *gold) +
                "' is not one of its options");
  }
}

QueryRecord query_from_json(const json& doc) {
  if (!doc.is_object()) throw Error("query record must be a JSON object");
  QueryRecord record;
  if (!doc.contains("id") || !doc.at("id").is_string()) {
    throw Error("query record missing string \"id\"");
  }
  record.id = doc.at("id").get<std::string>();
  if (!doc.contains("stem") || !doc.at("stem").is_string()) {
    throw Error("query record missing string \"stem\"");
  }
  record.stem = doc.at("stem").get<std::string>();
  if (!doc.contains("options") || !doc.at("options").is_object()) {
    throw Error("query record missing \"options\" object");
  }
  const auto& options = doc.at("options");
  record.options.resize(options.size());
  for (const auto& [letter, text] : options.items()) {
    if (letter.size() != 1) {
      throw Error("option key \"" + letter + "\" is not a single letter");
    }
    auto index = option_index(letter[0], options.size());
    if (!index) {
      throw Error("option letters must be consecutive from A; got \"" + letter + "\"");
    }
    if (!text.is_string()) {
      throw Error("option \"" + letter + "\" text must be a string");
    }
    record.options[*index] = text.get<std::string>();
  }
  if (doc.contains("gold") && !doc.at("gold").is_null()) {
    const auto gold = doc.at("gold").get<std::string>();
    if (gold.size() != 1) throw Error("\"gold\" must be a single option letter");
    record.gold = gold[0];
  }
  if (doc.contains("dept") && !doc.at("dept").is_null()) {
    record.dept_label = parse_department(doc.at("dept").get<std::string>());
  }
  if (doc.contains("diff") && !doc.at("diff").is_null()) {
    record.diff_label = parse_difficulty(doc.at("diff").get<std::string>());
  }
  if (doc.contains("subject") && !doc.at("subject").is_null()) {
    record.subject = doc.at("subject").get<std::string>();
  }
  record.validate();
  return record;
}

json query_to_json(const QueryRecord& record) {
  json doc;
  doc["id"] = record.id;
  doc["stem"] = record.stem;
  json options = json::object();
  for (std::size_t i = 0; i < record.options.size(); ++i) {
    options[std::string(1, option_letter(i))] = record.options[i];
  }
  doc["options"] = std::move(options);
  if (record.gold) doc["gold"] = std::string(1, *record.gold);
  if (record.dept_label) doc["dept"] = std::string(department_code(*record.dept_label));
  if (record.diff_label) doc["diff"] = std::string(difficulty_id(*record.diff_label));
  if (record.subject) doc["subject"] = *record.subject;
  return doc;
}

}  // namespace emrc
