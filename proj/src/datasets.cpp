#include "emrc/datasets.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emrc/errors.hpp"

namespace emrc {
namespace {

using nlohmann::json;

std::string require_string(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_string()) {
    throw Error(std::string("missing or non-string \"") + key + "\"");
  }
  return doc.at(key).get<std::string>();
}

/// Options given as {"A": "...", "B": "..."}; keys must be consecutive
/// letters from A.
std::vector<std::string> options_from_object(const json& doc) {
  if (!doc.contains("options") || !doc.at("options").is_object()) {
    throw Error("missing or non-object \"options\"");
  }
  const json& options = doc.at("options");
  std::vector<std::string> out(options.size());
  for (const auto& [key, value] : options.items()) {
    if (key.size() != 1 || !value.is_string()) {
      throw Error("bad option entry \"" + key + "\"");
    }
    auto index = option_index(key[0], options.size());
    if (!index) {
      throw Error("option letters must run A.. without gaps, got \"" + key + "\"");
    }
    out[*index] = value.get<std::string>();
  }
  return out;
}

std::vector<std::string> options_from_array(const json& doc) {
  if (!doc.contains("options") || !doc.at("options").is_array()) {
    throw Error("missing or non-array \"options\"");
  }
  std::vector<std::string> out;
  for (const auto& value : doc.at("options")) {
    if (!value.is_string()) {
      throw Error("options must be strings");
    }
    out.push_back(value.get<std::string>());
  }
  return out;
}

char gold_from_value(const json& value, const std::vector<std::string>& options) {
  if (value.is_number_integer()) {
    auto index = value.get<std::int64_t>();
    if (index < 0 || static_cast<std::size_t>(index) >= options.size()) {
      throw Error("answer index " + std::to_string(index) + " out of range");
    }
    return option_letter(static_cast<std::size_t>(index));
  }
  if (value.is_string()) {
    std::string text = value.get<std::string>();
    if (text.size() == 1 && option_index(text[0], options.size())) {
      return text[0];
    }
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (options[i] == text) return option_letter(i);
    }
    throw Error("answer \"" + text + "\" matches no option");
  }
  throw Error("answer must be a letter, an index, or the option text");
}

QueryRecord from_medqa(const json& doc, std::size_t line_no) {
  QueryRecord record;
  char id[32];
  std::snprintf(id, sizeof(id), "medqa-%06zu", line_no);
  record.id = id;
  record.stem = require_string(doc, "question");
  record.options = options_from_object(doc);
  if (!doc.contains("answer_idx")) {
    throw Error("missing \"answer_idx\"");
  }
  record.gold = gold_from_value(doc.at("answer_idx"), record.options);
  return record;
}

QueryRecord from_mmlu_pro(const json& doc) {
  QueryRecord record;
  if (!doc.contains("question_id")) {
    throw Error("missing \"question_id\"");
  }
  const json& qid = doc.at("question_id");
  record.id = "mmlupro-" + (qid.is_string() ? qid.get<std::string>()
                                            : std::to_string(qid.get<std::int64_t>()));
  record.stem = require_string(doc, "question");
  record.options = options_from_array(doc);
  if (doc.contains("answer_index")) {
    record.gold = gold_from_value(doc.at("answer_index"), record.options);
  } else if (doc.contains("answer")) {
    record.gold = gold_from_value(doc.at("answer"), record.options);
  } else {
    throw Error("missing \"answer\" or \"answer_index\"");
  }
  if (doc.contains("category") && doc.at("category").is_string()) {
    record.subject = doc.at("category").get<std::string>();
  }
  return record;
}

QueryRecord from_nejm(const json& doc, std::size_t line_no,
                      const DepartmentAliases& aliases) {
  QueryRecord record;
  char id[32];
  std::snprintf(id, sizeof(id), "nejm-%06zu", line_no);
  record.id = id;
  record.stem = require_string(doc, "question");
  record.options = options_from_object(doc);
  if (!doc.contains("answer")) {
    throw Error("missing \"answer\"");
  }
  record.gold = gold_from_value(doc.at("answer"), record.options);
  if (doc.contains("subject") && doc.at("subject").is_string()) {
    record.subject = doc.at("subject").get<std::string>();
    try {
      record.dept_label = parse_department(*record.subject, aliases);
    } catch (const UnknownDepartmentError&) {
      // keep it as a plain subject tag
    }
  }
  if (doc.contains("difficulty") && doc.at("difficulty").is_string()) {
    record.diff_label = parse_difficulty(doc.at("difficulty").get<std::string>());
  }
  return record;
}

}  // namespace

std::string_view schema_id(SourceSchema schema) {
  switch (schema) {
    case SourceSchema::Canonical: return "canonical";
    case SourceSchema::MedQA: return "medqa";
    case SourceSchema::MMLUPro: return "mmlu_pro";
    case SourceSchema::NEJM: return "nejm";
  }
  return "";
}

SourceSchema parse_schema(const std::string& label) {
  if (label == "canonical") return SourceSchema::Canonical;
  if (label == "medqa") return SourceSchema::MedQA;
  if (label == "mmlu_pro" || label == "mmlupro") return SourceSchema::MMLUPro;
  if (label == "nejm") return SourceSchema::NEJM;
  throw ConfigError("unknown source schema '" + label + "'");
}

std::vector<QueryRecord> ingest_stream(std::istream& in, SourceSchema schema,
                                       const DepartmentAliases& aliases) {
  std::vector<QueryRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& err) {
      throw SchemaViolationError(line_no, err.what());
    }
    QueryRecord record;
    try {
      switch (schema) {
        case SourceSchema::Canonical: record = query_from_json(doc); break;
        case SourceSchema::MedQA: record = from_medqa(doc, line_no); break;
        case SourceSchema::MMLUPro: record = from_mmlu_pro(doc); break;
        case SourceSchema::NEJM: record = from_nejm(doc, line_no, aliases); break;
      }
      record.validate();
    } catch (const Error& err) {
      throw SchemaViolationError(line_no, err.what());
    }
    if (!seen_ids.insert(record.id).second) {
      throw SchemaViolationError(line_no, "duplicate record id \"" + record.id + "\"");
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<QueryRecord> ingest(const std::string& path, SourceSchema schema,
                                const DepartmentAliases& aliases) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path);
  }
  return ingest_stream(in, schema, aliases);
}

void write_canonical(const std::vector<QueryRecord>& records, std::ostream& out) {
  for (const auto& record : records) {
    out << query_to_json(record).dump() << '\n';
  }
}

void write_canonical(const std::vector<QueryRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path);
  }
  write_canonical(records, out);
}

}  // namespace emrc
