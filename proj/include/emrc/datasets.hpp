#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "emrc/taxonomy.hpp"

namespace emrc {

/// Input layouts the importer understands, one JSON object per line.
enum class SourceSchema {
  Canonical,  // this project's own record layout
  MedQA,      // question / options object / answer_idx
  MMLUPro,    // question_id / question / options array / answer / category
  NEJM,       // question / options object / answer / subject
};

std::string_view schema_id(SourceSchema schema);
SourceSchema parse_schema(const std::string& label);

/// Reads JSONL into canonical records. Malformed lines raise
/// SchemaViolationError with the 1-based line number; blank lines are
/// skipped. Department-like subjects become department labels when they
/// resolve through the aliases.
std::vector<QueryRecord> ingest_stream(std::istream& in, SourceSchema schema,
                                       const DepartmentAliases& aliases);

std::vector<QueryRecord> ingest(const std::string& path, SourceSchema schema,
                                const DepartmentAliases& aliases);

void write_canonical(const std::vector<QueryRecord>& records, std::ostream& out);
void write_canonical(const std::vector<QueryRecord>& records, const std::string& path);

}  // namespace emrc
