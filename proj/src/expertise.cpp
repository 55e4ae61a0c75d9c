#include "emrc/expertise.hpp"

#include <fstream>

#include "emrc/prompts.hpp"
#include "emrc/util.hpp"

namespace emrc {
namespace {

Bindings classification_bindings(const QueryRecord& query) {
  return {
      {"departments", render_department_list()},
      {"difficulties", render_difficulty_list()},
      {"stem", query.stem},
      {"options", render_options(query)},
  };
}

struct Tally {
  std::int64_t classification_dept_hits = 0;
  std::int64_t classification_diff_hits = 0;
  std::int64_t total = 0;
  std::array<std::int64_t, kDepartmentCount> dept_hits{};
  std::array<std::int64_t, kDepartmentCount> dept_seen{};
  std::array<std::int64_t, kDifficultyCount> diff_hits{};
  std::array<std::int64_t, kDifficultyCount> diff_seen{};
};

nlohmann::json profile_to_json(const BackendProfile& profile) {
  nlohmann::json departments = nlohmann::json::object();
  for (Department dept : all_departments()) {
    auto i = department_index(dept);
    departments[std::string(department_code(dept))] = {
        {"acc", profile.dept_acc[i]},
        {"support", profile.dept_support[i]},
    };
  }
  nlohmann::json difficulties = nlohmann::json::object();
  for (Difficulty diff : all_difficulties()) {
    auto i = difficulty_index(diff);
    difficulties[std::string(difficulty_id(diff))] = {
        {"acc", profile.diff_acc[i]},
        {"support", profile.diff_support[i]},
    };
  }
  return {
      {"classification",
       {{"dept_acc", profile.classification_dept_acc},
        {"diff_acc", profile.classification_diff_acc}}},
      {"departments", std::move(departments)},
      {"difficulties", std::move(difficulties)},
  };
}

BackendProfile profile_from_json(const std::string& backend_id,
                                 const nlohmann::json& value) {
  if (!value.is_object()) {
    throw CorruptTableError("profile for '" + backend_id + "' is not an object");
  }
  BackendProfile profile;
  if (value.contains("classification")) {
    const auto& cls = value.at("classification");
    profile.classification_dept_acc = cls.value("dept_acc", 0.0);
    profile.classification_diff_acc = cls.value("diff_acc", 0.0);
  }
  if (value.contains("departments")) {
    for (const auto& [code, cell] : value.at("departments").items()) {
      Department dept;
      try {
        dept = parse_department(code);
      } catch (const UnknownDepartmentError&) {
        throw CorruptTableError("profile for '" + backend_id +
                                "' has unknown department key '" + code + "'");
      }
      auto i = department_index(dept);
      profile.dept_acc[i] = cell.value("acc", 0.0);
      profile.dept_support[i] = cell.value("support", std::int64_t{0});
    }
  }
  if (value.contains("difficulties")) {
    for (const auto& [code, cell] : value.at("difficulties").items()) {
      Difficulty diff;
      try {
        diff = parse_difficulty(code);
      } catch (const UnknownDifficultyError&) {
        throw CorruptTableError("profile for '" + backend_id +
                                "' has unknown difficulty key '" + code + "'");
      }
      auto i = difficulty_index(diff);
      profile.diff_acc[i] = cell.value("acc", 0.0);
      profile.diff_support[i] = cell.value("support", std::int64_t{0});
    }
  }
  return profile;
}

}  // namespace

std::string corpus_content_hash(const std::vector<QueryRecord>& corpus) {
  std::uint64_t hash = fnv1a64("");
  for (const auto& record : corpus) {
    hash = fnv1a64(query_to_json(record).dump(), hash);
    hash = fnv1a64("\n", hash);
  }
  return "fnv1a64:" + hex64(hash);
}

std::vector<QueryRecord> pseudo_label(std::vector<QueryRecord> corpus,
                                      Backend& labeler,
                                      const DepartmentAliases& aliases,
                                      std::size_t parallel) {
  const PromptTemplate& tmpl = prompt_template("pseudo_label");
  parallel_for(corpus.size(), parallel, [&](std::size_t i) {
    QueryRecord& record = corpus[i];
    if (record.labeled()) return;
    RenderedPrompt prompt{std::string(tmpl.name), record.id,
                          render(tmpl, classification_bindings(record))};
    ClassificationPrediction labels;
    try {
      labels = complete_parsed(labeler, prompt, [&](const std::string& raw) {
        return parse_classification(raw, aliases);
      });
    } catch (const ParseFailure& err) {
      throw LabelParseFailure(record.id, err.what());
    }
    if (!record.dept_label) record.dept_label = labels.dept;
    if (!record.diff_label) record.diff_label = labels.diff;
  });
  return corpus;
}

std::vector<EvalOutcome> evaluate_pool(const std::vector<QueryRecord>& corpus,
                                       const BackendPool& pool,
                                       const DepartmentAliases& aliases,
                                       std::size_t parallel) {
  if (corpus.empty()) {
    throw EmptyCorpusError("nothing to profile: corpus is empty");
  }
  for (const auto& record : corpus) {
    if (!record.labeled() || !record.gold) {
      throw Error("record '" + record.id +
                  "' lacks the labels or gold answer needed for profiling");
    }
  }
  const PromptTemplate& classify_tmpl = prompt_template("classify");
  const PromptTemplate& answer_tmpl = prompt_template("answer_l1");

  std::size_t backends = pool.size();
  std::vector<EvalOutcome> outcomes(corpus.size() * backends);
  parallel_for(outcomes.size(), parallel, [&](std::size_t slot) {
    const QueryRecord& record = corpus[slot / backends];
    Backend& backend = pool.at(slot % backends);
    EvalOutcome& outcome = outcomes[slot];
    outcome.backend_id = backend.id();
    outcome.query_id = record.id;

    RenderedPrompt classify{std::string(classify_tmpl.name), record.id,
                            render(classify_tmpl, classification_bindings(record))};
    try {
      outcome.prediction =
          complete_parsed(backend, classify, [&](const std::string& raw) {
            outcome.raw_classification = raw;
            return parse_classification(raw, aliases);
          });
    } catch (const ParseFailure&) {
    } catch (const TransportError&) {
    }

    RenderedPrompt answer{std::string(answer_tmpl.name), record.id,
                          render(answer_tmpl, {{"stem", record.stem},
                                               {"options", render_options(record)}})};
    try {
      AnswerParse parsed =
          complete_parsed(backend, answer, [&](const std::string& raw) {
            outcome.raw_answer = raw;
            return parse_answer(raw, record.options.size());
          });
      outcome.answer = parsed.answer;
    } catch (const ParseFailure&) {
    } catch (const TransportError&) {
    }
  });
  return outcomes;
}

ExpertiseTable build_table(const std::vector<EvalOutcome>& outcomes,
                           const std::vector<QueryRecord>& corpus) {
  if (corpus.empty()) {
    throw EmptyCorpusError("cannot build a table from an empty corpus");
  }
  std::map<std::string, const QueryRecord*> by_id;
  for (const auto& record : corpus) {
    if (!record.labeled() || !record.gold) {
      throw Error("record '" + record.id +
                  "' lacks the labels or gold answer needed for profiling");
    }
    by_id[record.id] = &record;
  }

  std::map<std::string, Tally> tallies;
  for (const auto& outcome : outcomes) {
    auto it = by_id.find(outcome.query_id);
    if (it == by_id.end()) {
      throw Error("outcome refers to unknown query '" + outcome.query_id + "'");
    }
    const QueryRecord& record = *it->second;
    Tally& tally = tallies[outcome.backend_id];
    ++tally.total;
    auto dept = department_index(*record.dept_label);
    auto diff = difficulty_index(*record.diff_label);
    if (outcome.prediction) {
      if (outcome.prediction->dept == *record.dept_label) ++tally.classification_dept_hits;
      if (outcome.prediction->diff == *record.diff_label) ++tally.classification_diff_hits;
    }
    ++tally.dept_seen[dept];
    ++tally.diff_seen[diff];
    if (outcome.answer && *outcome.answer == *record.gold) {
      ++tally.dept_hits[dept];
      ++tally.diff_hits[diff];
    }
  }

  ExpertiseTable table;
  table.corpus_id = corpus_content_hash(corpus);
  table.created_at = now_iso8601();
  for (const auto& [backend_id, tally] : tallies) {
    BackendProfile profile;
    double total = static_cast<double>(tally.total);
    profile.classification_dept_acc =
        static_cast<double>(tally.classification_dept_hits) / total;
    profile.classification_diff_acc =
        static_cast<double>(tally.classification_diff_hits) / total;
    for (std::size_t i = 0; i < kDepartmentCount; ++i) {
      profile.dept_support[i] = tally.dept_seen[i];
      if (tally.dept_seen[i] > 0) {
        profile.dept_acc[i] = static_cast<double>(tally.dept_hits[i]) /
                              static_cast<double>(tally.dept_seen[i]);
      }
    }
    for (std::size_t i = 0; i < kDifficultyCount; ++i) {
      profile.diff_support[i] = tally.diff_seen[i];
      if (tally.diff_seen[i] > 0) {
        profile.diff_acc[i] = static_cast<double>(tally.diff_hits[i]) /
                              static_cast<double>(tally.diff_seen[i]);
      }
    }
    table.profiles[backend_id] = profile;
  }
  return table;
}

CoverageReport coverage_report(const ExpertiseTable& table) {
  CoverageReport report;
  for (Department dept : all_departments()) {
    auto i = department_index(dept);
    bool seen = false;
    for (const auto& [id, profile] : table.profiles) {
      if (profile.dept_support[i] > 0) {
        seen = true;
        break;
      }
    }
    if (!seen) report.empty_departments.push_back(dept);
  }
  for (Difficulty diff : all_difficulties()) {
    auto i = difficulty_index(diff);
    bool seen = false;
    for (const auto& [id, profile] : table.profiles) {
      if (profile.diff_support[i] > 0) {
        seen = true;
        break;
      }
    }
    if (!seen) report.empty_difficulties.push_back(diff);
  }
  return report;
}

nlohmann::json table_to_json(const ExpertiseTable& table) {
  nlohmann::json backends = nlohmann::json::object();
  for (const auto& [id, profile] : table.profiles) {
    backends[id] = profile_to_json(profile);
  }
  return {
      {"version", table.version},
      {"corpus_id", table.corpus_id},
      {"created_at", table.created_at},
      {"backends", std::move(backends)},
  };
}

ExpertiseTable table_from_json(const nlohmann::json& value) {
  if (!value.is_object()) {
    throw CorruptTableError("table root is not an object");
  }
  ExpertiseTable table;
  table.version = value.value("version", "");
  if (table.version != kTableFormatVersion) {
    throw FormatVersionMismatchError("expertise table version '" + table.version +
                                     "' (this build reads version '" +
                                     std::string(kTableFormatVersion) + "')");
  }
  table.corpus_id = value.value("corpus_id", "");
  table.created_at = value.value("created_at", "");
  if (!value.contains("backends") || !value.at("backends").is_object()) {
    throw CorruptTableError("table has no \"backends\" object");
  }
  for (const auto& [id, profile] : value.at("backends").items()) {
    table.profiles[id] = profile_from_json(id, profile);
  }
  if (table.profiles.empty()) {
    throw EmptyTableError("table lists no backends");
  }
  return table;
}

void save_table(const ExpertiseTable& table, const std::string& path) {
  write_text_file(path, table_to_json(table).dump(2) + "\n");
}

ExpertiseTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw CorruptTableError("cannot open " + path);
  }
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw CorruptTableError(path + ": " + err.what());
  }
  return table_from_json(value);
}

}  // namespace emrc
