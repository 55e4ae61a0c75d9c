#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "emrc/backend.hpp"
#include "emrc/taxonomy.hpp"

namespace emrc::testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(EMRC_FIXTURES_DIR) + "/" + name;
}

/// Self-deleting scratch directory under the system temp dir.
class TempDir {
 public:
  TempDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "emrc-test-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) {
      throw Error("mkdtemp failed");
    }
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

/// Backend whose replies are computed from the prompt, for tests that need
/// behavior a fixed scenario cannot express.
class FunctionBackend : public Backend {
 public:
  using Fn = std::function<std::string(const RenderedPrompt&)>;

  FunctionBackend(std::string id, Fn fn)
      : Backend(make_spec(std::move(id))), fn_(std::move(fn)) {}

 protected:
  std::string do_complete(const RenderedPrompt& prompt) override { return fn_(prompt); }

 private:
  static BackendSpec make_spec(std::string id) {
    BackendSpec spec;
    spec.id = std::move(id);
    spec.kind = BackendKind::Scripted;
    spec.max_retries = 0;
    return spec;
  }

  Fn fn_;
};

inline std::unique_ptr<ScriptedBackend> make_scripted(std::string id,
                                                      int max_retries = 2) {
  BackendSpec spec;
  spec.id = std::move(id);
  spec.kind = BackendKind::Scripted;
  spec.max_retries = max_retries;
  return std::make_unique<ScriptedBackend>(std::move(spec));
}

inline std::string classify_reply(Department dept, Difficulty diff) {
  return "Department: " + std::string(department_name(dept)) +
         "\nDifficulty: " + std::string(difficulty_name(diff)) + "\n";
}

inline std::string answer_reply(char letter, int confidence,
                                const std::string& rationale = "because") {
  return std::string("Answer: ") + letter +
         "\nConfidence: " + std::to_string(confidence) + "\nRationale: " + rationale +
         "\n";
}

inline std::string judge_clear_reply(const std::vector<std::string>& agent_ids) {
  std::string out;
  for (const auto& id : agent_ids) {
    out += "Issues[" + id + "]: none\n";
  }
  return out;
}

inline std::string aggregate_reply(char letter, const std::string& rationale = "combined") {
  return std::string("Answer: ") + letter + "\nRationale: " + rationale + "\n";
}

inline QueryRecord make_record(std::string id, Department dept, Difficulty diff,
                               char gold, std::size_t n_options = 4) {
  QueryRecord record;
  record.id = std::move(id);
  record.stem = "Stem for " + record.id;
  for (std::size_t i = 0; i < n_options; ++i) {
    record.options.push_back("option " + std::string(1, option_letter(i)));
  }
  record.gold = gold;
  record.dept_label = dept;
  record.diff_label = diff;
  return record;
}

}  // namespace emrc::testing
