#pragma once

#include <stdexcept>
#include <string>

namespace emrc {

/// Root of the project exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unresolvable configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnknownDepartmentError : public Error {
 public:
  explicit UnknownDepartmentError(const std::string& label)
      : Error("unknown department: \"" + label + "\""), label_(label) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

class UnknownDifficultyError : public Error {
 public:
  explicit UnknownDifficultyError(const std::string& label)
      : Error("unknown difficulty: \"" + label + "\""), label_(label) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

/// A structured-output parser rejected a raw backend reply.
class ParseFailure : public Error {
 public:
  using Error::Error;
};

class MissingBindingError : public Error {
 public:
  explicit MissingBindingError(const std::string& name)
      : Error("prompt placeholder has no binding: {" + name + "}"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Transport-level failure talking to a backend (after retries).
class TransportError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// A scripted backend was asked for a step its scenario never programmed.
/// Always a test or scenario authoring bug, never a runtime condition.
class ScenarioExhaustedError : public Error {
 public:
  using Error::Error;
};

class BackendUnavailableError : public Error {
 public:
  explicit BackendUnavailableError(const std::string& backend_id)
      : Error("backend unavailable: " + backend_id), backend_id_(backend_id) {}
  const std::string& backend_id() const { return backend_id_; }

 private:
  std::string backend_id_;
};

class FormatVersionMismatchError : public Error {
 public:
  using Error::Error;
};

class CorruptTableError : public Error {
 public:
  using Error::Error;
};

class EmptyTableError : public Error {
 public:
  EmptyTableError() : Error("expertise table has no profiles") {}
  explicit EmptyTableError(const std::string& what) : Error(what) {}
};

class EmptyCorpusError : public Error {
 public:
  EmptyCorpusError() : Error("corpus is empty") {}
  explicit EmptyCorpusError(const std::string& what) : Error(what) {}
};

/// Pseudo-labeling gave up on one query after exhausting parse retries.
class LabelParseFailure : public Error {
 public:
  explicit LabelParseFailure(const std::string& query_id, const std::string& detail = "")
      : Error("could not parse labeler output for query " + query_id +
              (detail.empty() ? "" : ": " + detail)),
        query_id_(query_id) {}
  const std::string& query_id() const { return query_id_; }

 private:
  std::string query_id_;
};

class ClassificationFailure : public Error {
 public:
  explicit ClassificationFailure(const std::string& query_id, const std::string& detail = "")
      : Error("could not classify query " + query_id +
              (detail.empty() ? "" : ": " + detail)),
        query_id_(query_id) {}
  const std::string& query_id() const { return query_id_; }

 private:
  std::string query_id_;
};

class AllAgentsFailedError : public Error {
 public:
  explicit AllAgentsFailedError(const std::string& query_id)
      : Error("every recruited agent failed on query " + query_id) {}
};

class MissingScoreError : public Error {
 public:
  explicit MissingScoreError(const std::string& backend_id)
      : Error("no expertise score for backend " + backend_id) {}
};

class NoGoldLabelsError : public Error {
 public:
  NoGoldLabelsError() : Error("no gold labels present, metrics undefined") {}
};

/// Malformed dataset line; carries the 1-based line number.
class SchemaViolationError : public Error {
 public:
  SchemaViolationError(std::size_t line_no, const std::string& what)
      : Error("line " + std::to_string(line_no) + ": " + what), line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

}  // namespace emrc
