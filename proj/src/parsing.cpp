#include "emrc/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <optional>

#include "emrc/errors.hpp"

namespace emrc {
namespace {

bool is_alnum(char ch) { return std::isalnum(static_cast<unsigned char>(ch)) != 0; }

char to_lower(char ch) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.remove_suffix(1);
  }
  return text;
}

std::vector<std::string_view> split_lines(const std::string& raw) {
  std::vector<std::string_view> lines;
  std::string_view view(raw);
  while (!view.empty()) {
    auto nl = view.find('\n');
    if (nl == std::string_view::npos) {
      lines.push_back(view);
      break;
    }
    lines.push_back(view.substr(0, nl));
    view.remove_prefix(nl + 1);
  }
  return lines;
}

// Drops leading whitespace and markdown decoration (#, *, >, -, `).
std::string_view strip_decoration(std::string_view line) {
  while (!line.empty()) {
    char ch = line.front();
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == '#' || ch == '*' ||
        ch == '>' || ch == '-' || ch == '`') {
      line.remove_prefix(1);
    } else {
      break;
    }
  }
  return line;
}

std::string_view strip_trailing_decoration(std::string_view value) {
  while (!value.empty()) {
    char ch = value.back();
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == '*' || ch == '`') {
      value.remove_suffix(1);
    } else {
      break;
    }
  }
  return value;
}

bool starts_with_icase(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (to_lower(text[i]) != to_lower(prefix[i])) return false;
  }
  return true;
}

// Matches "<key> :" (or '=') at the start of a decorated line and returns
// the trimmed remainder. Stray '*' between key and colon ("Department**: X")
// is tolerated.
std::optional<std::string_view> marker_value(
    std::string_view line, std::initializer_list<std::string_view> keys) {
  line = strip_decoration(line);
  for (std::string_view key : keys) {
    if (!starts_with_icase(line, key)) continue;
    std::string_view rest = line.substr(key.size());
    // Reject partial-word matches like "Answered:".
    if (!rest.empty() && is_alnum(rest.front())) continue;
    while (!rest.empty() &&
           (std::isspace(static_cast<unsigned char>(rest.front())) ||
            rest.front() == '*')) {
      rest.remove_prefix(1);
    }
    if (rest.empty() || (rest.front() != ':' && rest.front() != '=')) continue;
    rest.remove_prefix(1);
    return trim(strip_trailing_decoration(trim(rest)));
  }
  return std::nullopt;
}

bool standalone_at(std::string_view text, std::size_t i, std::size_t option_count) {
  char ch = text[i];
  if (ch < 'A' || static_cast<std::size_t>(ch - 'A') >= option_count) return false;
  if (i > 0 && is_alnum(text[i - 1])) return false;
  if (i + 1 < text.size() && is_alnum(text[i + 1])) return false;
  return true;
}

std::optional<char> first_standalone_letter(std::string_view text,
                                            std::size_t option_count) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (standalone_at(text, i, option_count)) return text[i];
  }
  return std::nullopt;
}

// Letter extraction for marker values: uppercase first so that "a strong
// case for B" reads as B, lowercase only when that is all there is.
std::optional<char> value_letter(std::string_view text, std::size_t option_count) {
  if (auto letter = first_standalone_letter(text, option_count)) return letter;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
    if (upper < 'A' || static_cast<std::size_t>(upper - 'A') >= option_count) continue;
    if (i > 0 && is_alnum(text[i - 1])) continue;
    if (i + 1 < text.size() && is_alnum(text[i + 1])) continue;
    return upper;
  }
  return std::nullopt;
}

std::optional<char> last_standalone_letter(std::string_view text,
                                           std::size_t option_count) {
  for (std::size_t i = text.size(); i-- > 0;) {
    if (standalone_at(text, i, option_count)) return text[i];
  }
  return std::nullopt;
}

// Value up to the first clause break, for lines like
// "Department: Neurology, because ...".
std::string_view first_clause(std::string_view value) {
  auto cut = value.find_first_of(".,;");
  if (cut == std::string_view::npos) return value;
  return trim(value.substr(0, cut));
}

std::optional<double> parse_confidence_value(std::string_view value) {
  std::size_t start = value.find_first_of("0123456789.");
  if (start == std::string_view::npos) return std::nullopt;
  std::string token;
  bool has_dot = false;
  for (std::size_t i = start; i < value.size(); ++i) {
    char ch = value[i];
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      token.push_back(ch);
    } else if (ch == '.' && !has_dot) {
      has_dot = true;
      token.push_back(ch);
    } else {
      break;
    }
  }
  if (token.empty() || token == ".") return std::nullopt;
  double parsed = std::strtod(token.c_str(), nullptr);
  // "0.9" reads as a fraction; everything else is on the 0-100 scale.
  if (has_dot && parsed <= 1.0) return parsed;
  return std::clamp(parsed, 0.0, 100.0) / 100.0;
}

std::optional<IssueSeverity> parse_severity(std::string_view text) {
  std::string key;
  for (char ch : text) {
    if (is_alnum(ch)) key.push_back(to_lower(ch));
  }
  if (key == "contradiction" || key == "contradictions") return IssueSeverity::Contradiction;
  if (key == "factualerror" || key == "factualerrors") return IssueSeverity::FactualError;
  if (key == "unsupported" || key == "unsupportedclaim" || key == "unsupportedclaims") {
    return IssueSeverity::Unsupported;
  }
  return std::nullopt;
}

bool is_all_clear(std::string_view value) {
  std::string key;
  for (char ch : value) {
    if (is_alnum(ch)) key.push_back(to_lower(ch));
  }
  return key.empty() || key == "none" || key == "noissues" || key == "na" ||
         key == "nil" || key == "clear";
}

std::vector<Issue> parse_issue_list(std::string_view value) {
  std::vector<Issue> issues;
  if (is_all_clear(value)) return issues;
  std::string_view rest = value;
  while (!rest.empty()) {
    auto sep = rest.find(';');
    std::string_view item = trim(sep == std::string_view::npos ? rest : rest.substr(0, sep));
    rest = sep == std::string_view::npos ? std::string_view{} : rest.substr(sep + 1);
    if (item.empty()) continue;
    Issue issue;
    auto colon = item.find(':');
    if (colon != std::string_view::npos) {
      if (auto severity = parse_severity(item.substr(0, colon))) {
        issue.severity = *severity;
        issue.note = std::string(trim(item.substr(colon + 1)));
        issues.push_back(std::move(issue));
        continue;
      }
    }
    // No recognized severity prefix; keep the whole item as the note.
    issue.severity = IssueSeverity::Unsupported;
    issue.note = std::string(item);
    issues.push_back(std::move(issue));
  }
  return issues;
}

}  // namespace

std::string_view severity_id(IssueSeverity severity) {
  switch (severity) {
    case IssueSeverity::Contradiction: return "contradiction";
    case IssueSeverity::FactualError: return "factual_error";
    case IssueSeverity::Unsupported: return "unsupported";
  }
  return "";
}

ClassificationPrediction parse_classification(const std::string& raw,
                                              const DepartmentAliases& aliases) {
  std::optional<Department> dept;
  std::optional<Difficulty> diff;
  for (std::string_view line : split_lines(raw)) {
    if (auto value = marker_value(line, {"department", "dept"})) {
      for (std::string_view candidate : {*value, first_clause(*value)}) {
        if (candidate.empty()) continue;
        try {
          dept = parse_department(candidate, aliases);
          break;
        } catch (const UnknownDepartmentError&) {
        }
      }
    } else if (auto diff_value =
                   marker_value(line, {"difficulty level", "difficulty", "diff"})) {
      for (std::string_view candidate :
           {*diff_value, first_clause(*diff_value)}) {
        if (candidate.empty()) continue;
        std::string_view bare = candidate;
        if (auto open = bare.rfind('('); open != std::string_view::npos && bare.back() == ')') {
          bare = trim(bare.substr(0, open));
        }
        for (std::string_view attempt : {candidate, bare}) {
          try {
            diff = parse_difficulty(attempt);
            break;
          } catch (const UnknownDifficultyError&) {
          }
        }
        if (diff) break;
      }
    }
  }
  if (!dept || !diff) {
    throw ParseFailure("could not extract department and difficulty from: " + raw);
  }
  return {*dept, *diff};
}

AnswerParse parse_answer(const std::string& raw, std::size_t option_count) {
  std::optional<char> answer;
  std::optional<double> confidence;
  std::string rationale;
  for (std::string_view line : split_lines(raw)) {
    if (auto value = marker_value(line, {"final answer", "answer"})) {
      if (auto letter = value_letter(*value, option_count)) {
        answer = letter;  // later markers win
      }
    } else if (auto conf = marker_value(line, {"confidence"})) {
      if (auto parsed = parse_confidence_value(*conf)) confidence = parsed;
    } else if (auto reason = marker_value(line, {"rationale", "reasoning"})) {
      if (rationale.empty()) rationale = std::string(*reason);
    }
  }
  if (!answer) answer = last_standalone_letter(raw, option_count);
  if (!answer) {
    throw ParseFailure("no option letter found in: " + raw);
  }
  return {*answer, confidence.value_or(0.5), std::move(rationale)};
}

JudgeParse parse_judge(const std::string& raw, std::span<const std::string> agent_ids) {
  JudgeParse out;
  for (const auto& id : agent_ids) out.per_response[id] = {};
  for (std::string_view line : split_lines(raw)) {
    std::string_view stripped = strip_decoration(line);
    if (!starts_with_icase(stripped, "issues[")) continue;
    stripped.remove_prefix(std::string_view("issues[").size());
    auto close = stripped.find(']');
    if (close == std::string_view::npos) continue;
    std::string id(trim(stripped.substr(0, close)));
    std::string_view rest = stripped.substr(close + 1);
    while (!rest.empty() &&
           (std::isspace(static_cast<unsigned char>(rest.front())) ||
            rest.front() == '*')) {
      rest.remove_prefix(1);
    }
    if (rest.empty() || rest.front() != ':') continue;
    rest.remove_prefix(1);
    auto it = out.per_response.find(id);
    if (it == out.per_response.end()) continue;  // unknown agent id
    it->second = parse_issue_list(trim(rest));
  }
  out.consistent = std::all_of(out.per_response.begin(), out.per_response.end(),
                               [](const auto& kv) { return kv.second.empty(); });
  return out;
}

std::optional<std::string> parse_labeled_line(const std::string& raw,
                                              std::string_view key) {
  for (std::string_view line : split_lines(raw)) {
    if (auto value = marker_value(line, {key})) {
      return std::string(*value);
    }
  }
  return std::nullopt;
}

char parse_final(const std::string& raw, std::size_t option_count) {
  std::optional<char> answer;
  for (std::string_view line : split_lines(raw)) {
    if (auto value = marker_value(line, {"final answer", "answer"})) {
      if (auto letter = value_letter(*value, option_count)) {
        answer = letter;
      }
    }
  }
  if (!answer) answer = last_standalone_letter(raw, option_count);
  if (!answer) {
    throw ParseFailure("no final answer letter found in: " + raw);
  }
  return *answer;
}

}  // namespace emrc
