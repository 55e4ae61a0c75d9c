#include "emrc/prompts.hpp"

#include <array>
#include <cctype>

#include "emrc/errors.hpp"

namespace emrc {
namespace {

const std::array<PromptTemplate, 6>& template_registry() {
  static const std::array<PromptTemplate, 6> templates = {{
      {"classify", "1",
       R"(You are a medical triage assistant. Classify the question below into exactly one department and one difficulty level.

Departments: {departments}
Difficulty levels: {difficulties}

Question:
{stem}

Options:
{options}

Reply with exactly two lines:
Department: <one department from the list>
Difficulty: <low, medium, or high>)"},

      {"pseudo_label", "1",
       R"(You are labeling a medical question-answering corpus. Assign the question below to exactly one department and one difficulty level, judging difficulty by the reasoning depth required.

Departments: {departments}
Difficulty levels: {difficulties}

Question:
{stem}

Options:
{options}

Reply with exactly two lines:
Department: <one department from the list>
Difficulty: <low, medium, or high>)"},

      {"answer_l1", "1",
       R"(You are a medical expert. Answer the multiple-choice question below.

Question:
{stem}

Options:
{options}

Reply with exactly three lines:
Answer: <option letter>
Confidence: <integer 0-100>
Rationale: <one or two sentences>)"},

      {"answer_lk", "1",
       R"(You are a medical expert revisiting a multiple-choice question after a panel round. Weigh the other panelists' answers, their overall confidence, and the issues raised by the reviewing judge, then give your possibly revised answer.

Question:
{stem}

Options:
{options}

Panel context, strongest first:
{peer_context}

Reply with exactly three lines:
Answer: <option letter>
Confidence: <integer 0-100>
Rationale: <one or two sentences>)"},

      {"judge", "1",
       R"(You are the reviewing judge on a medical expert panel. Cross-examine the candidate responses below against the question and each other, looking for contradictions, factual errors, and unsupported claims.

Question:
{stem}

Options:
{options}

Candidate responses:
{responses}

For each candidate reply with one line of the form
Issues[<agent-id>]: none
or
Issues[<agent-id>]: <severity>: <short note>; <severity>: <short note>
where <severity> is one of contradiction, factual_error, unsupported.)"},

      {"aggregate", "1",
       R"(You are the aggregator for a medical expert panel. Combine the final candidate responses below into the single best answer, weighing each by its overall confidence and discounting answers with open issues.

Question:
{stem}

Options:
{options}

Final candidates, strongest first:
{candidates}

Reply with exactly two lines:
Answer: <option letter>
Rationale: <one or two sentences>)"},
  }};
  return templates;
}

bool placeholder_char(char ch) {
  return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view name) {
  for (const auto& tmpl : template_registry()) {
    if (tmpl.name == name) return tmpl;
  }
  throw ConfigError("unknown prompt template: " + std::string(name));
}

std::span<const PromptTemplate> all_prompt_templates() { return template_registry(); }

std::string render(const PromptTemplate& tmpl, const Bindings& bindings) {
  const std::string& body = tmpl.body;
  std::string out;
  out.reserve(body.size());
  std::size_t pos = 0;
  while (pos < body.size()) {
    char ch = body[pos];
    if (ch != '{') {
      out.push_back(ch);
      ++pos;
      continue;
    }
    std::size_t end = pos + 1;
    while (end < body.size() && placeholder_char(body[end])) ++end;
    if (end >= body.size() || body[end] != '}' || end == pos + 1) {
      // Not a placeholder token; emit the brace literally.
      out.push_back(ch);
      ++pos;
      continue;
    }
    std::string name = body.substr(pos + 1, end - pos - 1);
    auto it = bindings.find(name);
    if (it == bindings.end()) throw MissingBindingError(name);
    out.append(it->second);
    pos = end + 1;
  }
  return out;
}

std::string render_options(const QueryRecord& query) {
  std::string out;
  for (std::size_t i = 0; i < query.options.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out.push_back(option_letter(i));
    out.append(". ");
    out.append(query.options[i]);
  }
  return out;
}

std::string render_department_list() {
  std::string out;
  for (Department dept : all_departments()) {
    if (!out.empty()) out.append(", ");
    out.append(department_name(dept));
    out.append(" (").append(department_code(dept)).append(")");
  }
  return out;
}

std::string render_difficulty_list() {
  std::string out;
  for (Difficulty diff : all_difficulties()) {
    if (!out.empty()) out.append(", ");
    out.append(difficulty_name(diff));
    out.append(" (").append(difficulty_id(diff)).append(")");
  }
  return out;
}

}  // namespace emrc
