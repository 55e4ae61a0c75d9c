#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>

#include "emrc/taxonomy.hpp"

namespace emrc {

/// Prompt text with {name} placeholders. Templates are versioned assets;
/// changing a body bumps its version and deliberately invalidates golden
/// prompt snapshots.
struct PromptTemplate {
  std::string name;
  std::string version;
  std::string body;
};

/// Registered template names: classify, answer_l1, answer_lk, judge,
/// aggregate, pseudo_label. Throws ConfigError for anything else.
const PromptTemplate& prompt_template(std::string_view name);

std::span<const PromptTemplate> all_prompt_templates();

using Bindings = std::map<std::string, std::string>;

/// Substitutes every {name} token from the bindings in one pass over the
/// template body. Binding values are inserted verbatim and never rescanned.
/// Throws MissingBindingError for a placeholder without a binding.
std::string render(const PromptTemplate& tmpl, const Bindings& bindings);

/// "A. <text>" lines in letter order.
std::string render_options(const QueryRecord& query);

/// "Internal Medicine (IM), Surgery (Su), ..." in canonical order.
std::string render_department_list();

/// "low (L), medium (M), high (H)".
std::string render_difficulty_list();

}  // namespace emrc
