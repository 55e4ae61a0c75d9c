#include "emrc/collaboration.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "emrc/prompts.hpp"

namespace emrc {
namespace {

std::string format_confidence(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

/// Response indexes ordered by fused confidence descending, agent id
/// ascending. Requires layer.fused to parallel layer.responses.
std::vector<std::size_t> strongest_first(const LayerState& layer) {
  std::vector<std::size_t> order(layer.responses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double fa = layer.fused[a].fused;
    double fb = layer.fused[b].fused;
    if (fa != fb) return fa > fb;
    return layer.responses[a].agent_id < layer.responses[b].agent_id;
  });
  return order;
}

std::string issues_text(const LayerState& layer, const std::string& agent_id) {
  if (!layer.judge) return "unreviewed";
  const auto& per_response = layer.judge->verdict.per_response;
  auto it = per_response.find(agent_id);
  if (it == per_response.end()) return "unreviewed";
  if (it->second.empty()) return "none";
  std::string out;
  for (const Issue& issue : it->second) {
    if (!out.empty()) out.append("; ");
    out.append(severity_id(issue.severity));
    out.append(": ");
    out.append(issue.note);
  }
  return out;
}

/// One line per response, strongest first, with fused confidence and the
/// judge's findings. Feeds both the next layer and the aggregator.
std::string render_panel_entries(const LayerState& layer) {
  std::string out;
  for (std::size_t i : strongest_first(layer)) {
    const AgentResponse& response = layer.responses[i];
    if (!out.empty()) out.push_back('\n');
    out.append("- [").append(response.agent_id).append("] Answer: ");
    out.push_back(response.answer);
    out.append(" | Confidence: ").append(format_confidence(layer.fused[i].fused));
    out.append(" | Rationale: ");
    out.append(response.rationale.empty() ? "(none given)" : response.rationale);
    out.append(" | Issues: ").append(issues_text(layer, response.agent_id));
  }
  return out;
}

/// Raw candidate lines for the judge: self-reported confidence, no fusion.
std::string render_judge_entries(const LayerState& layer) {
  std::string out;
  for (const AgentResponse& response : layer.responses) {
    if (!out.empty()) out.push_back('\n');
    out.append("- [").append(response.agent_id).append("] Answer: ");
    out.push_back(response.answer);
    out.append(" | Confidence: ").append(format_confidence(response.confidence));
    out.append(" | Rationale: ");
    out.append(response.rationale.empty() ? "(none given)" : response.rationale);
  }
  return out;
}

JudgeReport disabled_judge(const LayerState& layer) {
  JudgeReport report;
  report.judge_id = std::string(kDisabledJudgeId);
  for (const AgentResponse& response : layer.responses) {
    report.verdict.per_response[response.agent_id] = {};
  }
  report.verdict.consistent = true;
  return report;
}

nlohmann::json issue_to_json(const Issue& issue) {
  return {{"severity", std::string(severity_id(issue.severity))},
          {"note", issue.note}};
}

}  // namespace

std::string_view aggregator_policy_id(AggregatorPolicy policy) {
  switch (policy) {
    case AggregatorPolicy::HighestExpertise: return "highest_expertise";
    case AggregatorPolicy::Judge: return "judge";
    case AggregatorPolicy::Fixed: return "fixed";
  }
  return "";
}

AggregatorPolicy parse_aggregator_policy(const std::string& label) {
  if (label == "highest_expertise") return AggregatorPolicy::HighestExpertise;
  if (label == "judge") return AggregatorPolicy::Judge;
  if (label == "fixed") return AggregatorPolicy::Fixed;
  throw ConfigError("unknown aggregator policy '" + label + "'");
}

void CollabConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) {
    throw ConfigError("alpha must be in [0, 1]");
  }
  if (layers < 1) {
    throw ConfigError("layers must be >= 1");
  }
  if (aggregator_policy == AggregatorPolicy::Fixed && aggregator_id.empty()) {
    throw ConfigError("fixed aggregator policy needs an aggregator_id");
  }
  if (agent_parallel == 0) {
    throw ConfigError("agent_parallel must be >= 1");
  }
}

std::vector<FusedConfidence> fuse_confidence(const std::vector<AgentResponse>& responses,
                                             double alpha, bool drop_confidence) {
  double sum = 0.0;
  for (const AgentResponse& response : responses) sum += response.confidence;
  std::vector<FusedConfidence> fused;
  fused.reserve(responses.size());
  for (const AgentResponse& response : responses) {
    FusedConfidence entry;
    entry.agent_id = response.agent_id;
    entry.self = response.confidence;
    entry.peer_mean = responses.size() > 1
                          ? (sum - response.confidence) /
                                static_cast<double>(responses.size() - 1)
                          : response.confidence;
    entry.fused = drop_confidence
                      ? entry.self
                      : alpha * entry.self + (1.0 - alpha) * entry.peer_mean;
    fused.push_back(std::move(entry));
  }
  return fused;
}

std::string render_layer_context(const LayerState& prior) {
  return render_panel_entries(prior);
}

std::string render_final_candidates(const LayerState& layer) {
  return render_panel_entries(layer);
}

LayerState answer_round(const QueryRecord& query, const std::vector<Backend*>& agents,
                        int layer, const LayerState* prior, std::size_t parallel) {
  if (layer > 1 && prior == nullptr) {
    throw Error("layer " + std::to_string(layer) + " needs the previous layer's state");
  }
  const PromptTemplate& tmpl = prompt_template(layer == 1 ? "answer_l1" : "answer_lk");
  Bindings bindings{{"stem", query.stem}, {"options", render_options(query)}};
  if (layer > 1) {
    bindings["peer_context"] = render_layer_context(*prior);
  }
  RenderedPrompt prompt{std::string(tmpl.name), query.id, render(tmpl, bindings)};

  std::vector<std::optional<AgentResponse>> slots(agents.size());
  std::vector<std::optional<AgentFailure>> failed(agents.size());
  parallel_for(agents.size(), parallel, [&](std::size_t i) {
    Backend& agent = *agents[i];
    std::string raw_text;
    try {
      AnswerParse parsed =
          complete_parsed(agent, prompt, [&](const std::string& raw) {
            raw_text = raw;
            return parse_answer(raw, query.options.size());
          });
      slots[i] = AgentResponse{agent.id(), parsed.answer, parsed.confidence,
                               parsed.rationale, raw_text};
    } catch (const ParseFailure& err) {
      failed[i] = AgentFailure{agent.id(), "answer", err.what()};
    } catch (const TransportError& err) {
      failed[i] = AgentFailure{agent.id(), "answer", err.what()};
    }
  });

  LayerState state;
  state.index = layer;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (slots[i]) state.responses.push_back(std::move(*slots[i]));
    if (failed[i]) state.failures.push_back(std::move(*failed[i]));
  }
  return state;
}

std::string select_judge(const RecruitmentResult& recruitment) {
  if (recruitment.recruited.empty()) {
    throw Error("no recruited agents to judge");
  }
  return recruitment.recruited.front();
}

JudgeReport adversarial_verify(const QueryRecord& query, const LayerState& layer,
                               Backend& judge) {
  const PromptTemplate& tmpl = prompt_template("judge");
  RenderedPrompt prompt{std::string(tmpl.name), query.id,
                        render(tmpl, {{"stem", query.stem},
                                      {"options", render_options(query)},
                                      {"responses", render_judge_entries(layer)}})};
  std::string raw = judge.complete(prompt);
  std::vector<std::string> agent_ids;
  agent_ids.reserve(layer.responses.size());
  for (const AgentResponse& response : layer.responses) {
    agent_ids.push_back(response.agent_id);
  }
  return JudgeReport{judge.id(), parse_judge(raw, agent_ids), std::move(raw)};
}

FinalDecision aggregate(const QueryRecord& query, const LayerState& layer,
                        Backend& aggregator) {
  const PromptTemplate& tmpl = prompt_template("aggregate");
  RenderedPrompt prompt{std::string(tmpl.name), query.id,
                        render(tmpl, {{"stem", query.stem},
                                      {"options", render_options(query)},
                                      {"candidates", render_final_candidates(layer)}})};
  std::string raw_text;
  char answer = complete_parsed(aggregator, prompt, [&](const std::string& raw) {
    raw_text = raw;
    return parse_final(raw, query.options.size());
  });
  FinalDecision decision;
  decision.answer = answer;
  decision.rationale = parse_labeled_line(raw_text, "rationale").value_or("");
  decision.aggregator_id = aggregator.id();
  return decision;
}

FinalDecision fallback_decision(const LayerState& layer) {
  if (layer.responses.empty()) {
    throw Error("cannot fall back on a layer with no responses");
  }
  std::size_t best = strongest_first(layer).front();
  FinalDecision decision;
  decision.answer = layer.responses[best].answer;
  decision.rationale = layer.responses[best].rationale;
  decision.fallback = true;
  return decision;
}

CollabTranscript run_layers(const QueryRecord& query, RecruitmentResult recruitment,
                            const BackendPool& pool, const CollabConfig& collab_config) {
  collab_config.validate();
  CollabTranscript transcript;
  transcript.query_id = query.id;
  transcript.recruitment = std::move(recruitment);

  std::vector<Backend*> agents;
  agents.reserve(transcript.recruitment.recruited.size());
  for (const std::string& id : transcript.recruitment.recruited) {
    agents.push_back(&pool.get(id));
  }

  const LayerState* prior = nullptr;
  for (int layer = 1; layer <= collab_config.layers; ++layer) {
    LayerState state =
        answer_round(query, agents, layer, prior, collab_config.agent_parallel);
    if (state.responses.empty()) {
      if (transcript.layers.empty()) {
        throw AllAgentsFailedError(query.id);
      }
      transcript.warnings.push_back(
          "layer " + std::to_string(layer) +
          " produced no responses; aggregating the previous layer");
      transcript.layers.push_back(std::move(state));
      break;
    }
    state.fused =
        fuse_confidence(state.responses, collab_config.alpha, collab_config.drop_confidence);
    if (collab_config.drop_adversarial) {
      state.judge = disabled_judge(state);
    } else {
      std::string judge_id = select_judge(transcript.recruitment);
      try {
        state.judge = adversarial_verify(query, state, pool.get(judge_id));
      } catch (const TransportError& err) {
        state.failures.push_back(AgentFailure{judge_id, "judge", err.what()});
        transcript.warnings.push_back("judge " + judge_id + " failed at layer " +
                                      std::to_string(layer) + ": " + err.what());
      }
    }
    transcript.layers.push_back(std::move(state));
    prior = &transcript.layers.back();
  }

  const LayerState* final_layer = nullptr;
  for (auto it = transcript.layers.rbegin(); it != transcript.layers.rend(); ++it) {
    if (!it->responses.empty()) {
      final_layer = &*it;
      break;
    }
  }

  std::string aggregator_id;
  switch (collab_config.aggregator_policy) {
    case AggregatorPolicy::Fixed:
      aggregator_id = collab_config.aggregator_id;
      break;
    case AggregatorPolicy::Judge:
      aggregator_id = select_judge(transcript.recruitment);
      break;
    case AggregatorPolicy::HighestExpertise:
      aggregator_id = transcript.recruitment.recruited.front();
      break;
  }
  try {
    transcript.final = aggregate(query, *final_layer, pool.get(aggregator_id));
  } catch (const ParseFailure& err) {
    transcript.final = fallback_decision(*final_layer);
    transcript.final.aggregator_id = aggregator_id;
    transcript.warnings.push_back("aggregator " + aggregator_id +
                                  " gave no usable reply; using the highest fused "
                                  "confidence answer: " +
                                  err.what());
  } catch (const TransportError& err) {
    transcript.final = fallback_decision(*final_layer);
    transcript.final.aggregator_id = aggregator_id;
    transcript.warnings.push_back("aggregator " + aggregator_id +
                                  " failed; using the highest fused confidence "
                                  "answer: " +
                                  err.what());
  }
  return transcript;
}

CollabTranscript run_pipeline(const QueryRecord& query, const ExpertiseTable& table,
                              const BackendPool& pool,
                              const RecruitmentConfig& recruitment_config,
                              const CollabConfig& collab_config,
                              const DepartmentAliases& aliases) {
  return run_layers(query, recruit(query, table, pool, recruitment_config, aliases),
                    pool, collab_config);
}

nlohmann::json transcript_to_json(const CollabTranscript& transcript) {
  nlohmann::json recruitment{
      {"query_id", transcript.recruitment.query_id},
      {"classification",
       {{"dept", std::string(department_code(transcript.recruitment.classification.dept))},
        {"diff", std::string(difficulty_id(transcript.recruitment.classification.diff))}}},
      {"classifier_id", transcript.recruitment.classifier_id},
      {"scores", transcript.recruitment.scores},
      {"recruited", transcript.recruitment.recruited},
  };

  nlohmann::json layers = nlohmann::json::array();
  for (const LayerState& layer : transcript.layers) {
    nlohmann::json responses = nlohmann::json::array();
    for (const AgentResponse& response : layer.responses) {
      responses.push_back({{"agent_id", response.agent_id},
                           {"answer", std::string(1, response.answer)},
                           {"confidence", response.confidence},
                           {"rationale", response.rationale},
                           {"raw", response.raw}});
    }
    nlohmann::json fused = nlohmann::json::array();
    for (const FusedConfidence& entry : layer.fused) {
      fused.push_back({{"agent_id", entry.agent_id},
                       {"self", entry.self},
                       {"peer_mean", entry.peer_mean},
                       {"fused", entry.fused}});
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const AgentFailure& failure : layer.failures) {
      failures.push_back({{"agent_id", failure.agent_id},
                          {"stage", failure.stage},
                          {"message", failure.message}});
    }
    nlohmann::json judge;
    if (layer.judge) {
      nlohmann::json issues = nlohmann::json::object();
      for (const auto& [agent_id, list] : layer.judge->verdict.per_response) {
        nlohmann::json items = nlohmann::json::array();
        for (const Issue& issue : list) items.push_back(issue_to_json(issue));
        issues[agent_id] = std::move(items);
      }
      judge = {{"judge_id", layer.judge->judge_id},
               {"all_clear", layer.judge->all_clear()},
               {"issues", std::move(issues)},
               {"raw", layer.judge->raw}};
    }
    layers.push_back({{"index", layer.index},
                      {"responses", std::move(responses)},
                      {"fused", std::move(fused)},
                      {"judge", std::move(judge)},
                      {"failures", std::move(failures)}});
  }

  return {
      {"query_id", transcript.query_id},
      {"recruitment", std::move(recruitment)},
      {"layers", std::move(layers)},
      {"final",
       {{"answer", std::string(1, transcript.final.answer)},
        {"rationale", transcript.final.rationale},
        {"aggregator_id", transcript.final.aggregator_id},
        {"fallback", transcript.final.fallback}}},
      {"warnings", transcript.warnings},
  };
}

}  // namespace emrc
