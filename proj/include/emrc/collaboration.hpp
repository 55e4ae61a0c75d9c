#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emrc/recruitment.hpp"

namespace emrc {

inline constexpr double kDefaultAlpha = 0.5;
inline constexpr int kDefaultLayers = 2;

/// Judge id recorded when adversarial verification is switched off.
inline constexpr std::string_view kDisabledJudgeId = "(disabled)";

struct AgentResponse {
  std::string agent_id;
  char answer = '?';
  double confidence = 0.0;  // self-reported, [0, 1]
  std::string rationale;
  std::string raw;
};

/// Self-confidence blended with the mean of the other agents' confidences:
/// fused = alpha * self + (1 - alpha) * peer_mean.
struct FusedConfidence {
  std::string agent_id;
  double self = 0.0;
  double peer_mean = 0.0;
  double fused = 0.0;
};

struct JudgeReport {
  std::string judge_id;
  JudgeParse verdict;
  std::string raw;

  bool all_clear() const { return verdict.consistent; }
};

struct AgentFailure {
  std::string agent_id;
  std::string stage;  // "answer", "judge" or "aggregate"
  std::string message;
};

struct LayerState {
  int index = 1;  // 1-based
  std::vector<AgentResponse> responses;
  std::vector<FusedConfidence> fused;
  std::optional<JudgeReport> judge;
  std::vector<AgentFailure> failures;
};

enum class AggregatorPolicy {
  HighestExpertise,  // top recruited agent
  Judge,             // whoever verified the final layer
  Fixed,             // explicit aggregator_id
};

std::string_view aggregator_policy_id(AggregatorPolicy policy);
AggregatorPolicy parse_aggregator_policy(const std::string& label);

struct CollabConfig {
  double alpha = kDefaultAlpha;  // self vs peer weight in confidence fusion
  int layers = kDefaultLayers;
  AggregatorPolicy aggregator_policy = AggregatorPolicy::HighestExpertise;
  std::string aggregator_id;  // required for AggregatorPolicy::Fixed
  bool drop_confidence = false;   // fused confidence = self confidence
  bool drop_adversarial = false;  // judge always reports all clear
  std::size_t agent_parallel = 4;

  void validate() const;
};

struct FinalDecision {
  char answer = '?';
  std::string rationale;
  std::string aggregator_id;
  bool fallback = false;  // true when the aggregator reply was unusable
};

struct CollabTranscript {
  std::string query_id;
  RecruitmentResult recruitment;
  std::vector<LayerState> layers;
  FinalDecision final;
  std::vector<std::string> warnings;
};

std::vector<FusedConfidence> fuse_confidence(const std::vector<AgentResponse>& responses,
                                             double alpha, bool drop_confidence);

/// Peer context injected into layer k > 1 prompts: every prior response with
/// its fused confidence and judge findings, strongest first.
std::string render_layer_context(const LayerState& prior);

/// Candidate block for the aggregation prompt, strongest first.
std::string render_final_candidates(const LayerState& layer);

/// Runs one answering round over the given agents. Individual failures are
/// recorded, not thrown; responses keep the agents' order.
LayerState answer_round(const QueryRecord& query,
                        const std::vector<Backend*>& agents, int layer,
                        const LayerState* prior, std::size_t parallel);

/// The recruited agent that verifies a layer (currently the top-scored one).
std::string select_judge(const RecruitmentResult& recruitment);

JudgeReport adversarial_verify(const QueryRecord& query, const LayerState& layer,
                               Backend& judge);

/// Asks the aggregator to pick among the final-layer candidates. Throws
/// ParseFailure or TransportError when the reply is unusable.
FinalDecision aggregate(const QueryRecord& query, const LayerState& layer,
                        Backend& aggregator);

/// Deterministic stand-in when aggregation fails: the answer with the
/// highest fused confidence (ties to the smallest agent id).
FinalDecision fallback_decision(const LayerState& layer);

/// Layered rounds, verification and aggregation over an already-decided
/// recruitment.
CollabTranscript run_layers(const QueryRecord& query, RecruitmentResult recruitment,
                            const BackendPool& pool, const CollabConfig& collab_config);

/// End-to-end: recruit, run the layered rounds, verify, aggregate.
CollabTranscript run_pipeline(const QueryRecord& query, const ExpertiseTable& table,
                              const BackendPool& pool,
                              const RecruitmentConfig& recruitment_config,
                              const CollabConfig& collab_config,
                              const DepartmentAliases& aliases);

nlohmann::json transcript_to_json(const CollabTranscript& transcript);

}  // namespace emrc
