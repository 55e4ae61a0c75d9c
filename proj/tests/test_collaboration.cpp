#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include <nlohmann/json.hpp>

#include "emrc/collaboration.hpp"
#include "emrc/errors.hpp"
#include "support/helpers.hpp"

using namespace emrc;
using emrc::testing::FunctionBackend;
using emrc::testing::aggregate_reply;
using emrc::testing::answer_reply;
using emrc::testing::classify_reply;
using emrc::testing::judge_clear_reply;
using emrc::testing::make_record;
using emrc::testing::make_scripted;
using nlohmann::json;

namespace {

AgentResponse response(std::string id, char answer, double confidence,
                       std::string rationale = "") {
  AgentResponse out;
  out.agent_id = std::move(id);
  out.answer = answer;
  out.confidence = confidence;
  out.rationale = std::move(rationale);
  return out;
}

RecruitmentResult recruited(std::vector<std::string> ids) {
  RecruitmentResult result;
  result.query_id = "q1";
  result.classification = {Department::Neurology, Difficulty::High};
  result.classifier_id = "(labels)";
  double score = 1.0;
  for (const auto& id : ids) result.scores[id] = score -= 0.1;
  result.recruited = std::move(ids);
  return result;
}

}  // namespace

TEST_CASE("aggregator policy ids round-trip") {
  CHECK(aggregator_policy_id(AggregatorPolicy::HighestExpertise) == "highest_expertise");
  CHECK(aggregator_policy_id(AggregatorPolicy::Judge) == "judge");
  CHECK(aggregator_policy_id(AggregatorPolicy::Fixed) == "fixed");
  CHECK(parse_aggregator_policy("judge") == AggregatorPolicy::Judge);
  CHECK_THROWS_AS(parse_aggregator_policy("vote"), ConfigError);
}

TEST_CASE("collaboration config defaults and validation") {
  CollabConfig config;
  CHECK(config.alpha == 0.5);
  CHECK(config.layers == 2);
  CHECK(config.aggregator_policy == AggregatorPolicy::HighestExpertise);
  CHECK_NOTHROW(config.validate());

  config.alpha = 1.5;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.alpha = 0.5;
  config.layers = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.layers = 2;
  config.aggregator_policy = AggregatorPolicy::Fixed;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.aggregator_id = "m1";
  CHECK_NOTHROW(config.validate());
  config.agent_parallel = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("confidence fusion blends self and peer mean by alpha") {
  std::vector<AgentResponse> responses = {
      response("a1", 'A', 0.9), response("a2", 'B', 0.6), response("a3", 'C', 0.3)};

  auto fused = fuse_confidence(responses, 0.5, false);
  REQUIRE(fused.size() == 3);
  CHECK(fused[0].self == doctest::Approx(0.9));
  CHECK(fused[0].peer_mean == doctest::Approx(0.45));
  CHECK(fused[0].fused == doctest::Approx(0.675));
  CHECK(fused[1].peer_mean == doctest::Approx(0.6));
  CHECK(fused[1].fused == doctest::Approx(0.6));
  CHECK(fused[2].peer_mean == doctest::Approx(0.75));
  CHECK(fused[2].fused == doctest::Approx(0.525));

  SUBCASE("alpha extremes") {
    auto self_only = fuse_confidence(responses, 1.0, false);
    CHECK(self_only[0].fused == doctest::Approx(0.9));
    auto peers_only = fuse_confidence(responses, 0.0, false);
    CHECK(peers_only[0].fused == doctest::Approx(0.45));
  }

  SUBCASE("a lone response is its own peer") {
    auto lone = fuse_confidence({response("a1", 'A', 0.7)}, 0.5, false);
    REQUIRE(lone.size() == 1);
    CHECK(lone[0].peer_mean == doctest::Approx(0.7));
    CHECK(lone[0].fused == doctest::Approx(0.7));
  }

  SUBCASE("dropping confidence fusion passes self through untouched") {
    auto dropped = fuse_confidence(responses, 0.5, true);
    for (std::size_t i = 0; i < responses.size(); ++i) {
      // Exact equality: the ablation must not perturb the numbers at all.
      CHECK(dropped[i].fused == responses[i].confidence);
    }
  }
}

TEST_CASE("panel context renders strongest first with judge findings") {
  LayerState layer;
  layer.index = 1;
  layer.responses = {response("a2", 'B', 0.6, "peer pick"),
                     response("a1", 'A', 0.9)};
  layer.fused = {FusedConfidence{"a2", 0.6, 0.4, 0.50},
                 FusedConfidence{"a1", 0.9, 0.5, 0.70}};

  SUBCASE("without a judge everything is unreviewed") {
    CHECK(render_layer_context(layer) ==
          "- [a1] Answer: A | Confidence: 0.70 | Rationale: (none given) | "
          "Issues: unreviewed\n"
          "- [a2] Answer: B | Confidence: 0.50 | Rationale: peer pick | "
          "Issues: unreviewed");
  }

  SUBCASE("judge findings are inlined per agent") {
    JudgeReport report;
    report.judge_id = "a1";
    report.verdict.per_response["a1"] = {};
    report.verdict.per_response["a2"] = {
        Issue{IssueSeverity::Contradiction, "conflicts with a1"},
        Issue{IssueSeverity::Unsupported, "no source"}};
    report.verdict.consistent = false;
    layer.judge = report;
    CHECK(render_layer_context(layer) ==
          "- [a1] Answer: A | Confidence: 0.70 | Rationale: (none given) | "
          "Issues: none\n"
          "- [a2] Answer: B | Confidence: 0.50 | Rationale: peer pick | "
          "Issues: contradiction: conflicts with a1; unsupported: no source");
    CHECK(render_final_candidates(layer) == render_layer_context(layer));
  }

  SUBCASE("fused ties order by agent id") {
    layer.fused[0].fused = 0.70;
    std::string context = render_layer_context(layer);
    CHECK(context.find("[a1]") < context.find("[a2]"));
  }
}

TEST_CASE("an answering round keeps agent order and records failures") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'A');
  FunctionBackend a1("a1", [](const RenderedPrompt& prompt) {
    CHECK(prompt.template_name == "answer_l1");
    CHECK(prompt.query_id == "q1");
    return answer_reply('C', 60, "first");
  });
  FunctionBackend a2("a2", [](const RenderedPrompt&) -> std::string {
    throw TransportError("a2 is down");
  });
  FunctionBackend a3("a3", [](const RenderedPrompt&) { return "word salad"; });
  FunctionBackend a4("a4", [](const RenderedPrompt&) {
    return answer_reply('A', 90, "fourth");
  });
  std::vector<Backend*> agents = {&a1, &a2, &a3, &a4};

  LayerState state = answer_round(query, agents, 1, nullptr, 1);
  CHECK(state.index == 1);
  REQUIRE(state.responses.size() == 2);
  CHECK(state.responses[0].agent_id == "a1");
  CHECK(state.responses[0].answer == 'C');
  CHECK(state.responses[0].confidence == doctest::Approx(0.6));
  CHECK(state.responses[0].rationale == "first");
  CHECK(state.responses[0].raw == answer_reply('C', 60, "first"));
  CHECK(state.responses[1].agent_id == "a4");
  REQUIRE(state.failures.size() == 2);
  CHECK(state.failures[0].agent_id == "a2");
  CHECK(state.failures[0].stage == "answer");
  CHECK(state.failures[1].agent_id == "a3");

  SUBCASE("parallel rounds produce the same state") {
    LayerState parallel = answer_round(query, agents, 1, nullptr, 4);
    CHECK(parallel.responses.size() == 2);
    CHECK(parallel.responses[0].agent_id == "a1");
    CHECK(parallel.failures.size() == 2);
  }
}

TEST_CASE("later rounds need the prior layer and cite it in the prompt") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'A');
  FunctionBackend agent("a1", [](const RenderedPrompt& prompt) {
    CHECK(prompt.template_name == "answer_lk");
    CHECK(prompt.text.find("Panel context, strongest first:\n- [a1] Answer: C") !=
          std::string::npos);
    return answer_reply('B', 80);
  });
  std::vector<Backend*> agents = {&agent};

  CHECK_THROWS_AS(answer_round(query, agents, 2, nullptr, 1), Error);

  LayerState prior;
  prior.index = 1;
  prior.responses = {response("a1", 'C', 0.6)};
  prior.fused = fuse_confidence(prior.responses, 0.5, false);
  LayerState state = answer_round(query, agents, 2, &prior, 1);
  CHECK(state.index == 2);
  REQUIRE(state.responses.size() == 1);
  CHECK(state.responses[0].answer == 'B');
}

TEST_CASE("the top recruited agent judges the panel") {
  CHECK(select_judge(recruited({"m2", "m1", "m3"})) == "m2");
  CHECK_THROWS_AS(select_judge(recruited({})), Error);
}

TEST_CASE("adversarial verification reports per-agent issues") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'A');
  LayerState layer;
  layer.responses = {response("m1", 'A', 0.8, "strong"), response("m2", 'B', 0.4)};
  layer.fused = fuse_confidence(layer.responses, 0.5, false);

  FunctionBackend judge("m1", [](const RenderedPrompt& prompt) {
    CHECK(prompt.template_name == "judge");
    // The judge sees self-reported confidence, not fused values.
    CHECK(prompt.text.find("- [m1] Answer: A | Confidence: 0.80 | Rationale: strong") !=
          std::string::npos);
    CHECK(prompt.text.find("- [m2] Answer: B | Confidence: 0.40") != std::string::npos);
    return std::string("Issues[m1]: none\nIssues[m2]: factual_error: dose is wrong");
  });

  JudgeReport report = adversarial_verify(query, layer, judge);
  CHECK(report.judge_id == "m1");
  CHECK_FALSE(report.all_clear());
  CHECK(report.verdict.per_response.at("m1").empty());
  REQUIRE(report.verdict.per_response.at("m2").size() == 1);
  CHECK(report.verdict.per_response.at("m2")[0].severity == IssueSeverity::FactualError);
  CHECK_FALSE(report.raw.empty());
}

TEST_CASE("aggregation parses the final answer and rationale") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'A');
  LayerState layer;
  layer.responses = {response("m1", 'A', 0.8), response("m2", 'B', 0.4)};
  layer.fused = fuse_confidence(layer.responses, 0.5, false);

  FunctionBackend aggregator("m1", [](const RenderedPrompt& prompt) {
    CHECK(prompt.template_name == "aggregate");
    CHECK(prompt.text.find("Final candidates, strongest first:") != std::string::npos);
    return aggregate_reply('B', "panel converged on B");
  });
  FinalDecision decision = aggregate(query, layer, aggregator);
  CHECK(decision.answer == 'B');
  CHECK(decision.rationale == "panel converged on B");
  CHECK(decision.aggregator_id == "m1");
  CHECK_FALSE(decision.fallback);

  SUBCASE("unusable replies propagate for the caller to handle") {
    FunctionBackend mute("m2", [](const RenderedPrompt&) { return std::string("?"); });
    CHECK_THROWS_AS(aggregate(query, layer, mute), ParseFailure);
  }
}

TEST_CASE("fallback decision takes the highest fused confidence") {
  LayerState layer;
  layer.responses = {response("m1", 'A', 0.4, "weak"), response("m2", 'B', 0.9, "sure"),
                     response("m3", 'C', 0.9, "also sure")};
  layer.fused = {FusedConfidence{"m1", 0.4, 0.9, 0.65},
                 FusedConfidence{"m2", 0.9, 0.65, 0.775},
                 FusedConfidence{"m3", 0.9, 0.65, 0.775}};
  FinalDecision decision = fallback_decision(layer);
  // m2 and m3 tie on fused confidence; the smaller id wins.
  CHECK(decision.answer == 'B');
  CHECK(decision.rationale == "sure");
  CHECK(decision.fallback);
  CHECK_THROWS_AS(fallback_decision(LayerState{}), Error);
}

namespace {

/// Pool whose scripted steps walk a full two-layer collaboration on q1.
BackendPool scripted_panel() {
  BackendPool pool;
  auto m1 = make_scripted("m1");
  m1->add_reply("answer_l1", "q1", answer_reply('A', 80, "initial pick"));
  m1->add_reply("judge", "q1", judge_clear_reply({"m1", "m2", "m3"}));
  m1->add_reply("answer_lk", "q1", answer_reply('B', 90, "revised"));
  m1->add_reply("judge", "q1", judge_clear_reply({"m1", "m2", "m3"}));
  m1->add_reply("aggregate", "q1", aggregate_reply('B', "panel converged"));
  pool.add(std::move(m1));

  auto m2 = make_scripted("m2");
  m2->add_reply("answer_l1", "q1", answer_reply('B', 70, "second"));
  m2->add_reply("answer_lk", "q1", answer_reply('B', 75, "still B"));
  pool.add(std::move(m2));

  auto m3 = make_scripted("m3");
  m3->add_reply("answer_l1", "q1", answer_reply('C', 60, "third"));
  m3->add_reply("answer_lk", "q1", answer_reply('B', 65, "convinced"));
  pool.add(std::move(m3));
  return pool;
}

}  // namespace

TEST_CASE("a full two-layer run verifies, revises and aggregates") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');
  CollabConfig config;
  config.agent_parallel = 1;

  BackendPool pool = scripted_panel();
  CollabTranscript transcript =
      run_layers(query, recruited({"m1", "m2", "m3"}), pool, config);

  CHECK(transcript.query_id == "q1");
  CHECK(transcript.warnings.empty());
  REQUIRE(transcript.layers.size() == 2);

  const LayerState& first = transcript.layers[0];
  REQUIRE(first.responses.size() == 3);
  CHECK(first.responses[0].agent_id == "m1");
  CHECK(first.responses[0].answer == 'A');
  REQUIRE(first.judge.has_value());
  CHECK(first.judge->judge_id == "m1");
  CHECK(first.judge->all_clear());
  REQUIRE(first.fused.size() == 3);
  CHECK(first.fused[0].fused == doctest::Approx(0.725));
  CHECK(first.fused[1].fused == doctest::Approx(0.7));
  CHECK(first.fused[2].fused == doctest::Approx(0.675));

  const LayerState& second = transcript.layers[1];
  REQUIRE(second.responses.size() == 3);
  CHECK(second.responses[0].answer == 'B');
  CHECK(second.responses[1].answer == 'B');
  CHECK(second.responses[2].answer == 'B');

  CHECK(transcript.final.answer == 'B');
  CHECK(transcript.final.rationale == "panel converged");
  CHECK(transcript.final.aggregator_id == "m1");
  CHECK_FALSE(transcript.final.fallback);

  SUBCASE("rebuilding the pool reproduces the transcript byte for byte") {
    BackendPool fresh = scripted_panel();
    CollabTranscript again =
        run_layers(query, recruited({"m1", "m2", "m3"}), fresh, config);
    CHECK(transcript_to_json(again).dump() == transcript_to_json(transcript).dump());
  }
}

TEST_CASE("disabling adversarial verification simulates an all-clear judge") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');
  CollabConfig config;
  config.layers = 1;
  config.drop_adversarial = true;
  config.agent_parallel = 1;

  // No judge steps scripted: a judge call would throw ScenarioExhaustedError.
  BackendPool pool;
  auto m1 = make_scripted("m1");
  m1->add_reply("answer_l1", "q1", answer_reply('A', 80));
  m1->add_reply("aggregate", "q1", aggregate_reply('A'));
  pool.add(std::move(m1));
  auto m2 = make_scripted("m2");
  m2->add_reply("answer_l1", "q1", answer_reply('B', 60));
  pool.add(std::move(m2));

  CollabTranscript transcript = run_layers(query, recruited({"m1", "m2"}), pool, config);
  REQUIRE(transcript.layers.size() == 1);
  REQUIRE(transcript.layers[0].judge.has_value());
  CHECK(transcript.layers[0].judge->judge_id == "(disabled)");
  CHECK(transcript.layers[0].judge->judge_id == kDisabledJudgeId);
  CHECK(transcript.layers[0].judge->all_clear());
  CHECK(transcript.layers[0].judge->verdict.per_response.size() == 2);
  CHECK(transcript.layers[0].judge->raw.empty());
}

TEST_CASE("dropping confidence fusion carries self confidence through layers") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');
  CollabConfig config;
  config.layers = 1;
  config.drop_confidence = true;
  config.drop_adversarial = true;
  config.agent_parallel = 1;

  BackendPool pool;
  auto m1 = make_scripted("m1");
  m1->add_reply("answer_l1", "q1", answer_reply('A', 35));
  m1->add_reply("aggregate", "q1", aggregate_reply('A'));
  pool.add(std::move(m1));
  auto m2 = make_scripted("m2");
  m2->add_reply("answer_l1", "q1", answer_reply('B', 95));
  pool.add(std::move(m2));

  CollabTranscript transcript = run_layers(query, recruited({"m1", "m2"}), pool, config);
  for (const FusedConfidence& fused : transcript.layers[0].fused) {
    CHECK(fused.fused == fused.self);
  }
}

TEST_CASE("a failed judge is a warning, not a fatal error") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');
  CollabConfig config;
  config.layers = 1;
  config.agent_parallel = 1;

  BackendPool pool;
  auto m1 = make_scripted("m1");
  m1->add_reply("answer_l1", "q1", answer_reply('A', 80));
  m1->add_error("judge", "q1", "transport");
  m1->add_reply("aggregate", "q1", aggregate_reply('A'));
  pool.add(std::move(m1));

  CollabTranscript transcript = run_layers(query, recruited({"m1"}), pool, config);
  CHECK_FALSE(transcript.layers[0].judge.has_value());
  REQUIRE(transcript.layers[0].failures.size() == 1);
  CHECK(transcript.layers[0].failures[0].stage == "judge");
  REQUIRE(transcript.warnings.size() == 1);
  CHECK(transcript.final.answer == 'A');
}

TEST_CASE("an empty later layer falls back to the previous one") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');
  CollabConfig config;
  config.drop_adversarial = true;
  config.agent_parallel = 1;

  BackendPool pool;
  auto m1 = make_scripted("m1");
  m1->add_reply("answer_l1", "q1", answer_reply('A', 80, "only round"));
  m1->add_error("answer_lk", "q1", "transport");
  m1->add_reply("aggregate", "q1", aggregate_reply('A', "from layer one"));
  pool.add(std::move(m1));

  CollabTranscript transcript = run_layers(query, recruited({"m1"}), pool, config);
  REQUIRE(transcript.layers.size() == 2);
  CHECK(transcript.layers[1].responses.empty());
  REQUIRE(transcript.warnings.size() == 1);
  CHECK(transcript.warnings[0].find("no responses") != std::string::npos);
  CHECK(transcript.final.answer == 'A');
  CHECK(transcript.final.rationale == "from layer one");
}

TEST_CASE("a dead first layer aborts the query") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');
  CollabConfig config;
  config.agent_parallel = 1;

  BackendPool pool;
  auto m1 = make_scripted("m1");
  m1->add_error("answer_l1", "q1", "transport", /*sticky=*/true);
  pool.add(std::move(m1));

  CHECK_THROWS_WITH_AS(run_layers(query, recruited({"m1"}), pool, config),
                       doctest::Contains("q1"), AllAgentsFailedError);
}

TEST_CASE("an unusable aggregator falls back to fused confidence") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');
  CollabConfig config;
  config.layers = 1;
  config.drop_adversarial = true;
  config.agent_parallel = 1;

  BackendPool pool;
  auto m1 = make_scripted("m1");
  m1->add_reply("answer_l1", "q1", answer_reply('A', 40, "unsure"));
  m1->add_reply("aggregate", "q1", "nothing useful", /*sticky=*/true);
  pool.add(std::move(m1));
  auto m2 = make_scripted("m2");
  m2->add_reply("answer_l1", "q1", answer_reply('B', 90, "sure"));
  pool.add(std::move(m2));
  auto m3 = make_scripted("m3");
  m3->add_reply("answer_l1", "q1", answer_reply('B', 80, "agrees"));
  pool.add(std::move(m3));

  CollabTranscript transcript =
      run_layers(query, recruited({"m1", "m2", "m3"}), pool, config);
  CHECK(transcript.final.fallback);
  CHECK(transcript.final.answer == 'B');
  CHECK(transcript.final.aggregator_id == "m1");
  REQUIRE(transcript.warnings.size() == 1);
  CHECK(transcript.warnings[0].find("aggregator m1") != std::string::npos);
}

TEST_CASE("a fixed aggregator id routes the aggregation call") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');
  CollabConfig config;
  config.layers = 1;
  config.drop_adversarial = true;
  config.aggregator_policy = AggregatorPolicy::Fixed;
  config.aggregator_id = "m2";
  config.agent_parallel = 1;

  BackendPool pool;
  auto m1 = make_scripted("m1");
  m1->add_reply("answer_l1", "q1", answer_reply('A', 80));
  pool.add(std::move(m1));
  auto m2 = make_scripted("m2");
  m2->add_reply("answer_l1", "q1", answer_reply('B', 60));
  m2->add_reply("aggregate", "q1", aggregate_reply('A', "m2 aggregated"));
  pool.add(std::move(m2));

  CollabTranscript transcript = run_layers(query, recruited({"m1", "m2"}), pool, config);
  CHECK(transcript.final.aggregator_id == "m2");
  CHECK(transcript.final.rationale == "m2 aggregated");
}

TEST_CASE("the pipeline recruits and then collaborates end to end") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');

  ExpertiseTable table;
  table.corpus_id = "fnv1a64:0";
  table.created_at = "2026-01-01T00:00:00Z";
  for (const char* id : {"m1", "m2", "m3"}) {
    BackendProfile profile;
    profile.classification_dept_acc = id[1] == '1' ? 0.9 : 0.5;
    profile.classification_diff_acc = 0.5;
    profile.dept_acc[department_index(Department::Neurology)] = id[1] == '3' ? 0.6 : 0.9;
    profile.diff_acc[difficulty_index(Difficulty::High)] = 0.8;
    table.profiles[id] = profile;
  }

  BackendPool pool = scripted_panel();
  // The chosen classifier (m1, highest summed accuracy) speaks first.
  static_cast<ScriptedBackend&>(pool.get("m1"))
      .add_reply("classify", "q1", classify_reply(Department::Neurology, Difficulty::High));

  RecruitmentConfig recruitment;
  recruitment.n_agents = 3;
  CollabConfig collab;
  collab.agent_parallel = 1;

  CollabTranscript transcript = run_pipeline(query, table, pool, recruitment, collab,
                                             DepartmentAliases::bundled());
  CHECK(transcript.recruitment.classifier_id == "m1");
  CHECK(transcript.recruitment.recruited == std::vector<std::string>{"m1", "m2", "m3"});
  CHECK(transcript.final.answer == 'B');
}

TEST_CASE("transcripts serialize every layer detail") {
  QueryRecord query = make_record("q1", Department::Neurology, Difficulty::High, 'B');
  CollabConfig config;
  config.agent_parallel = 1;
  BackendPool pool = scripted_panel();
  CollabTranscript transcript =
      run_layers(query, recruited({"m1", "m2", "m3"}), pool, config);

  json doc = transcript_to_json(transcript);
  CHECK(doc.at("query_id") == "q1");
  CHECK(doc.at("recruitment").at("classifier_id") == "(labels)");
  CHECK(doc.at("recruitment").at("classification").at("dept") == "Ne");
  CHECK(doc.at("recruitment").at("classification").at("diff") == "H");
  CHECK(doc.at("recruitment").at("recruited").size() == 3);
  REQUIRE(doc.at("layers").size() == 2);
  const json& layer = doc.at("layers")[0];
  CHECK(layer.at("index") == 1);
  CHECK(layer.at("responses")[0].at("answer") == "A");
  CHECK(layer.at("responses")[0].at("raw").get<std::string>().find("Answer: A") !=
        std::string::npos);
  CHECK(layer.at("judge").at("judge_id") == "m1");
  CHECK(layer.at("judge").at("all_clear") == true);
  CHECK(layer.at("fused")[0].at("fused").get<double>() == doctest::Approx(0.725));
  CHECK(doc.at("final").at("answer") == "B");
  CHECK(doc.at("final").at("fallback") == false);
  CHECK(doc.at("warnings").is_array());

  // No wall-clock fields anywhere: reruns must compare byte-identical.
  std::string dumped = doc.dump();
  CHECK(dumped.find("timestamp") == std::string::npos);
  CHECK(dumped.find("created_at") == std::string::npos);

  SUBCASE("layers without a judge serialize it as null") {
    CollabConfig no_judge = config;
    no_judge.layers = 1;
    BackendPool pool2;
    auto m1 = make_scripted("m1");
    m1->add_reply("answer_l1", "q1", answer_reply('A', 80));
    m1->add_error("judge", "q1", "transport");
    m1->add_reply("aggregate", "q1", aggregate_reply('A'));
    pool2.add(std::move(m1));
    CollabTranscript failed = run_layers(query, recruited({"m1"}), pool2, no_judge);
    json doc2 = transcript_to_json(failed);
    CHECK(doc2.at("layers")[0].at("judge").is_null());
    CHECK(doc2.at("layers")[0].at("failures").size() == 1);
  }
}
