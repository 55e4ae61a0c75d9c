#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "emrc/collaboration.hpp"
#include "emrc/datasets.hpp"
#include "emrc/evaluate.hpp"
#include "emrc/expertise.hpp"
#include "emrc/run_config.hpp"
#include "emrc/util.hpp"

namespace {

using namespace emrc;

namespace fs = std::filesystem;

struct CommonArgs {
  std::string corpus_path;
  std::string schema = "canonical";
  std::string pool_path;
  std::string table_path;
  std::string aliases_path;
};

void add_corpus_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--corpus", args.corpus_path, "input corpus (JSONL)")->required();
  cmd->add_option("--schema", args.schema,
                  "corpus layout: canonical, medqa, mmlu_pro, nejm");
}

void add_pool_option(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--pool", args.pool_path, "backend pool config (JSON)");
}

void add_table_option(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--table", args.table_path, "expertise table (JSON)");
}

void add_aliases_option(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--aliases", args.aliases_path,
                  "department alias file (defaults to the bundled set)");
}

DepartmentAliases resolve_aliases(const CommonArgs& args, const RunConfig& config) {
  if (!args.aliases_path.empty()) return DepartmentAliases::load(args.aliases_path);
  if (!config.aliases_path.empty()) return DepartmentAliases::load(config.aliases_path);
  return DepartmentAliases::bundled();
}

std::vector<QueryRecord> load_corpus(const CommonArgs& args,
                                     const DepartmentAliases& aliases) {
  return ingest(args.corpus_path, parse_schema(args.schema), aliases);
}

std::string resolve_path(const std::string& flag_value, const std::string& config_value,
                         const char* what) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  throw ConfigError(std::string("no ") + what +
                    " given (flag or config file entry required)");
}

void print_coverage_notes(const ExpertiseTable& table) {
  CoverageReport coverage = coverage_report(table);
  for (Department dept : coverage.empty_departments) {
    std::cerr << "note: table has no validation coverage for department "
              << department_name(dept) << " (" << department_code(dept) << ")\n";
  }
  for (Difficulty diff : coverage.empty_difficulties) {
    std::cerr << "note: table has no validation coverage for difficulty "
              << difficulty_name(diff) << "\n";
  }
}

std::string format_cell(double acc, std::int64_t support) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.2f(%lld)", acc,
                static_cast<long long>(support));
  return buffer;
}

int cmd_build_table(const CommonArgs& args, const RunConfig& config,
                    const std::string& out_path, const std::string& labeler_id,
                    std::size_t parallel) {
  DepartmentAliases aliases = resolve_aliases(args, config);
  std::vector<QueryRecord> corpus = load_corpus(args, aliases);
  BackendPool pool =
      BackendPool::load(resolve_path(args.pool_path, config.pool_path, "pool config"));

  bool unlabeled = std::any_of(corpus.begin(), corpus.end(),
                               [](const QueryRecord& r) { return !r.labeled(); });
  if (unlabeled) {
    if (labeler_id.empty()) {
      throw ConfigError(
          "corpus has unlabeled records; pass --labeler <backend-id> to "
          "pseudo-label them");
    }
    corpus = pseudo_label(std::move(corpus), pool.get(labeler_id), aliases, parallel);
  }

  std::vector<EvalOutcome> outcomes = evaluate_pool(corpus, pool, aliases, parallel);
  ExpertiseTable table = build_table(outcomes, corpus);
  print_coverage_notes(table);
  save_table(table, out_path);
  std::cout << "wrote " << out_path << " (" << table.profiles.size() << " backends, "
            << corpus.size() << " queries)\n";
  return 0;
}

int cmd_classify(const CommonArgs& args, const RunConfig& config,
                 const std::string& classifier_override) {
  DepartmentAliases aliases = resolve_aliases(args, config);
  std::vector<QueryRecord> corpus = load_corpus(args, aliases);
  BackendPool pool =
      BackendPool::load(resolve_path(args.pool_path, config.pool_path, "pool config"));
  std::string classifier_id = classifier_override;
  if (classifier_id.empty()) classifier_id = config.recruitment.classifier_override;
  if (classifier_id.empty()) {
    ExpertiseTable table =
        load_table(resolve_path(args.table_path, config.table_path, "expertise table"));
    classifier_id = select_classifier(table);
  }
  Backend& classifier = pool.get(classifier_id);
  for (const QueryRecord& record : corpus) {
    ClassificationPrediction prediction = classify_query(record, classifier, aliases);
    nlohmann::json line{
        {"id", record.id},
        {"dept", std::string(department_code(prediction.dept))},
        {"diff", std::string(difficulty_id(prediction.diff))},
        {"classifier_id", classifier_id},
    };
    std::cout << line.dump() << "\n";
  }
  return 0;
}

int cmd_answer(const CommonArgs& args, RunConfig config, const std::string& query_id,
               const std::string& out_arg) {
  DepartmentAliases aliases = resolve_aliases(args, config);
  std::vector<QueryRecord> corpus = load_corpus(args, aliases);
  BackendPool pool =
      BackendPool::load(resolve_path(args.pool_path, config.pool_path, "pool config"));
  ExpertiseTable table =
      load_table(resolve_path(args.table_path, config.table_path, "expertise table"));
  print_coverage_notes(table);

  if (!query_id.empty()) {
    auto it = std::find_if(corpus.begin(), corpus.end(),
                           [&](const QueryRecord& r) { return r.id == query_id; });
    if (it == corpus.end()) {
      throw ConfigError("query '" + query_id + "' is not in the corpus");
    }
    corpus = {*it};
  }

  std::string out_dir = out_arg.empty() ? config.out_dir : out_arg;
  bool single_file = !query_id.empty() && !out_arg.empty();
  if (!single_file) fs::create_directories(out_dir);

  std::vector<nlohmann::json> dumps(corpus.size());
  parallel_for(corpus.size(), config.query_parallel, [&](std::size_t i) {
    CollabTranscript transcript = run_pipeline(corpus[i], table, pool,
                                               config.recruitment, config.collab, aliases);
    dumps[i] = transcript_to_json(transcript);
  });
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::string path = single_file
                           ? out_arg
                           : (fs::path(out_dir) / (corpus[i].id + ".json")).string();
    write_text_file(path, dumps[i].dump(2) + "\n");
    std::cout << corpus[i].id << "\t" << dumps[i].at("final").at("answer").get<std::string>()
              << "\n";
  }
  return 0;
}

EvalConfig eval_config_from(const RunConfig& config) {
  EvalConfig eval;
  eval.recruitment = config.recruitment;
  eval.collab = config.collab;
  eval.seed = config.seed;
  eval.query_parallel = config.query_parallel;
  return eval;
}

int cmd_evaluate(const CommonArgs& args, const RunConfig& config, EvalConfig eval,
                 const std::string& out_path, const std::string& transcripts_dir) {
  DepartmentAliases aliases = resolve_aliases(args, config);
  std::vector<QueryRecord> corpus = load_corpus(args, aliases);
  BackendPool pool =
      BackendPool::load(resolve_path(args.pool_path, config.pool_path, "pool config"));
  ExpertiseTable table =
      load_table(resolve_path(args.table_path, config.table_path, "expertise table"));
  print_coverage_notes(table);

  eval.keep_transcripts = !transcripts_dir.empty();
  EvalRun run = evaluate(corpus, table, pool, eval, aliases);
  if (!transcripts_dir.empty()) {
    fs::create_directories(transcripts_dir);
    for (const CollabTranscript& transcript : run.transcripts) {
      write_text_file(
          (fs::path(transcripts_dir) / (transcript.query_id + ".json")).string(),
          transcript_to_json(transcript).dump(2) + "\n");
    }
  }
  if (!out_path.empty()) {
    write_text_file(out_path, report_to_json(run.report).dump(2) + "\n");
  }
  std::cout << report_to_text(run.report);
  return 0;
}

int cmd_ablate(const CommonArgs& args, const RunConfig& config, EvalConfig base,
               const std::string& grid_path, const std::string& out_path) {
  DepartmentAliases aliases = resolve_aliases(args, config);
  std::vector<QueryRecord> corpus = load_corpus(args, aliases);
  BackendPool pool =
      BackendPool::load(resolve_path(args.pool_path, config.pool_path, "pool config"));
  ExpertiseTable table =
      load_table(resolve_path(args.table_path, config.table_path, "expertise table"));
  print_coverage_notes(table);

  AblationGrid grid = AblationGrid::load(grid_path);
  std::vector<AblationResult> results =
      run_ablation(corpus, table, pool, base, grid, aliases);
  nlohmann::json out = nlohmann::json::array();
  for (const AblationResult& result : results) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-24s accuracy %.4f  (n=%lld, failed=%lld)",
                  result.name.c_str(), result.report.metrics.accuracy,
                  static_cast<long long>(result.report.n_queries),
                  static_cast<long long>(result.report.n_failed));
    std::cout << line << "\n";
    out.push_back({{"name", result.name}, {"report", report_to_json(result.report)}});
  }
  if (!out_path.empty()) {
    write_text_file(out_path, out.dump(2) + "\n");
  }
  return 0;
}

int cmd_inspect_table(const std::string& table_path) {
  ExpertiseTable table = load_table(table_path);
  std::cout << "version " << table.version << "  corpus " << table.corpus_id
            << "  created " << table.created_at << "\n";
  char header[512];
  std::string line = "backend              cls-dept cls-diff";
  for (Department dept : all_departments()) {
    std::snprintf(header, sizeof(header), " %-9s", std::string(department_code(dept)).c_str());
    line += header;
  }
  for (Difficulty diff : all_difficulties()) {
    std::snprintf(header, sizeof(header), " %-9s", std::string(difficulty_id(diff)).c_str());
    line += header;
  }
  std::cout << line << "\n";
  for (const auto& [id, profile] : table.profiles) {
    char prefix[64];
    std::snprintf(prefix, sizeof(prefix), "%-20s %-8.2f %-8.2f", id.c_str(),
                  profile.classification_dept_acc, profile.classification_diff_acc);
    std::string row = prefix;
    for (std::size_t i = 0; i < kDepartmentCount; ++i) {
      std::snprintf(header, sizeof(header), " %-9s",
                    format_cell(profile.dept_acc[i], profile.dept_support[i]).c_str());
      row += header;
    }
    for (std::size_t i = 0; i < kDifficultyCount; ++i) {
      std::snprintf(header, sizeof(header), " %-9s",
                    format_cell(profile.diff_acc[i], profile.diff_support[i]).c_str());
      row += header;
    }
    std::cout << row << "\n";
  }
  print_coverage_notes(table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"expertise-aware multi-backend answering pipeline"};
  app.require_subcommand(0, 1);

  std::string config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "run config file (JSON)");
  app.add_flag("--print-config", print_config,
               "print the resolved run config as JSON and exit");

  // build-table
  auto* build = app.add_subcommand("build-table",
                                   "profile the pool and write an expertise table");
  CommonArgs build_args;
  std::string build_out;
  std::string labeler_id;
  std::size_t build_parallel = 1;
  add_corpus_options(build, build_args);
  add_pool_option(build, build_args);
  add_aliases_option(build, build_args);
  build->add_option("--out", build_out, "output table path")->required();
  build->add_option("--labeler", labeler_id,
                    "backend id used to pseudo-label unlabeled records");
  build->add_option("--parallel", build_parallel, "concurrent probe calls");

  // classify
  auto* classify = app.add_subcommand("classify", "classify corpus records");
  CommonArgs classify_args;
  std::string classify_classifier;
  add_corpus_options(classify, classify_args);
  add_pool_option(classify, classify_args);
  add_table_option(classify, classify_args);
  add_aliases_option(classify, classify_args);
  classify->add_option("--classifier", classify_classifier,
                       "backend id to classify with (default: best in table)");

  // answer
  auto* answer = app.add_subcommand("answer", "run the full pipeline");
  CommonArgs answer_args;
  std::string answer_id;
  std::string answer_out;
  double answer_alpha = kDefaultAlpha;
  double answer_beta = kDefaultBeta;
  int answer_layers = kDefaultLayers;
  std::size_t answer_agents = kDefaultAgents;
  std::string answer_aggregator;
  bool no_confidence = false;
  bool no_adversarial = false;
  bool answer_trust_labels = false;
  std::size_t answer_parallel = 0;
  add_corpus_options(answer, answer_args);
  add_pool_option(answer, answer_args);
  add_table_option(answer, answer_args);
  add_aliases_option(answer, answer_args);
  answer->add_option("--id", answer_id, "answer only this query id");
  answer->add_option("--out", answer_out,
                     "transcript file (with --id) or directory (default: out_dir)");
  answer->add_option("--alpha", answer_alpha, "self vs peer confidence weight");
  answer->add_option("--beta", answer_beta, "department vs difficulty score weight");
  answer->add_option("--layers", answer_layers, "collaboration layers");
  answer->add_option("--agents", answer_agents, "recruited agents per query");
  answer->add_option("--aggregator", answer_aggregator, "fixed aggregator backend id");
  answer->add_flag("--no-confidence", no_confidence, "disable confidence fusion");
  answer->add_flag("--no-adversarial", no_adversarial, "disable the judge");
  answer->add_flag("--trust-labels", answer_trust_labels,
                   "recruit from corpus labels instead of classifying");
  answer->add_option("--parallel", answer_parallel, "concurrent queries");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score the pipeline on a corpus");
  CommonArgs eval_args;
  std::string eval_out;
  std::string eval_transcripts;
  std::string eval_strategy = "expertise";
  std::string eval_random_mode = "per_query";
  std::string eval_run_id;
  std::uint64_t eval_seed = 0;
  std::size_t eval_k = 0;
  double eval_alpha = kDefaultAlpha;
  double eval_beta = kDefaultBeta;
  int eval_layers = kDefaultLayers;
  std::size_t eval_agents = kDefaultAgents;
  bool eval_no_confidence = false;
  bool eval_no_adversarial = false;
  bool eval_trust_labels = false;
  std::size_t eval_parallel = 0;
  add_corpus_options(evaluate_cmd, eval_args);
  add_pool_option(evaluate_cmd, eval_args);
  add_table_option(evaluate_cmd, eval_args);
  add_aliases_option(evaluate_cmd, eval_args);
  evaluate_cmd->add_option("--out", eval_out, "write the report JSON here");
  evaluate_cmd->add_option("--transcripts-dir", eval_transcripts,
                           "write per-query transcripts into this directory");
  evaluate_cmd->add_option("--strategy", eval_strategy,
                           "recruitment: expertise, random, task_top");
  evaluate_cmd->add_option("--random-mode", eval_random_mode,
                           "random draws: per_query or per_run");
  evaluate_cmd->add_option("--run-id", eval_run_id, "explicit run id");
  evaluate_cmd->add_option("--seed", eval_seed, "seed for random recruitment");
  evaluate_cmd->add_option("--k", eval_k, "set size for random/task_top recruitment");
  evaluate_cmd->add_option("--alpha", eval_alpha, "self vs peer confidence weight");
  evaluate_cmd->add_option("--beta", eval_beta, "department vs difficulty score weight");
  evaluate_cmd->add_option("--layers", eval_layers, "collaboration layers");
  evaluate_cmd->add_option("--agents", eval_agents, "recruited agents per query");
  evaluate_cmd->add_flag("--no-confidence", eval_no_confidence,
                         "disable confidence fusion");
  evaluate_cmd->add_flag("--no-adversarial", eval_no_adversarial, "disable the judge");
  evaluate_cmd->add_flag("--trust-labels", eval_trust_labels,
                         "recruit from corpus labels instead of classifying");
  evaluate_cmd->add_option("--parallel", eval_parallel, "concurrent queries");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run an ablation grid");
  CommonArgs ablate_args;
  std::string ablate_grid;
  std::string ablate_out;
  std::uint64_t ablate_seed = 0;
  bool ablate_trust_labels = false;
  std::size_t ablate_parallel = 0;
  add_corpus_options(ablate, ablate_args);
  add_pool_option(ablate, ablate_args);
  add_table_option(ablate, ablate_args);
  add_aliases_option(ablate, ablate_args);
  ablate->add_option("--grid", ablate_grid, "ablation variants file (JSON)")->required();
  ablate->add_option("--out", ablate_out, "write per-variant reports here");
  ablate->add_option("--seed", ablate_seed, "base seed for random recruitment");
  ablate->add_flag("--trust-labels", ablate_trust_labels,
                   "recruit from corpus labels instead of classifying");
  ablate->add_option("--parallel", ablate_parallel, "concurrent queries");

  // inspect-table
  auto* inspect = app.add_subcommand("inspect-table", "print a table as a text grid");
  std::string inspect_path;
  inspect->add_option("--table", inspect_path, "expertise table (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) {
      config = load_run_config(config_path, config);
    }

    if (print_config && app.get_subcommands().empty()) {
      std::cout << run_config_to_json(config).dump(2) << "\n";
      return 0;
    }

    if (build->parsed()) {
      return cmd_build_table(build_args, config, build_out, labeler_id, build_parallel);
    }
    if (classify->parsed()) {
      return cmd_classify(classify_args, config, classify_classifier);
    }
    if (answer->parsed()) {
      if (answer->count("--alpha")) config.collab.alpha = answer_alpha;
      if (answer->count("--beta")) config.recruitment.beta = answer_beta;
      if (answer->count("--layers")) config.collab.layers = answer_layers;
      if (answer->count("--agents")) config.recruitment.n_agents = answer_agents;
      if (answer->count("--parallel")) config.query_parallel = answer_parallel;
      if (!answer_aggregator.empty()) {
        config.collab.aggregator_policy = AggregatorPolicy::Fixed;
        config.collab.aggregator_id = answer_aggregator;
      }
      if (no_confidence) config.collab.drop_confidence = true;
      if (no_adversarial) config.collab.drop_adversarial = true;
      if (answer_trust_labels) config.recruitment.trust_labels = true;
      config.validate();
      if (print_config) {
        std::cout << run_config_to_json(config).dump(2) << "\n";
        return 0;
      }
      return cmd_answer(answer_args, config, answer_id, answer_out);
    }
    if (evaluate_cmd->parsed()) {
      if (evaluate_cmd->count("--alpha")) config.collab.alpha = eval_alpha;
      if (evaluate_cmd->count("--beta")) config.recruitment.beta = eval_beta;
      if (evaluate_cmd->count("--layers")) config.collab.layers = eval_layers;
      if (evaluate_cmd->count("--agents")) config.recruitment.n_agents = eval_agents;
      if (evaluate_cmd->count("--seed")) config.seed = eval_seed;
      if (evaluate_cmd->count("--parallel")) config.query_parallel = eval_parallel;
      if (eval_no_confidence) config.collab.drop_confidence = true;
      if (eval_no_adversarial) config.collab.drop_adversarial = true;
      if (eval_trust_labels) config.recruitment.trust_labels = true;
      config.validate();
      if (print_config) {
        std::cout << run_config_to_json(config).dump(2) << "\n";
        return 0;
      }
      EvalConfig eval = eval_config_from(config);
      eval.strategy = parse_recruit_strategy(eval_strategy);
      eval.random_mode = parse_random_mode(eval_random_mode);
      eval.k = eval_k;
      eval.run_id = eval_run_id;
      return cmd_evaluate(eval_args, config, eval, eval_out, eval_transcripts);
    }
    if (ablate->parsed()) {
      if (ablate->count("--seed")) config.seed = ablate_seed;
      if (ablate->count("--parallel")) config.query_parallel = ablate_parallel;
      if (ablate_trust_labels) config.recruitment.trust_labels = true;
      config.validate();
      EvalConfig base = eval_config_from(config);
      return cmd_ablate(ablate_args, config, base, ablate_grid, ablate_out);
    }
    if (inspect->parsed()) {
      return cmd_inspect_table(inspect_path);
    }

    std::cerr << app.help();
    return 2;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
