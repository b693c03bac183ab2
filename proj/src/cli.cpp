#include "qrepair/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "qrepair/config.hpp"
#include "qrepair/errors.hpp"
#include "qrepair/eval.hpp"
#include "qrepair/pipeline.hpp"
#include "qrepair/util.hpp"

namespace qrepair::cli {

namespace {

using nlohmann::ordered_json;

// Flag values captured before the config file is applied; flags win.
struct RunFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> corpus;
  std::optional<std::string> output;
  std::optional<std::string> mode;
  std::optional<int> k_b, k_r, concurrency;
  std::optional<std::string> prompts, stopwords, months;
  std::optional<std::string> retrieval, model, grader;
  bool resume = false;
  bool no_timing = false;
};

void add_run_options(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file (flags override it)");
  cmd->add_option("--corpus", f.corpus, "question corpus (JSONL)");
  cmd->add_option("--out", f.output, "trace output path (JSONL)");
  cmd->add_option("--mode", f.mode, "pipeline mode");
  cmd->add_option("--kb", f.k_b, "first-pass snippet budget");
  cmd->add_option("--kr", f.k_r, "per-query second-pass snippet budget");
  cmd->add_option("--concurrency", f.concurrency, "questions in flight");
  cmd->add_option("--prompts", f.prompts, "prompt template file");
  cmd->add_option("--stopwords", f.stopwords, "stopword list file");
  cmd->add_option("--months", f.months, "month list file");
  cmd->add_option("--retrieval", f.retrieval, "retrieval backend kind:arg");
  cmd->add_option("--model", f.model, "model backend kind:arg");
  cmd->add_option("--grader", f.grader, "grader kind[:arg]");
  cmd->add_flag("--resume", f.resume, "resume from checkpoint");
  cmd->add_flag("--no-timing", f.no_timing, "record timing_ms as 0 for reproducible traces");
}

RunConfig effective_config(const RunFlags& f) {
  RunConfig c;
  if (f.config_path) c = load_config_file(*f.config_path);
  if (f.corpus) c.corpus_path = *f.corpus;
  if (f.output) c.output_path = *f.output;
  if (f.mode) c.mode = mode_from_name(*f.mode);
  if (f.k_b) c.k_b = *f.k_b;
  if (f.k_r) c.k_r = *f.k_r;
  if (f.concurrency) c.concurrency = *f.concurrency;
  if (f.prompts) c.prompts_path = *f.prompts;
  if (f.stopwords) c.stopwords_path = *f.stopwords;
  if (f.months) c.months_path = *f.months;
  if (f.retrieval) c.retrieval = parse_selection(*f.retrieval);
  if (f.model) c.model = parse_selection(*f.model);
  if (f.grader) c.grader = parse_selection(*f.grader);
  if (f.resume) c.resume = true;
  if (f.no_timing) c.record_timing = false;
  if (c.k_b < 1 || c.k_r < 1) throw ConfigError("k_b and k_r must be >= 1");
  if (c.concurrency < 1) throw ConfigError("concurrency must be >= 1");
  return c;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is not set");
  if (!file_exists(path)) {
    throw ConfigError(std::string(what) + " not found: " + path);
  }
}

struct RunParts {
  std::unique_ptr<RetrievalBackend> retrieval;
  std::unique_ptr<ModelBackend> model;
  PromptSet prompts;
  ValidatorData validator_data;
};

RunParts build_parts(const RunConfig& c) {
  require_file(c.corpus_path, "corpus");
  require_file(c.prompts_path, "prompt template file");
  require_file(c.stopwords_path, "stopword list");
  require_file(c.months_path, "month list");
  RunParts parts{make_retrieval_backend(c.retrieval),
                 make_model_backend(c.model),
                 PromptSet::load(c.prompts_path),
                 ValidatorData::load(c.stopwords_path, c.months_path)};
  return parts;
}

RunSummary execute_run(const RunConfig& c, PipelineMode mode,
                       const std::string& output_path) {
  RunParts parts = build_parts(c);
  const std::vector<QuestionRecord> questions = load_question_corpus(c.corpus_path);

  PipelineOptions opt;
  opt.mode = mode;
  opt.k_b = c.k_b;
  opt.k_r = c.k_r;
  opt.config_hash = config_hash(c);
  opt.record_timing = c.record_timing;

  Pipeline pipeline(Backends{parts.retrieval.get(), parts.model.get()},
                    parts.prompts, parts.validator_data, opt);

  CorpusRunOptions run_opt;
  run_opt.output_path = output_path;
  run_opt.concurrency = c.concurrency;
  run_opt.resume = c.resume;
  return run_corpus(pipeline, questions, run_opt);
}

void print_summary(const RunSummary& s, PipelineMode mode) {
  std::cout << "mode=" << mode_name(mode) << " total=" << s.total
            << " processed=" << s.processed << " skipped=" << s.skipped
            << " not_attempted=" << s.not_attempted << " errors=" << s.errors
            << " -> " << s.output_path << "\n";
}

int cmd_run(const RunFlags& flags) {
  const RunConfig c = effective_config(flags);
  if (c.output_path.empty()) throw ConfigError("output path is not set");
  std::cout << "config_hash=" << config_hash(c) << "\n";
  const RunSummary s = execute_run(c, c.mode, c.output_path);
  print_summary(s, c.mode);
  return kExitOk;
}

int cmd_validate_config(const RunFlags& flags) {
  const RunConfig c = effective_config(flags);
  // Probe everything the run would need, without running.
  build_parts(c);
  std::cout << config_to_json(c) << "\n";
  std::cout << "config_hash=" << config_hash(c) << "\n";
  std::cout << "config ok\n";
  return kExitOk;
}

std::map<std::string, std::vector<std::string>> gold_map(
    const std::vector<QuestionRecord>& questions) {
  std::map<std::string, std::vector<std::string>> out;
  for (const QuestionRecord& q : questions) out[q.id] = q.golds;
  return out;
}

void print_transition_table(const EvalReport& r) {
  std::printf("paired questions      : %zu\n", r.n);
  std::printf("attempted pairs       : %zu\n", r.attempted_pairs);
  std::printf("  stay_correct        : %zu (%.1f%%)\n", r.stay_correct_count,
              100.0 * r.stay_correct);
  std::printf("  stay_wrong          : %zu (%.1f%%)\n", r.stay_wrong_count,
              100.0 * r.stay_wrong);
  std::printf("  corrected           : %zu (%.1f%%)\n", r.helped_count,
              100.0 * r.corrected);
  std::printf("  harmed              : %zu (%.1f%%)\n", r.hurt_count,
              100.0 * r.harmed);
  std::printf("revise_rate           : %.4f\n", r.revise_rate);
  std::printf("format_failures       : %zu\n", r.format_failures);
  std::printf("not_attempted_rate    : %.4f\n", r.not_attempted_rate);
  std::printf("correct_rate          : %.4f\n", r.correct_rate);
  std::printf("f1                    : %.4f\n", r.f1);
  std::printf("em                    : %.4f\n", r.em);
  std::printf("token_f1              : %.4f\n", r.token_f1);
}

int cmd_report(const std::string& baseline_path, const std::string& refined_path,
               const std::string& gold_path, const std::string& grader_sel,
               const std::string& out_path, std::string csv_path) {
  require_file(baseline_path, "baseline trace file");
  require_file(refined_path, "refined trace file");
  require_file(gold_path, "gold corpus");
  if (out_path.empty()) throw ConfigError("report output path is not set");
  if (csv_path.empty()) {
    csv_path = out_path + ".csv";
  }

  const std::vector<TraceView> baseline = load_trace_file(baseline_path);
  const std::vector<TraceView> refined = load_trace_file(refined_path);
  const auto golds = gold_map(load_question_corpus(gold_path));
  const std::unique_ptr<Grader> grader = make_grader(parse_selection(grader_sel));

  std::vector<TransitionRow> rows;
  const EvalReport report =
      intervention_profile(baseline, refined, golds, *grader, &rows);

  atomic_write_file(out_path, report_to_json(report));
  atomic_write_file(csv_path, transitions_to_csv(rows));
  print_transition_table(report);
  std::cout << "report -> " << out_path << "\ntransitions -> " << csv_path << "\n";
  return kExitOk;
}

int cmd_ablate(const RunFlags& flags, const std::vector<std::string>& mode_names) {
  if (mode_names.size() < 2) {
    throw ConfigError("ablate needs at least 2 modes");
  }
  RunConfig c = effective_config(flags);
  if (c.output_path.empty()) throw ConfigError("output path is not set");
  c.resume = false;

  std::vector<PipelineMode> modes;
  for (const std::string& name : mode_names) modes.push_back(mode_from_name(name));

  const std::vector<QuestionRecord> questions = load_question_corpus(c.corpus_path);
  const auto golds = gold_map(questions);
  DefaultGrader grader;

  const std::string stem = [&] {
    std::filesystem::path p(c.output_path);
    const std::string ext = p.extension().string();
    if (ext == ".jsonl" || ext == ".json") p.replace_extension();
    return p.string();
  }();

  ordered_json table = ordered_json::array();
  std::printf("%-28s %8s %8s %10s\n", "mode", "EM", "F1", "correct");
  for (PipelineMode mode : modes) {
    const std::string trace_path =
        stem + "." + std::string(mode_name(mode)) + ".jsonl";
    // Fresh backends per mode so every mode sees identical scripted state.
    execute_run(c, mode, trace_path);

    const std::vector<TraceView> traces = load_trace_file(trace_path);
    double em_sum = 0.0, f1_sum = 0.0, correct = 0.0;
    size_t graded = 0;
    for (const TraceView& t : traces) {
      auto it = golds.find(t.id);
      if (it == golds.end() || it->second.empty()) continue;
      ++graded;
      em_sum += exact_match(t.final_answer, it->second);
      f1_sum += token_f1(t.final_answer, it->second);
      if (grade(grader, t.question, t.final_answer, it->second) == GradeLabel::correct) {
        correct += 1.0;
      }
    }
    const double denom = graded > 0 ? static_cast<double>(graded) : 1.0;
    const double em = 100.0 * em_sum / denom;
    const double f1 = 100.0 * f1_sum / denom;
    const double cr = 100.0 * correct / denom;
    std::printf("%-28s %8.1f %8.1f %10.1f\n", std::string(mode_name(mode)).c_str(),
                em, f1, cr);
    table.push_back(ordered_json{{"mode", std::string(mode_name(mode))},
                                 {"trace", trace_path},
                                 {"graded", graded},
                                 {"em", em},
                                 {"f1", f1},
                                 {"correct_rate", cr}});
  }

  const std::string table_path = stem + ".ablation.json";
  atomic_write_file(table_path, table.dump(2) + "\n");
  std::cout << "ablation table -> " << table_path << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"guarded answer-repair pipeline for retrieval-grounded short-answer QA"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "run a corpus through the pipeline");
  add_run_options(run_cmd, run_flags);

  std::string baseline_path, refined_path, gold_path, out_path, csv_path;
  std::string grader_sel = "default";
  CLI::App* report_cmd =
      app.add_subcommand("report", "paired baseline/refined intervention report");
  report_cmd->add_option("--baseline", baseline_path, "baseline trace file")->required();
  report_cmd->add_option("--refined", refined_path, "refined trace file")->required();
  report_cmd->add_option("--gold", gold_path, "corpus JSONL with gold answers")->required();
  report_cmd->add_option("--grader", grader_sel, "grader kind[:arg]");
  report_cmd->add_option("--out", out_path, "report JSON output path")->required();
  report_cmd->add_option("--csv", csv_path, "transition CSV path (default <out>.csv)");

  RunFlags ablate_flags;
  std::vector<std::string> ablate_modes;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "run several modes over one corpus");
  add_run_options(ablate_cmd, ablate_flags);
  ablate_cmd->add_option("--modes", ablate_modes, "comma-separated mode list")
      ->delimiter(',');

  RunFlags validate_flags;
  CLI::App* validate_cmd =
      app.add_subcommand("validate-config", "check a configuration without running");
  add_run_options(validate_cmd, validate_flags);

  std::vector<const char*> argv;
  argv.push_back("qrepair");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (report_cmd->parsed()) {
      return cmd_report(baseline_path, refined_path, gold_path, grader_sel,
                        out_path, csv_path);
    }
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_flags, ablate_modes);
    if (validate_cmd->parsed()) return cmd_validate_config(validate_flags);
    std::cerr << "no command given\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidInputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace qrepair::cli
