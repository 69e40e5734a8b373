// Command-line front end: pipeline stages, negative sampling and the
// annotation service.
//
// Exit status: 0 success, 1 invalid configuration or arguments, 2 a stage or
// service failure.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>

#include "cskm/annotation.h"
#include "cskm/annotation_server.h"
#include "cskm/config.h"
#include "cskm/error.h"
#include "cskm/pipeline.h"

namespace fs = std::filesystem;
using namespace cskm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitFailure = 2;

struct Globals {
  std::string config;
  std::string run_dir = "run";
  std::optional<std::uint64_t> seed;
  std::string relations;
  bool force = false;
};

struct Overrides {
  std::optional<std::size_t> k;
  std::string side;
  std::vector<std::string> scorers;
  std::optional<double> theta;
  std::optional<std::size_t> top_n;
  std::optional<std::size_t> sample_n;
  std::vector<std::string> references;
  bool relation_agnostic = false;
};

PipelineConfig load(const Globals &g, const Overrides &o) {
  if (g.config.empty()) throw ValidationError("--config is required");
  PipelineConfig c;
  try {
    c = load_config(g.config);
  } catch (const InputError &e) {
    throw ValidationError(g.config + ": " + e.what());
  }
  if (g.seed) c.seed = *g.seed;
  if (!g.relations.empty()) c.relations = parse_relation_list(g.relations);
  if (o.k) c.k = *o.k;
  if (!o.side.empty()) {
    auto s = parse_slot(o.side);
    if (!s) throw ValidationError("--side must be head or tail");
    c.side = *s;
  }
  if (!o.scorers.empty()) {
    std::vector<ScorerConfig> kept;
    for (const std::string &name : o.scorers) {
      const ScorerConfig *s = c.find_scorer(name);
      if (s == nullptr) throw ValidationError("no scorer named " + name + " in the config");
      kept.push_back(*s);
    }
    c.scorers = std::move(kept);
  }
  if (o.theta) c.theta = *o.theta;
  if (o.top_n) c.top_n = *o.top_n;
  if (o.sample_n) c.sample_n = *o.sample_n;
  if (!o.references.empty()) {
    c.novelty_references.clear();
    for (const std::string &r : o.references) c.novelty_references.push_back(fs::absolute(r));
  }
  if (o.relation_agnostic) c.relation_agnostic = true;
  c.validate();
  return c;
}

// The stages a subcommand needs, itself last. Up-to-date stages are skipped.
std::vector<Stage> stages_through(Stage target) {
  switch (target) {
    case Stage::kIngest: return {Stage::kIngest};
    case Stage::kMinePatterns: return {Stage::kIngest, Stage::kMinePatterns};
    case Stage::kTag:
    case Stage::kExtract: return {Stage::kIngest, Stage::kTag, Stage::kMinePatterns, Stage::kExtract};
    case Stage::kScore:
      return {Stage::kIngest, Stage::kTag, Stage::kMinePatterns, Stage::kExtract, Stage::kScore};
    case Stage::kNovelty:
      return {Stage::kIngest, Stage::kTag, Stage::kMinePatterns, Stage::kExtract, Stage::kNovelty};
    case Stage::kSelect:
      return {Stage::kIngest, Stage::kTag, Stage::kMinePatterns, Stage::kExtract, Stage::kScore,
              Stage::kSelect};
    default: break;
  }
  std::vector<Stage> all;
  for (Stage s : kAllStages) {
    all.push_back(s);
    if (s == target) break;
  }
  return all;
}

int run_stages(const Globals &g, const Overrides &o, Stage target) {
  const PipelineConfig cfg = load(g, o);
  RunOptions options{stages_through(target), g.force};
  for (const StageOutcome &out : run_pipeline(cfg, g.run_dir, options)) {
    std::cout << stage_name(out.stage) << ": " << (out.ran ? "done" : "up to date") << '\n';
  }
  return kExitOk;
}

int serve(const Globals &g, const std::string &host, int port, const std::string &static_dir) {
  const fs::path dir = fs::path(g.run_dir) / "annotations";
  RunLock lock(dir);
  AnnotationStore store(dir);
  AnnotationServer server(store, g.run_dir, static_dir);

  // Signals are taken by a dedicated thread so stop() never runs in a handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });

  const int bound = server.bind(host, port);
  std::cout << "listening on http://" << host << ':' << bound << std::endl;
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kExitOk;
}

int create_session(const Globals &g, const std::string &sample_path) {
  const fs::path dir = fs::path(g.run_dir) / "annotations";
  RunLock lock(dir);
  AnnotationStore store(dir);
  fs::path p(sample_path);
  const SampleFile sample = read_sample_file(p);
  const std::string id = store.create_session(sample);
  std::cout << id << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Mine, score and evaluate commonsense triples from dictionary definitions"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  Overrides o;
  app.add_option("--config", g.config, "Pipeline configuration file");
  app.add_option("--run-dir", g.run_dir, "Run directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--relations", g.relations, "Comma-separated relation subset, or 'all'");
  app.add_flag("--force", g.force, "Rerun stages even when their inputs are unchanged");

  struct StageCommand {
    const char *name;
    Stage stage;
    const char *help;
  };
  const StageCommand stage_commands[] = {
      {"ingest", Stage::kIngest, "Parse the graph dump, training set and definitions"},
      {"mine-patterns", Stage::kMinePatterns, "Mine per-relation POS patterns and keep the top k"},
      {"extract", Stage::kExtract, "Tag definitions and extract candidate triples"},
      {"score", Stage::kScore, "Score candidates with every configured scorer"},
      {"novelty", Stage::kNovelty, "Check candidates against the reference triples"},
      {"select", Stage::kSelect, "Rank scored candidates and keep the qualified ones"},
      {"sample", Stage::kSample, "Draw evaluation samples of qualified triples"},
      {"analyze", Stage::kAnalyze, "Histograms, tau, novelty rates and annotation summaries"},
      {"report", Stage::kReport, "Write report/report.md and its CSV tables"},
      {"run", Stage::kReport, "Run every stage"},
  };
  std::optional<Stage> target;
  for (const StageCommand &c : stage_commands) {
    CLI::App *sub = app.add_subcommand(c.name, c.help);
    sub->callback([&target, stage = c.stage] { target = stage; });
    if (std::string(c.name) == "mine-patterns") {
      sub->add_option("--k", o.k, "Patterns kept per relation");
      sub->add_option("--side", o.side, "Concept slot to mine: head or tail");
    } else if (std::string(c.name) == "score") {
      sub->add_option("--scorer", o.scorers, "Restrict to these configured scorers");
    } else if (std::string(c.name) == "novelty") {
      sub->add_option("--reference", o.references, "Reference triple files (relation, head, tail columns)");
      sub->add_flag("--relation-agnostic", o.relation_agnostic, "Match references regardless of relation");
    } else if (std::string(c.name) == "select") {
      sub->add_option("--theta", o.theta, "Threshold for calibrated scorers");
      sub->add_option("--top-n", o.top_n, "List length for uncalibrated scorers");
    } else if (std::string(c.name) == "sample") {
      sub->add_option("--n", o.sample_n, "Sample size per relation and scorer");
    }
  }

  std::optional<std::size_t> negatives_n;
  std::string negatives_out;
  CLI::App *negatives = app.add_subcommand("negatives", "Write corrupted training triples");
  negatives->add_option("--n", negatives_n, "Number of negatives");
  negatives->add_option("--out", negatives_out, "Output TSV (default <run-dir>/negatives/negatives.tsv)");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  CLI::App *serve_cmd = app.add_subcommand("serve", "Run the annotation service");
  serve_cmd->add_option("--host", host, "Listen address")->capture_default_str();
  serve_cmd->add_option("--port", port, "Listen port; 0 picks a free one")->capture_default_str();
  serve_cmd->add_option("--static-dir", static_dir, "Built annotation UI to serve at /");

  std::string sample_path;
  CLI::App *session_cmd =
      app.add_subcommand("create-session", "Create an annotation session from a sample file");
  session_cmd->add_option("--sample", sample_path, "Sample file written by the sample stage")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (target) return run_stages(g, o, *target);
    if (negatives->parsed()) {
      const PipelineConfig cfg = load(g, o);
      const fs::path out =
          negatives_out.empty() ? fs::path(g.run_dir) / "negatives" / "negatives.tsv" : fs::path(negatives_out);
      const std::size_t n = write_negatives(cfg, out, negatives_n.value_or(cfg.negatives_n), cfg.seed);
      std::cout << "wrote " << n << " negatives to " << out.string() << '\n';
      return kExitOk;
    }
    if (serve_cmd->parsed()) return serve(g, host, port, static_dir);
    if (session_cmd->parsed()) return create_session(g, sample_path);
  } catch (const StageError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitInvalid;
}
