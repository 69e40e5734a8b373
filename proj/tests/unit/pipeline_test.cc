#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <map>
#include <sstream>

#include "../support.h"
#include "cskm/annotation.h"
#include "cskm/pipeline.h"
#include "cskm/text.h"

using namespace cskm;
using cskm::testing::fixture;
using cskm::testing::run_cli;
using cskm::testing::slurp;
using cskm::testing::spit;
using cskm::testing::TempDir;
using cskm::testing::tree_contents;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

PipelineConfig fixture_config() { return load_config(fixture("pipeline.ini")); }

std::map<Stage, bool> ran_by_stage(const std::vector<StageOutcome> &outcomes) {
  std::map<Stage, bool> out;
  for (const StageOutcome &o : outcomes) out[o.stage] = o.ran;
  return out;
}

std::map<TripleKey, json> novelty_rows(const fs::path &run) {
  std::map<TripleKey, json> out;
  std::istringstream in(slurp(run / "novelty" / "novelty.jsonl"));
  std::string line;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    out.emplace(triple_key_from_json(j), j);
  }
  return out;
}

// A pid that has exited and been reaped.
pid_t dead_pid() {
  const pid_t pid = fork();
  if (pid == 0) _exit(0);
  waitpid(pid, nullptr, 0);
  return pid;
}

const std::vector<Stage> kThroughNovelty = {Stage::kIngest, Stage::kTag, Stage::kMinePatterns,
                                            Stage::kExtract, Stage::kNovelty};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("a full run, a no-op rerun and a forced rerun") {
  TempDir run;
  const PipelineConfig cfg = fixture_config();
  const auto first = run_pipeline(cfg, run.path());
  REQUIRE(first.size() == kAllStages.size());
  for (const StageOutcome &o : first) CHECK(o.ran);
  CHECK_FALSE(fs::exists(run / ".lock"));

  const json manifest = json::parse(slurp(run / "manifest.json"));
  CHECK(manifest["candidate_counts"]["UsedFor"] == 148);
  CHECK(manifest["candidate_counts"]["IsA"] == 115);
  CHECK(manifest["candidate_counts"]["CapableOf"] == 26);
  CHECK(manifest["seed"] == 13);
  CHECK(manifest["stages"].size() == kAllStages.size());
  const json stats = json::parse(slurp(run / "ingest" / "stats.json"));
  CHECK(stats["kg"]["parsed"] == 60);
  CHECK(fs::is_regular_file(run / "report" / "report.md"));
  CHECK(fs::is_regular_file(run / "sample" / "pmi" / "UsedFor.json"));

  const auto tree = tree_contents(run.path());
  for (const StageOutcome &o : run_pipeline(cfg, run.path())) CHECK_FALSE(o.ran);
  CHECK(tree_contents(run.path()) == tree);

  const auto forced = run_pipeline(cfg, run.path(), {{Stage::kScore, Stage::kSelect}, true});
  REQUIRE(forced.size() == 2);
  CHECK(forced[0].ran);
  CHECK(forced[1].ran);
  CHECK(tree_contents(run.path()) == tree);
}

TEST_CASE("a changed setting reruns exactly the stages that depend on it") {
  TempDir run;
  PipelineConfig cfg = fixture_config();
  run_pipeline(cfg, run.path());
  cfg.theta = 0.5;
  const auto ran = ran_by_stage(run_pipeline(cfg, run.path()));
  CHECK_FALSE(ran.at(Stage::kIngest));
  CHECK_FALSE(ran.at(Stage::kExtract));
  CHECK_FALSE(ran.at(Stage::kScore));
  CHECK_FALSE(ran.at(Stage::kNovelty));
  CHECK(ran.at(Stage::kSelect));
  CHECK(ran.at(Stage::kSample));
  CHECK(ran.at(Stage::kAnalyze));
  CHECK(ran.at(Stage::kReport));
}

TEST_CASE("a damaged output makes its stage rerun") {
  TempDir run;
  const PipelineConfig cfg = fixture_config();
  run_pipeline(cfg, run.path(), {{Stage::kIngest}, false});
  const std::string kg = slurp(run / "ingest" / "kg.tsv");
  spit(run / "ingest" / "kg.tsv", "junk\n");
  const auto again = run_pipeline(cfg, run.path(), {{Stage::kIngest}, false});
  CHECK(again[0].ran);
  CHECK(slurp(run / "ingest" / "kg.tsv") == kg);
}

TEST_CASE("a stage without its upstream outputs fails with StageError") {
  TempDir run;
  try {
    run_pipeline(fixture_config(), run.path(), {{Stage::kExtract}, false});
    FAIL("extract ran without inputs");
  } catch (const StageError &e) {
    CHECK(e.stage() == Stage::kExtract);
    CHECK(std::string(e.what()).find("ingest/definitions.tsv") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(run / "extract" / "stage.json"));
}

TEST_CASE("an invalid config is rejected before the run directory is touched") {
  TempDir tmp;
  PipelineConfig cfg = fixture_config();
  cfg.theta = 1.5;
  CHECK_THROWS_AS(run_pipeline(cfg, tmp / "run"), ValidationError);
  CHECK_FALSE(fs::exists(tmp / "run"));
}

TEST_CASE("run directory lock: exclusive, released, stale ones taken over") {
  TempDir run;
  {
    RunLock held(run.path());
    CHECK(fs::exists(run / ".lock"));
    CHECK_THROWS_AS(RunLock(run.path()), Error);
    CHECK_THROWS_AS(run_pipeline(fixture_config(), run.path()), Error);
  }
  CHECK_FALSE(fs::exists(run / ".lock"));

  spit(run / ".lock", std::to_string(dead_pid()) + "\n");
  {
    RunLock taken(run.path());
    CHECK(std::stoll(slurp(run / ".lock")) == getpid());
  }
  CHECK_FALSE(fs::exists(run / ".lock"));
}

TEST_CASE("the report lists every missing input") {
  TempDir run;
  try {
    emit_report(run.path());
    FAIL("report built from nothing");
  } catch (const InputError &e) {
    const std::string what = e.what();
    CHECK(what.find("analyze/analysis.json") != std::string::npos);
    CHECK(what.find("analyze/tau.csv") != std::string::npos);
    CHECK(what.find("analyze/summary.csv") != std::string::npos);
  }
}

TEST_CASE("negatives are deterministic for a seed") {
  TempDir tmp;
  const PipelineConfig cfg = fixture_config();
  CHECK(write_negatives(cfg, tmp / "a.tsv", 30, 5) == 30);
  CHECK(write_negatives(cfg, tmp / "b.tsv", 30, 5) == 30);
  write_negatives(cfg, tmp / "c.tsv", 30, 6);
  CHECK(slurp(tmp / "a.tsv") == slurp(tmp / "b.tsv"));
  CHECK(slurp(tmp / "a.tsv") != slurp(tmp / "c.tsv"));
}

TEST_CASE("novelty against a listed reference file") {
  TempDir run;
  PipelineConfig cfg = fixture_config();
  run_pipeline(cfg, run.path(), {kThroughNovelty, false});
  auto rows = novelty_rows(run.path());
  const TripleKey sharp{"knife", Relation::kAtLocation, "sharp"};
  const TripleKey bar{"bartender", Relation::kAtLocation, "bar"};
  const TripleKey tool{"knife", Relation::kAtLocation, "tool"};
  REQUIRE(rows.count(sharp) == 1);
  REQUIRE(rows.count(bar) == 1);
  CHECK(rows[sharp]["novel"] == true);
  CHECK(rows[bar]["novel"] == false);
  // Same pair under another relation in the graph.
  CHECK(rows[tool]["novel"] == true);
  CHECK(rows[tool]["novel_any_relation"] == false);

  spit(run / "refs.tsv", "# relation\thead\ttail\nAtLocation\tknife\tsharp\nBogus\ta\tb\nIsA\tknife\ttool\n");
  cfg.novelty_references = {run / "refs.tsv"};
  const auto ran = ran_by_stage(run_pipeline(cfg, run.path(), {kThroughNovelty, false}));
  CHECK(ran.at(Stage::kNovelty));
  CHECK_FALSE(ran.at(Stage::kExtract));
  rows = novelty_rows(run.path());
  CHECK(rows[sharp]["novel"] == false);
  CHECK(rows[sharp]["witness"]["tail"] == "sharp");
  CHECK(rows[bar]["novel"] == true);
  CHECK(rows[tool]["novel"] == true);
  CHECK(slurp(run / "novelty" / "rates.csv").find("AtLocation,listed,same-relation,") != std::string::npos);

  cfg.relation_agnostic = true;
  run_pipeline(cfg, run.path(), {kThroughNovelty, false});
  rows = novelty_rows(run.path());
  CHECK(rows[tool]["novel"] == false);
  CHECK(rows[tool]["witness"]["relation"] == "IsA");
}

TEST_CASE("annotation labels reach the analysis") {
  TempDir run;
  const PipelineConfig cfg = fixture_config();
  run_pipeline(cfg, run.path());
  const std::string before = slurp(run / "analyze" / "summary.csv");
  {
    AnnotationStore store(run / "annotations");
    const SampleFile sample = read_sample_file(run / "sample" / "kgbert" / "UsedFor.json");
    const std::string id = store.create_session(sample);
    for (std::size_t i = 0; i < sample.items.size(); ++i) {
      store.submit_label(id, sample.items[i].key, "ann", i % 2 == 0, i % 4 == 0);
    }
  }
  const auto ran = ran_by_stage(run_pipeline(cfg, run.path()));
  CHECK_FALSE(ran.at(Stage::kSample));
  CHECK(ran.at(Stage::kAnalyze));
  CHECK(ran.at(Stage::kReport));
  const std::string after = slurp(run / "analyze" / "summary.csv");
  CHECK(after != before);
  CHECK(after.find("UsedFor,kgbert,") != std::string::npos);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("run succeeds and reports each stage") {
  TempDir tmp;
  const auto r = run_cli({"--config", fixture("pipeline.ini").string(), "--run-dir", (tmp / "run").string(), "run"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("ingest: done") != std::string::npos);
  CHECK(r.out.find("report: done") != std::string::npos);
  const auto again = run_cli({"--config", fixture("pipeline.ini").string(), "--run-dir", (tmp / "run").string(), "run"});
  CHECK(again.exit_code == 0);
  CHECK(again.out.find("report: up to date") != std::string::npos);

  const auto session = run_cli({"--run-dir", (tmp / "run").string(), "create-session", "--sample",
                                (tmp / "run" / "sample" / "bilinear" / "IsA.json").string()});
  CHECK(session.exit_code == 0);
  CHECK(session.out == "s0001\n");
}

TEST_CASE("invalid arguments exit with status 1") {
  TempDir tmp;
  const std::string run = (tmp / "run").string();
  const std::string cfg = fixture("pipeline.ini").string();
  CHECK(run_cli({"--run-dir", run, "ingest"}).exit_code == 1);
  CHECK(run_cli({"--config", cfg, "--run-dir", run, "frobnicate"}).exit_code == 1);
  CHECK(run_cli({"--config", cfg, "--run-dir", run}).exit_code == 1);
  const auto theta = run_cli({"--config", cfg, "--run-dir", run, "select", "--theta", "1.5"});
  CHECK(theta.exit_code == 1);
  CHECK(theta.err.find("theta") != std::string::npos);
  CHECK(run_cli({"--config", cfg, "--run-dir", run, "--relations", "Bogus", "ingest"}).exit_code == 1);
  CHECK(run_cli({"--config", cfg, "--run-dir", run, "score", "--scorer", "nope"}).exit_code == 1);
  CHECK(run_cli({"--config", (tmp / "absent.ini").string(), "--run-dir", run, "ingest"}).exit_code == 1);
  CHECK_FALSE(fs::exists(tmp / "run"));
}

TEST_CASE("stage and service failures exit with status 2") {
  TempDir tmp;
  spit(tmp / "run" / ".lock", std::to_string(getpid()) + "\n");
  const auto locked = run_cli({"--config", fixture("pipeline.ini").string(), "--run-dir", (tmp / "run").string(), "ingest"});
  CHECK(locked.exit_code == 2);
  CHECK(locked.err.find("in use") != std::string::npos);

  const auto missing = run_cli({"--run-dir", (tmp / "other").string(), "create-session", "--sample",
                                (tmp / "nothing.json").string()});
  CHECK(missing.exit_code == 2);
}

TEST_CASE("negatives through the CLI are reproducible") {
  TempDir tmp;
  const std::string cfg = fixture("pipeline.ini").string();
  const auto a = run_cli({"--config", cfg, "negatives", "--n", "25", "--out", (tmp / "a.tsv").string()});
  const auto b = run_cli({"--config", cfg, "negatives", "--n", "25", "--out", (tmp / "b.tsv").string()});
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(slurp(tmp / "a.tsv") == slurp(tmp / "b.tsv"));
  CHECK(split(slurp(tmp / "a.tsv"), '\n').size() >= 25);
}

}  // TEST_SUITE
