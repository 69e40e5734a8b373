#ifndef CSKM_PIPELINE_H_
#define CSKM_PIPELINE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cskm/config.h"
#include "cskm/error.h"

namespace cskm {

enum class Stage {
  kIngest,
  kTag,
  kMinePatterns,
  kExtract,
  kScore,
  kNovelty,
  kSelect,
  kSample,
  kAnalyze,
  kReport,
};

inline constexpr std::array<Stage, 10> kAllStages = {
    Stage::kIngest, Stage::kTag,    Stage::kMinePatterns, Stage::kExtract, Stage::kScore,
    Stage::kNovelty, Stage::kSelect, Stage::kSample,       Stage::kAnalyze, Stage::kReport,
};

// "ingest", "tag", "mine-patterns", ...
std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);
// Subdirectory of the run directory holding the stage's files.
std::string_view stage_directory(Stage s);

// A stage that could not complete; what() names the stage.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string &message)
      : Error("stage " + std::string(stage_name(stage)) + " failed: " + message), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

struct RunOptions {
  // Stages to run, in pipeline order regardless of listing order. Empty means all.
  std::vector<Stage> stages;
  // Rerun selected stages even when their inputs are unchanged.
  bool force = false;
};

struct StageOutcome {
  Stage stage;
  bool ran = false;  // false when skipped as up to date
  std::string fingerprint;
};

// Validates the config, takes the run directory lock, runs the selected
// stages and rewrites manifest.json. A stage is skipped when its stamp records
// the same input fingerprint and its outputs are intact. Throws
// ValidationError before touching the run directory for a bad config, and
// StageError for a failing stage; later stages do not run.
std::vector<StageOutcome> run_pipeline(const PipelineConfig &config,
                                       const std::filesystem::path &run_dir,
                                       const RunOptions &options = {});

// Writes report/report.md and its CSV tables from the analyze stage's outputs.
// Throws InputError listing every missing input file.
void emit_report(const std::filesystem::path &run_dir);

// Corrupted training triples (the reference graph when no training set is
// configured) in training-set layout. Returns the number written.
std::size_t write_negatives(const PipelineConfig &config, const std::filesystem::path &out,
                            std::size_t count, std::uint64_t seed);

// Exclusive ownership of a directory for one process, via an exclusively
// created .lock file holding the owner's pid and removed on destruction. A
// lock whose owner no longer exists is taken over. Throws Error when another
// live process holds it.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path &run_dir);
  ~RunLock();
  RunLock(const RunLock &) = delete;
  RunLock &operator=(const RunLock &) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace cskm

#endif  // CSKM_PIPELINE_H_
