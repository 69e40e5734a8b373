#ifndef CSKM_TESTS_SUPPORT_H_
#define CSKM_TESTS_SUPPORT_H_

#include <sys/types.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cskm/annotation.h"
#include "cskm/scoring.h"
#include "cskm/triple.h"

namespace cskm::testing {

namespace fs = std::filesystem;

fs::path fixture(std::string_view name);
fs::path cli_path();

// Fresh directory under the system temp dir, removed with everything in it.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const fs::path &path() const { return path_; }
  fs::path operator/(std::string_view rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path &p);
void spit(const fs::path &p, std::string_view content);

// Relative path -> bytes for every regular file below root.
std::vector<std::pair<std::string, std::string>> tree_contents(const fs::path &root);

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI to completion with stdout and stderr captured.
ProcessResult run_cli(const std::vector<std::string> &args);

// `cskm serve --port 0` as a child process.
class ServerProcess {
 public:
  explicit ServerProcess(const fs::path &run_dir);
  ~ServerProcess();
  ServerProcess(const ServerProcess &) = delete;
  ServerProcess &operator=(const ServerProcess &) = delete;

  int port() const { return port_; }
  pid_t pid() const { return pid_; }
  // SIGKILL and reap; nothing gets a chance to flush or clean up.
  void kill_hard();
  // SIGTERM and reap; returns the exit status.
  int terminate();

 private:
  pid_t pid_ = -1;
  int port_ = 0;
};

// n distinct items "head<i>" / "tail<i>" with a definition whose highlight
// covers the tail.
SampleFile make_sample(Relation relation, const std::string &scorer, std::size_t n,
                       std::size_t qualified);

// Tau-b by enumerating every pair: concordant minus discordant over the
// geometric mean of the pairs untied in each variable.
double kendall_tau_b_pairs(const std::vector<double> &x, const std::vector<double> &y);

// Relation filter then score >= theta, in input order.
std::vector<ScoreRecord> brute_force_threshold(const std::vector<ScoreRecord> &records,
                                               Relation relation, double theta);

// Scores drawn from a small grid so ties are common.
std::vector<double> tied_scores(std::mt19937_64 &rng, std::size_t n, int levels);

}  // namespace cskm::testing

#endif  // CSKM_TESTS_SUPPORT_H_
