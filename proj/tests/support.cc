#include "support.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cskm::testing {

fs::path fixture(std::string_view name) { return fs::path(CSKM_FIXTURE_DIR) / name; }

fs::path cli_path() { return fs::path(CSKM_CLI_PATH); }

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "cskm-test-XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path &p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::vector<std::pair<std::string, std::string>> tree_contents(const fs::path &root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      out.emplace_back(fs::relative(e.path(), root).generic_string(), slurp(e.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<char *> argv_of(std::vector<std::string> &args) {
  std::vector<char *> argv;
  for (std::string &a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return argv;
}

}  // namespace

ProcessResult run_cli(const std::vector<std::string> &args) {
  int out_pipe[2], err_pipe[2];
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) throw std::runtime_error("pipe failed");
  std::vector<std::string> full = {cli_path().string()};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char *> argv = argv_of(full);

  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(out_pipe[0]);
    close(err_pipe[0]);
    execv(argv[0], argv.data());
    _exit(127);
  }
  close(out_pipe[1]);
  close(err_pipe[1]);

  ProcessResult r;
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  std::string *sinks[2] = {&r.out, &r.err};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0) {
    if (poll(fds, 2, -1) < 0) break;
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || fds[i].revents == 0) continue;
      const ssize_t n = read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        sinks[i]->append(buf, static_cast<std::size_t>(n));
      } else {
        close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  int status = 0;
  waitpid(pid, &status, 0);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return r;
}

ServerProcess::ServerProcess(const fs::path &run_dir) {
  int out_pipe[2];
  if (pipe(out_pipe) != 0) throw std::runtime_error("pipe failed");
  std::vector<std::string> args = {cli_path().string(), "--run-dir", run_dir.string(),
                                   "serve", "--port", "0"};
  std::vector<char *> argv = argv_of(args);
  pid_ = fork();
  if (pid_ < 0) throw std::runtime_error("fork failed");
  if (pid_ == 0) {
    dup2(out_pipe[1], STDOUT_FILENO);
    close(out_pipe[0]);
    execv(argv[0], argv.data());
    _exit(127);
  }
  close(out_pipe[1]);

  // The first stdout line carries the bound port.
  std::string line;
  pollfd fd{out_pipe[0], POLLIN, 0};
  char c = 0;
  while (line.find('\n') == std::string::npos) {
    if (poll(&fd, 1, 10000) <= 0) break;
    if (read(out_pipe[0], &c, 1) != 1) break;
    line.push_back(c);
  }
  close(out_pipe[0]);
  const std::size_t colon = line.rfind(':');
  if (line.rfind("listening on ", 0) != 0 || colon == std::string::npos) {
    kill_hard();
    throw std::runtime_error("server did not start: '" + line + "'");
  }
  port_ = std::atoi(line.c_str() + colon + 1);
}

ServerProcess::~ServerProcess() {
  if (pid_ > 0) kill_hard();
}

void ServerProcess::kill_hard() {
  if (pid_ <= 0) return;
  ::kill(pid_, SIGKILL);
  waitpid(pid_, nullptr, 0);
  pid_ = -1;
}

int ServerProcess::terminate() {
  if (pid_ <= 0) return -1;
  ::kill(pid_, SIGTERM);
  int status = 0;
  waitpid(pid_, &status, 0);
  pid_ = -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

SampleFile make_sample(Relation relation, const std::string &scorer, std::size_t n,
                       std::size_t qualified) {
  SampleFile f{relation, scorer, qualified, {}};
  for (std::size_t i = 0; i < n; ++i) {
    SampleItem item;
    item.key = {"head" + std::to_string(i), relation, "tail" + std::to_string(i)};
    item.score = 1.0 - static_cast<double>(i) / static_cast<double>(n + 1);
    item.rank = i + 1;
    item.term = item.key.head;
    item.source_id = item.key.head + "#0";
    item.definition = "A thing related to " + item.key.tail + ".";
    item.highlight = std::pair<std::size_t, std::size_t>{19, 19 + item.key.tail.size()};
    f.items.push_back(std::move(item));
  }
  return f;
}

double kendall_tau_b_pairs(const std::vector<double> &x, const std::vector<double> &y) {
  const std::size_t n = x.size();
  long long concordant = 0, discordant = 0, untied_x = 0, untied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx != 0) ++untied_x;
      if (dy != 0) ++untied_y;
      if (dx == 0 || dy == 0) continue;
      if ((dx > 0) == (dy > 0)) ++concordant;
      else ++discordant;
    }
  }
  return static_cast<double>(concordant - discordant) /
         std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

std::vector<ScoreRecord> brute_force_threshold(const std::vector<ScoreRecord> &records,
                                               Relation relation, double theta) {
  std::vector<ScoreRecord> out;
  for (const ScoreRecord &r : records) {
    if (r.key.relation == relation && r.score >= theta) out.push_back(r);
  }
  return out;
}

std::vector<double> tied_scores(std::mt19937_64 &rng, std::size_t n, int levels) {
  std::vector<double> out(n);
  for (double &v : out) v = static_cast<double>(rng() % static_cast<std::uint64_t>(levels)) / levels;
  return out;
}

}  // namespace cskm::testing
