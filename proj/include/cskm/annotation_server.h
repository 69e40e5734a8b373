#ifndef CSKM_ANNOTATION_SERVER_H_
#define CSKM_ANNOTATION_SERVER_H_

#include <filesystem>
#include <memory>
#include <string>

#include "cskm/annotation.h"

namespace cskm {

// HTTP+JSON front end of an AnnotationStore.
//   POST /sessions                  {"sample_file": path} or an inline sample
//   GET  /sessions
//   GET  /sessions/{id}/next?annotator=
//   POST /sessions/{id}/labels      {"head","relation","tail","annotator_id","valid","novel"}
//   GET  /sessions/{id}/summary
//   GET  /healthz
// Errors are {"code", "message"} with a 4xx/5xx status. Relative sample_file
// paths resolve against the run directory. When static_dir exists it is
// served at "/".
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore &store, std::filesystem::path run_dir,
                   std::filesystem::path static_dir = {});
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer &) = delete;
  AnnotationServer &operator=(const AnnotationServer &) = delete;

  // Port 0 binds an ephemeral port. Returns the bound port; throws Error on failure.
  int bind(const std::string &host, int port);
  // Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cskm

#endif  // CSKM_ANNOTATION_SERVER_H_
