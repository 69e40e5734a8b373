#include "cskm/annotation_server.h"

#include <httplib.h>

#include "cskm/error.h"

namespace cskm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json proportions_json(const Proportions &p) {
  return {{"labeled", p.labeled},
          {"valid", p.valid},
          {"valid_novel", p.valid_novel},
          {"validity", p.validity},
          {"valid_and_novel", p.valid_and_novel}};
}

json summary_json(const SessionSummary &s) {
  json per = json::object();
  for (const auto &[who, p] : s.per_annotator) per[who] = proportions_json(p);
  json labels = json::array();
  for (const AnnotationLabel &l : s.labels) labels.push_back(to_json(l));
  const SummaryRow &e = s.evaluation;
  return {{"session_id", s.session->session_id},
          {"relation", relation_name(s.session->relation)},
          {"scorer_id", s.session->scorer_id},
          {"total", s.session->items.size()},
          {"per_annotator", per},
          {"pooled", proportions_json(s.pooled)},
          {"evaluation",
           {{"relation", relation_name(e.relation)},
            {"scorer_id", e.scorer_id},
            {"qualified_count", e.qualified_count},
            {"sample_size", e.sample_size},
            {"annotators", e.annotators},
            {"validity", e.validity},
            {"valid_and_novel", e.valid_and_novel}}},
          {"labels", labels}};
}

void reply(httplib::Response &res, int status, const json &body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response &res, int status, const std::string &code, const std::string &message) {
  reply(res, status, {{"code", code}, {"message", message}});
}

json parse_body(const httplib::Request &req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error &e) {
    throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
  }
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationStore &store;
  fs::path run_dir;
  httplib::Server http;

  Impl(AnnotationStore &s, fs::path run) : store(s), run_dir(std::move(run)) {}

  template <typename F>
  httplib::Server::Handler guarded(F &&f) {
    return [f = std::forward<F>(f)](const httplib::Request &req, httplib::Response &res) {
      try {
        f(req, res);
      } catch (const NotFoundError &e) {
        fail(res, 404, "not_found", e.what());
      } catch (const ValidationError &e) {
        fail(res, 400, "invalid_request", e.what());
      } catch (const InputError &e) {
        fail(res, 400, "invalid_input", e.what());
      } catch (const std::exception &e) {
        fail(res, 500, "internal", e.what());
      }
    };
  }

  SampleFile sample_from_request(const json &body) const {
    if (!body.is_object()) throw ValidationError("request body must be a JSON object");
    if (!body.contains("sample_file")) return sample_file_from_json(body);
    if (!body["sample_file"].is_string()) throw ValidationError("sample_file must be a string");
    fs::path p(body["sample_file"].get<std::string>());
    if (p.is_relative()) p = run_dir / p;
    SampleFile sample = read_sample_file(p);
    if (body.contains("relation") &&
        relation_from_string(body["relation"].get<std::string>()) != sample.relation) {
      throw ValidationError("sample file is for relation " + std::string(relation_name(sample.relation)));
    }
    if (body.contains("scorer_id") && body["scorer_id"].get<std::string>() != sample.scorer_id) {
      throw ValidationError("sample file is for scorer " + sample.scorer_id);
    }
    return sample;
  }

  void routes() {
    http.Get("/healthz", guarded([this](const httplib::Request &, httplib::Response &res) {
      reply(res, 200, {{"status", "ok"}, {"sessions", store.sessions().size()}});
    }));

    http.Get("/sessions", guarded([this](const httplib::Request &, httplib::Response &res) {
      json out = json::array();
      for (const AnnotationSession &s : store.sessions()) {
        std::size_t flagged = 0;
        for (const SampleItem &i : s.items) flagged += i.context_missing ? 1 : 0;
        out.push_back({{"session_id", s.session_id},
                       {"relation", relation_name(s.relation)},
                       {"scorer_id", s.scorer_id},
                       {"qualified_count", s.qualified_count},
                       {"size", s.items.size()},
                       {"flagged", flagged},
                       {"created_at", s.created_at}});
      }
      reply(res, 200, out);
    }));

    http.Post("/sessions", guarded([this](const httplib::Request &req, httplib::Response &res) {
      const SampleFile sample = sample_from_request(parse_body(req));
      const std::string id = store.create_session(sample);
      const SessionSummary s = store.session_summary(id);
      std::size_t flagged = 0;
      for (const SampleItem &i : s.session->items) flagged += i.context_missing ? 1 : 0;
      reply(res, 201, {{"session_id", id}, {"size", s.session->items.size()}, {"flagged", flagged}});
    }));

    http.Get(R"(/sessions/([^/]+)/next)",
             guarded([this](const httplib::Request &req, httplib::Response &res) {
               const std::string annotator = req.get_param_value("annotator");
               if (annotator.empty()) throw ValidationError("annotator query parameter is required");
               const NextItem next = store.next_unlabeled(req.matches[1], annotator);
               json out = {{"done", next.done},
                           {"total", next.total},
                           {"progress", proportions_json(next.progress)}};
               if (!next.done) {
                 out["index"] = next.index;
                 out["item"] = to_json(*next.item);
               }
               reply(res, 200, out);
             }));

    http.Post(R"(/sessions/([^/]+)/labels)",
              guarded([this](const httplib::Request &req, httplib::Response &res) {
                const json body = parse_body(req);
                const TripleKey key = triple_key_from_json(body);
                if (!body.contains("annotator_id") || !body["annotator_id"].is_string()) {
                  throw ValidationError("annotator_id must be a string");
                }
                if (!body.contains("valid") || !body["valid"].is_boolean() ||
                    !body.contains("novel") || !body["novel"].is_boolean()) {
                  throw ValidationError("valid and novel must be booleans");
                }
                const SessionSummary s =
                    store.submit_label(req.matches[1], key, body["annotator_id"].get<std::string>(),
                                       body["valid"].get<bool>(), body["novel"].get<bool>());
                reply(res, 200, {{"acknowledged", true}, {"summary", summary_json(s)}});
              }));

    http.Get(R"(/sessions/([^/]+)/summary)",
             guarded([this](const httplib::Request &req, httplib::Response &res) {
               reply(res, 200, summary_json(store.session_summary(req.matches[1])));
             }));
  }
};

AnnotationServer::AnnotationServer(AnnotationStore &store, fs::path run_dir, fs::path static_dir)
    : impl_(std::make_unique<Impl>(store, std::move(run_dir))) {
  impl_->routes();
  if (!static_dir.empty() && fs::is_directory(static_dir)) {
    impl_->http.set_mount_point("/", static_dir.string());
  }
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string &host, int port) {
  if (port == 0) {
    const int bound = impl_->http.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind to " + host);
    return bound;
  }
  if (!impl_->http.bind_to_port(host, port)) {
    throw Error("cannot bind to " + host + ":" + std::to_string(port));
  }
  return port;
}

void AnnotationServer::listen() { impl_->http.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace cskm
