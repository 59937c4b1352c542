#include "patchlens/http.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "patchlens/errors.hpp"

namespace patchlens::http {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

ApiResponse ok(const json& j) { return {200, j.dump()}; }

ApiResponse fail(int status, const std::string& code, const std::string& message) {
  return {status, service::error_json(code, message).dump()};
}

std::string field(const std::string& body, const char* name) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("request body is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains(name) || !j[name].is_string())
    throw FormatError(std::string("request body needs a string field '") + name + "'");
  return j[name].get<std::string>();
}

ApiResponse route(service::SessionService& svc, const ApiRequest& req) {
  std::vector<std::string> parts;
  for (auto& p : split(req.path, '/')) {
    if (!p.empty()) parts.push_back(p);
  }
  const bool get = req.method == "GET";
  const bool post = req.method == "POST";

  if (parts.size() == 1 && parts[0] == "bugs") {
    if (get) return ok(svc.list_bugs());
  } else if (parts.size() == 1 && parts[0] == "sessions") {
    if (post) return ok(service::to_json(svc.create_session(field(req.body, "bug_id"))));
  } else if (parts.size() == 2 && parts[0] == "sessions") {
    if (get) return ok(service::to_json(svc.view(parts[1])));
  } else if (parts.size() == 3 && parts[0] == "sessions") {
    const std::string& id = parts[1];
    const std::string& verb = parts[2];
    if (post && verb == "explore") return ok(service::to_json(svc.explore_cluster(id, field(req.body, "cluster_id"))));
    if (post && verb == "exclude") return ok(service::to_json(svc.exclude_cluster(id, field(req.body, "cluster_id"))));
    if (post && verb == "select") return ok(service::to_json(svc.select_patch(id, field(req.body, "patch_id"))));
    if (get && verb == "tables") {
      std::vector<std::string> ids;
      auto it = req.query.find("patches");
      if (it != req.query.end()) {
        for (auto& p : split(it->second, ',')) {
          if (!p.empty()) ids.push_back(p);
        }
      }
      return ok(tracealign::to_json(svc.get_tables(id, ids)));
    }
  } else {
    return fail(404, "NotFound", "no route for " + req.path);
  }
  return fail(405, "MethodNotAllowed", req.method + " is not supported on " + req.path);
}

}  // namespace

int status_for(const std::string& code) {
  if (code.rfind("Unknown", 0) == 0) return 404;
  if (code == "EmptyActiveSet") return 409;
  if (code == "FormatError") return 400;
  return 500;
}

ApiResponse dispatch(service::SessionService& svc, const ApiRequest& req) {
  try {
    return route(svc, req);
  } catch (const Error& e) {
    return fail(status_for(e.code()), e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(500, "InternalError", e.what());
  }
}

Server::Server(service::SessionService& svc, std::string static_dir)
    : svc_(svc), server_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest api{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) api.query[k] = v;
    ApiResponse out = dispatch(svc_, api);
    spdlog::debug("{} {} -> {}", req.method, req.path, out.status);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  for (const char* pattern : {R"(/bugs)", R"(/sessions(/.*)?)"}) {
    server_->Get(pattern, handler);
    server_->Post(pattern, handler);
  }
  if (!static_dir.empty() && !server_->set_mount_point("/", static_dir))
    spdlog::warn("static directory {} not found; serving the API only", static_dir);
}

Server::~Server() = default;

bool Server::listen(const std::string& host, int port) { return server_->listen(host, port); }

int Server::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool Server::listen_after_bind() { return server_->listen_after_bind(); }

void Server::stop() { server_->stop(); }

bool Server::running() const { return server_->is_running(); }

}  // namespace patchlens::http
