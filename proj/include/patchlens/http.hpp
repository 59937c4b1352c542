#pragma once

#include <map>
#include <memory>
#include <string>

#include "patchlens/service.hpp"

namespace httplib {
class Server;
}

namespace patchlens::http {

struct ApiRequest {
  std::string method;  // "GET" | "POST"
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

// Routes one request onto the session service. Never throws: domain errors
// come back as {code, message} with a matching status.
ApiResponse dispatch(service::SessionService& svc, const ApiRequest& req);

// HTTP status for a domain error code.
int status_for(const std::string& code);

class Server {
 public:
  explicit Server(service::SessionService& svc, std::string static_dir = {});
  ~Server();

  // Blocks until stop(). Returns false if the socket could not be bound.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it (or -1); serve with listen_after_bind().
  int bind_any(const std::string& host);
  bool listen_after_bind();
  void stop();
  bool running() const;

 private:
  service::SessionService& svc_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace patchlens::http
