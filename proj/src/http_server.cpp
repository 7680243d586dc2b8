#include <httplib.h>

#include "evr/service.hpp"

namespace evr::service {

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    const Response r = service.handle_request(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  const char* pattern = R"(/sessions(/[^/]+(/[a-z]+)?)?)";
  impl_->server.Get(pattern, forward);
  impl_->server.Post(pattern, forward);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

bool serve_http(Service& service, const std::string& host, int port) {
  HttpServer server(service);
  if (server.bind(host, port) < 0) return false;
  return server.run();
}

}  // namespace evr::service
