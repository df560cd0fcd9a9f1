#pragma once

// Routes the Service handlers onto a cpp-httplib server.

#include <httplib.h>

#include "service.hpp"

namespace anycast {

namespace detail {

inline void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

inline std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    reply(res, error_response(400, std::string("bad json: ") + e.what()));
    return std::nullopt;
  }
}

inline std::size_t size_param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return 0;
  try {
    return static_cast<std::size_t>(std::stoull(req.get_param_value(key)));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace detail

inline void mount(httplib::Server& srv, Service& svc) {
  using httplib::Request;
  using httplib::Response;
  srv.Get("/playbook", [&](const Request&, Response& res) { detail::reply(res, svc.get_playbook()); });
  srv.Post("/scenario", [&](const Request& req, Response& res) {
    if (auto b = detail::parse_body(req, res)) detail::reply(res, svc.post_scenario(*b));
  });
  srv.Get(R"(/scenario/([^/]+)/state)", [&](const Request& req, Response& res) {
    detail::reply(res, svc.get_scenario_state(req.matches[1], detail::size_param(req, "since")));
  });
  srv.Get(R"(/scenario/([^/]+)/report)", [&](const Request& req, Response& res) {
    detail::reply(res, svc.get_scenario_report(req.matches[1]));
  });
  srv.Post(R"(/scenario/([^/]+)/advance)", [&](const Request& req, Response& res) {
    if (auto b = detail::parse_body(req, res)) detail::reply(res, svc.post_advance(req.matches[1], *b));
  });
  srv.Post("/controller/deploy", [&](const Request& req, Response& res) {
    if (auto b = detail::parse_body(req, res)) detail::reply(res, svc.post_deploy(*b));
  });
  srv.Get("/controller/state", [&](const Request& req, Response& res) {
    detail::reply(res, svc.get_controller_state(req.get_param_value("scenario")));
  });
  srv.Get("/controller/log", [&](const Request& req, Response& res) {
    detail::reply(res, svc.get_controller_log(req.get_param_value("scenario"), detail::size_param(req, "since")));
  });
  srv.Get(R"(/estimate/([^/]+))", [&](const Request& req, Response& res) {
    detail::reply(res, svc.get_estimate(req.matches[1], req.get_param_value("scenario")));
  });
  srv.Get(R"(/runs/([^/]+))", [&](const Request& req, Response& res) { detail::reply(res, svc.get_run(req.matches[1])); });
  srv.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      detail::reply(res, error_response(500, e.what()));
    }
  });
}

}  // namespace anycast
