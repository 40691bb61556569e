#pragma once

#include <functional>
#include <string>

// Eigen must be parsed before httplib: <resolv.h> defines a `_res` macro
// that collides with Eigen parameter names.
#include "pawn/service.hpp"
#include "httplib.h"
#include "json.hpp"

namespace pawn {

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& msg) {
  send_json(res, status, {{"error", {{"kind", kind}, {"message", msg}}}});
}

/// Runs `fn` on the parsed body (or null for GET) and maps failures to
/// JSON error responses.
inline void handle(const httplib::Request& req, httplib::Response& res,
                   const std::function<nlohmann::json(const nlohmann::json&)>& fn) {
  try {
    nlohmann::json body;
    if (req.method == "POST") {
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, "bad_request", std::string("malformed JSON: ") + e.what());
        return;
      }
    }
    send_json(res, 200, fn(body));
  } catch (const ServiceError& e) {
    send_error(res, e.status(), e.kind(), e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

}  // namespace detail

/// Registers the /api routes and permissive CORS headers on `svr`.
inline void install_routes(httplib::Server& svr, PredictionService& svc) {
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  svr.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  svr.Get("/api/health", [&svc](const httplib::Request& req, httplib::Response& res) {
    detail::handle(req, res, [&](const nlohmann::json&) { return svc.health(); });
  });
  svr.Get("/api/models", [&svc](const httplib::Request& req, httplib::Response& res) {
    detail::handle(req, res, [&](const nlohmann::json&) { return svc.models(); });
  });
  svr.Post("/api/predict", [&svc](const httplib::Request& req, httplib::Response& res) {
    detail::handle(req, res, [&](const nlohmann::json& b) { return svc.predict(b); });
  });
  svr.Post("/api/evaluate", [&svc](const httplib::Request& req, httplib::Response& res) {
    detail::handle(req, res, [&](const nlohmann::json& b) { return svc.evaluate_fen(b); });
  });
  svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty()) detail::send_error(res, res.status, "not_found", "no route for " + req.method + " " + req.path);
  });
}

}  // namespace pawn
