#pragma once

#include <httplib.h>

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opra/error.hpp"
#include "opra/service/service.hpp"

namespace opra::service {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax:
    case ErrorCode::invalid_argument: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::degenerate: return 422;
  }
  return 400;
}

namespace detail {

inline void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, {{"code", code}, {"message", message}}, status);
}

inline json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) fail(ErrorCode::syntax, "invalid_json", "request body is not valid JSON");
  return body;
}

/// "Authorization: Bearer <token>" wins over a "voter" body field.
inline std::string voter_of(const httplib::Request& req, const json& body) {
  const auto auth = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (auth.rfind(prefix, 0) == 0) return auth.substr(prefix.size());
  if (body.is_object() && body.contains("voter") && body.at("voter").is_string()) return body.at("voter").get<std::string>();
  return {};
}

template <typename F>
httplib::Server::Handler wrap(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), e.reason(), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "invalid_json", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace detail

/// Registers the JSON API routes on `server`. The service must outlive it.
inline void register_routes(httplib::Server& server, Service& svc) {
  using detail::parse_body;
  using detail::send_json;
  using detail::wrap;
  using Req = const httplib::Request&;
  using Res = httplib::Response&;

  server.Post("/polls", wrap([&](Req req, Res res) { send_json(res, svc.create_poll(parse_body(req)), 201); }));
  server.Get("/polls/:id", wrap([&](Req req, Res res) { send_json(res, svc.get_poll(req.path_params.at("id"))); }));
  server.Post("/polls/:id/join", wrap([&](Req req, Res res) { send_json(res, svc.join(req.path_params.at("id")), 201); }));
  server.Post("/polls/:id/ballots", wrap([&](Req req, Res res) {
    const auto body = parse_body(req);
    json payload = body;
    if (body.is_object()) payload.erase("voter");
    send_json(res, svc.submit_ballot(req.path_params.at("id"), detail::voter_of(req, body), payload), 201);
  }));
  server.Post("/polls/:id/close", wrap([&](Req req, Res res) { send_json(res, svc.close_poll(req.path_params.at("id"))); }));
  server.Get("/polls/:id/results", wrap([&](Req req, Res res) {
    std::uint64_t seed = 0;
    if (req.has_param("seed")) {
      const auto text = req.get_param_value("seed");
      try {
        std::size_t used = 0;
        seed = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
      } catch (const std::exception&) {
        fail(ErrorCode::invalid_argument, "invalid_seed", "seed must be a non-negative integer");
      }
    }
    send_json(res, svc.compute_results(req.path_params.at("id"), seed));
  }));
  server.Post("/polls/:id/advance", wrap([&](Req req, Res res) {
    const auto body = parse_body(req);
    const bool force = body.is_object() && body.value("force", false);
    send_json(res, svc.advance_multipoll(req.path_params.at("id"), force));
  }));
  server.Get("/polls/:id/issues/:iid", wrap([&](Req req, Res res) {
    send_json(res, svc.get_issue(req.path_params.at("id"), req.path_params.at("iid")));
  }));

  server.Post("/matchings", wrap([&](Req req, Res res) { send_json(res, svc.create_matching(parse_body(req)), 201); }));
  server.Get("/matchings/:id", wrap([&](Req req, Res res) { send_json(res, svc.get_matching(req.path_params.at("id"))); }));
  server.Put("/matchings/:id/instance", wrap([&](Req req, Res res) {
    send_json(res, svc.put_instance(req.path_params.at("id"), parse_body(req)));
  }));
  server.Post("/matchings/:id/run", wrap([&](Req req, Res res) { send_json(res, svc.run_matching(req.path_params.at("id"))); }));
  server.Get("/matchings/:id/outcome", wrap([&](Req req, Res res) { send_json(res, svc.get_outcome(req.path_params.at("id"))); }));
  server.Get("/matchings/:id/explanations/:student", wrap([&](Req req, Res res) {
    std::vector<std::string> query;
    const auto n = req.get_param_value_count("course");
    for (std::size_t i = 0; i < n; ++i) query.push_back(req.get_param_value("course", i));
    send_json(res, svc.explanation(req.path_params.at("id"), req.path_params.at("student"), query));
  }));

  server.Get("/state/digest", wrap([&](Req, Res res) {
    send_json(res, {{"digest", svc.state_digest()}, {"seq", svc.last_seq()}});
  }));

  server.set_error_handler([](Req, Res res) {
    if (res.body.empty()) detail::send_error(res, res.status, res.status == 404 ? "not_found" : "http_error", "no such route");
  });
}

}  // namespace opra::service
