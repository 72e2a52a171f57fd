#include "hast/server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <spdlog/spdlog.h>

namespace hast {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Handler>
void guarded(httplib::Response& res, Handler&& handler) {
  try {
    handler();
  } catch (const ServiceError& e) {
    reply(res, e.status(), {{"error", e.what()}});
  } catch (const json::exception& e) {
    reply(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
  } catch (const std::invalid_argument& e) {
    reply(res, 422, {{"error", e.what()}});
  } catch (const std::exception& e) {
    spdlog::error("request failed: {}", e.what());
    reply(res, 500, {{"error", e.what()}});
  }
}

}  // namespace

void register_routes(httplib::Server& server, SessionManager& sessions) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type, Idempotency-Key"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      const std::string dataset = body.at("dataset").get<std::string>();
      const ExperimentConfig config = config_from_json(body.value("config", json::object()));
      std::optional<std::string> key;
      if (body.contains("idempotency_key")) key = body.at("idempotency_key").get<std::string>();
      else if (req.has_header("Idempotency-Key")) key = req.get_header_value("Idempotency-Key");

      const CreateResult created = sessions.create_session(dataset, config, key);
      json out{{"session_id", created.session_id},
               {"phase", to_string(sessions.phase(created.session_id))}};
      if (sessions.phase(created.session_id) == Phase::AwaitingLabels)
        out["query"] = sessions.get_query_batch(created.session_id);
      reply(res, created.created ? 201 : 200, out);
    });
  });

  server.Get(R"(/sessions/([^/]+)/query)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, sessions.get_query_batch(req.matches[1])); });
  });

  server.Post(R"(/sessions/([^/]+)/labels)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      std::vector<std::pair<InstanceId, Label>> labels;
      for (const auto& item : body.at("labels"))
        labels.emplace_back(item.at("id").get<InstanceId>(), item.at("label").get<Label>());
      const std::string id = req.matches[1];
      const LabelAck ack = sessions.submit_labels(id, labels);
      reply(res, 200,
            {{"accepted", ack.accepted},
             {"remaining", ack.remaining},
             {"phase", to_string(sessions.phase(id))}});
    });
  });

  server.Get(R"(/sessions/([^/]+)/metrics)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, sessions.get_session_metrics(req.matches[1])); });
  });

  server.Get(R"(/sessions/([^/]+)/export)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json doc = sessions.export_session(req.matches[1]);
      if (req.has_param("format") && req.get_param_value("format") == "csv") {
        res.status = 200;
        res.set_content(doc.at("csv").get<std::string>(), "text/csv");
      } else {
        reply(res, 200, doc);
      }
    });
  });
}

}  // namespace hast
