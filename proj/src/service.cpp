#include "qsug/service.hpp"

#include <atomic>
#include <cstdio>
#include <json.hpp>

#include "qsug/error.hpp"

namespace qsug {

namespace {

using nlohmann::json;

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json suggestion_json(const SuggestionList& list) {
    json body;
    body["query"] = list.source_query;
    body["class"] = kind_name(list.query_class.kind);
    body["long_tail"] = list.query_class.long_tail;
    body["via"] = route_name(list.route);
    json items = json::array();
    for (const auto& item : list.items) {
        items.push_back({{"text", item.query_key}, {"score", round_score(item.score)}});
    }
    body["suggestions"] = std::move(items);
    json similar = json::array();
    for (const auto& n : list.similar) {
        similar.push_back({{"text", n.query_key}, {"score", round_score(n.similarity)}});
    }
    body["similar"] = std::move(similar);
    body["coverage_warning"] = list.coverage_warning;
    return body;
}

// Positive-integer query parameter; 0 means "not supplied".
std::size_t param_count(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return 0;
    const std::string& raw = req.get_param_value(name);
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(raw, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != raw.size() || v < 1) {
        throw Error::data(std::string("parameter ") + name + " must be a positive integer");
    }
    return std::size_t(v);
}

} // namespace

void ServeConfig::validate() const {
    if (port < 1 || port > 65535) throw Error::data("serve: port must be in 1..65535");
    if (default_k < 0) throw Error::data("serve: k must be >= 1");
    if (default_m < 0) throw Error::data("serve: m must be >= 1");
}

std::unique_ptr<httplib::Server> make_suggest_server(std::shared_ptr<const LoadedEngine> engine,
                                                     const ServeConfig& config) {
    auto server = std::make_unique<httplib::Server>();
    auto error_ids = std::make_shared<std::atomic<std::uint64_t>>(0);
    ServeConfig cfg = config;

    server->Get("/healthz", [engine](const httplib::Request&, httplib::Response& res) {
        if (!engine) {
            res.status = 503;
            res.set_content("engine not loaded\n", "text/plain");
            return;
        }
        res.set_content(engine->manifest_digest + "\n", "text/plain");
    });

    server->Get("/suggest", [engine, cfg, error_ids](const httplib::Request& req,
                                                     httplib::Response& res) {
        if (!engine) {
            reply_json(res, 503, {{"error", "engine not loaded"}});
            return;
        }
        if (!req.has_param("q") || req.get_param_value("q").empty()) {
            reply_json(res, 400, {{"error", "missing required parameter q"}});
            return;
        }
        try {
            std::size_t k = param_count(req, "k");
            std::size_t m = param_count(req, "m");
            if (k == 0) k = cfg.default_k > 0 ? std::size_t(cfg.default_k)
                                              : std::size_t(engine->engine.default_k);
            if (m == 0) m = cfg.default_m > 0 ? std::size_t(cfg.default_m)
                                              : std::size_t(engine->engine.default_m);
            SuggestionList list = suggest(engine->engine, req.get_param_value("q"), m, k);
            reply_json(res, 200, suggestion_json(list));
        } catch (const Error& e) {
            if (e.kind() == Error::Kind::data) {
                reply_json(res, 400, {{"error", e.what()}});
            } else {
                std::uint64_t id = ++*error_ids;
                std::fprintf(stderr, "suggest error %llu: %s\n",
                             static_cast<unsigned long long>(id), e.what());
                reply_json(res, 500, {{"error", "internal error"}, {"id", id}});
            }
        } catch (const std::exception& e) {
            std::uint64_t id = ++*error_ids;
            std::fprintf(stderr, "suggest error %llu: %s\n", static_cast<unsigned long long>(id),
                         e.what());
            reply_json(res, 500, {{"error", "internal error"}, {"id", id}});
        }
    });

    if (config.log_requests) {
        server->set_logger([](const httplib::Request& req, const httplib::Response& res) {
            std::fprintf(stderr, "%s %s -> %d\n", req.method.c_str(), req.path.c_str(),
                         res.status);
        });
    }
    return server;
}

int run_server(const ServeConfig& config) {
    config.validate();
    auto engine = std::make_shared<const LoadedEngine>(load_engine(config.artifact_dir));
    auto server = make_suggest_server(engine, config);
    std::fprintf(stderr, "serving %s on %s:%d (manifest %s)\n", config.artifact_dir.c_str(),
                 config.bind.c_str(), config.port, engine->manifest_digest.c_str());
    if (!server->listen(config.bind, config.port)) {
        throw Error::io("cannot listen on " + config.bind + ":" + std::to_string(config.port));
    }
    return 0;
}

} // namespace qsug
