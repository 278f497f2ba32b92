#pragma once

#include <memory>
#include <string>

#include "qsug/store.hpp"

// httplib drags in <resolv.h>, whose _res macro mangles Eigen's internals;
// keep it after anything that includes Eigen.
#include <httplib.h>

namespace qsug {

struct ServeConfig {
    std::string bind = "127.0.0.1";
    int port = 8080;
    std::string artifact_dir;
    int default_k = 0; // 0 falls back to the engine's stored default
    int default_m = 0;
    bool log_requests = false;

    void validate() const;
};

// Routes:
//   GET /suggest?q=<urlencoded>[&k=<int>][&m=<int>] -> suggestion JSON
//   GET /healthz                                    -> manifest digest
// A null engine answers 503 on /suggest and /healthz. Requests never mutate
// engine state, so the default multi-threaded listener is safe.
std::unique_ptr<httplib::Server> make_suggest_server(std::shared_ptr<const LoadedEngine> engine,
                                                     const ServeConfig& config);

// Loads the artifacts and serves until the process is stopped.
int run_server(const ServeConfig& config);

} // namespace qsug
