#pragma once

// HTTP/JSON API over the library: dataset sessions, variogram sweeps,
// regressions and asynchronous bootstrap jobs.
//
//   POST /datasets                      upload (multipart field "file", or raw body)
//   GET  /datasets/{id}                 session overview
//   GET  /datasets/{id}/distance-info   ?thresholds=2000,1000&convention=unordered|ordered_with_self
//   POST /datasets/{id}/variograms      {"max_dists": [...], "nbins_list": [...]}
//   GET  /datasets/{id}/variograms      all sweeps run in this session
//   POST /datasets/{id}/regressions     {"response": "...", "predictors": [...]}
//   POST /datasets/{id}/bootstrap       {"model_index", "fit_index"?, "B", "threshold_factor", "seed"}
//   GET  /jobs/{id}                     state, progress, result when done
//   GET  /jobs/{id}/result              409 until the job is done
//
// Status codes: 400 bad input, 404 unknown id, 409 job not finished,
// 422 numerical failure, 503 job queue full.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "egovario/serialize.hpp"

namespace httplib {
class Server;
}

namespace egovario::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t workers = 0;       ///< concurrent bootstrap jobs; 0 = hardware concurrency
    std::size_t max_queued = 64;   ///< queued (not yet running) jobs before 503
    std::chrono::seconds ttl = std::chrono::hours(24);
    std::optional<std::filesystem::path> data_dir;  ///< session persistence, off when empty
    std::string cors_origin = "*";
};

/// Environment variable read by the CLI for the default port.
inline constexpr const char* kPortEnv = "EGOVARIO_PORT";

struct Response {
    int status = 200;
    json body;
};

class Service {
public:
    explicit Service(ServiceConfig cfg = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Transport-independent handlers; the HTTP routes forward to these.
    Response create_dataset(const std::string& content, const std::string& name);
    Response session_info(const std::string& id);
    Response distance_info(const std::string& id, const std::string& thresholds, const std::string& convention);
    Response run_variograms(const std::string& id, const json& body);
    Response list_variograms(const std::string& id);
    Response run_regression(const std::string& id, const json& body);
    Response start_bootstrap(const std::string& id, const json& body);
    Response job_status(const std::string& id);
    Response job_result(const std::string& id);

    /// Drops sessions idle for longer than the TTL. Returns how many were removed.
    std::size_t evict_expired();

    /// Registers all routes and CORS handling on an httplib server.
    void mount(httplib::Server& server);

    /// Binds (port 0 picks a free port) and returns the bound port, or -1.
    int bind();
    /// Serves until stop(). bind() must have succeeded.
    void run();
    void stop();

    [[nodiscard]] const ServiceConfig& config() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace egovario::service
