#include "egovario/service.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>
#include <httplib.h>

#include "egovario/bootstrap.hpp"
#include "egovario/distances.hpp"
#include "egovario/error.hpp"
#include "egovario/expfit.hpp"
#include "egovario/regress.hpp"

namespace egovario::service {

namespace {

using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

struct Fit {
    json request;
    ModelTable table;
};

struct Session {
    std::string id;
    std::shared_ptr<const SpatialDataset> dataset;
    std::vector<Fit> fits;
    std::vector<std::string> residual_sessions;
    std::string parent;  ///< session the residuals were derived from, if any
    Clock::time_point last_access;
    std::mutex mutex;
};

enum class JobState { queued, running, done, failed };

const char* to_string(JobState s) {
    switch (s) {
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::done: return "done";
        case JobState::failed: return "failed";
    }
    return "unknown";
}

struct Job {
    std::string id;
    std::string session_id;
    std::size_t fit_index = 0;
    std::size_t model_index = 0;
    BootstrapConfig cfg;
    std::shared_ptr<const SpatialDataset> dataset;
    ExpModelFit model;

    std::atomic<JobState> state{JobState::queued};
    std::atomic<std::size_t> accepted{0};
    std::atomic<std::size_t> discarded{0};
    std::mutex mutex;  // guards result and error
    std::optional<UncertaintyTable> result;
    json error;
};

Response error_response(int status, std::string_view kind, std::string_view message) {
    return {status, json{{"error", {{"kind", kind}, {"message", message}}}}};
}

Response from_exception(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->kind()) {
            case ErrorKind::parse:
            case ErrorKind::validation: return error_response(400, kind_name(err->kind()), e.what());
            case ErrorKind::numerical: return error_response(422, kind_name(err->kind()), e.what());
            case ErrorKind::resource: return error_response(503, kind_name(err->kind()), e.what());
        }
    }
    if (dynamic_cast<const json::exception*>(&e)) return error_response(400, "validation", e.what());
    return error_response(500, "internal", e.what());
}

Response not_found(std::string_view what, const std::string& id) {
    return error_response(404, "not_found", fmt::format("unknown {} '{}'", what, id));
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError(fmt::format("not a number: '{}'", item));
        }
    }
    return out;
}

template <typename T>
std::vector<T> number_array(const json& body, const char* key) {
    if (!body.contains(key)) throw ValidationError(fmt::format("missing field '{}'", key));
    const auto& v = body.at(key);
    if (v.is_number()) return {v.get<T>()};
    if (!v.is_array() || v.empty()) throw ValidationError(fmt::format("'{}' must be a non-empty array of numbers", key));
    std::vector<T> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ValidationError(fmt::format("'{}' must contain numbers only", key));
        if constexpr (std::is_integral_v<T>) {
            if (!e.is_number_integer() || e.get<long long>() < 0)
                throw ValidationError(fmt::format("'{}' must contain non-negative integers", key));
        }
        out.push_back(e.get<T>());
    }
    return out;
}

json session_json(const Session& s) {
    json fits = json::array();
    for (std::size_t i = 0; i < s.fits.size(); ++i)
        fits.push_back({{"fit_index", i + 1}, {"request", s.fits[i].request}, {"n_models", s.fits[i].table.rows.size()}});
    return json{{"session_id", s.id},
                {"source_name", s.dataset->source_name()},
                {"columns", s.dataset->column_names()},
                {"n", s.dataset->size()},
                {"n_missing_outcome", s.dataset->n_missing_outcome()},
                {"fits", fits},
                {"residual_sessions", s.residual_sessions},
                {"parent_session", s.parent.empty() ? json(nullptr) : json(s.parent)}};
}

json fit_json(const Fit& f, std::size_t fit_index) {
    return json{{"fit_index", fit_index}, {"request", f.request}, {"table", model_table_with_curves(f.table)}};
}

}  // namespace

struct Service::Impl {
    ServiceConfig cfg;

    std::shared_mutex sessions_mutex;
    std::unordered_map<std::string, std::shared_ptr<Session>> sessions;

    std::mutex jobs_mutex;
    std::condition_variable jobs_cv;
    std::unordered_map<std::string, std::shared_ptr<Job>> jobs;
    std::deque<std::shared_ptr<Job>> queue;
    bool stopping = false;
    std::vector<std::thread> workers;

    std::mutex id_mutex;
    std::mt19937_64 id_rng{std::random_device{}()};
    std::uint64_t id_counter = 0;

    httplib::Server server;
    int bound_port = -1;

    explicit Impl(ServiceConfig c) : cfg(std::move(c)) {
        if (cfg.workers == 0) cfg.workers = std::max(1u, std::thread::hardware_concurrency());
        if (cfg.data_dir) load_persisted();
        for (std::size_t i = 0; i < cfg.workers; ++i) workers.emplace_back([this] { worker_loop(); });
    }

    ~Impl() {
        {
            std::lock_guard lock(jobs_mutex);
            stopping = true;
        }
        jobs_cv.notify_all();
        for (auto& t : workers) t.join();
    }

    std::string new_id(char prefix) {
        std::lock_guard lock(id_mutex);
        return fmt::format("{}{:x}{:012x}", prefix, ++id_counter, id_rng() & 0xffffffffffffULL);
    }

    std::shared_ptr<Session> find_session(const std::string& id) {
        std::shared_lock lock(sessions_mutex);
        const auto it = sessions.find(id);
        if (it == sessions.end()) return nullptr;
        return it->second;
    }

    std::shared_ptr<Session> add_session(SpatialDataset ds, std::string parent = {}) {
        auto s = std::make_shared<Session>();
        s->id = new_id('s');
        s->dataset = std::make_shared<const SpatialDataset>(std::move(ds));
        s->parent = std::move(parent);
        s->last_access = Clock::now();
        {
            std::unique_lock lock(sessions_mutex);
            sessions[s->id] = s;
        }
        persist(*s);
        return s;
    }

    // Directory layout: <data_dir>/<session id>/{dataset.csv, session.json}.
    void persist(const Session& s) {
        if (!cfg.data_dir) return;
        const fs::path dir = *cfg.data_dir / s.id;
        fs::create_directories(dir);
        {
            std::ofstream out(dir / "dataset.csv");
            write_dataset(out, *s.dataset);
        }
        json fits = json::array();
        for (const auto& f : s.fits) fits.push_back({{"request", f.request}, {"table", f.table}});
        json doc{{"schema_version", kSchemaVersion},
                 {"session_id", s.id},
                 {"source_name", s.dataset->source_name()},
                 {"parent_session", s.parent},
                 {"residual_sessions", s.residual_sessions},
                 {"fits", fits}};
        std::ofstream out(dir / "session.json");
        out << doc.dump();
    }

    void load_persisted() {
        std::error_code ec;
        if (!fs::is_directory(*cfg.data_dir, ec)) {
            fs::create_directories(*cfg.data_dir);
            return;
        }
        for (const auto& entry : fs::directory_iterator(*cfg.data_dir)) {
            if (!entry.is_directory()) continue;
            try {
                std::ifstream meta(entry.path() / "session.json");
                const json doc = json::parse(meta);
                std::ifstream data(entry.path() / "dataset.csv");
                auto ds = load_dataset(data, doc.at("source_name").get<std::string>());
                auto s = std::make_shared<Session>();
                s->id = doc.at("session_id").get<std::string>();
                s->dataset = std::make_shared<const SpatialDataset>(std::move(ds));
                s->parent = doc.value("parent_session", std::string{});
                s->residual_sessions = doc.value("residual_sessions", std::vector<std::string>{});
                for (const auto& f : doc.at("fits")) s->fits.push_back({f.at("request"), f.at("table").get<ModelTable>()});
                s->last_access = Clock::now();
                sessions[s->id] = std::move(s);
            } catch (const std::exception&) {
                // Unreadable session directories are skipped, not fatal.
            }
        }
    }

    void worker_loop() {
        for (;;) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock lock(jobs_mutex);
                jobs_cv.wait(lock, [this] { return stopping || !queue.empty(); });
                if (stopping) return;
                job = queue.front();
                queue.pop_front();
            }
            run_job(*job);
        }
    }

    static void run_job(Job& job) {
        job.state = JobState::running;
        try {
            auto table = par_uncertainty(*job.dataset, job.model, job.cfg, [&job](const BootstrapProgress& p) {
                job.accepted = p.accepted;
                job.discarded = p.discarded;
            });
            {
                std::lock_guard lock(job.mutex);
                job.result = std::move(table);
            }
            job.state = JobState::done;
        } catch (const BootstrapExhausted& e) {
            std::lock_guard lock(job.mutex);
            job.error = from_exception(e).body["error"];
            job.error["partial"] = e.partial();
            job.state = JobState::failed;
        } catch (const std::exception& e) {
            std::lock_guard lock(job.mutex);
            job.error = from_exception(e).body["error"];
            job.state = JobState::failed;
        }
    }

    json job_json(Job& job) {
        const JobState state = job.state.load();
        json j{{"job_id", job.id},
               {"session_id", job.session_id},
               {"fit_index", job.fit_index},
               {"model_index", job.model_index},
               {"state", to_string(state)},
               {"config",
                {{"B", job.cfg.B},
                 {"threshold_factor", job.cfg.threshold_factor},
                 {"seed", job.cfg.seed ? json(*job.cfg.seed) : json(nullptr)},
                 {"max_attempt_factor", job.cfg.max_attempt_factor}}},
               {"progress", {{"accepted", job.accepted.load()}, {"discarded", job.discarded.load()}}}};
        std::lock_guard lock(job.mutex);
        j["result"] = state == JobState::done && job.result ? json(*job.result) : json(nullptr);
        j["error"] = state == JobState::failed ? job.error : json(nullptr);
        return j;
    }
};

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Service::~Service() { stop(); }

const ServiceConfig& Service::config() const noexcept { return impl_->cfg; }

Response Service::create_dataset(const std::string& content, const std::string& name) {
    evict_expired();
    try {
        if (content.empty()) throw ValidationError("uploaded dataset is empty");
        std::istringstream in(content);
        auto ds = load_dataset(in, name.empty() ? "upload" : name);
        if (ds.size() == 0) throw ValidationError("uploaded dataset has no rows");
        const auto report = missingness_summary(ds);
        auto s = impl_->add_session(std::move(ds));
        return {201, json{{"session_id", s->id},
                          {"n", s->dataset->size()},
                          {"columns", s->dataset->column_names()},
                          {"notice", kColumnOrderNotice},
                          {"missingness", report}}};
    } catch (const std::exception& e) {
        return from_exception(e);
    }
}

Response Service::session_info(const std::string& id) {
    auto s = impl_->find_session(id);
    if (!s) return not_found("session", id);
    std::lock_guard lock(s->mutex);
    s->last_access = Clock::now();
    return {200, session_json(*s)};
}

Response Service::distance_info(const std::string& id, const std::string& thresholds, const std::string& convention) {
    auto s = impl_->find_session(id);
    if (!s) return not_found("session", id);
    try {
        {
            std::lock_guard lock(s->mutex);
            s->last_access = Clock::now();
        }
        const auto thr = parse_number_list(thresholds);
        const auto& ds = *s->dataset;
        if (convention.empty() || convention == "unordered") {
            return {200, json(summarize_distances(ds, thr))};
        }
        if (convention == "ordered_with_self") {
            if (ds.size() > kStreamingThreshold)
                throw ResourceError("ordered_with_self convention is only available for datasets up to " +
                                    std::to_string(kStreamingThreshold) + " points");
            return {200, json(ordered_pair_summary(pairwise_distances(ds), thr))};
        }
        throw ValidationError("convention must be 'unordered' or 'ordered_with_self'");
    } catch (const std::exception& e) {
        return from_exception(e);
    }
}

Response Service::run_variograms(const std::string& id, const json& body) {
    auto s = impl_->find_session(id);
    if (!s) return not_found("session", id);
    try {
        if (!body.is_object()) throw ValidationError("request body must be a JSON object");
        const auto dists = number_array<double>(body, "max_dists");
        const auto nbins = number_array<std::size_t>(body, "nbins_list");
        auto table = vario_mod(*s->dataset, dists, nbins);
        json request{{"max_dists", dists}, {"nbins_list", nbins}};
        std::lock_guard lock(s->mutex);
        s->last_access = Clock::now();
        s->fits.push_back({request, std::move(table)});
        impl_->persist(*s);
        return {200, fit_json(s->fits.back(), s->fits.size())};
    } catch (const std::exception& e) {
        return from_exception(e);
    }
}

Response Service::list_variograms(const std::string& id) {
    auto s = impl_->find_session(id);
    if (!s) return not_found("session", id);
    std::lock_guard lock(s->mutex);
    s->last_access = Clock::now();
    json fits = json::array();
    for (std::size_t i = 0; i < s->fits.size(); ++i) fits.push_back(fit_json(s->fits[i], i + 1));
    return {200, json{{"session_id", s->id}, {"fits", fits}}};
}

Response Service::run_regression(const std::string& id, const json& body) {
    auto s = impl_->find_session(id);
    if (!s) return not_found("session", id);
    try {
        if (!body.is_object()) throw ValidationError("request body must be a JSON object");
        const auto response = body.at("response").get<std::string>();
        const auto predictors = body.at("predictors").get<std::vector<std::string>>();
        const auto fit = fit_ols(*s->dataset, response, predictors);
        auto residuals = vario_reg_prep(fit, *s->dataset);
        auto child = impl_->add_session(std::move(residuals), s->id);
        std::lock_guard lock(s->mutex);
        s->last_access = Clock::now();
        s->residual_sessions.push_back(child->id);
        impl_->persist(*s);
        return {200, json{{"summary", fit},
                          {"summary_text", format_regression_summary(fit)},
                          {"residual_session_id", child->id},
                          {"n_residuals", child->dataset->size()}}};
    } catch (const std::exception& e) {
        return from_exception(e);
    }
}

Response Service::start_bootstrap(const std::string& id, const json& body) {
    auto s = impl_->find_session(id);
    if (!s) return not_found("session", id);
    try {
        if (!body.is_object()) throw ValidationError("request body must be a JSON object");
        auto job = std::make_shared<Job>();
        job->session_id = s->id;
        job->dataset = s->dataset;
        job->model_index = body.at("model_index").get<std::size_t>();
        job->cfg.B = body.value("B", job->cfg.B);
        job->cfg.threshold_factor = body.value("threshold_factor", job->cfg.threshold_factor);
        job->cfg.max_attempt_factor = body.value("max_attempt_factor", job->cfg.max_attempt_factor);
        if (body.contains("seed") && !body.at("seed").is_null()) job->cfg.seed = body.at("seed").get<std::uint64_t>();
        validate(job->cfg);
        {
            std::lock_guard lock(s->mutex);
            s->last_access = Clock::now();
            if (s->fits.empty()) throw ValidationError("no variogram sweep in this session; POST variograms first");
            job->fit_index = body.value("fit_index", s->fits.size());
            if (job->fit_index < 1 || job->fit_index > s->fits.size())
                throw ValidationError(fmt::format("fit_index must be in 1..{}", s->fits.size()));
            const auto& rows = s->fits[job->fit_index - 1].table.rows;
            if (job->model_index < 1 || job->model_index > rows.size())
                throw ValidationError(fmt::format("model_index must be in 1..{}", rows.size()));
            const auto& row = rows[job->model_index - 1];
            if (!row.ok()) throw NumericalError(fmt::format("model {} has no usable fit: {}", job->model_index, row.error));
            job->model = *row.fit;
        }
        {
            std::lock_guard lock(impl_->jobs_mutex);
            std::size_t queued = impl_->queue.size();
            if (queued >= impl_->cfg.max_queued)
                return error_response(503, "resource", fmt::format("job queue is full ({} waiting)", queued));
            job->id = impl_->new_id('j');
            impl_->jobs[job->id] = job;
            impl_->queue.push_back(job);
        }
        impl_->jobs_cv.notify_one();
        return {202, json{{"job_id", job->id}, {"state", "queued"}}};
    } catch (const std::exception& e) {
        return from_exception(e);
    }
}

Response Service::job_status(const std::string& id) {
    std::shared_ptr<Job> job;
    {
        std::lock_guard lock(impl_->jobs_mutex);
        const auto it = impl_->jobs.find(id);
        if (it == impl_->jobs.end()) return not_found("job", id);
        job = it->second;
    }
    return {200, impl_->job_json(*job)};
}

Response Service::job_result(const std::string& id) {
    std::shared_ptr<Job> job;
    {
        std::lock_guard lock(impl_->jobs_mutex);
        const auto it = impl_->jobs.find(id);
        if (it == impl_->jobs.end()) return not_found("job", id);
        job = it->second;
    }
    const JobState state = job->state.load();
    if (state == JobState::failed) {
        std::lock_guard lock(job->mutex);
        return {422, json{{"error", job->error}}};
    }
    if (state != JobState::done)
        return error_response(409, "conflict", fmt::format("job '{}' is {}", id, to_string(state)));
    std::lock_guard lock(job->mutex);
    return {200, versioned("uncertainty_table", *job->result)};
}

std::size_t Service::evict_expired() {
    const auto now = Clock::now();
    std::vector<std::string> gone;
    {
        std::unique_lock lock(impl_->sessions_mutex);
        for (auto it = impl_->sessions.begin(); it != impl_->sessions.end();) {
            if (now - it->second->last_access > impl_->cfg.ttl) {
                gone.push_back(it->first);
                it = impl_->sessions.erase(it);
            } else {
                ++it;
            }
        }
    }
    if (impl_->cfg.data_dir) {
        std::error_code ec;
        for (const auto& id : gone) fs::remove_all(*impl_->cfg.data_dir / id, ec);
    }
    return gone.size();
}

void Service::mount(httplib::Server& server) {
    const std::string origin = impl_->cfg.cors_origin;
    server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto parse_body = [](const httplib::Request& req) {
        if (req.body.empty()) return json::object();
        return json::parse(req.body);
    };
    auto with_body = [send, parse_body](auto handler) {
        return [send, parse_body, handler](const httplib::Request& req, httplib::Response& res) {
            json body;
            try {
                body = parse_body(req);
            } catch (const json::exception& e) {
                send(res, error_response(400, "parse", std::string("malformed JSON body: ") + e.what()));
                return;
            }
            send(res, handler(req.path_params.at("id"), body));
        };
    };

    server.Post("/datasets", [this, send](const httplib::Request& req, httplib::Response& res) {
        std::string name = req.has_param("name") ? req.get_param_value("name") : std::string{};
        if (req.is_multipart_form_data()) {
            if (!req.has_file("file")) {
                send(res, error_response(400, "validation", "multipart upload needs a 'file' field"));
                return;
            }
            const auto file = req.get_file_value("file");
            if (name.empty()) name = file.filename;
            send(res, create_dataset(file.content, name));
        } else {
            send(res, create_dataset(req.body, name));
        }
    });
    server.Get("/datasets/:id", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, session_info(req.path_params.at("id")));
    });
    server.Get("/datasets/:id/distance-info", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, distance_info(req.path_params.at("id"), req.get_param_value("thresholds"),
                                req.get_param_value("convention")));
    });
    server.Post("/datasets/:id/variograms",
                with_body([this](const std::string& id, const json& b) { return run_variograms(id, b); }));
    server.Get("/datasets/:id/variograms", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, list_variograms(req.path_params.at("id")));
    });
    server.Post("/datasets/:id/regressions",
                with_body([this](const std::string& id, const json& b) { return run_regression(id, b); }));
    server.Post("/datasets/:id/bootstrap",
                with_body([this](const std::string& id, const json& b) { return start_bootstrap(id, b); }));
    server.Get("/jobs/:id", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, job_status(req.path_params.at("id")));
    });
    server.Get("/jobs/:id/result", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, job_result(req.path_params.at("id")));
    });
    server.set_error_handler([send](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty() && res.status == 404) send(res, error_response(404, "not_found", "no such endpoint"));
    });
    server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send(res, from_exception(e));
        } catch (...) {
            send(res, error_response(500, "internal", "unknown error"));
        }
    });
}

int Service::bind() {
    mount(impl_->server);
    auto& server = impl_->server;
    const auto& cfg = impl_->cfg;
    if (cfg.port == 0) {
        impl_->bound_port = server.bind_to_any_port(cfg.host);
    } else {
        impl_->bound_port = server.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1;
    }
    return impl_->bound_port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace egovario::service
