#include "ptp/annotate.hpp"

#include "ptp/candidates.hpp"
#include "ptp/image_io.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace ptp {

using json = nlohmann::ordered_json;

const char* to_string(TaskMode m) {
    return m == TaskMode::fine ? "fine" : "coarse";
}

const char* to_string(TaskStatus s) {
    switch (s) {
    case TaskStatus::pending:
        return "pending";
    case TaskStatus::claimed:
        return "claimed";
    case TaskStatus::done:
        return "done";
    }
    return "pending";
}

TaskMode parse_task_mode(const std::string& s) {
    if (s == "coarse")
        return TaskMode::coarse;
    if (s == "fine")
        return TaskMode::fine;
    throw Error("unknown task mode '" + s + "' (expected coarse or fine)");
}

namespace {

TaskStatus parse_status(const std::string& s) {
    if (s == "pending")
        return TaskStatus::pending;
    if (s == "claimed")
        return TaskStatus::claimed;
    if (s == "done")
        return TaskStatus::done;
    throw Error("unknown task status '" + s + "'");
}

bool safe_id(const std::string& id) {
    if (id.empty() || id.front() == '.')
        return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

json task_json(const AnnotationTask& t) {
    return {{"task_id", t.task_id},
            {"plan_id", t.plan_id},
            {"image_id", t.image_id},
            {"mode", to_string(t.mode)},
            {"predicted_score", t.predicted_score},
            {"status", to_string(t.status)},
            {"claimed_at_ms", t.claimed_at_ms}};
}

AnnotationTask task_from_json(const json& j) {
    AnnotationTask t;
    t.task_id = j.at("task_id").get<std::string>();
    t.plan_id = j.at("plan_id").get<std::string>();
    t.image_id = j.at("image_id").get<std::string>();
    t.mode = parse_task_mode(j.at("mode").get<std::string>());
    t.predicted_score = j.at("predicted_score").get<double>();
    t.status = parse_status(j.at("status").get<std::string>());
    t.claimed_at_ms = j.at("claimed_at_ms").get<std::int64_t>();
    return t;
}

} // namespace

Clock system_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

TaskLedger::TaskLedger(std::filesystem::path dir, Clock clock) : dir_(std::move(dir)), clock_(std::move(clock)) {
    std::filesystem::create_directories(dir_ / "masks");
    load();
}

void TaskLedger::load() {
    const auto path = dir_ / "ledger.json";
    if (!std::filesystem::exists(path))
        return;
    std::ifstream in(path);
    json j;
    try {
        j = json::parse(in);
        if (j.at("format") != "ptp-task-ledger" || j.at("version") != 1)
            throw Error("not a version 1 task ledger");
        for (const auto& p : j.at("plans"))
            plans_.insert(p.get<std::string>());
        for (const auto& t : j.at("tasks"))
            tasks_.push_back(task_from_json(t));
    } catch (const json::exception& e) {
        throw Error("corrupt task ledger " + path.string() + ": " + e.what());
    }
}

void TaskLedger::save() const {
    json j;
    j["format"] = "ptp-task-ledger";
    j["version"] = 1;
    j["plans"] = json::array();
    for (const auto& p : plans_)
        j["plans"].push_back(p);
    j["tasks"] = json::array();
    for (const auto& t : tasks_)
        j["tasks"].push_back(task_json(t));
    const auto path = dir_ / "ledger.json";
    const auto tmp = dir_ / "ledger.json.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << j.dump(1) << '\n';
        if (!out)
            throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void TaskLedger::expire_claims() {
    const auto now = clock_();
    for (auto& t : tasks_)
        if (t.status == TaskStatus::claimed && now - t.claimed_at_ms >= kClaimTimeoutMs) {
            t.status = TaskStatus::pending;
            t.claimed_at_ms = 0;
        }
}

std::vector<AnnotationTask> TaskLedger::enqueue(const AllocationPlan& plan, TaskMode mode) {
    if (!safe_id(plan.plan_id))
        throw Error("invalid plan id '" + plan.plan_id + "'");
    for (const auto& e : plan.entries)
        if (!safe_id(e.image_id))
            throw Error("invalid image id '" + e.image_id + "' in plan '" + plan.plan_id + "'");
    std::lock_guard lock(mu_);
    if (plans_.contains(plan.plan_id))
        throw Conflict("plan '" + plan.plan_id + "' was already enqueued");
    std::vector<AnnotationTask> added;
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        const auto& e = plan.entries[i];
        if (e.source != Source::human)
            continue;
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "-%04zu", i);
        added.push_back({plan.plan_id + suffix, plan.plan_id, e.image_id, mode, e.predicted_score,
                         TaskStatus::pending, 0});
    }
    plans_.insert(plan.plan_id);
    tasks_.insert(tasks_.end(), added.begin(), added.end());
    save();
    return added;
}

std::optional<AnnotationTask> TaskLedger::next_task() {
    std::lock_guard lock(mu_);
    expire_claims();
    AnnotationTask* best = nullptr;
    for (auto& t : tasks_) {
        if (t.status != TaskStatus::pending)
            continue;
        if (!best || t.predicted_score < best->predicted_score ||
            (t.predicted_score == best->predicted_score && t.task_id < best->task_id))
            best = &t;
    }
    if (!best)
        return std::nullopt;
    best->status = TaskStatus::claimed;
    best->claimed_at_ms = clock_();
    save();
    return *best;
}

SubmitReceipt TaskLedger::submit(const std::string& task_id, const std::vector<Point>& vertices, int width,
                                 int height) {
    if (auto problem = polygon_problem(vertices, width, height))
        throw RejectedAnnotation(*problem);
    const BinaryMask mask = postprocess(rasterize_polygon(vertices, width, height));
    if (mask.empty())
        throw RejectedAnnotation("polygon covers no pixel centres");

    std::lock_guard lock(mu_);
    expire_claims();
    const auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const auto& t) { return t.task_id == task_id; });
    if (it == tasks_.end())
        throw NotFound("unknown task '" + task_id + "'");
    if (it->status != TaskStatus::claimed)
        throw Conflict("task '" + task_id + "' is " + to_string(it->status) + ", not claimed");
    write_png(mask_path(it->image_id), mask);
    it->status = TaskStatus::done;
    save();
    return {*it, mask.count(), bounding_box(mask)};
}

std::optional<AnnotationTask> TaskLedger::find(const std::string& task_id) const {
    std::lock_guard lock(mu_);
    for (const auto& t : tasks_)
        if (t.task_id == task_id)
            return t;
    return std::nullopt;
}

std::vector<AnnotationTask> TaskLedger::tasks() const {
    std::lock_guard lock(mu_);
    return tasks_;
}

LedgerCounts TaskLedger::counts() const {
    std::lock_guard lock(mu_);
    const auto now = clock_();
    LedgerCounts c;
    c.plans = plans_.size();
    for (const auto& t : tasks_) {
        auto s = t.status;
        if (s == TaskStatus::claimed && now - t.claimed_at_ms >= kClaimTimeoutMs)
            s = TaskStatus::pending;
        (s == TaskStatus::pending ? c.pending : s == TaskStatus::claimed ? c.claimed : c.done)++;
    }
    return c;
}

std::filesystem::path TaskLedger::mask_path(const std::string& image_id) const {
    return dir_ / "masks" / (image_id + ".png");
}

std::vector<AppliedEntry> apply_annotations(const AllocationPlan& plan, const std::vector<DatasetImage>& images,
                                            const TaskLedger& ledger, const Refiner& refiner) {
    std::map<std::string, const DatasetImage*> by_id;
    for (const auto& im : images)
        by_id[im.image_id] = &im;
    std::map<std::string, TaskMode> mode_of;
    for (const auto& t : ledger.tasks())
        if (t.plan_id == plan.plan_id && t.status == TaskStatus::done)
            mode_of[t.image_id] = t.mode;

    std::vector<std::string> missing;
    for (const auto& e : plan.entries) {
        if (!by_id.contains(e.image_id))
            missing.push_back(e.image_id + " (no such image)");
        else if (e.source == Source::human && !mode_of.contains(e.image_id))
            missing.push_back(e.image_id + " (no completed annotation)");
    }
    if (!missing.empty()) {
        std::string msg = "cannot apply plan '" + plan.plan_id + "':";
        for (const auto& m : missing)
            msg += "\n  " + m;
        throw Error(msg);
    }

    std::vector<AppliedEntry> out(plan.entries.size());
    std::vector<std::string> errors(plan.entries.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        try {
            const auto& e = plan.entries[i];
            const auto& im = *by_id.at(e.image_id);
            AppliedEntry a{e.image_id, e.source, e.generator_id, {}, 0.0};
            if (e.source == Source::human) {
                a.mask = read_mask_png(ledger.mask_path(e.image_id));
                if (mode_of.at(e.image_id) == TaskMode::coarse)
                    a.mask = refiner(im.image, a.mask);
            } else {
                a.mask = refiner(im.image, postprocess(run_generator(e.generator_id, im.image)));
            }
            a.jaccard = jaccard(a.mask, im.gt);
            out[i] = std::move(a);
        } catch (const std::exception& ex) {
            errors[i] = ex.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty())
            throw Error(e);
    return out;
}

struct AnnotateService::Impl {
    ServiceOptions opts;
    TaskLedger ledger;
    httplib::Server server;
    std::thread thread;
    std::mutex dims_mu;
    std::map<std::string, std::pair<int, int>> dims;

    Impl(ServiceOptions o, Clock clock) : opts(std::move(o)), ledger(opts.ledger_dir, std::move(clock)) { routes(); }

    std::filesystem::path image_path(const std::string& id) const {
        return opts.dataset_root / "images" / (id + ".png");
    }

    std::optional<std::pair<int, int>> image_dims(const std::string& id) {
        {
            std::lock_guard lock(dims_mu);
            if (auto it = dims.find(id); it != dims.end())
                return it->second;
        }
        if (!safe_id(id) || !std::filesystem::exists(image_path(id)))
            return std::nullopt;
        const auto img = read_gray_png(image_path(id));
        std::lock_guard lock(dims_mu);
        return dims[id] = {img.width(), img.height()};
    }

    static void reply(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void fail(httplib::Response& res, int status, const std::string& reason) {
        reply(res, status, {{"error", reason}});
    }

    void routes() {
        server.Get("/api/v1/tasks/next", [this](const httplib::Request&, httplib::Response& res) {
            if (auto t = ledger.next_task())
                reply(res, 200, task_json(*t));
            else
                res.status = 204;
        });

        server.Post(R"(/api/v1/tasks/([^/]+)/annotation)", [this](const httplib::Request& req,
                                                                  httplib::Response& res) {
            const std::string task_id = req.matches[1];
            const auto task = ledger.find(task_id);
            if (!task)
                return fail(res, 404, "unknown task '" + task_id + "'");
            std::vector<Point> vertices;
            try {
                const auto body = json::parse(req.body);
                for (const auto& v : body.at("vertices")) {
                    if (!v.is_array() || v.size() != 2)
                        return fail(res, 400, "each vertex must be an [x, y] pair");
                    vertices.push_back({v[0].get<double>(), v[1].get<double>()});
                }
            } catch (const json::exception& e) {
                return fail(res, 400, std::string("malformed annotation: ") + e.what());
            }
            const auto wh = image_dims(task->image_id);
            if (!wh)
                return fail(res, 404, "image '" + task->image_id + "' not found");
            try {
                const auto r = ledger.submit(task_id, vertices, wh->first, wh->second);
                reply(res, 200,
                      {{"task", task_json(r.task)},
                       {"area", r.area},
                       {"bbox", {r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1}},
                       {"width", wh->first},
                       {"height", wh->second}});
            } catch (const RejectedAnnotation& e) {
                fail(res, 422, e.what());
            } catch (const NotFound& e) {
                fail(res, 404, e.what());
            } catch (const Conflict& e) {
                fail(res, 409, e.what());
            }
        });

        server.Get(R"(/api/v1/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            if (!image_dims(id))
                return fail(res, 404, "image '" + id + "' not found");
            std::ifstream in(image_path(id), std::ios::binary);
            std::ostringstream bytes;
            bytes << in.rdbuf();
            res.set_content(bytes.str(), "image/png");
        });

        server.Get(R"(/api/v1/masks/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto path = ledger.mask_path(id);
            if (!safe_id(id) || !std::filesystem::exists(path))
                return fail(res, 404, "no stored mask for '" + id + "'");
            std::ifstream in(path, std::ios::binary);
            std::ostringstream bytes;
            bytes << in.rdbuf();
            res.set_content(bytes.str(), "image/png");
        });

        server.Get("/api/v1/status", [this](const httplib::Request&, httplib::Response& res) {
            const auto c = ledger.counts();
            reply(res, 200,
                  {{"pending", c.pending},
                   {"claimed", c.claimed},
                   {"done", c.done},
                   {"total", c.pending + c.claimed + c.done},
                   {"plans", c.plans}});
        });

        server.Post("/api/v1/plans", [this](const httplib::Request& req, httplib::Response& res) {
            AllocationPlan plan;
            TaskMode mode = TaskMode::coarse;
            try {
                const auto body = json::parse(req.body);
                plan.plan_id = body.at("plan_id").get<std::string>();
                if (body.contains("mode"))
                    mode = parse_task_mode(body.at("mode").get<std::string>());
                for (const auto& e : body.at("entries")) {
                    PlanEntry pe;
                    pe.image_id = e.at("image_id").get<std::string>();
                    const auto src = e.at("source").get<std::string>();
                    if (src != "HUMAN" && src != "AUTO")
                        return fail(res, 400, "source must be HUMAN or AUTO");
                    pe.source = src == "HUMAN" ? Source::human : Source::automatic;
                    pe.predicted_score = e.value("predicted_score", 0.0);
                    pe.generator_id = e.value("generator_id", std::string{});
                    if (pe.source == Source::human && !image_dims(pe.image_id))
                        return fail(res, 400, "image '" + pe.image_id + "' not found");
                    plan.entries.push_back(std::move(pe));
                }
            } catch (const json::exception& e) {
                return fail(res, 400, std::string("malformed plan: ") + e.what());
            } catch (const Error& e) {
                return fail(res, 400, e.what());
            }
            try {
                json tasks = json::array();
                for (const auto& t : ledger.enqueue(plan, mode))
                    tasks.push_back(task_json(t));
                reply(res, 201, {{"plan_id", plan.plan_id}, {"tasks", tasks}});
            } catch (const Conflict& e) {
                fail(res, 409, e.what());
            } catch (const Error& e) {
                fail(res, 400, e.what());
            }
        });

        if (!opts.static_dir.empty() && !server.set_mount_point("/", opts.static_dir.string()))
            throw Error("static directory " + opts.static_dir.string() + " does not exist");
    }
};

AnnotateService::AnnotateService(ServiceOptions opts, Clock clock)
    : impl_(std::make_unique<Impl>(std::move(opts), std::move(clock))) {}

AnnotateService::~AnnotateService() {
    stop();
}

TaskLedger& AnnotateService::ledger() {
    return impl_->ledger;
}

int AnnotateService::start(int port) {
    int bound = port;
    if (port == 0)
        bound = impl_->server.bind_to_any_port(impl_->opts.host);
    else if (!impl_->server.bind_to_port(impl_->opts.host, port))
        bound = -1;
    if (bound < 0)
        throw Error("cannot bind " + impl_->opts.host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void AnnotateService::listen(int port) {
    if (!impl_->server.listen(impl_->opts.host, port))
        throw Error("cannot listen on " + impl_->opts.host + ":" + std::to_string(port));
}

void AnnotateService::stop() {
    if (!impl_)
        return;
    impl_->server.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

} // namespace ptp
