#pragma once

#include "ptp/allocator.hpp"
#include "ptp/chanvese.hpp"
#include "ptp/dataset.hpp"
#include "ptp/polygon.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ptp {

enum class TaskMode { coarse, fine };
enum class TaskStatus { pending, claimed, done };

const char* to_string(TaskMode m);
const char* to_string(TaskStatus s);
TaskMode parse_task_mode(const std::string& s);

struct AnnotationTask {
    std::string task_id;
    std::string plan_id;
    std::string image_id;
    TaskMode mode = TaskMode::coarse;
    double predicted_score = 0.0;
    TaskStatus status = TaskStatus::pending;
    std::int64_t claimed_at_ms = 0;
};

// Submission refused because of the polygon itself; carries a human-readable reason.
class RejectedAnnotation : public Error {
  public:
    using Error::Error;
};
class NotFound : public Error {
  public:
    using Error::Error;
};
// Request valid in form but not in the task's current state.
class Conflict : public Error {
  public:
    using Error::Error;
};

inline constexpr std::int64_t kClaimTimeoutMs = 10 * 60 * 1000;

// Milliseconds on some monotone scale.
using Clock = std::function<std::int64_t()>;
Clock system_clock();

struct LedgerCounts {
    std::size_t pending = 0;
    std::size_t claimed = 0;
    std::size_t done = 0;
    std::size_t plans = 0;
};

struct SubmitReceipt {
    AnnotationTask task;
    std::size_t area = 0;
    Rect bbox;
};

// Task queue persisted as <dir>/ledger.json with submitted masks in <dir>/masks/.
// All state transitions run under one mutex and are written through before returning.
class TaskLedger {
  public:
    explicit TaskLedger(std::filesystem::path dir, Clock clock = system_clock());

    // One task per HUMAN entry. Throws Conflict if the plan id was enqueued before.
    std::vector<AnnotationTask> enqueue(const AllocationPlan& plan, TaskMode mode);

    // Claims the pending task with the lowest predicted score (ties by task id).
    std::optional<AnnotationTask> next_task();

    // Rasterises, post-processes and stores the polygon for a claimed task.
    SubmitReceipt submit(const std::string& task_id, const std::vector<Point>& vertices, int width, int height);

    std::optional<AnnotationTask> find(const std::string& task_id) const;
    std::vector<AnnotationTask> tasks() const;
    LedgerCounts counts() const;

    std::filesystem::path mask_path(const std::string& image_id) const;
    const std::filesystem::path& dir() const { return dir_; }

  private:
    void expire_claims();
    void save() const;
    void load();

    std::filesystem::path dir_;
    Clock clock_;
    mutable std::mutex mu_;
    std::vector<AnnotationTask> tasks_;
    std::set<std::string> plans_;
};

// Combines a plan with the ledger's stored masks: AUTO entries rerun their generator,
// HUMAN entries take the submitted mask; coarse input then goes through `refiner`.
struct AppliedEntry {
    std::string image_id;
    Source source = Source::automatic;
    std::string generator_id;
    BinaryMask mask;
    double jaccard = 0.0; // against gt
};

std::vector<AppliedEntry> apply_annotations(const AllocationPlan& plan, const std::vector<DatasetImage>& images,
                                            const TaskLedger& ledger, const Refiner& refiner);

struct ServiceOptions {
    std::filesystem::path ledger_dir;
    std::filesystem::path dataset_root; // images/<id>.png served to annotators
    std::filesystem::path static_dir;   // optional browser client
    std::string host = "127.0.0.1";
};

// HTTP front end over a TaskLedger; routes live under /api/v1/.
class AnnotateService {
  public:
    explicit AnnotateService(ServiceOptions opts, Clock clock = system_clock());
    ~AnnotateService();
    AnnotateService(const AnnotateService&) = delete;
    AnnotateService& operator=(const AnnotateService&) = delete;

    TaskLedger& ledger();

    // Binds (port 0 picks a free one) and serves on a background thread; returns the port.
    int start(int port = 0);
    // Serves on the calling thread until stop() is called from elsewhere.
    void listen(int port);
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace ptp
