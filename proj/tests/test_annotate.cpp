#include "support.hpp"

#include "ptp/annotate.hpp"
#include "ptp/image_io.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <fstream>
#include <set>
#include <thread>

using namespace ptp;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct FakeClock {
    std::shared_ptr<std::atomic<std::int64_t>> now = std::make_shared<std::atomic<std::int64_t>>(1000);
    Clock clock() const {
        auto n = now;
        return [n] { return n->load(); };
    }
};

AllocationPlan plan_with(const std::string& id, const std::vector<std::pair<std::string, double>>& humans,
                         int autos = 1) {
    AllocationPlan p;
    p.plan_id = id;
    for (int i = 0; i < autos; ++i)
        p.entries.push_back({"auto" + std::to_string(i), Source::automatic, "otsu", 0.9, 0.0});
    for (const auto& [img, score] : humans)
        p.entries.push_back({img, Source::human, "", score, kCostCoarse});
    return p;
}

const std::vector<Point> kRect = {{10, 10}, {40, 10}, {40, 30}, {10, 30}};
const std::vector<Point> kBowTie = {{10, 10}, {40, 30}, {40, 10}, {10, 30}};

} // namespace

TEST_CASE("enqueue serves worst score first") {
    const auto dir = test::scratch_dir("ledger_order");
    TaskLedger ledger(dir);
    const auto tasks = ledger.enqueue(plan_with("p", {{"a", 0.1}, {"b", 0.4}, {"c", 0.2}}), TaskMode::coarse);
    CHECK(tasks.size() == 3);
    CHECK(ledger.next_task()->image_id == "a");
    CHECK(ledger.next_task()->image_id == "c");
    CHECK(ledger.next_task()->image_id == "b");
    CHECK(!ledger.next_task());
    CHECK(ledger.counts().claimed == 3);
}

TEST_CASE("plans without human entries leave the queue empty; re-enqueue is rejected") {
    TaskLedger ledger(test::scratch_dir("ledger_dup"));
    CHECK(ledger.enqueue(plan_with("p", {}, 4), TaskMode::fine).empty());
    CHECK(!ledger.next_task());
    CHECK_THROWS_AS(ledger.enqueue(plan_with("p", {{"a", 0.3}}), TaskMode::fine), Conflict);
    CHECK_THROWS_AS(ledger.enqueue(plan_with("../x", {{"a", 0.3}}), TaskMode::fine), Error);
    CHECK(ledger.counts().plans == 1);
}

TEST_CASE("submit state machine") {
    TaskLedger ledger(test::scratch_dir("ledger_submit"));
    const auto tasks = ledger.enqueue(plan_with("p", {{"a", 0.1}, {"b", 0.2}}), TaskMode::coarse);
    CHECK_THROWS_AS(ledger.submit(tasks[0].task_id, kRect, 64, 48), Conflict);
    CHECK_THROWS_AS(ledger.submit("nope", kRect, 64, 48), NotFound);
    const auto t = ledger.next_task();
    REQUIRE(t);
    CHECK_THROWS_WITH_AS(ledger.submit(t->task_id, kBowTie, 64, 48), "polygon is self-intersecting",
                         RejectedAnnotation);
    CHECK_THROWS_WITH_AS(ledger.submit(t->task_id, {{1, 1}, {2, 2}}, 64, 48), "polygon needs at least 3 vertices",
                         RejectedAnnotation);
    CHECK_THROWS_WITH_AS(ledger.submit(t->task_id, {{1, 1}, {70, 1}, {5, 5}}, 64, 48), "vertex outside image bounds",
                         RejectedAnnotation);
    // thin sliver between pixel centres
    CHECK_THROWS_WITH_AS(ledger.submit(t->task_id, {{1.1, 1.1}, {1.4, 1.2}, {1.2, 1.4}}, 64, 48),
                         "polygon covers no pixel centres", RejectedAnnotation);
    CHECK(ledger.find(t->task_id)->status == TaskStatus::claimed);

    const auto r = ledger.submit(t->task_id, kRect, 64, 48);
    CHECK(r.area == 600);
    CHECK(r.bbox == Rect{10, 10, 40, 30});
    CHECK(r.task.status == TaskStatus::done);
    CHECK(read_mask_png(ledger.mask_path("a")) == rect_mask(64, 48, Rect{10, 10, 40, 30}));
    CHECK_THROWS_AS(ledger.submit(t->task_id, kRect, 64, 48), Conflict);
}

TEST_CASE("claims expire after the timeout") {
    FakeClock fc;
    TaskLedger ledger(test::scratch_dir("ledger_expiry"), fc.clock());
    ledger.enqueue(plan_with("p", {{"a", 0.1}, {"b", 0.2}}), TaskMode::coarse);
    const auto first = ledger.next_task();
    *fc.now += kClaimTimeoutMs - 1;
    CHECK(ledger.next_task()->image_id == "b");
    CHECK(!ledger.next_task());
    *fc.now += 1;
    CHECK(ledger.counts().pending == 1);
    const auto again = ledger.next_task();
    REQUIRE(again);
    CHECK(again->task_id == first->task_id);
    *fc.now += kClaimTimeoutMs;
    CHECK_THROWS_AS(ledger.submit(again->task_id, kRect, 64, 48), Conflict);
}

TEST_CASE("ledger survives a restart") {
    const auto dir = test::scratch_dir("ledger_restart");
    std::string done_id;
    {
        TaskLedger ledger(dir);
        ledger.enqueue(plan_with("p", {{"a", 0.1}, {"b", 0.2}, {"c", 0.3}}), TaskMode::fine);
        done_id = ledger.next_task()->task_id;
        ledger.submit(done_id, kRect, 64, 48);
        ledger.next_task();
    }
    TaskLedger reopened(dir);
    const auto c = reopened.counts();
    CHECK(c.done == 1);
    CHECK(c.claimed == 1);
    CHECK(c.pending == 1);
    CHECK(reopened.find(done_id)->mode == TaskMode::fine);
    CHECK_THROWS_AS(reopened.enqueue(plan_with("p", {}), TaskMode::fine), Conflict);
    CHECK(reopened.next_task()->image_id == "c");

    std::ofstream(dir / "ledger.json") << "{broken";
    CHECK_THROWS_AS(TaskLedger{dir}, Error);
}

TEST_CASE("concurrent claims are exclusive") {
    TaskLedger ledger(test::scratch_dir("ledger_threads"));
    std::vector<std::pair<std::string, double>> many;
    for (int i = 0; i < 100; ++i)
        many.push_back({"im" + std::to_string(i), i / 100.0});
    ledger.enqueue(plan_with("p", many), TaskMode::coarse);
    std::vector<std::vector<std::string>> got(8);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&, t] {
            while (auto task = ledger.next_task())
                got[t].push_back(task->task_id);
        });
    for (auto& th : threads)
        th.join();
    std::set<std::string> all;
    std::size_t total = 0;
    for (const auto& g : got) {
        total += g.size();
        all.insert(g.begin(), g.end());
    }
    CHECK(total == 100);
    CHECK(all.size() == 100);
}

TEST_CASE("apply merges human masks into the plan") {
    const auto root = test::scratch_dir("apply_ds");
    const auto images = synth_corpus(3, 17);
    write_dataset(root, images);
    TaskLedger ledger(test::scratch_dir("apply_ledger"));
    AllocationPlan plan;
    plan.plan_id = "p";
    plan.entries = {{images[0].image_id, Source::automatic, "otsu", 0.8, 0},
                    {images[1].image_id, Source::human, "", 0.2, kCostFromScratch}};
    ledger.enqueue(plan, TaskMode::fine);
    CHECK_THROWS_WITH_AS(apply_annotations(plan, images, ledger, identity_refiner()),
                         doctest::Contains("no completed annotation"), Error);
    const auto t = ledger.next_task();
    const auto& gt = images[1].gt;
    const Rect box = bounding_box(gt);
    ledger.submit(t->task_id,
                  {{double(box.x0), double(box.y0)}, {double(box.x1), double(box.y0)},
                   {double(box.x1), double(box.y1)}, {double(box.x0), double(box.y1)}},
                  gt.width(), gt.height());
    const auto out = apply_annotations(plan, images, ledger, identity_refiner());
    REQUIRE(out.size() == 2);
    CHECK(out[0].mask == postprocess(run_generator("otsu", images[0].image)));
    CHECK(out[1].mask == rect_mask(gt.width(), gt.height(), box));
    CHECK(out[1].jaccard == jaccard(out[1].mask, gt));
}

TEST_CASE("http service contract") {
    const auto root = test::scratch_dir("http_ds");
    const auto images = synth_corpus(12, 23);
    write_dataset(root, images);
    const auto ledger_dir = test::scratch_dir("http_ledger");
    const int w = images[0].image.width(), h = images[0].image.height();

    json plan = {{"plan_id", "batch1"}, {"mode", "coarse"}, {"entries", json::array()}};
    const double scores[] = {0.4, 0.1, 0.2};
    for (int i = 0; i < 12; ++i) {
        const bool human = i < 3;
        plan["entries"].push_back({{"image_id", images[i].image_id},
                                   {"source", human ? "HUMAN" : "AUTO"},
                                   {"generator_id", human ? "" : "otsu"},
                                   {"predicted_score", human ? scores[i] : 0.9}});
    }

    {
        AnnotateService service({ledger_dir, root, {}, "127.0.0.1"});
        const int port = service.start(0);
        httplib::Client cli("127.0.0.1", port);

        auto res = cli.Get("/api/v1/tasks/next");
        REQUIRE(res);
        CHECK(res->status == 204);

        res = cli.Post("/api/v1/plans", plan.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 201);
        CHECK(json::parse(res->body)["tasks"].size() == 3);
        res = cli.Post("/api/v1/plans", plan.dump(), "application/json");
        CHECK(res->status == 409);
        res = cli.Post("/api/v1/plans", "{not json", "application/json");
        CHECK(res->status == 400);

        res = cli.Get("/api/v1/tasks/next");
        REQUIRE(res->status == 200);
        const auto first = json::parse(res->body);
        CHECK(first["image_id"] == images[1].image_id);
        CHECK(first["predicted_score"] == 0.1);
        CHECK(first["status"] == "claimed");
        const std::string id = first["task_id"];

        res = cli.Post("/api/v1/tasks/" + id + "/annotation",
                       json{{"vertices", {{10, 10}, {40, 30}, {40, 10}, {10, 30}}}}.dump(), "application/json");
        CHECK(res->status == 422);
        CHECK(json::parse(res->body)["error"] == "polygon is self-intersecting");

        res = cli.Post("/api/v1/tasks/" + id + "/annotation",
                       json{{"vertices", {{10, 10}, {40, 10}, {40, 30}, {10, 30}}}}.dump(), "application/json");
        REQUIRE(res->status == 200);
        const auto receipt = json::parse(res->body);
        CHECK(receipt["area"] == 600);
        CHECK(receipt["task"]["status"] == "done");

        res = cli.Get("/api/v1/masks/" + images[1].image_id);
        REQUIRE(res->status == 200);
        const auto mask_file = test::scratch_dir("http_mask") / "m.png";
        std::ofstream(mask_file, std::ios::binary) << res->body;
        const auto& gt1 = images[1].gt;
        CHECK(jaccard(read_mask_png(mask_file), rect_mask(gt1.width(), gt1.height(), Rect{10, 10, 40, 30})) == 1.0);

        res = cli.Post("/api/v1/tasks/" + id + "/annotation",
                       json{{"vertices", {{10, 10}, {40, 10}, {40, 30}}}}.dump(), "application/json");
        CHECK(res->status == 409);
        res = cli.Post("/api/v1/tasks/nope/annotation", json{{"vertices", json::array()}}.dump(), "application/json");
        CHECK(res->status == 404);
        res = cli.Post("/api/v1/tasks/" + id + "/annotation", R"({"vertices":[[1,2,3]]})", "application/json");
        CHECK(res->status == 400);

        res = cli.Get("/api/v1/images/" + images[0].image_id);
        REQUIRE(res->status == 200);
        CHECK(res->get_header_value("Content-Type") == "image/png");
        CHECK(res->body.substr(1, 3) == "PNG");
        CHECK(cli.Get("/api/v1/images/missing")->status == 404);

        res = cli.Get("/api/v1/status");
        const auto st = json::parse(res->body);
        CHECK(st["done"] == 1);
        CHECK(st["pending"] == 2);
        CHECK(st["total"] == 3);
        (void)w;
        (void)h;
        service.stop();
    }

    AnnotateService restarted({ledger_dir, root, {}, "127.0.0.1"});
    const int port = restarted.start(0);
    httplib::Client cli("127.0.0.1", port);
    const auto st = json::parse(cli.Get("/api/v1/status")->body);
    CHECK(st["done"] == 1);
    CHECK(st["pending"] == 2);
    CHECK(st["plans"] == 1);
    const auto next = json::parse(cli.Get("/api/v1/tasks/next")->body);
    CHECK(next["image_id"] == images[2].image_id);
}

TEST_CASE("eight concurrent http clients never share a claim") {
    const auto root = test::scratch_dir("http_conc_ds");
    const auto images = synth_corpus(40, 29);
    write_dataset(root, images);
    AnnotateService service({test::scratch_dir("http_conc_ledger"), root, {}, "127.0.0.1"});
    AllocationPlan plan;
    plan.plan_id = "many";
    for (std::size_t i = 0; i < images.size(); ++i)
        plan.entries.push_back({images[i].image_id, Source::human, "", double(i % 7) / 7.0, kCostCoarse});
    service.ledger().enqueue(plan, TaskMode::coarse);
    const int port = service.start(0);

    std::vector<std::vector<std::string>> got(8);
    std::vector<std::thread> clients;
    for (int c = 0; c < 8; ++c)
        clients.emplace_back([&, c] {
            httplib::Client cli("127.0.0.1", port);
            for (;;) {
                auto res = cli.Get("/api/v1/tasks/next");
                if (!res || res->status != 200)
                    break;
                got[c].push_back(json::parse(res->body)["task_id"]);
            }
        });
    for (auto& t : clients)
        t.join();
    std::set<std::string> all;
    std::size_t total = 0;
    for (const auto& g : got) {
        total += g.size();
        all.insert(g.begin(), g.end());
    }
    CHECK(total == images.size());
    CHECK(all.size() == images.size());
}
