// ptp: command-line harness for candidate generation, quality prediction,
// budget allocation sweeps and the annotation service.

#include "ptp/annotate.hpp"
#include "ptp/experiments.hpp"
#include "ptp/image_io.hpp"
#include "ptp/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out)
        throw ptp::Error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ptp::Error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        if (!cur.empty())
            out.push_back(cur);
    return out;
}

// "0:0.05:1" (inclusive range) or "0,0.1,0.5".
std::vector<double> parse_grid(const std::string& spec) {
    if (spec.find(':') != std::string::npos) {
        const auto parts = split(spec, ':');
        if (parts.size() != 3)
            throw ptp::Error("budget grid range must be start:step:stop");
        const double a = std::stod(parts[0]), step = std::stod(parts[1]), b = std::stod(parts[2]);
        if (!(step > 0.0) || b < a)
            throw ptp::Error("budget grid range must have positive step and stop >= start");
        std::vector<double> grid;
        const auto n = static_cast<int>(std::floor((b - a) / step + 1e-9));
        for (int i = 0; i <= n; ++i)
            grid.push_back(std::min(b, a + i * step));
        return grid;
    }
    std::vector<double> grid;
    for (const auto& p : split(spec, ','))
        grid.push_back(std::stod(p));
    return grid;
}

json forest_json(const ptp::ForestParams& p) {
    return {{"n_trees", p.n_trees}, {"mtry", p.mtry}, {"min_leaf", p.min_leaf}, {"bootstrap", p.bootstrap},
            {"seed", p.seed}};
}

// Everything needed to rerun a command and get the same bytes out.
void write_manifest(const fs::path& path, const std::string& command, int argc, char** argv, json config) {
    json m;
    m["tool"] = "ptp";
    m["version"] = std::string(ptp::kVersion);
    m["command"] = command;
    m["argv"] = json::array();
    for (int i = 0; i < argc; ++i)
        m["argv"].push_back(argv[i]);
    m["config"] = std::move(config);
    m["components"] = {{"feature_schema", std::string(ptp::kFeatureSchema)},
                       {"forest_format", "ptp-forest/1"},
                       {"ledger_format", "ptp-task-ledger/1"},
                       {"generators", ptp::builtin_generators()}};
    write_text(path, m.dump(1) + "\n");
}

fs::path manifest_beside(const fs::path& out) {
    return fs::path(out.string() + ".manifest.json");
}

std::vector<ptp::DatasetImage> load(const fs::path& root) {
    return ptp::load_images(ptp::ingest(root));
}

json report_json(const ptp::EvalReport& r) {
    json j;
    j["cc"] = r.cc ? json(*r.cc) : json(nullptr);
    j["mae"] = r.mae;
    j["n"] = r.n;
    return j;
}

ptp::AllocationSystem parse_system(const std::string& s) {
    if (s == "coarse")
        return ptp::AllocationSystem::coarse;
    if (s == "fine")
        return ptp::AllocationSystem::fine;
    throw ptp::Error("unknown system '" + s + "' (expected coarse or fine)");
}

ptp::AnnotatorMode parse_human(const std::string& s) {
    if (s == "coarse")
        return ptp::AnnotatorMode::coarse;
    if (s == "fine")
        return ptp::AnnotatorMode::fine;
    if (s == "exact")
        return ptp::AnnotatorMode::exact;
    throw ptp::Error("unknown human simulator '" + s + "'");
}

ptp::AnnotateService* g_service = nullptr;

void on_signal(int) {
    if (g_service)
        g_service->stop();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predict-then-allocate segmentation harness"};
    app.set_version_flag("--version", std::string(ptp::kVersion));
    app.require_subcommand(1);

    fs::path root, out, import_dir, model_path, test_root, ledger_dir, static_dir, plan_path;
    std::uint64_t seed = 0;
    ptp::ForestParams forest;
    int folds = 10;
    auto add_forest = [&](CLI::App* c) {
        c->add_option("--trees", forest.n_trees, "Trees in the forest")->capture_default_str();
        c->add_option("--mtry", forest.mtry, "Features tried per split")->capture_default_str();
        c->add_option("--min-leaf", forest.min_leaf, "Minimum examples per leaf")->capture_default_str();
    };

    auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic dataset");
    int n_images = 100;
    gen->add_option("--out", out, "Dataset root")->required();
    gen->add_option("-n,--count", n_images, "Number of images")->capture_default_str();
    gen->add_option("--seed", seed, "Corpus seed")->capture_default_str();

    auto* stats = app.add_subcommand("stats", "Ground-truth object statistics");
    stats->add_option("--root", root, "Dataset root")->required()->check(CLI::ExistingDirectory);
    stats->add_option("--out", out, "CSV output (stdout if omitted)");

    auto* train = app.add_subcommand("train", "Train the quality forest on a dataset");
    fs::path training_csv;
    train->add_option("--root", root, "Dataset root")->required()->check(CLI::ExistingDirectory);
    train->add_option("--import-dir", import_dir, "Extra proposal masks")->check(CLI::ExistingDirectory);
    train->add_option("--out", out, "Model JSON")->required();
    train->add_option("--training-csv", training_csv, "Also dump the training examples");
    train->add_option("--seed", forest.seed, "Forest seed")->capture_default_str();
    add_forest(train);

    auto* eval = app.add_subcommand("eval-pred", "Prediction quality (grouped k-fold or cross-set)");
    eval->add_option("--root", root, "Dataset root")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--test-root", test_root, "Test dataset; enables cross-set mode")->check(CLI::ExistingDirectory);
    eval->add_option("--import-dir", import_dir, "Extra proposal masks")->check(CLI::ExistingDirectory);
    eval->add_option("--out", out, "Output directory")->required();
    eval->add_option("--seed", forest.seed, "Forest and fold seed")->capture_default_str();
    eval->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
    add_forest(eval);

    auto* sweep = app.add_subcommand("sweep", "Budget sweep over allocation strategies");
    std::string strategies = "ours,perfect,chance,rectangle,no_refinement";
    std::string grid = "0:0.05:1";
    std::string refiner = "chanvese", system = "coarse", human = "coarse", generators;
    int n_seeds = 5;
    sweep->add_option("--root", root, "Dataset root")->required()->check(CLI::ExistingDirectory);
    sweep->add_option("--import-dir", import_dir, "Extra proposal masks")->check(CLI::ExistingDirectory);
    sweep->add_option("--out", out, "Output directory")->required();
    sweep->add_option("--strategies", strategies, "Comma-separated strategies")->capture_default_str();
    sweep->add_option("--budget-grid", grid, "start:step:stop or a comma list")->capture_default_str();
    sweep->add_option("--refiner", refiner, "chanvese or none")->capture_default_str();
    sweep->add_option("--system", system, "coarse or fine allocation")->capture_default_str();
    sweep->add_option("--human", human, "Simulated human: coarse, fine or exact")->capture_default_str();
    sweep->add_option("--generators", generators, "Restrict built-in generators (comma list)");
    sweep->add_option("--model", model_path, "Score with this model instead of out-of-fold forests")
        ->check(CLI::ExistingFile);
    sweep->add_option("--seed", seed, "First seed")->capture_default_str();
    sweep->add_option("--seeds", n_seeds, "Number of consecutive seeds")->capture_default_str();
    sweep->add_option("--folds", folds, "Folds for out-of-fold scoring")->capture_default_str();
    add_forest(sweep);

    auto* plan = app.add_subcommand("plan", "Allocation plan for a batch using a trained model");
    double budget = 0.0;
    std::string plan_id = "plan";
    plan->add_option("--root", root, "Dataset root")->required()->check(CLI::ExistingDirectory);
    plan->add_option("--import-dir", import_dir, "Extra proposal masks")->check(CLI::ExistingDirectory);
    plan->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
    plan->add_option("--budget", budget, "Fraction of images sent to humans")->required();
    plan->add_option("--system", system, "coarse or fine allocation")->capture_default_str();
    plan->add_option("--plan-id", plan_id, "Plan identifier")->capture_default_str();
    plan->add_option("--out", out, "Plan CSV")->required();

    auto* serve = app.add_subcommand("serve", "Run the annotation service");
    std::string host = "127.0.0.1", mode = "coarse";
    int port = 8080;
    serve->add_option("--root", root, "Dataset root")->required()->check(CLI::ExistingDirectory);
    serve->add_option("--ledger", ledger_dir, "Task ledger directory")->required();
    serve->add_option("--static", static_dir, "Browser client directory")->check(CLI::ExistingDirectory);
    serve->add_option("--plan", plan_path, "Enqueue this plan CSV on start")->check(CLI::ExistingFile);
    serve->add_option("--plan-id", plan_id, "Id for the enqueued plan")->capture_default_str();
    serve->add_option("--mode", mode, "Annotation mode for the enqueued plan")->capture_default_str();
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();

    auto* apply = app.add_subcommand("annotate-apply", "Merge stored human masks into a plan's results");
    apply->add_option("--root", root, "Dataset root")->required()->check(CLI::ExistingDirectory);
    apply->add_option("--ledger", ledger_dir, "Task ledger directory")->required()->check(CLI::ExistingDirectory);
    apply->add_option("--plan", plan_path, "Plan CSV")->required()->check(CLI::ExistingFile);
    apply->add_option("--plan-id", plan_id, "Id the plan was enqueued under")->capture_default_str();
    apply->add_option("--refiner", refiner, "chanvese or none")->capture_default_str();
    apply->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto images = ptp::synth_corpus(n_images, seed);
            const auto manifest = ptp::write_dataset(out, images);
            write_manifest(out / "run_manifest.json", "gen-corpus", argc, argv, {{"n", n_images}, {"seed", seed}});
            std::cout << "wrote " << manifest.entries.size() << " images to " << out.string() << '\n';
        } else if (*stats) {
            const auto csv = ptp::stats_csv(ptp::dataset_stats(load(root)));
            if (out.empty()) {
                std::cout << csv;
            } else {
                write_text(out, csv);
                write_manifest(manifest_beside(out), "stats", argc, argv, {{"root", root.string()}});
            }
        } else if (*train) {
            const auto images = load(root);
            const auto ex = ptp::build_training_set(ptp::label_images(images, ptp::generate_all(images, import_dir)));
            if (!training_csv.empty()) {
                std::ostringstream os;
                os << ptp::training_csv_header() << '\n';
                for (const auto& e : ex)
                    os << ptp::training_csv_row(e) << '\n';
                write_text(training_csv, os.str());
            }
            const auto model = ptp::train_forest(ex, forest);
            ptp::save_model(model, out);
            write_manifest(manifest_beside(out), "train", argc, argv,
                           {{"root", root.string()}, {"import_dir", import_dir.string()}, {"forest", forest_json(forest)}});
            std::cout << "trained on " << ex.size() << " examples from " << images.size() << " images\n";
        } else if (*eval) {
            ptp::PredictionEvalConfig cfg;
            cfg.forest = forest;
            cfg.folds = folds;
            cfg.import_dir = import_dir;
            const auto images = load(root);
            const auto r = test_root.empty() ? ptp::run_prediction_eval(images, cfg)
                                             : ptp::run_cross_eval(images, load(test_root), cfg);
            json report = {{"mode", test_root.empty() ? "single" : "cross"},
                           {"forest", report_json(r.forest)},
                           {"linear", report_json(r.linear)}};
            write_text(out / "predictions.csv", ptp::predictions_csv(r));
            write_text(out / "report.json", report.dump(1) + "\n");
            write_manifest(out / "run_manifest.json", "eval-pred", argc, argv,
                           {{"root", root.string()},
                            {"test_root", test_root.string()},
                            {"import_dir", import_dir.string()},
                            {"folds", folds},
                            {"forest", forest_json(forest)}});
            std::cout << report.dump(1) << '\n';
        } else if (*sweep) {
            ptp::SweepConfig cfg;
            cfg.strategies = split(strategies, ',');
            cfg.budgets = parse_grid(grid);
            cfg.seeds.clear();
            for (int i = 0; i < n_seeds; ++i)
                cfg.seeds.push_back(seed + std::uint64_t(i));
            cfg.system = parse_system(system);
            cfg.human = parse_human(human);
            cfg.refiner = refiner;
            cfg.forest = forest;
            cfg.folds = folds;
            cfg.import_dir = import_dir;
            cfg.generators = split(generators, ',');
            if (!model_path.empty())
                cfg.model = ptp::load_model(model_path);
            const auto r = ptp::run_sweep(load(root), cfg);
            write_text(out / "sweep.csv", ptp::sweep_csv(r));
            write_text(out / "sweep_details.csv", ptp::sweep_details_csv(r));
            const auto& cv = cfg.chanvese;
            write_manifest(out / "run_manifest.json", "sweep", argc, argv,
                           {{"root", root.string()},
                            {"import_dir", import_dir.string()},
                            {"strategies", cfg.strategies},
                            {"budgets", cfg.budgets},
                            {"seeds", cfg.seeds},
                            {"system", system},
                            {"human", human},
                            {"refiner", refiner},
                            {"chanvese",
                             {{"mu", cv.mu},
                              {"dt", cv.dt},
                              {"max_iters", cv.max_iters},
                              {"tol", cv.tol},
                              {"reinit_every", cv.reinit_every},
                              {"epsilon", cv.epsilon}}},
                            {"generators", cfg.generators},
                            {"model", model_path.string()},
                            {"folds", folds},
                            {"forest", forest_json(forest)},
                            {"human_mean_quality", r.human_mean_quality}});
            std::cout << "wrote " << r.rows.size() << " sweep rows to " << (out / "sweep.csv").string() << '\n';
        } else if (*plan) {
            const auto images = load(root);
            const auto model = ptp::load_model(model_path);
            const auto sets = ptp::generate_all(images, import_dir);
            std::vector<ptp::ScoredImage> batch;
            for (const auto& cs : sets) {
                const auto c = ptp::select_best_candidate(cs, model);
                batch.push_back({cs.image_id, c.score, c.generator_id});
            }
            const auto spec = ptp::BudgetSpec::fraction(budget);
            auto p = parse_system(system) == ptp::AllocationSystem::fine ? ptp::plan_fine(batch, spec)
                                                                          : ptp::plan_coarse(batch, spec);
            p.plan_id = plan_id;
            write_text(out, ptp::plan_to_csv(p));
            write_manifest(manifest_beside(out), "plan", argc, argv,
                           {{"root", root.string()},
                            {"model", model_path.string()},
                            {"budget", budget},
                            {"system", system},
                            {"plan_id", plan_id}});
            std::cout << p.human_entries() << " of " << p.entries.size() << " images routed to humans\n";
        } else if (*serve) {
            ptp::AnnotateService service({ledger_dir, root, static_dir, host});
            if (!plan_path.empty()) {
                const auto p = ptp::plan_from_csv(read_text(plan_path), plan_id);
                const auto tasks = service.ledger().enqueue(p, ptp::parse_task_mode(mode));
                std::cout << "enqueued " << tasks.size() << " tasks from plan '" << plan_id << "'\n";
            }
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "serving on http://" << host << ':' << port << "/api/v1/" << std::endl;
            service.listen(port);
            g_service = nullptr;
        } else if (*apply) {
            if (refiner != "chanvese" && refiner != "none")
                throw ptp::Error("unknown refiner '" + refiner + "'");
            const auto images = load(root);
            const auto p = ptp::plan_from_csv(read_text(plan_path), plan_id);
            const ptp::TaskLedger ledger(ledger_dir);
            const auto r = ptp::apply_annotations(p, images, ledger,
                                                  refiner == "chanvese" ? ptp::chanvese_refiner() : ptp::identity_refiner());
            std::ostringstream os;
            os.precision(17);
            os << "image_id,source,generator_id,jaccard\n";
            double sum = 0.0;
            fs::create_directories(out / "masks");
            for (const auto& a : r) {
                ptp::write_png(out / "masks" / (a.image_id + ".png"), a.mask);
                os << a.image_id << ',' << ptp::to_string(a.source) << ',' << a.generator_id << ',' << a.jaccard << '\n';
                sum += a.jaccard;
            }
            write_text(out / "results.csv", os.str());
            write_manifest(out / "run_manifest.json", "annotate-apply", argc, argv,
                           {{"root", root.string()},
                            {"ledger", ledger_dir.string()},
                            {"plan", plan_path.string()},
                            {"plan_id", plan_id},
                            {"refiner", refiner}});
            std::cout << "mean jaccard " << (r.empty() ? 0.0 : sum / double(r.size())) << " over " << r.size()
                      << " images\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
