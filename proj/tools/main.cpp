// Batch front end: `gen` writes a synthetic dataset to disk, `run` executes a
// leave-one-sequence-out experiment and emits report files, `compare` lays
// reports side by side and can enforce an expected accuracy ordering.
//
// Exit codes: 0 success, 2 usage/configuration problems, 1 pipeline failures.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "emorep/eval.hpp"
#include "emorep/manifest.hpp"
#include "emorep/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw emorep::Error("cannot write '" + path.string() + "'");
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw emorep::Error("cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct GenOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int cmd_gen(const GenOptions& opt) {
    emorep::SynthConfig cfg;
    json raw;
    try {
        const std::string text = read_file(opt.config_path);
        raw = json::parse(text);
        cfg = emorep::synth_config_from_json(text);
    } catch (const std::exception& e) {
        std::cerr << "gen: " << e.what() << "\n";
        return kExitUsage;
    }
    // one authoritative seed: a flag that contradicts the config is an error
    if (opt.seed_given) {
        if (raw.contains("seed") && raw["seed"].get<std::uint64_t>() != opt.seed) {
            std::cerr << "gen: --seed " << opt.seed << " conflicts with config seed "
                      << raw["seed"].get<std::uint64_t>() << "\n";
            return kExitUsage;
        }
        cfg.seed = opt.seed;
    }

    try {
        const emorep::Dataset ds = emorep::synthesize_dataset(cfg);
        const fs::path manifest = emorep::save_dataset(ds, opt.out_dir);
        write_file(fs::path(opt.out_dir) / "synth_config.json",
                   emorep::synth_config_to_json(cfg) + "\n");
        std::cout << "wrote " << manifest.string() << " (" << ds.clips.size() << " clips, "
                  << ds.sequences.size() << " sequences)\n";
    } catch (const std::exception& e) {
        std::cerr << "gen: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

struct RunOptions {
    std::string manifest_path;
    std::string synth_path;
    std::string method = "emotion";
    int codebook_size = 0;  // 0: source-dependent default
    double lambda = 0.01;
    double latent_lambda = 5.0;  // the latent hinge is summed, not averaged, so its
                                 // regularizer lives on a larger scale than --lambda
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir;
    double sample_fraction = 0.25;
    int svm_epochs = 200;
    int outer_iters = 10;
    int inner_epochs = 20;
    std::string init_mode = "inherit";
    std::string latent_predict = "max";
};

int cmd_run(const RunOptions& opt) {
    emorep::ExperimentConfig cfg;
    emorep::Dataset ds;
    json source;
    try {
        cfg.method = emorep::method_from_string(opt.method);
        if (!opt.synth_path.empty()) {
            const emorep::SynthConfig synth = emorep::load_synth_config(opt.synth_path);
            ds = emorep::synthesize_dataset(synth);
            source["synth"] = json::parse(emorep::synth_config_to_json(synth));
        } else {
            ds = emorep::load_manifest(opt.manifest_path);
            source["manifest"] = opt.manifest_path;
        }
        cfg.codebook_size =
            opt.codebook_size > 0 ? opt.codebook_size : (!opt.synth_path.empty() ? 64 : 1000);
        cfg.codebook_sample_fraction = opt.sample_fraction;
        cfg.svm.lambda = opt.lambda;
        cfg.svm.epochs = opt.svm_epochs;
        cfg.latent.lambda = opt.latent_lambda;
        cfg.latent.outer_iters = opt.outer_iters;
        cfg.latent.inner.epochs = opt.inner_epochs;
        if (opt.init_mode == "inherit")
            cfg.latent.init_mode = emorep::LatentConfig::Init::BehaviorInherited;
        else if (opt.init_mode == "bank")
            cfg.latent.init_mode = emorep::LatentConfig::Init::BankPredicted;
        else
            throw emorep::Error("unknown --init '" + opt.init_mode + "' (inherit|bank)");
        if (opt.latent_predict == "max")
            cfg.latent_predict = emorep::LatentPredictMode::MaxInference;
        else if (opt.latent_predict == "fixed")
            cfg.latent_predict = emorep::LatentPredictMode::FixedEmotion;
        else
            throw emorep::Error("unknown --latent-predict '" + opt.latent_predict +
                                "' (max|fixed)");
        cfg.seed = opt.seed;
        cfg.threads = opt.threads;
    } catch (const std::exception& e) {
        std::cerr << "run: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        emorep::ExperimentReport report = emorep::run_experiment(ds, cfg);
        json snapshot = json::parse(report.config_json);
        snapshot["source"] = source;
        report.config_json = snapshot.dump();

        fs::create_directories(opt.out_dir);
        write_file(fs::path(opt.out_dir) / "report.json",
                   emorep::report_to_json(report) + "\n");
        write_file(fs::path(opt.out_dir) / "report.txt", emorep::report_to_text(report));
        write_file(fs::path(opt.out_dir) / "confusion.csv",
                   emorep::confusion_to_csv(report.confusion));

        // exit 0 only for a report that parses back against its schema
        const auto check =
            emorep::report_from_json(read_file(fs::path(opt.out_dir) / "report.json"));
        if (check.schema != 1 || check.per_fold.empty())
            throw emorep::Error("written report failed schema validation");

        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * report.average_accuracy);
        std::cout << "average accuracy: " << buf << "%\n";
    } catch (const std::exception& e) {
        std::cerr << "run: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

struct CompareOptions {
    std::vector<std::string> report_paths;
    std::string expect_order;
    double min_gap = 0.0;  // accuracy points required between adjacent methods
};

int cmd_compare(const CompareOptions& opt) {
    if (opt.report_paths.size() < 2) {
        std::cerr << "compare: need at least 2 reports\n";
        return kExitUsage;
    }
    std::vector<emorep::ExperimentReport> reports;
    try {
        for (const auto& path : opt.report_paths)
            reports.push_back(emorep::report_from_json(read_file(path)));
    } catch (const std::exception& e) {
        std::cerr << "compare: " << e.what() << "\n";
        return kExitRuntime;
    }

    // class sets may disagree between reports; fall back to the intersection
    std::set<std::string> shared;
    for (const auto& [cls, recall] : reports.front().per_class_recall) shared.insert(cls);
    bool mismatch = false;
    for (const auto& r : reports) {
        std::set<std::string> classes;
        for (const auto& [cls, recall] : r.per_class_recall) classes.insert(cls);
        if (classes != shared) mismatch = true;
        std::set<std::string> inter;
        for (const auto& c : shared)
            if (classes.count(c)) inter.insert(c);
        shared = inter;
    }
    if (mismatch)
        std::cerr << "compare: warning: reports have mismatched class sets; comparing the "
                     "intersection ("
                  << shared.size() << " classes)\n";

    auto accuracy_of = [&](const emorep::ExperimentReport& r) {
        if (!mismatch) return r.average_accuracy;
        double sum = 0.0;
        for (const auto& c : shared) sum += r.per_class_recall.at(c);
        return shared.empty() ? 0.0 : sum / static_cast<double>(shared.size());
    };

    std::printf("%-12s %-10s %10s %10s\n", "method", "seed", "avg-acc%", "micro%");
    std::map<std::string, std::pair<double, int>> by_method;  // sum, count
    for (const auto& r : reports) {
        const double acc = accuracy_of(r);
        std::printf("%-12s %-10llu %10.2f %10.2f\n", r.method.c_str(),
                    static_cast<unsigned long long>(r.seed), 100.0 * acc,
                    100.0 * r.micro_accuracy);
        by_method[r.method].first += acc;
        by_method[r.method].second += 1;
    }

    if (!opt.expect_order.empty()) {
        // "a>=b>=c": mean accuracy of each method must exceed the next by
        // min_gap points (negative min_gap allows a bounded shortfall)
        std::vector<std::string> methods;
        std::string rest = opt.expect_order;
        std::size_t pos;
        while ((pos = rest.find(">=")) != std::string::npos) {
            methods.push_back(rest.substr(0, pos));
            rest = rest.substr(pos + 2);
        }
        methods.push_back(rest);
        if (methods.size() < 2) {
            std::cerr << "compare: --expect-order needs at least two methods\n";
            return kExitUsage;
        }
        for (const auto& m : methods)
            if (!by_method.count(m)) {
                std::cerr << "compare: --expect-order method '" << m << "' has no report\n";
                return kExitUsage;
            }
        auto mean_pct = [&](const std::string& m) {
            return 100.0 * by_method[m].first / by_method[m].second;
        };
        for (std::size_t i = 0; i + 1 < methods.size(); ++i) {
            const double left = mean_pct(methods[i]);
            const double right = mean_pct(methods[i + 1]);
            if (left - right < opt.min_gap) {
                std::printf("ordering VIOLATED: %s (%.2f) vs %s (%.2f), gap %.2f < %.2f\n",
                            methods[i].c_str(), left, methods[i + 1].c_str(), right,
                            left - right, opt.min_gap);
                return kExitRuntime;
            }
        }
        std::printf("ordering holds: %s (min gap %.2f)\n", opt.expect_order.c_str(),
                    opt.min_gap);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emotion-attribute crowd behavior classification"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
    gen_cmd->add_option("--config", gen.config_path, "synthetic config JSON")->required();
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    auto* gen_seed = gen_cmd->add_option("--seed", gen.seed, "override config seed");

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "run a leave-one-sequence-out experiment");
    auto* run_manifest = run_cmd->add_option("--manifest", run.manifest_path, "dataset manifest CSV");
    auto* run_synth = run_cmd->add_option("--synth", run.synth_path, "synthetic config JSON");
    run_manifest->excludes(run_synth);
    run_cmd->add_option("--method", run.method, "lowlevel|aware|emotion|latent")->required();
    run_cmd->add_option("--codebook-size", run.codebook_size,
                        "visual words per channel (default 1000, synthetic 64)");
    run_cmd->add_option("--lambda", run.lambda, "SVM regularization");
    run_cmd->add_option("--latent-lambda", run.latent_lambda,
                        "latent model regularization (summed hinge scale)");
    run_cmd->add_option("--seed", run.seed, "experiment seed");
    run_cmd->add_option("--threads", run.threads, "fold-level parallelism (0 = all cores)");
    run_cmd->add_option("--out", run.out_dir, "output directory")->required();
    run_cmd->add_option("--sample-fraction", run.sample_fraction,
                        "descriptor fraction for codebook clustering");
    run_cmd->add_option("--svm-epochs", run.svm_epochs, "SVM optimizer pass budget");
    run_cmd->add_option("--outer-iters", run.outer_iters, "latent coordinate-descent iterations");
    run_cmd->add_option("--inner-epochs", run.inner_epochs, "latent inner subgradient epochs");
    run_cmd->add_option("--init", run.init_mode, "latent init: inherit|bank");
    run_cmd->add_option("--latent-predict", run.latent_predict, "latent test scoring: max|fixed");

    CompareOptions cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "tabulate reports side by side");
    cmp_cmd->add_option("reports", cmp.report_paths, "report.json paths")->expected(-1);
    cmp_cmd->add_option("--expect-order", cmp.expect_order,
                        "fail unless mean accuracies satisfy 'a>=b>=c'");
    cmp_cmd->add_option("--min-gap", cmp.min_gap,
                        "accuracy points required between adjacent methods (may be negative)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (gen_cmd->parsed()) {
        gen.seed_given = gen_seed->count() > 0;
        return cmd_gen(gen);
    }
    if (run_cmd->parsed()) {
        if (run.manifest_path.empty() == run.synth_path.empty()) {
            std::cerr << "run: exactly one of --manifest or --synth is required\n";
            return kExitUsage;
        }
        return cmd_run(run);
    }
    if (cmp_cmd->parsed()) return cmd_compare(cmp);
    return kExitUsage;
}
