// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "emorep/bow.hpp"
#include "emorep/dataset.hpp"
#include "emorep/emotion.hpp"
#include "emorep/eval.hpp"
#include "emorep/latent.hpp"
#include "emorep/manifest.hpp"
#include "emorep/rng.hpp"
#include "emorep/svm.hpp"
#include "emorep/synth.hpp"

using namespace emorep;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", number,
                name.c_str(), detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

EmotionClassifierBank random_bank(int dim, std::uint64_t seed) {
    Rng rng(seed);
    EmotionClassifierBank bank;
    bank.classifiers.resize(kEmotionCount);
    for (auto& m : bank.classifiers) {
        m.w.resize(dim);
        for (auto& v : m.w) v = rng.gaussian();
        m.b = rng.gaussian();
    }
    return bank;
}

LatentWeights random_weights(int dim, std::uint64_t seed) {
    Rng rng(seed);
    LatentWeights w = LatentWeights::zeros(dim, kEmotionCount);
    for (auto& v : w.feature_weights) v = rng.gaussian();
    for (auto& e : w.emotion_weights) e = {rng.gaussian(), rng.gaussian()};
    for (auto& p : w.pair_weights)
        p = {rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian()};
    return w;
}

// ---------------------------------------------------------------- criterion 1
void criterion_inference_oracle() {
    const auto start = std::chrono::steady_clock::now();
    const int dim = 8;
    const auto bank = random_bank(dim, 2024);
    Rng rng(11);

    int mismatches = 0;
    double worst_gap = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const LatentWeights w = random_weights(dim, 5000 + trial);
        std::vector<double> x(dim);
        for (auto& v : x) v = rng.gaussian();

        const auto [e, value] = infer_best_emotions(w, x, bank);

        // independent oracle: enumerate all 64 configurations through the
        // public joint-feature dot product
        EmotionVector best_e(kEmotionCount);
        double best = -std::numeric_limits<double>::infinity();
        for (std::uint32_t mask = 0; mask < 64; ++mask) {
            EmotionVector cand(kEmotionCount);
            for (int l = 0; l < kEmotionCount; ++l)
                cand.set(l, (mask >> (kEmotionCount - 1 - l)) & 1u);
            const double s = dot(w, joint_feature(x, cand, bank));
            if (s > best || (s == best && cand.lex_less(best_e))) {
                best = s;
                best_e = cand;
            }
        }
        if (!(e == best_e)) ++mismatches;
        worst_gap = std::max(worst_gap, std::abs(value - best));
    }
    const double elapsed = seconds_since(start);

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "1000 instances, %d argmax mismatches, max score gap %.2e, %.2fs (< 10s)",
                  mismatches, worst_gap, elapsed);
    report(1, "latent inference equals exhaustive enumeration",
           mismatches == 0 && worst_gap <= 1e-9 && elapsed < 10.0, detail);
}

// ---------------------------------------------------------------- criterion 2
void criterion_coordinate_descent_monotonicity() {
    bool monotone = true;
    int histories = 0;
    double worst_rise = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthConfig sc;
        sc.n_sequences = 6;
        sc.clips_per_sequence = 20;
        sc.behavior_to_emotion = mediated_behavior_emotion_table(5, 6, 0.8);
        sc.mean_separation = 2.0;
        sc.noise_scale = 1.0;
        sc.descriptor_dim = 12;
        sc.descriptors_per_clip = 6;
        sc.seed = seed;
        const Dataset ds = synthesize_dataset(sc);
        const auto sample = sample_descriptors(ds, "synthetic", 1.0, seed);
        const Codebook cb = build_codebook(sample, 12, seed, 40, 1e-4);
        const Dataset enc = encode_dataset(ds, {cb});

        TrainConfig bank_cfg;
        bank_cfg.epochs = 80;
        bank_cfg.seed = seed;
        const EmotionClassifierBank bank = train_emotion_bank(enc, bank_cfg);

        LatentConfig lc;
        lc.lambda = 1.0;
        lc.outer_iters = 8;
        lc.inner.epochs = 12;
        lc.inner.seed = seed;
        const LatentModelSet models = train_latent(enc, bank, lc);
        for (const auto& history : models.outer_objectives) {
            ++histories;
            for (std::size_t t = 1; t < history.size(); ++t) {
                const double rise = history[t] - history[t - 1];
                worst_rise = std::max(worst_rise, rise);
                if (rise > 0.0) monotone = false;
            }
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "5 datasets x 5 classes (%d histories, 8 outer iterations), worst rise %.2e",
                  histories, worst_rise);
    report(2, "coordinate-descent outer objective non-increasing", monotone, detail);
}

// ---------------------------------------------------------------- criterion 3
void criterion_svm_convexity() {
    Rng data_rng(7);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int i = 0; i < 100; ++i) {  // 200 points, margin 2 along x
        xs.push_back({-1.0 + 0.25 * data_rng.gaussian(), data_rng.gaussian()});
        ys.push_back(-1);
        xs.push_back({1.0 + 0.25 * data_rng.gaussian(), data_rng.gaussian()});
        ys.push_back(+1);
    }
    TrainConfig cfg;
    cfg.lambda = 0.01;
    cfg.epochs = 3000;
    cfg.tol = 1e-10;
    const LinearModel m = train_binary(xs, ys, cfg);

    int errors = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if ((score(m, xs[i]) >= 0 ? 1 : -1) != ys[i]) ++errors;

    const double at_solution = svm_objective(xs, ys, cfg.lambda, m.w, m.b);
    Rng rng(99);
    int violations = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        double d0 = rng.gaussian(), d1 = rng.gaussian(), d2 = rng.gaussian();
        const double norm = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
        const double r = 0.1 * std::cbrt(rng.uniform01());
        d0 *= r / norm;
        d1 *= r / norm;
        d2 *= r / norm;
        const std::vector<double> w = {m.w[0] + d0, m.w[1] + d1};
        const double perturbed = svm_objective(xs, ys, cfg.lambda, w, m.b + d2);
        const double gap = at_solution - perturbed;  // positive would mean not minimal
        worst = std::max(worst, gap);
        if (gap > 1e-4) ++violations;
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "10^4 perturbations (|d| <= 0.1): %d beat the solution by > 1e-4 "
                  "(worst gap %.2e); training errors %d",
                  violations, worst, errors);
    report(3, "SVM objective is at the convex minimum", violations == 0 && errors == 0,
           detail);
}

// ------------------------------------------------------- criteria 4, 5 and 6
struct SuiteAccumulator {
    double aware = 0, lowlevel = 0, emotion = 0, latent = 0;
};

SynthConfig ordering_config(std::uint64_t seed, bool uniform_table) {
    SynthConfig sc;
    sc.n_sequences = 31;
    sc.clips_per_sequence = 50;
    sc.behavior_to_emotion = uniform_table ? uniform_behavior_emotion_table(5, 6)
                                           : mediated_behavior_emotion_table(5, 6, 0.8);
    sc.mean_separation = 1.0;
    sc.noise_scale = 1.0;
    sc.descriptor_dim = 32;
    sc.descriptors_per_clip = 7;
    sc.seed = seed;
    return sc;
}

ExperimentConfig suite_config(Method method, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.method = method;
    cfg.codebook_size = 64;
    cfg.codebook_sample_fraction = 0.1;
    cfg.kmeans_max_iter = 50;
    cfg.kmeans_tol = 1e-4;
    cfg.svm.lambda = 0.01;
    cfg.svm.epochs = 120;
    cfg.latent.lambda = 5.0;
    cfg.latent.outer_iters = 5;
    cfg.latent.inner.epochs = 20;
    cfg.seed = seed;
    cfg.threads = 2;
    return cfg;
}

void criteria_method_ordering(SuiteAccumulator& mean) {
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset ds = synthesize_dataset(ordering_config(seed, false));
        mean.aware +=
            run_experiment(ds, suite_config(Method::EmotionAware, seed)).average_accuracy;
        mean.lowlevel +=
            run_experiment(ds, suite_config(Method::LowLevel, seed)).average_accuracy;
        mean.emotion +=
            run_experiment(ds, suite_config(Method::EmotionBased, seed)).average_accuracy;
    }
    mean.aware *= 20.0;  // 100 / 5 seeds -> accuracy points
    mean.lowlevel *= 20.0;
    mean.emotion *= 20.0;
    const double elapsed = seconds_since(start);

    const bool ordered = mean.aware >= mean.emotion && mean.emotion >= mean.lowlevel;
    const bool margin = mean.aware - mean.lowlevel >= 15.0;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "mean over 5 seeds: aware %.2f >= emotion %.2f >= lowlevel %.2f; "
                  "aware-lowlevel %.2f (>= 15); %.0fs (< 300s)",
                  mean.aware, mean.emotion, mean.lowlevel, mean.aware - mean.lowlevel,
                  elapsed);
    report(4, "method ordering on emotion-mediated data",
           ordered && margin && elapsed < 300.0, detail);
}

void criterion_latent_parity(SuiteAccumulator& mean) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset ds = synthesize_dataset(ordering_config(seed, false));
        mean.latent +=
            run_experiment(ds, suite_config(Method::Latent, seed)).average_accuracy;
    }
    mean.latent *= 20.0;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "latent %.2f vs emotion %.2f (allowed shortfall 2.00, actual %+.2f)",
                  mean.latent, mean.emotion, mean.latent - mean.emotion);
    report(5, "latent method within 2 points of the emotion pipeline",
           mean.latent >= mean.emotion - 2.0, detail);
}

void criterion_information_free_control() {
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset ds = synthesize_dataset(ordering_config(seed, true));
        mean += run_experiment(ds, suite_config(Method::EmotionBased, seed)).average_accuracy;
    }
    mean *= 20.0;
    char detail[120];
    std::snprintf(detail, sizeof(detail),
                  "uniform behavior-to-emotion table: emotion accuracy %.2f in [15, 25]",
                  mean);
    report(6, "information-free control sits at chance", mean >= 15.0 && mean <= 25.0,
           detail);
}

// ---------------------------------------------------------------- criterion 7
void criterion_protocol_invariants() {
    std::string why;

    const Dataset ds31 = synthesize_dataset(ordering_config(77, false));
    const FoldPlan plan = loso_splits(ds31);
    if (plan.folds.size() != 31) why += "fold count != 31; ";
    std::set<std::string> tested;
    for (const auto& fold : plan.folds) {
        if (!tested.insert(fold.test_sequence).second) why += "sequence tested twice; ";
        for (const auto& s : fold.train_sequences)
            if (s == fold.test_sequence) why += "test in train; ";
        if (fold.train_sequences.size() + 1 != ds31.sequences.size())
            why += "fold does not cover all sequences; ";
    }
    if (tested != ds31.sequences) why += "not every sequence tested; ";

    // confusion row sums on a real (small) experiment
    SynthConfig small = ordering_config(3, false);
    small.n_sequences = 5;
    small.clips_per_sequence = 12;
    const Dataset ds = synthesize_dataset(small);
    ExperimentConfig cfg = suite_config(Method::EmotionAware, 3);
    const ExperimentReport rep = run_experiment(ds, cfg);
    for (std::size_t i = 0; i < rep.confusion.labels.size(); ++i) {
        long long row = 0;
        double pct = 0;
        for (std::size_t j = 0; j < rep.confusion.labels.size(); ++j) {
            row += rep.confusion.counts[i][j];
            pct += rep.confusion.row_percent[i][j];
        }
        if (row > 0 && std::abs(pct - 100.0) > 1e-9) why += "row percent sum off; ";
    }

    // fold hygiene: fitting from the full dataset's training split equals
    // fitting from a dataset in which the test fold never existed
    {
        ExperimentConfig hcfg = suite_config(Method::EmotionBased, 5);
        hcfg.codebook_size = 8;
        hcfg.codebook_sample_fraction = 1.0;
        const Fold fold = loso_splits(ds).folds[0];
        auto train_only = [&](const Dataset& source) {
            Dataset train;
            train.emotion_count = source.emotion_count;
            train.behavior_count = source.behavior_count;
            for (const auto& clip : source.clips)
                if (clip.sequence_id != fold.test_sequence) {
                    train.clips.push_back(clip);
                    train.sequences.insert(clip.sequence_id);
                }
            return train;
        };
        Dataset pruned = ds;
        std::erase_if(pruned.clips, [&](const ClipRecord& c) {
            return c.sequence_id == fold.test_sequence;
        });
        pruned.sequences.erase(fold.test_sequence);
        const std::string a = fit_fold(train_only(ds), hcfg, 404).fingerprint();
        const std::string b = fit_fold(train_only(pruned), hcfg, 404).fingerprint();
        if (a != b || a.empty()) why += "fold hygiene fingerprints differ; ";
    }

    report(7, "protocol invariants (folds, confusion rows, hygiene)", why.empty(),
           why.empty() ? "31 folds exact-once/disjoint; rows sum to 100 +- 1e-9; "
                         "hygiene hash equal"
                       : why);
}

// ---------------------------------------------------------------- criterion 8
void criterion_agreement_metrics() {
    using E = EmotionLabel;
    std::string why;

    std::vector<std::vector<E>> perfect(50, {E::Excited, E::Excited, E::Excited});
    perfect[7] = {E::Sad, E::Sad, E::Sad};
    if (agreement(perfect).kappa != 1.0) why += "perfect agreement kappa != 1; ";

    Rng rng(2718);
    std::vector<std::vector<E>> uniform;
    for (int i = 0; i < 10000; ++i)
        uniform.push_back({static_cast<E>(rng.below(6)), static_cast<E>(rng.below(6))});
    const double kappa_uniform = agreement(uniform).kappa;
    if (std::abs(kappa_uniform) > 0.05) why += "independent-uniform kappa too large; ";

    // documented 2x2 example: a=20, d=15, b=5, c=10 -> kappa = 0.4 exactly
    std::vector<std::vector<E>> table;
    for (int i = 0; i < 20; ++i) table.push_back({E::Happy, E::Happy});
    for (int i = 0; i < 15; ++i) table.push_back({E::Sad, E::Sad});
    for (int i = 0; i < 5; ++i) table.push_back({E::Happy, E::Sad});
    for (int i = 0; i < 10; ++i) table.push_back({E::Sad, E::Happy});
    const double kappa_cohen = agreement(table).kappa;
    if (std::abs(kappa_cohen - 0.4) > 1e-9) why += "Cohen closed form mismatch; ";

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "perfect kappa = 1 exactly; uniform 10^4 kappa %.4f (|.| <= 0.05); "
                  "2x2 closed form %.12f (0.4 +- 1e-9)",
                  kappa_uniform, kappa_cohen);
    report(8, "agreement metrics", why.empty(), why.empty() ? detail : why);
}

// ---------------------------------------------------------------- criterion 9
void criterion_kmeans_and_quantization() {
    std::string why;

    SynthConfig sc = ordering_config(5, false);
    sc.n_sequences = 6;
    sc.clips_per_sequence = 30;
    const Dataset ds = synthesize_dataset(sc);
    const auto sample = sample_descriptors(ds, "synthetic", 1.0, 3);
    KMeansStats stats;
    const Codebook cb = build_codebook(sample, 64, 9, 60, 1e-6, &stats);
    for (std::size_t i = 1; i < stats.distortion_history.size(); ++i)
        if (stats.distortion_history[i] > stats.distortion_history[i - 1])
            why += "distortion increased; ";

    // 1e5 random descriptors against the brute-force nearest-centroid scan
    Rng rng(31337);
    int mismatches = 0;
    for (int i = 0; i < 100000; ++i) {
        std::vector<double> x(cb.dim);
        for (auto& v : x) v = 2.0 * rng.gaussian();
        const int got = nearest_centroid(cb, x);
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < cb.d; ++c) {
            double dist = 0;
            for (int j = 0; j < cb.dim; ++j) {
                const double t = x[j] - cb.centroids[c][j];
                dist += t * t;
            }
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        if (got != best) ++mismatches;
    }
    if (mismatches > 0) why += std::to_string(mismatches) + " assignment mismatches; ";

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "%zu-step distortion history non-increasing; 10^5 assignments match "
                  "brute force exactly",
                  stats.distortion_history.size());
    report(9, "k-means distortion and quantization oracle", why.empty(),
           why.empty() ? detail : why);
}

// --------------------------------------------------------------- criterion 10
void criterion_cli_determinism(const std::string& cli) {
    const fs::path dir = fs::temp_directory_path() / "emorep_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "synth.json");
        cfg << R"({"n_sequences": 5, "clips_per_sequence": 12, "behavior_to_emotion": )"
            << R"("mediated", "mean_separation": 1.5, "noise_scale": 1.0, )"
            << R"("descriptor_dim": 12, "descriptors_per_clip": 6, "seed": 17})";
    }
    const std::string flags = " run --synth " + (dir / "synth.json").string() +
                              " --method emotion --seed 21 --codebook-size 16 "
                              "--sample-fraction 0.5 --svm-epochs 80";
    const int rc1 = std::system(
        (cli + flags + " --out " + (dir / "a").string() + " > /dev/null 2>&1").c_str());
    const int rc2 = std::system(
        (cli + flags + " --out " + (dir / "b").string() + " > /dev/null 2>&1").c_str());

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    const std::string a = slurp(dir / "a" / "report.json");
    const std::string b = slurp(dir / "b" / "report.json");
    const bool pass =
        WEXITSTATUS(rc1) == 0 && WEXITSTATUS(rc2) == 0 && !a.empty() && a == b;
    char detail[120];
    std::snprintf(detail, sizeof(detail),
                  "two identical runs: exit %d/%d, report.json byte-identical: %s",
                  WEXITSTATUS(rc1), WEXITSTATUS(rc2), a == b ? "yes" : "no");
    report(10, "CLI reruns are byte-identical", pass, detail);
    fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = EMOREP_CLI_PATH;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--cli") cli = argv[i + 1];

    std::printf("acceptance suite (tolerances fixed in code)\n");
    const auto start = std::chrono::steady_clock::now();

    criterion_inference_oracle();
    criterion_coordinate_descent_monotonicity();
    criterion_svm_convexity();

    SuiteAccumulator means;
    criteria_method_ordering(means);
    criterion_latent_parity(means);
    criterion_information_free_control();

    criterion_protocol_invariants();
    criterion_agreement_metrics();
    criterion_kmeans_and_quantization();
    criterion_cli_determinism(cli);

    std::printf("%d/10 criteria passed in %.0fs\n", 10 - g_failures,
                seconds_since(start));
    return g_failures == 0 ? 0 : 1;
}
