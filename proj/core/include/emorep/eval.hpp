#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "emorep/bow.hpp"
#include "emorep/dataset.hpp"
#include "emorep/emotion.hpp"
#include "emorep/latent.hpp"
#include "emorep/svm.hpp"

namespace emorep {

struct Fold {
    std::string test_sequence;
    std::vector<std::string> train_sequences;
};

struct FoldPlan {
    std::vector<Fold> folds;  // one per sequence, ordered by sequence id
};

// Leave-one-sequence-out plan: every sequence is the test set exactly once and
// never appears in its own training set. Requires at least two sequences.
FoldPlan loso_splits(const Dataset& ds);

struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<long long>> counts;    // counts[truth][pred]
    std::vector<std::vector<double>> row_percent;  // rows with samples sum to 100
};

// truth/pred are indices into order.
ConfusionMatrix confusion_matrix(const std::vector<int>& truth, const std::vector<int>& pred,
                                 const std::vector<std::string>& order);

// Class-averaged (macro) accuracy: unweighted mean of per-class recall over
// the classes present in truth.
double average_accuracy(const std::vector<int>& truth, const std::vector<int>& pred);

// Plain fraction correct.
double micro_accuracy(const std::vector<int>& truth, const std::vector<int>& pred);

struct AgreementResult {
    double overall_agreement = 0.0;  // mean pairwise raw agreement
    double kappa = 0.0;              // Cohen for 2 annotators, Fleiss for more
};

// annotations: N clips x M annotators, M >= 2 and constant across clips.
AgreementResult agreement(const std::vector<std::vector<EmotionLabel>>& annotations);

// For each unordered label pair, the fraction of disagreeing annotator pairs
// whose two labels are exactly that pair. All zeros when nobody disagrees.
std::map<std::pair<EmotionLabel, EmotionLabel>, double> pairwise_confusability(
    const std::vector<std::vector<EmotionLabel>>& annotations);

enum class Method { LowLevel, EmotionAware, EmotionBased, Latent };

std::string to_string(Method m);
Method method_from_string(const std::string& s);  // lowlevel|aware|emotion|latent

struct ExperimentConfig {
    Method method = Method::EmotionBased;
    int codebook_size = 64;
    double codebook_sample_fraction = 0.25;
    int kmeans_max_iter = 50;
    double kmeans_tol = 1e-4;
    bool combine_channels = true;
    TrainConfig svm;
    LatentConfig latent;
    LatentPredictMode latent_predict = LatentPredictMode::MaxInference;
    std::uint64_t seed = 1;
    int threads = 1;
};

// Everything fitted on one fold's training data. Exposed so tests can check
// train/test hygiene by fingerprint comparison.
struct FoldModels {
    std::vector<Codebook> codebooks;
    EmotionClassifierBank bank;
    MultiClassModel behavior_model;
    LatentModelSet latent_models;
    // latent method only: per-dimension feature scaling fitted on train, so
    // histogram entries and classifier scores share a scale inside the model
    std::vector<double> feature_scale;

    std::string fingerprint() const;  // serialization of all fitted state
};

// Fits every component the method needs, from train clips only.
FoldModels fit_fold(const Dataset& train, const ExperimentConfig& cfg,
                    std::uint64_t fold_seed);

struct FoldResult {
    std::string test_sequence;
    double accuracy = 0.0;  // fraction correct within the fold
    int n_test = 0;
};

struct ExperimentReport {
    int schema = 1;
    std::string method;
    std::uint64_t seed = 0;
    std::vector<FoldResult> per_fold;
    double average_accuracy = 0.0;  // class-averaged over pooled predictions (primary)
    double micro_accuracy = 0.0;    // pooled fraction correct
    std::map<std::string, double> per_class_recall;
    ConfusionMatrix confusion;
    // latent method only: per true class, mean inferred configuration bits
    std::vector<std::vector<double>> emotion_usage;
    std::string config_json;  // snapshot of the resolved configuration
};

// Runs the full leave-one-sequence-out protocol: per fold, fits codebooks,
// banks, and models on the training sequences only, predicts the held-out
// sequence, then pools. Deterministic given cfg.seed; folds may execute in
// parallel (cfg.threads) without changing the report.
ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg);

std::string experiment_config_to_json(const ExperimentConfig& cfg);

std::string report_to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const std::string& text);
std::string report_to_text(const ExperimentReport& r);
std::string confusion_to_csv(const ConfusionMatrix& cm);

}  // namespace emorep
