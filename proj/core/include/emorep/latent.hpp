#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "emorep/dataset.hpp"
#include "emorep/emotion.hpp"
#include "emorep/svm.hpp"

namespace emorep {

// Per-behavior-class weights of the latent-emotion model. The score of a
// configuration e on input x decomposes into a raw-feature template term, a
// per-emotion term over [emotion score, 1], and a pairwise co-occurrence term
// over the four joint states of each unordered emotion pair.
struct LatentWeights {
    std::vector<double> feature_weights;                 // over raw feature dim
    std::vector<std::array<double, 2>> emotion_weights;  // K x [score, presence]
    // unordered pairs l < m, 4 joint states indexed 2*e_l + e_m
    std::vector<std::array<double, 4>> pair_weights;
    int emotion_count = 0;

    static int pair_count(int k) { return k * (k - 1) / 2; }
    static int pair_index(int l, int m, int k);  // requires l < m

    static LatentWeights zeros(int feature_dim, int k);
    double squared_norm() const;
};

// The three feature blocks for one (x, e):
//   raw           = x
//   per_emotion_l = e_l * [s_l(x), 1]
//   per_pair      = one-hot over the 4 joint states of each pair l < m
struct JointFeature {
    std::vector<double> raw;
    std::vector<std::array<double, 2>> per_emotion;
    std::vector<std::array<double, 4>> per_pair;
};

struct LatentConfig {
    double lambda = 0.01;
    int outer_iters = 10;
    TrainConfig inner;  // inner subgradient phase: epochs, seed
    enum class Init { BehaviorInherited, BankPredicted };
    Init init_mode = Init::BehaviorInherited;
    // Ablation switches: freeze_pairwise keeps the pairwise table at zero;
    // freeze_latents keeps every example's configuration fixed at its
    // initialization (reducing training to a plain linear SVM on the induced
    // features).
    bool freeze_pairwise = false;
    bool freeze_latents = false;
    int threads = 1;
};

struct LatentModelSet {
    std::vector<LatentWeights> per_class;  // behavior class order
    std::vector<std::string> class_order;
    EmotionClassifierBank bank;  // supplies the emotion scores s_l(x)
    double lambda = 0.01;
    // recorded objective after each outer iteration, per class; non-increasing
    std::vector<std::vector<double>> outer_objectives;
};

enum class LatentPredictMode {
    MaxInference,  // score = max over all configurations (default)
    FixedEmotion,  // configuration fixed to thresholded bank scores
};

struct LatentPrediction {
    int class_index = 0;
    std::vector<double> scores;                 // per class
    std::vector<EmotionVector> configurations;  // per class best/used e
};

JointFeature joint_feature(const std::vector<double>& x, const EmotionVector& e,
                           const EmotionClassifierBank& bank);

double dot(const LatentWeights& w, const JointFeature& f);

// Sum of the three terms; equals dot(w, joint_feature(x, e, bank)).
double score_configuration(const LatentWeights& w, const std::vector<double>& x,
                           const EmotionVector& e, const EmotionClassifierBank& bank);

// Exact argmax over all 2^K binary configurations, by enumeration; ties go to
// the lexicographically smallest configuration. Enumeration is the normative
// semantics here: any message-passing variant must match it exactly, and K is
// capped at 20.
std::pair<EmotionVector, double> infer_best_emotions(const LatentWeights& w,
                                                     const std::vector<double>& x,
                                                     const EmotionClassifierBank& bank);

// One-vs-all latent SVM over behavior classes: per class, coordinate descent
// alternates (a) re-inferring the latent configuration of each positive
// example under the current weights with (b) an incumbent-tracked subgradient
// pass over the hinge objective in which negatives keep the inner max over
// configurations. The recorded outer objective is non-increasing. Throws on a
// class with no examples or a non-finite objective.
LatentModelSet train_latent(const Dataset& encoded, const EmotionClassifierBank& bank,
                            const LatentConfig& cfg);

// Per class, score = max over configurations (or the fixed-emotion score);
// argmax class wins, ties to lowest class index.
LatentPrediction predict_latent(const LatentModelSet& models, const std::vector<double>& x,
                                LatentPredictMode mode = LatentPredictMode::MaxInference);

// JSON: per class { "w_x": [...], "w_e": [[a,b] x K], "w_pair": { "l,m": [4] } }
// plus lambda and a schema version; the bank is embedded.
std::string latent_to_json(const LatentModelSet& models);
LatentModelSet latent_from_json(const std::string& text);

}  // namespace emorep
