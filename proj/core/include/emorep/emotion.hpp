#pragma once

#include <string>
#include <utility>
#include <vector>

#include "emorep/dataset.hpp"
#include "emorep/svm.hpp"

namespace emorep {

// K binary emotion classifiers in fixed EmotionLabel order. Classifier k is
// trained with the clips whose emotion bit k is set as positives, pooled
// across all behavior classes.
struct EmotionClassifierBank {
    std::vector<LinearModel> classifiers;
    std::vector<std::string> warnings;  // degenerate classes, one line each

    int emotion_count() const { return static_cast<int>(classifiers.size()); }
    int feature_dim() const;
};

// K-dim vector of emotion-classifier confidence scores (raw signed margins).
using EmotionScores = std::vector<double>;

// The decomposed behavior classifier: emotion scores as the mid-level
// representation, a multi-class model over them on top.
struct EmotionPipeline {
    EmotionClassifierBank bank;
    MultiClassModel behavior_model;  // feature dim = K
};

// An emotion with no positive examples yields a constant-negative classifier
// (and no negatives a constant-positive one); both are flagged in warnings
// rather than failing, since a leave-one-sequence-out fold can drop a class.
EmotionClassifierBank train_emotion_bank(const Dataset& encoded, const TrainConfig& cfg);

// scores[k] = classifier k's signed margin on x, in fixed emotion order.
EmotionScores emotion_representation(const std::vector<double>& x,
                                     const EmotionClassifierBank& bank);

EmotionPipeline train_behavior_on_emotion(const Dataset& encoded,
                                          const EmotionClassifierBank& bank,
                                          const TrainConfig& cfg);

// Exactly predict(behavior_model, emotion_representation(x, bank)).
std::pair<BehaviorLabel, std::vector<double>> classify(const EmotionPipeline& p,
                                                       const std::vector<double>& x);

// Ground-truth one-hot emotion as a real feature vector; rejects multi-hot
// input (ground-truth annotations are single-label).
std::vector<double> emotion_aware_feature(const EmotionVector& e);

// Behavior classifier over ground-truth emotion features. By protocol this
// model consumes ground-truth emotion at test time as well.
MultiClassModel train_emotion_aware(const Dataset& ds, const TrainConfig& cfg);

// Versioned JSON ("schema": 1) combining bank and behavior model.
std::string pipeline_to_json(const EmotionPipeline& p);
EmotionPipeline pipeline_from_json(const std::string& text);

}  // namespace emorep
