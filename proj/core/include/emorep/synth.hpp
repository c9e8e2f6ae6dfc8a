#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emorep/dataset.hpp"

namespace emorep {

// Synthetic stand-in for a recorded dataset. The generative chain deliberately
// makes emotion the mediating variable: behavior draws an emotion from its row
// of behavior_to_emotion, and descriptors depend on the behavior only through
// that emotion.
struct SynthConfig {
    int n_sequences = 8;
    int clips_per_sequence = 20;
    // B x K, rows sum to 1 (checked to 1e-9)
    std::vector<std::vector<double>> behavior_to_emotion;
    // K mean vectors in descriptor space; empty selects axis-aligned means
    // scaled by mean_separation
    std::vector<std::vector<double>> emotion_to_mean;
    double mean_separation = 10.0;
    double noise_scale = 1.0;
    int descriptor_dim = 32;
    int descriptors_per_clip = 20;
    std::uint64_t seed = 1;
    int behavior_count = kBehaviorCount;
    int emotion_count = kEmotionCount;
    std::string channel_name = "synthetic";
};

// Throws Error on an invalid configuration.
void validate_config(const SynthConfig& cfg);

// Deterministic given cfg.seed (per-clip substreams keyed on the clip index,
// so generation may be parallelized without changing the output). Behavior
// labels are balanced across clips to within +-1.
Dataset synthesize_dataset(const SynthConfig& cfg);

// Ready-made behavior->emotion tables.
std::vector<std::vector<double>> bijective_behavior_emotion_table(int b, int k);
std::vector<std::vector<double>> uniform_behavior_emotion_table(int b, int k);
// behavior i emits emotion i with probability p_primary and emotion
// (i+1) mod k with the rest; rows are distinct but overlapping.
std::vector<std::vector<double>> mediated_behavior_emotion_table(int b, int k, double p_primary);

// JSON mirrors the field names above; behavior_to_emotion additionally accepts
// the string presets "bijective", "uniform", "mediated".
SynthConfig synth_config_from_json(const std::string& text);
SynthConfig load_synth_config(const std::string& path);
std::string synth_config_to_json(const SynthConfig& cfg);

}  // namespace emorep
