#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emorep/error.hpp"

namespace emorep {

// Order is fixed: it is the tie-break order and the row/column order of every
// matrix indexed by these labels.
enum class BehaviorLabel : int { Panic = 0, Fight, Congestion, Obstacle, Neutral };
enum class EmotionLabel : int { Angry = 0, Happy, Excited, Scared, Sad, Neutral };

inline constexpr int kBehaviorCount = 5;
inline constexpr int kEmotionCount = 6;

const std::array<BehaviorLabel, kBehaviorCount>& all_behaviors();
const std::array<EmotionLabel, kEmotionCount>& all_emotions();

std::string to_string(BehaviorLabel b);
std::string to_string(EmotionLabel e);
BehaviorLabel behavior_from_string(const std::string& s);  // lowercase; throws Error
EmotionLabel emotion_from_string(const std::string& s);

// Label name for index k out of `count` classes. Uses the canonical taxonomy
// names when count matches it, synthetic names ("b2"/"e3") otherwise.
std::string behavior_name(int k, int count);
std::string emotion_name(int k, int count);

// Binary emotion configuration over K emotions. Ground-truth annotations are
// one-hot; latent configurations may be any of the 2^K patterns.
class EmotionVector {
public:
    EmotionVector() = default;
    explicit EmotionVector(int k) : bits_(static_cast<std::size_t>(k), 0) {}

    static EmotionVector one_hot(int index, int k);
    static EmotionVector one_hot(EmotionLabel label, int k = kEmotionCount);
    static EmotionVector from_bits(std::vector<std::uint8_t> bits);

    int size() const { return static_cast<int>(bits_.size()); }
    bool get(int i) const { return bits_.at(static_cast<std::size_t>(i)) != 0; }
    void set(int i, bool v) { bits_.at(static_cast<std::size_t>(i)) = v ? 1 : 0; }
    int popcount() const;
    bool is_one_hot() const { return popcount() == 1; }
    // index of the single set bit; throws unless one-hot
    int hot_index() const;
    const std::vector<std::uint8_t>& bits() const { return bits_; }
    std::vector<double> to_real() const;

    bool operator==(const EmotionVector&) const = default;
    // lexicographic on (e_1, ..., e_K); the inference tie-break order
    bool lex_less(const EmotionVector& other) const;

private:
    std::vector<std::uint8_t> bits_;
};

struct DescriptorChannel {
    std::string name;  // "trajectory", "hog", "hof", "mbh", or a generic name
    int dim = 0;
    std::vector<std::vector<double>> vectors;
};

// Canonical ordering for channel concatenation: the four standard descriptor
// channels first, anything else after them alphabetically.
int channel_rank(const std::string& name);

struct ClipRecord {
    std::string clip_id;
    std::string sequence_id;
    std::vector<DescriptorChannel> channels;
    std::optional<std::vector<double>> feature;  // encoded feature, if computed
    BehaviorLabel behavior = BehaviorLabel::Neutral;
    std::vector<EmotionLabel> emotion_annotations;  // one per annotator
    EmotionVector emotion;                          // aggregated
    bool emotion_is_ground_truth = true;

    const DescriptorChannel* find_channel(const std::string& name) const;
};

struct Dataset {
    std::vector<ClipRecord> clips;
    std::set<std::string> sequences;
    int emotion_count = kEmotionCount;    // K
    int behavior_count = kBehaviorCount;  // B

    // sorted list of channel names present in the first descriptor-bearing clip
    std::vector<std::string> channel_names() const;
};

struct Violation {
    std::string clip_id;
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Most frequent label; ties broken by the fixed EmotionLabel order (lowest
// wins). Throws on an empty list.
EmotionLabel majority_vote(const std::vector<EmotionLabel>& annotations);

// Lists every invariant violation; never mutates. Violations are data, not
// errors: an empty report means the dataset is valid.
ValidationReport validate_dataset(const Dataset& ds);

}  // namespace emorep
