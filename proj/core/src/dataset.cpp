#include "emorep/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace emorep {

const std::array<BehaviorLabel, kBehaviorCount>& all_behaviors() {
    static const std::array<BehaviorLabel, kBehaviorCount> order = {
        BehaviorLabel::Panic, BehaviorLabel::Fight, BehaviorLabel::Congestion,
        BehaviorLabel::Obstacle, BehaviorLabel::Neutral};
    return order;
}

const std::array<EmotionLabel, kEmotionCount>& all_emotions() {
    static const std::array<EmotionLabel, kEmotionCount> order = {
        EmotionLabel::Angry, EmotionLabel::Happy, EmotionLabel::Excited,
        EmotionLabel::Scared, EmotionLabel::Sad,  EmotionLabel::Neutral};
    return order;
}

namespace {
const char* const kBehaviorNames[kBehaviorCount] = {"panic", "fight", "congestion",
                                                    "obstacle", "neutral"};
const char* const kEmotionNames[kEmotionCount] = {"angry", "happy", "excited",
                                                  "scared", "sad", "neutral"};
}  // namespace

std::string to_string(BehaviorLabel b) { return kBehaviorNames[static_cast<int>(b)]; }
std::string to_string(EmotionLabel e) { return kEmotionNames[static_cast<int>(e)]; }

BehaviorLabel behavior_from_string(const std::string& s) {
    for (int i = 0; i < kBehaviorCount; ++i)
        if (s == kBehaviorNames[i]) return static_cast<BehaviorLabel>(i);
    throw Error("unknown behavior label '" + s + "'");
}

EmotionLabel emotion_from_string(const std::string& s) {
    for (int i = 0; i < kEmotionCount; ++i)
        if (s == kEmotionNames[i]) return static_cast<EmotionLabel>(i);
    throw Error("unknown emotion label '" + s + "'");
}

std::string behavior_name(int k, int count) {
    if (count == kBehaviorCount && k >= 0 && k < kBehaviorCount) return kBehaviorNames[k];
    return "b" + std::to_string(k);
}

std::string emotion_name(int k, int count) {
    if (count == kEmotionCount && k >= 0 && k < kEmotionCount) return kEmotionNames[k];
    return "e" + std::to_string(k);
}

EmotionVector EmotionVector::one_hot(int index, int k) {
    if (index < 0 || index >= k) throw Error("EmotionVector::one_hot: index out of range");
    EmotionVector e(k);
    e.set(index, true);
    return e;
}

EmotionVector EmotionVector::one_hot(EmotionLabel label, int k) {
    return one_hot(static_cast<int>(label), k);
}

EmotionVector EmotionVector::from_bits(std::vector<std::uint8_t> bits) {
    for (auto b : bits)
        if (b > 1) throw Error("EmotionVector::from_bits: entries must be 0 or 1");
    EmotionVector e;
    e.bits_ = std::move(bits);
    return e;
}

int EmotionVector::popcount() const {
    int n = 0;
    for (auto b : bits_) n += b;
    return n;
}

int EmotionVector::hot_index() const {
    if (!is_one_hot()) throw Error("EmotionVector::hot_index: vector is not one-hot");
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) return static_cast<int>(i);
    return -1;  // unreachable
}

std::vector<double> EmotionVector::to_real() const {
    std::vector<double> v(bits_.size());
    for (std::size_t i = 0; i < bits_.size(); ++i) v[i] = bits_[i] ? 1.0 : 0.0;
    return v;
}

bool EmotionVector::lex_less(const EmotionVector& other) const {
    return std::lexicographical_compare(bits_.begin(), bits_.end(), other.bits_.begin(),
                                        other.bits_.end());
}

int channel_rank(const std::string& name) {
    static const char* const standard[] = {"trajectory", "hog", "hof", "mbh"};
    for (int i = 0; i < 4; ++i)
        if (name == standard[i]) return i;
    return 4;
}

const DescriptorChannel* ClipRecord::find_channel(const std::string& name) const {
    for (const auto& c : channels)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<std::string> Dataset::channel_names() const {
    for (const auto& clip : clips) {
        if (clip.channels.empty()) continue;
        std::vector<std::string> names;
        names.reserve(clip.channels.size());
        for (const auto& c : clip.channels) names.push_back(c.name);
        std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
            const int ra = channel_rank(a), rb = channel_rank(b);
            return ra != rb ? ra < rb : a < b;
        });
        return names;
    }
    return {};
}

EmotionLabel majority_vote(const std::vector<EmotionLabel>& annotations) {
    if (annotations.empty()) throw Error("majority_vote: empty annotation list");
    std::array<int, kEmotionCount> counts{};
    for (auto a : annotations) counts[static_cast<int>(a)]++;
    int best = 0;
    for (int i = 1; i < kEmotionCount; ++i)
        if (counts[i] > counts[best]) best = i;  // ties keep the lowest index
    return static_cast<EmotionLabel>(best);
}

ValidationReport validate_dataset(const Dataset& ds) {
    ValidationReport report;
    auto flag = [&](const std::string& clip, const std::string& field, std::string msg) {
        report.violations.push_back({clip, field, std::move(msg)});
    };

    for (const auto& clip : ds.clips) {
        if (clip.sequence_id.empty())
            flag(clip.clip_id, "sequence_id", "empty sequence id");
        else if (!ds.sequences.count(clip.sequence_id))
            flag(clip.clip_id, "sequence_id",
                 "sequence '" + clip.sequence_id + "' not in dataset sequence set");

        if (clip.channels.empty() && !clip.feature.has_value())
            flag(clip.clip_id, "descriptors", "clip has neither descriptors nor an encoded feature");

        if (clip.emotion.size() != 0 && clip.emotion.size() != ds.emotion_count)
            flag(clip.clip_id, "emotion",
                 "emotion vector length " + std::to_string(clip.emotion.size()) +
                     " does not match K=" + std::to_string(ds.emotion_count));

        if (clip.emotion_is_ground_truth && clip.emotion.size() > 0 && !clip.emotion.is_one_hot())
            flag(clip.clip_id, "emotion",
                 "ground-truth emotion has " + std::to_string(clip.emotion.popcount()) +
                     " set bits, expected exactly 1");

        if (clip.emotion_is_ground_truth && clip.emotion_annotations.empty() &&
            clip.emotion.size() > 0)
            flag(clip.clip_id, "emotion_annotations", "no annotator entries");

        for (const auto& ch : clip.channels) {
            for (const auto& v : ch.vectors) {
                if (static_cast<int>(v.size()) != ch.dim) {
                    flag(clip.clip_id, "channel:" + ch.name,
                         "descriptor length " + std::to_string(v.size()) + " != dim " +
                             std::to_string(ch.dim));
                    break;
                }
                bool bad = false;
                for (double x : v)
                    if (!std::isfinite(x)) bad = true;
                if (bad) {
                    flag(clip.clip_id, "channel:" + ch.name, "non-finite descriptor entry");
                    break;
                }
            }
        }

        if (clip.feature.has_value()) {
            for (double x : *clip.feature)
                if (!std::isfinite(x)) {
                    flag(clip.clip_id, "feature", "non-finite feature entry");
                    break;
                }
        }
    }

    // sequences with no clips are suspicious but harmless; report them anyway
    std::map<std::string, int> seq_use;
    for (const auto& clip : ds.clips) seq_use[clip.sequence_id]++;
    for (const auto& s : ds.sequences)
        if (!seq_use.count(s)) flag("", "sequences", "sequence '" + s + "' has no clips");

    return report;
}

}  // namespace emorep
