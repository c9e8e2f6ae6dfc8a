#include "emorep/synth.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "emorep/rng.hpp"
#include "json.hpp"

namespace emorep {

namespace {

using nlohmann::json;

std::string pad(int value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

// Axis-aligned default means: emotion k sits at scale * unit(k mod dim).
// Distinct emotions land on distinct axes whenever dim >= K.
std::vector<std::vector<double>> default_means(int k, int dim, double scale) {
    std::vector<std::vector<double>> means(k, std::vector<double>(dim, 0.0));
    for (int e = 0; e < k; ++e) means[e][e % dim] = scale;
    return means;
}

}  // namespace

void validate_config(const SynthConfig& cfg) {
    if (cfg.n_sequences < 1) throw Error("synth config: n_sequences must be >= 1");
    if (cfg.clips_per_sequence < 1)
        throw Error("synth config: clips_per_sequence must be >= 1");
    if (cfg.noise_scale <= 0.0) throw Error("synth config: noise_scale must be > 0");
    if (cfg.descriptor_dim < 1) throw Error("synth config: descriptor_dim must be >= 1");
    if (cfg.descriptors_per_clip < 0)
        throw Error("synth config: descriptors_per_clip must be >= 0");
    if (cfg.behavior_count < 1 || cfg.behavior_count > kBehaviorCount)
        throw Error("synth config: behavior_count must be in [1, " +
                    std::to_string(kBehaviorCount) + "]");
    if (cfg.emotion_count < 1 || cfg.emotion_count > kEmotionCount)
        throw Error("synth config: emotion_count must be in [1, " +
                    std::to_string(kEmotionCount) + "]");

    if (static_cast<int>(cfg.behavior_to_emotion.size()) != cfg.behavior_count)
        throw Error("synth config: behavior_to_emotion must have one row per behavior");
    for (const auto& row : cfg.behavior_to_emotion) {
        if (static_cast<int>(row.size()) != cfg.emotion_count)
            throw Error("synth config: behavior_to_emotion rows must have K entries");
        double sum = 0.0;
        for (double p : row) {
            if (p < 0.0 || !std::isfinite(p))
                throw Error("synth config: behavior_to_emotion entries must be >= 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw Error("synth config: behavior_to_emotion rows must sum to 1");
    }

    if (!cfg.emotion_to_mean.empty()) {
        if (static_cast<int>(cfg.emotion_to_mean.size()) != cfg.emotion_count)
            throw Error("synth config: emotion_to_mean must have one vector per emotion");
        for (const auto& m : cfg.emotion_to_mean)
            if (static_cast<int>(m.size()) != cfg.descriptor_dim)
                throw Error("synth config: emotion_to_mean vectors must match descriptor_dim");
    }
    if (cfg.channel_name.empty()) throw Error("synth config: channel_name must be non-empty");
}

Dataset synthesize_dataset(const SynthConfig& cfg) {
    validate_config(cfg);
    const auto means = cfg.emotion_to_mean.empty()
                           ? default_means(cfg.emotion_count, cfg.descriptor_dim,
                                           cfg.mean_separation)
                           : cfg.emotion_to_mean;

    Dataset ds;
    ds.emotion_count = cfg.emotion_count;
    ds.behavior_count = cfg.behavior_count;

    const int total = cfg.n_sequences * cfg.clips_per_sequence;
    ds.clips.resize(total);
    for (int s = 0; s < cfg.n_sequences; ++s) ds.sequences.insert("seq" + pad(s, 3));

    for (int t = 0; t < total; ++t) {
        const int s = t / cfg.clips_per_sequence;
        const int c = t % cfg.clips_per_sequence;
        Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(t)));

        ClipRecord clip;
        clip.sequence_id = "seq" + pad(s, 3);
        clip.clip_id = clip.sequence_id + "_clip" + pad(c, 3);
        // round-robin over the global clip index keeps behavior counts within +-1
        const int behavior = t % cfg.behavior_count;
        clip.behavior = static_cast<BehaviorLabel>(behavior);

        const int emotion =
            static_cast<int>(rng.discrete(cfg.behavior_to_emotion[behavior]));
        clip.emotion = EmotionVector::one_hot(emotion, cfg.emotion_count);
        clip.emotion_annotations = {static_cast<EmotionLabel>(emotion)};
        clip.emotion_is_ground_truth = true;

        DescriptorChannel ch;
        ch.name = cfg.channel_name;
        ch.dim = cfg.descriptor_dim;
        ch.vectors.resize(cfg.descriptors_per_clip);
        for (auto& v : ch.vectors) {
            v.resize(cfg.descriptor_dim);
            for (int d = 0; d < cfg.descriptor_dim; ++d)
                v[d] = means[emotion][d] + cfg.noise_scale * rng.gaussian();
        }
        clip.channels.push_back(std::move(ch));
        ds.clips[t] = std::move(clip);
    }
    return ds;
}

std::vector<std::vector<double>> bijective_behavior_emotion_table(int b, int k) {
    std::vector<std::vector<double>> table(b, std::vector<double>(k, 0.0));
    for (int i = 0; i < b; ++i) table[i][i % k] = 1.0;
    return table;
}

std::vector<std::vector<double>> uniform_behavior_emotion_table(int b, int k) {
    return std::vector<std::vector<double>>(b, std::vector<double>(k, 1.0 / k));
}

std::vector<std::vector<double>> mediated_behavior_emotion_table(int b, int k,
                                                                 double p_primary) {
    if (p_primary < 0.0 || p_primary > 1.0)
        throw Error("mediated table: p_primary must be in [0, 1]");
    std::vector<std::vector<double>> table(b, std::vector<double>(k, 0.0));
    for (int i = 0; i < b; ++i) {
        table[i][i % k] += p_primary;
        table[i][(i + 1) % k] += 1.0 - p_primary;
    }
    return table;
}

namespace {

SynthConfig config_from_doc(const json& doc) {
    SynthConfig cfg;
    try {
        if (doc.contains("n_sequences")) cfg.n_sequences = doc["n_sequences"].get<int>();
        if (doc.contains("clips_per_sequence"))
            cfg.clips_per_sequence = doc["clips_per_sequence"].get<int>();
        if (doc.contains("mean_separation"))
            cfg.mean_separation = doc["mean_separation"].get<double>();
        if (doc.contains("noise_scale")) cfg.noise_scale = doc["noise_scale"].get<double>();
        if (doc.contains("descriptor_dim"))
            cfg.descriptor_dim = doc["descriptor_dim"].get<int>();
        if (doc.contains("descriptors_per_clip"))
            cfg.descriptors_per_clip = doc["descriptors_per_clip"].get<int>();
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("behavior_count"))
            cfg.behavior_count = doc["behavior_count"].get<int>();
        if (doc.contains("emotion_count")) cfg.emotion_count = doc["emotion_count"].get<int>();
        if (doc.contains("channel_name"))
            cfg.channel_name = doc["channel_name"].get<std::string>();
        if (doc.contains("emotion_to_mean"))
            cfg.emotion_to_mean =
                doc["emotion_to_mean"].get<std::vector<std::vector<double>>>();

        if (doc.contains("behavior_to_emotion")) {
            const auto& node = doc["behavior_to_emotion"];
            if (node.is_string()) {
                const std::string preset = node.get<std::string>();
                if (preset == "bijective")
                    cfg.behavior_to_emotion =
                        bijective_behavior_emotion_table(cfg.behavior_count, cfg.emotion_count);
                else if (preset == "uniform")
                    cfg.behavior_to_emotion =
                        uniform_behavior_emotion_table(cfg.behavior_count, cfg.emotion_count);
                else if (preset == "mediated")
                    cfg.behavior_to_emotion = mediated_behavior_emotion_table(
                        cfg.behavior_count, cfg.emotion_count, 0.8);
                else
                    throw Error("synth config: unknown behavior_to_emotion preset '" + preset +
                                "'");
            } else {
                cfg.behavior_to_emotion =
                    node.get<std::vector<std::vector<double>>>();
            }
        } else {
            cfg.behavior_to_emotion =
                bijective_behavior_emotion_table(cfg.behavior_count, cfg.emotion_count);
        }
    } catch (const json::exception& e) {
        throw Error(std::string("synth config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

}  // namespace

SynthConfig synth_config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("synth config: ") + e.what());
    }
    return config_from_doc(doc);
}

SynthConfig load_synth_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open synth config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return synth_config_from_json(buf.str());
}

std::string synth_config_to_json(const SynthConfig& cfg) {
    json doc;
    doc["n_sequences"] = cfg.n_sequences;
    doc["clips_per_sequence"] = cfg.clips_per_sequence;
    doc["behavior_to_emotion"] = cfg.behavior_to_emotion;
    if (!cfg.emotion_to_mean.empty()) doc["emotion_to_mean"] = cfg.emotion_to_mean;
    doc["mean_separation"] = cfg.mean_separation;
    doc["noise_scale"] = cfg.noise_scale;
    doc["descriptor_dim"] = cfg.descriptor_dim;
    doc["descriptors_per_clip"] = cfg.descriptors_per_clip;
    doc["seed"] = cfg.seed;
    doc["behavior_count"] = cfg.behavior_count;
    doc["emotion_count"] = cfg.emotion_count;
    doc["channel_name"] = cfg.channel_name;
    return doc.dump(2);
}

}  // namespace emorep
