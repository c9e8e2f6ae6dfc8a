#include "emorep/emotion.hpp"

#include <cmath>

#include "emorep/parallel.hpp"
#include "emorep/rng.hpp"
#include "json.hpp"

namespace emorep {

int EmotionClassifierBank::feature_dim() const {
    return classifiers.empty() ? 0 : static_cast<int>(classifiers.front().w.size());
}

EmotionClassifierBank train_emotion_bank(const Dataset& encoded, const TrainConfig& cfg) {
    if (encoded.clips.empty()) throw Error("train_emotion_bank: empty dataset");
    const int k = encoded.emotion_count;

    std::vector<std::vector<double>> xs;
    xs.reserve(encoded.clips.size());
    for (const auto& clip : encoded.clips) {
        if (!clip.feature.has_value())
            throw Error("train_emotion_bank: clip '" + clip.clip_id + "' is not encoded");
        if (clip.emotion.size() != k)
            throw Error("train_emotion_bank: clip '" + clip.clip_id +
                        "' lacks an aggregated emotion vector");
        xs.push_back(*clip.feature);
    }
    const std::size_t dim = xs.front().size();
    for (const auto& x : xs)
        if (x.size() != dim) throw Error("train_emotion_bank: inconsistent feature dims");

    EmotionClassifierBank bank;
    bank.classifiers.resize(k);
    std::vector<std::string> warnings(k);
    parallel_for(static_cast<std::size_t>(k), cfg.threads, [&](std::size_t e) {
        std::vector<int> ys(xs.size());
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            ys[i] = encoded.clips[i].emotion.get(static_cast<int>(e)) ? 1 : -1;
            if (ys[i] == 1) ++n_pos;
        }
        TrainConfig sub = cfg;
        sub.seed = substream_seed(cfg.seed, e);
        sub.threads = 1;
        bank.classifiers[e] = train_binary(xs, ys, sub);
        if (n_pos == 0)
            warnings[e] = "emotion '" + emotion_name(static_cast<int>(e), k) +
                          "': no positive examples, constant-negative classifier";
        else if (n_pos == xs.size())
            warnings[e] = "emotion '" + emotion_name(static_cast<int>(e), k) +
                          "': no negative examples, constant-positive classifier";
    });
    for (auto& w : warnings)
        if (!w.empty()) bank.warnings.push_back(std::move(w));
    return bank;
}

EmotionScores emotion_representation(const std::vector<double>& x,
                                     const EmotionClassifierBank& bank) {
    EmotionScores s(bank.classifiers.size());
    for (std::size_t e = 0; e < bank.classifiers.size(); ++e)
        s[e] = score(bank.classifiers[e], x);
    return s;
}

EmotionPipeline train_behavior_on_emotion(const Dataset& encoded,
                                          const EmotionClassifierBank& bank,
                                          const TrainConfig& cfg) {
    std::vector<std::vector<double>> reps;
    std::vector<int> ys;
    reps.reserve(encoded.clips.size());
    for (const auto& clip : encoded.clips) {
        if (!clip.feature.has_value())
            throw Error("train_behavior_on_emotion: clip '" + clip.clip_id +
                        "' is not encoded");
        reps.push_back(emotion_representation(*clip.feature, bank));
        ys.push_back(static_cast<int>(clip.behavior));
    }
    std::vector<std::string> class_order(encoded.behavior_count);
    for (int c = 0; c < encoded.behavior_count; ++c)
        class_order[c] = behavior_name(c, encoded.behavior_count);

    EmotionPipeline p;
    p.bank = bank;
    p.behavior_model = train_one_vs_all(reps, ys, class_order, cfg);
    return p;
}

std::pair<BehaviorLabel, std::vector<double>> classify(const EmotionPipeline& p,
                                                       const std::vector<double>& x) {
    const auto [index, scores] = predict(p.behavior_model, emotion_representation(x, p.bank));
    return {static_cast<BehaviorLabel>(index), scores};
}

std::vector<double> emotion_aware_feature(const EmotionVector& e) {
    if (!e.is_one_hot())
        throw Error("emotion_aware_feature: ground-truth emotion must be one-hot, got " +
                    std::to_string(e.popcount()) + " set bits");
    return e.to_real();
}

MultiClassModel train_emotion_aware(const Dataset& ds, const TrainConfig& cfg) {
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    xs.reserve(ds.clips.size());
    for (const auto& clip : ds.clips) {
        if (clip.emotion.size() != ds.emotion_count)
            throw Error("train_emotion_aware: clip '" + clip.clip_id +
                        "' lacks an aggregated emotion vector");
        xs.push_back(emotion_aware_feature(clip.emotion));
        ys.push_back(static_cast<int>(clip.behavior));
    }
    std::vector<std::string> class_order(ds.behavior_count);
    for (int c = 0; c < ds.behavior_count; ++c)
        class_order[c] = behavior_name(c, ds.behavior_count);
    return train_one_vs_all(xs, ys, class_order, cfg);
}

std::string pipeline_to_json(const EmotionPipeline& p) {
    nlohmann::json doc;
    doc["schema"] = 1;
    nlohmann::json bank;
    bank["classifiers"] = nlohmann::json::array();
    for (const auto& m : p.bank.classifiers) {
        nlohmann::json jm;
        jm["w"] = m.w;
        jm["b"] = m.b;
        jm["lambda"] = m.lambda;
        jm["degenerate"] = m.degenerate;
        bank["classifiers"].push_back(jm);
    }
    bank["warnings"] = p.bank.warnings;
    doc["bank"] = bank;
    doc["behavior_model"] = nlohmann::json::parse(multiclass_to_json(p.behavior_model));
    return doc.dump();
}

EmotionPipeline pipeline_from_json(const std::string& text) {
    EmotionPipeline p;
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("schema").get<int>() != 1)
            throw Error("pipeline json: unsupported schema");
        for (const auto& jm : doc.at("bank").at("classifiers")) {
            LinearModel m;
            m.w = jm.at("w").get<std::vector<double>>();
            m.b = jm.at("b").get<double>();
            m.lambda = jm.at("lambda").get<double>();
            if (jm.contains("degenerate")) m.degenerate = jm["degenerate"].get<bool>();
            p.bank.classifiers.push_back(std::move(m));
        }
        if (doc.at("bank").contains("warnings"))
            p.bank.warnings = doc["bank"]["warnings"].get<std::vector<std::string>>();
        p.behavior_model = multiclass_from_json(doc.at("behavior_model").dump());
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("pipeline json: ") + e.what());
    }
    return p;
}

}  // namespace emorep
