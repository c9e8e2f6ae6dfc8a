#include "emorep/latent.hpp"

#include <cmath>
#include <limits>

#include "emorep/parallel.hpp"
#include "emorep/rng.hpp"
#include "json.hpp"

namespace emorep {

int LatentWeights::pair_index(int l, int m, int k) {
    if (!(0 <= l && l < m && m < k)) throw Error("LatentWeights::pair_index: need 0 <= l < m < K");
    // row-major over the strict upper triangle
    return l * k - l * (l + 1) / 2 + (m - l - 1);
}

LatentWeights LatentWeights::zeros(int feature_dim, int k) {
    LatentWeights w;
    w.feature_weights.assign(feature_dim, 0.0);
    w.emotion_weights.assign(k, {0.0, 0.0});
    w.pair_weights.assign(pair_count(k), {0.0, 0.0, 0.0, 0.0});
    w.emotion_count = k;
    return w;
}

double LatentWeights::squared_norm() const {
    double s = 0.0;
    for (double v : feature_weights) s += v * v;
    for (const auto& e : emotion_weights) s += e[0] * e[0] + e[1] * e[1];
    for (const auto& p : pair_weights)
        s += p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
    return s;
}

JointFeature joint_feature(const std::vector<double>& x, const EmotionVector& e,
                           const EmotionClassifierBank& bank) {
    const int k = bank.emotion_count();
    if (e.size() != k) throw Error("joint_feature: configuration size does not match bank");
    const EmotionScores scores = emotion_representation(x, bank);

    JointFeature f;
    f.raw = x;
    f.per_emotion.assign(k, {0.0, 0.0});
    for (int l = 0; l < k; ++l)
        if (e.get(l)) f.per_emotion[l] = {scores[l], 1.0};
    f.per_pair.assign(LatentWeights::pair_count(k), {0.0, 0.0, 0.0, 0.0});
    for (int l = 0; l < k; ++l)
        for (int m = l + 1; m < k; ++m) {
            const int state = 2 * (e.get(l) ? 1 : 0) + (e.get(m) ? 1 : 0);
            f.per_pair[LatentWeights::pair_index(l, m, k)][state] = 1.0;
        }
    return f;
}

double dot(const LatentWeights& w, const JointFeature& f) {
    if (w.feature_weights.size() != f.raw.size() ||
        w.emotion_weights.size() != f.per_emotion.size() ||
        w.pair_weights.size() != f.per_pair.size())
        throw Error("dot: weight/feature shape mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < f.raw.size(); ++j) s += w.feature_weights[j] * f.raw[j];
    for (std::size_t l = 0; l < f.per_emotion.size(); ++l)
        s += w.emotion_weights[l][0] * f.per_emotion[l][0] +
             w.emotion_weights[l][1] * f.per_emotion[l][1];
    for (std::size_t p = 0; p < f.per_pair.size(); ++p)
        for (int q = 0; q < 4; ++q) s += w.pair_weights[p][q] * f.per_pair[p][q];
    return s;
}

namespace {

// bit l of the lexicographic enumeration index: e_1 is the most significant,
// so increasing mask order is exactly lexicographic order on configurations
inline int lex_bit(std::uint32_t mask, int l, int k) { return (mask >> (k - 1 - l)) & 1u; }

EmotionVector vector_from_mask(std::uint32_t mask, int k) {
    EmotionVector e(k);
    for (int l = 0; l < k; ++l) e.set(l, lex_bit(mask, l, k) != 0);
    return e;
}

double base_term(const LatentWeights& w, const std::vector<double>& x) {
    if (w.feature_weights.size() != x.size())
        throw Error("latent: feature dim does not match weights");
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += w.feature_weights[j] * x[j];
    return s;
}

double config_score(const LatentWeights& w, double base, const std::vector<double>& unary,
                    std::uint32_t mask, int k) {
    double s = base;
    for (int l = 0; l < k; ++l)
        if (lex_bit(mask, l, k)) s += unary[l];
    int p = 0;
    for (int l = 0; l < k; ++l)
        for (int m = l + 1; m < k; ++m, ++p)
            s += w.pair_weights[p][2 * lex_bit(mask, l, k) + lex_bit(mask, m, k)];
    return s;
}

std::vector<double> unary_terms(const LatentWeights& w, const EmotionScores& scores) {
    std::vector<double> unary(scores.size());
    for (std::size_t l = 0; l < scores.size(); ++l)
        unary[l] = w.emotion_weights[l][0] * scores[l] + w.emotion_weights[l][1];
    return unary;
}

// exhaustive argmax over all 2^K configurations; first-seen maximum wins,
// which in lex enumeration order is the lexicographically smallest tie
std::pair<std::uint32_t, double> infer_mask(const LatentWeights& w, double base,
                                            const std::vector<double>& unary, int k) {
    const std::uint32_t count = 1u << k;
    std::uint32_t best_mask = 0;
    double best = config_score(w, base, unary, 0, k);
    for (std::uint32_t mask = 1; mask < count; ++mask) {
        const double s = config_score(w, base, unary, mask, k);
        if (s > best) {
            best = s;
            best_mask = mask;
        }
    }
    return {best_mask, best};
}

}  // namespace

double score_configuration(const LatentWeights& w, const std::vector<double>& x,
                           const EmotionVector& e, const EmotionClassifierBank& bank) {
    const int k = bank.emotion_count();
    if (e.size() != k || w.emotion_count != k)
        throw Error("score_configuration: emotion count mismatch");
    const EmotionScores scores = emotion_representation(x, bank);
    const std::vector<double> unary = unary_terms(w, scores);
    std::uint32_t mask = 0;
    for (int l = 0; l < k; ++l)
        if (e.get(l)) mask |= 1u << (k - 1 - l);
    return config_score(w, base_term(w, x), unary, mask, k);
}

std::pair<EmotionVector, double> infer_best_emotions(const LatentWeights& w,
                                                     const std::vector<double>& x,
                                                     const EmotionClassifierBank& bank) {
    const int k = bank.emotion_count();
    if (k > 20) throw Error("infer_best_emotions: enumeration supports K <= 20");
    if (w.emotion_count != k) throw Error("infer_best_emotions: emotion count mismatch");
    const EmotionScores scores = emotion_representation(x, bank);
    const auto [mask, best] = infer_mask(w, base_term(w, x), unary_terms(w, scores), k);
    return {vector_from_mask(mask, k), best};
}

namespace {

struct Example {
    const std::vector<double>* x;
    EmotionScores scores;  // bank scores, fixed during training
    int label;             // +-1
    std::uint32_t config;  // current latent configuration (lex mask)
};

double example_score(const LatentWeights& w, const Example& ex, std::uint32_t mask, int k) {
    return config_score(w, base_term(w, *ex.x), unary_terms(w, ex.scores), mask, k);
}

// hinge objective with positives at their fixed configurations and negatives
// taking the max over configurations (the convex half of the coordinate descent)
double auxiliary_objective(const LatentWeights& w, const std::vector<Example>& examples,
                           double lambda, int k, bool freeze_latents) {
    double obj = lambda * w.squared_norm();
    for (const auto& ex : examples) {
        double s;
        if (ex.label == 1 || freeze_latents) {
            s = example_score(w, ex, ex.config, k);
        } else {
            const std::vector<double> unary = unary_terms(w, ex.scores);
            s = infer_mask(w, base_term(w, *ex.x), unary, k).second;
        }
        // NaN would be masked by max(0, .) below; surface it as a blown-up run
        if (!std::isfinite(s)) return std::numeric_limits<double>::infinity();
        obj += std::max(0.0, 1.0 - ex.label * s);
    }
    return obj;
}

// the true objective: every example takes the max over configurations
double latent_objective(const LatentWeights& w, const std::vector<Example>& examples,
                        double lambda, int k) {
    double obj = lambda * w.squared_norm();
    for (const auto& ex : examples) {
        const std::vector<double> unary = unary_terms(w, ex.scores);
        const double s = infer_mask(w, base_term(w, *ex.x), unary, k).second;
        if (!std::isfinite(s)) return std::numeric_limits<double>::infinity();
        obj += std::max(0.0, 1.0 - ex.label * s);
    }
    return obj;
}

void scale_weights(LatentWeights& w, double factor, bool freeze_pairwise) {
    for (double& v : w.feature_weights) v *= factor;
    for (auto& e : w.emotion_weights) {
        e[0] *= factor;
        e[1] *= factor;
    }
    if (!freeze_pairwise)
        for (auto& p : w.pair_weights)
            for (int q = 0; q < 4; ++q) p[q] *= factor;
}

// W += step * Psi(x, config)
void add_joint(LatentWeights& w, const Example& ex, std::uint32_t mask, double step, int k,
               bool freeze_pairwise) {
    const auto& x = *ex.x;
    for (std::size_t j = 0; j < x.size(); ++j) w.feature_weights[j] += step * x[j];
    for (int l = 0; l < k; ++l)
        if (lex_bit(mask, l, k)) {
            w.emotion_weights[l][0] += step * ex.scores[l];
            w.emotion_weights[l][1] += step;
        }
    if (!freeze_pairwise) {
        int p = 0;
        for (int l = 0; l < k; ++l)
            for (int m = l + 1; m < k; ++m, ++p)
                w.pair_weights[p][2 * lex_bit(mask, l, k) + lex_bit(mask, m, k)] += step;
    }
}

}  // namespace

LatentModelSet train_latent(const Dataset& encoded, const EmotionClassifierBank& bank,
                            const LatentConfig& cfg) {
    if (!(cfg.lambda > 0.0)) throw Error("train_latent: lambda must be > 0");
    if (cfg.outer_iters < 1) throw Error("train_latent: outer_iters must be >= 1");
    if (encoded.clips.empty()) throw Error("train_latent: empty dataset");
    const int k = bank.emotion_count();
    if (k != encoded.emotion_count)
        throw Error("train_latent: bank emotion count does not match dataset");
    if (k > 20) throw Error("train_latent: enumeration supports K <= 20");

    const int n_class = encoded.behavior_count;
    const std::size_t n = encoded.clips.size();

    std::vector<const std::vector<double>*> features(n);
    std::vector<EmotionScores> scores(n);
    std::vector<std::uint32_t> init_config(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& clip = encoded.clips[i];
        if (!clip.feature.has_value())
            throw Error("train_latent: clip '" + clip.clip_id + "' is not encoded");
        features[i] = &*clip.feature;
        scores[i] = emotion_representation(*clip.feature, bank);

        std::uint32_t mask = 0;
        if (cfg.init_mode == LatentConfig::Init::BankPredicted) {
            for (int l = 0; l < k; ++l)
                if (scores[i][l] > 0.0) mask |= 1u << (k - 1 - l);
        } else {
            if (clip.emotion.size() != k)
                throw Error("train_latent: clip '" + clip.clip_id +
                            "' lacks an emotion vector for behavior-inherited init");
            for (int l = 0; l < k; ++l)
                if (clip.emotion.get(l)) mask |= 1u << (k - 1 - l);
        }
        init_config[i] = mask;
    }

    const int dim = static_cast<int>(features.front()->size());
    for (std::size_t i = 0; i < n; ++i) {
        for (double v : *features[i])
            if (!std::isfinite(v))
                throw Error("train_latent: non-finite feature in clip '" +
                            encoded.clips[i].clip_id + "'");
        for (double s : scores[i])
            if (!std::isfinite(s))
                throw Error("train_latent: non-finite emotion score for clip '" +
                            encoded.clips[i].clip_id + "'");
    }

    LatentModelSet out;
    out.lambda = cfg.lambda;
    out.bank = bank;
    out.class_order.resize(n_class);
    for (int c = 0; c < n_class; ++c) out.class_order[c] = behavior_name(c, n_class);
    out.per_class.resize(n_class);
    out.outer_objectives.resize(n_class);

    parallel_for(static_cast<std::size_t>(n_class), cfg.threads, [&](std::size_t ci) {
        const int c = static_cast<int>(ci);
        std::vector<Example> examples(n);
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            examples[i].x = features[i];
            examples[i].scores = scores[i];
            examples[i].label = static_cast<int>(encoded.clips[i].behavior) == c ? 1 : -1;
            examples[i].config = init_config[i];
            if (examples[i].label == 1) ++n_pos;
        }
        if (n_pos == 0)
            throw Error("train_latent: behavior class '" + out.class_order[c] +
                        "' has no examples");
        if (n_pos == n)
            throw Error("train_latent: behavior class '" + out.class_order[c] +
                        "' has no negative examples");

        LatentWeights w = LatentWeights::zeros(dim, k);
        Rng rng(substream_seed(cfg.inner.seed, ci));
        const std::vector<std::size_t> order = rng.permutation(n);
        const double sigma = 2.0 * cfg.lambda / static_cast<double>(n);
        const int inner_epochs = std::max(cfg.inner.epochs, 1);
        long long step = 0;

        auto& objectives = out.outer_objectives[c];
        for (int outer = 0; outer < cfg.outer_iters; ++outer) {
            // (a) with W fixed, refresh the positives' latent configurations
            if (outer > 0 && !cfg.freeze_latents) {
                for (auto& ex : examples)
                    if (ex.label == 1)
                        ex.config =
                            infer_mask(w, base_term(w, *ex.x), unary_terms(w, ex.scores), k)
                                .first;
            }

            // (b) incumbent-tracked subgradient on the convex subproblem; the
            // incumbent includes the starting point, which is what makes the
            // outer objective non-increasing regardless of step-size behavior
            LatentWeights best_w = w;
            double best_obj = auxiliary_objective(w, examples, cfg.lambda, k,
                                                  cfg.freeze_latents);
            for (int epoch = 0; epoch < inner_epochs; ++epoch) {
                for (std::size_t idx : order) {
                    Example& ex = examples[idx];
                    ++step;
                    const double eta = 1.0 / (sigma * static_cast<double>(step));
                    std::uint32_t mask = ex.config;
                    double s;
                    if (ex.label == 1 || cfg.freeze_latents) {
                        s = example_score(w, ex, mask, k);
                    } else {
                        // negatives take the inner max every evaluation
                        const auto res = infer_mask(w, base_term(w, *ex.x),
                                                    unary_terms(w, ex.scores), k);
                        mask = res.first;
                        s = res.second;
                    }
                    scale_weights(w, 1.0 - eta * sigma, cfg.freeze_pairwise);
                    if (1.0 - ex.label * s > 0.0)
                        add_joint(w, ex, mask, eta * ex.label, k, cfg.freeze_pairwise);
                }
                const double obj =
                    auxiliary_objective(w, examples, cfg.lambda, k, cfg.freeze_latents);
                if (!std::isfinite(obj))
                    throw Error("train_latent: non-finite objective for class '" +
                                out.class_order[c] + "'");
                if (obj < best_obj) {
                    best_obj = obj;
                    best_w = w;
                }
            }
            w = best_w;

            const double recorded =
                cfg.freeze_latents
                    ? best_obj
                    : latent_objective(w, examples, cfg.lambda, k);
            if (!std::isfinite(recorded))
                throw Error("train_latent: non-finite objective for class '" +
                            out.class_order[c] + "'");
            objectives.push_back(recorded);
        }
        out.per_class[c] = std::move(w);
    });

    return out;
}

LatentPrediction predict_latent(const LatentModelSet& models, const std::vector<double>& x,
                                LatentPredictMode mode) {
    if (models.per_class.empty()) throw Error("predict_latent: empty model set");
    const int k = models.bank.emotion_count();
    const EmotionScores scores = emotion_representation(x, models.bank);

    LatentPrediction pred;
    pred.scores.resize(models.per_class.size());
    pred.configurations.resize(models.per_class.size());
    for (std::size_t c = 0; c < models.per_class.size(); ++c) {
        const LatentWeights& w = models.per_class[c];
        const std::vector<double> unary = unary_terms(w, scores);
        if (mode == LatentPredictMode::MaxInference) {
            const auto [mask, best] = infer_mask(w, base_term(w, x), unary, k);
            pred.scores[c] = best;
            pred.configurations[c] = vector_from_mask(mask, k);
        } else {
            std::uint32_t mask = 0;
            for (int l = 0; l < k; ++l)
                if (scores[l] > 0.0) mask |= 1u << (k - 1 - l);
            pred.scores[c] = config_score(w, base_term(w, x), unary, mask, k);
            pred.configurations[c] = vector_from_mask(mask, k);
        }
    }
    int best = 0;
    for (std::size_t c = 1; c < pred.scores.size(); ++c)
        if (pred.scores[c] > pred.scores[best]) best = static_cast<int>(c);
    pred.class_index = best;
    return pred;
}

namespace {

nlohmann::json bank_to_jsonv(const EmotionClassifierBank& bank) {
    nlohmann::json doc;
    doc["classifiers"] = nlohmann::json::array();
    for (const auto& m : bank.classifiers) {
        nlohmann::json jm;
        jm["w"] = m.w;
        jm["b"] = m.b;
        jm["lambda"] = m.lambda;
        jm["degenerate"] = m.degenerate;
        doc["classifiers"].push_back(jm);
    }
    doc["warnings"] = bank.warnings;
    return doc;
}

EmotionClassifierBank bank_from_jsonv(const nlohmann::json& doc) {
    EmotionClassifierBank bank;
    for (const auto& jm : doc.at("classifiers")) {
        LinearModel m;
        m.w = jm.at("w").get<std::vector<double>>();
        m.b = jm.at("b").get<double>();
        m.lambda = jm.at("lambda").get<double>();
        if (jm.contains("degenerate")) m.degenerate = jm["degenerate"].get<bool>();
        bank.classifiers.push_back(std::move(m));
    }
    if (doc.contains("warnings"))
        bank.warnings = doc["warnings"].get<std::vector<std::string>>();
    return bank;
}

}  // namespace

std::string latent_to_json(const LatentModelSet& models) {
    nlohmann::json doc;
    doc["schema"] = 1;
    doc["lambda"] = models.lambda;
    doc["class_order"] = models.class_order;
    doc["bank"] = bank_to_jsonv(models.bank);
    doc["classes"] = nlohmann::json::array();
    const int k = models.bank.emotion_count();
    for (const auto& w : models.per_class) {
        nlohmann::json jc;
        jc["w_x"] = w.feature_weights;
        jc["w_e"] = nlohmann::json::array();
        for (const auto& e : w.emotion_weights) jc["w_e"].push_back({e[0], e[1]});
        nlohmann::json pairs = nlohmann::json::object();
        for (int l = 0; l < k; ++l)
            for (int m = l + 1; m < k; ++m) {
                const auto& p = w.pair_weights[LatentWeights::pair_index(l, m, k)];
                pairs[std::to_string(l) + "," + std::to_string(m)] = {p[0], p[1], p[2], p[3]};
            }
        jc["w_pair"] = pairs;
        doc["classes"].push_back(jc);
    }
    return doc.dump();
}

LatentModelSet latent_from_json(const std::string& text) {
    LatentModelSet models;
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("schema").get<int>() != 1) throw Error("latent json: unsupported schema");
        models.lambda = doc.at("lambda").get<double>();
        models.class_order = doc.at("class_order").get<std::vector<std::string>>();
        models.bank = bank_from_jsonv(doc.at("bank"));
        const int k = models.bank.emotion_count();
        for (const auto& jc : doc.at("classes")) {
            LatentWeights w;
            w.emotion_count = k;
            w.feature_weights = jc.at("w_x").get<std::vector<double>>();
            for (const auto& je : jc.at("w_e")) {
                if (je.size() != 2) throw Error("latent json: w_e entries must be pairs");
                w.emotion_weights.push_back({je[0].get<double>(), je[1].get<double>()});
            }
            w.pair_weights.assign(LatentWeights::pair_count(k), {0.0, 0.0, 0.0, 0.0});
            for (const auto& [key, jp] : jc.at("w_pair").items()) {
                const auto comma = key.find(',');
                if (comma == std::string::npos) throw Error("latent json: bad pair key");
                const int l = std::stoi(key.substr(0, comma));
                const int m = std::stoi(key.substr(comma + 1));
                if (jp.size() != 4) throw Error("latent json: pair entries must have 4 states");
                auto& p = w.pair_weights[LatentWeights::pair_index(l, m, k)];
                for (int q = 0; q < 4; ++q) p[q] = jp[q].get<double>();
            }
            models.per_class.push_back(std::move(w));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("latent json: ") + e.what());
    }
    return models;
}

}  // namespace emorep
