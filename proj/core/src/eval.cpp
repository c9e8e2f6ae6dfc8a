#include "emorep/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "emorep/parallel.hpp"
#include "emorep/rng.hpp"
#include "json.hpp"

namespace emorep {

using nlohmann::json;

FoldPlan loso_splits(const Dataset& ds) {
    if (ds.sequences.size() < 2) throw Error("loso_splits: need at least 2 sequences");
    std::vector<std::string> all(ds.sequences.begin(), ds.sequences.end());  // set: sorted
    FoldPlan plan;
    plan.folds.reserve(all.size());
    for (const auto& test : all) {
        Fold fold;
        fold.test_sequence = test;
        for (const auto& s : all)
            if (s != test) fold.train_sequences.push_back(s);
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& truth, const std::vector<int>& pred,
                                 const std::vector<std::string>& order) {
    if (truth.size() != pred.size())
        throw Error("confusion_matrix: truth/pred length mismatch");
    const int b = static_cast<int>(order.size());
    ConfusionMatrix cm;
    cm.labels = order;
    cm.counts.assign(b, std::vector<long long>(b, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= b || pred[i] < 0 || pred[i] >= b)
            throw Error("confusion_matrix: label index outside class order");
        cm.counts[truth[i]][pred[i]]++;
    }
    cm.row_percent.assign(b, std::vector<double>(b, 0.0));
    for (int i = 0; i < b; ++i) {
        long long row = 0;
        for (int j = 0; j < b; ++j) row += cm.counts[i][j];
        if (row == 0) continue;
        for (int j = 0; j < b; ++j)
            cm.row_percent[i][j] = 100.0 * static_cast<double>(cm.counts[i][j]) /
                                   static_cast<double>(row);
    }
    return cm;
}

double average_accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
    if (truth.empty() || truth.size() != pred.size())
        throw Error("average_accuracy: empty or mismatched inputs");
    std::map<int, long long> total, correct;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        total[truth[i]]++;
        if (truth[i] == pred[i]) correct[truth[i]]++;
    }
    double sum = 0.0;
    for (const auto& [cls, n] : total)
        sum += static_cast<double>(correct[cls]) / static_cast<double>(n);
    return sum / static_cast<double>(total.size());
}

double micro_accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
    if (truth.empty() || truth.size() != pred.size())
        throw Error("micro_accuracy: empty or mismatched inputs");
    long long correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth[i] == pred[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

namespace {

void check_annotations(const std::vector<std::vector<EmotionLabel>>& annotations) {
    if (annotations.empty()) throw Error("agreement: no clips");
    const std::size_t m = annotations.front().size();
    if (m < 2) throw Error("agreement: need at least 2 annotators");
    for (const auto& row : annotations)
        if (row.size() != m) throw Error("agreement: ragged annotator table");
}

double cohen_kappa(const std::vector<std::vector<EmotionLabel>>& annotations) {
    const double n = static_cast<double>(annotations.size());
    std::array<double, kEmotionCount> marg_a{}, marg_b{};
    double agree = 0.0;
    for (const auto& row : annotations) {
        marg_a[static_cast<int>(row[0])] += 1.0;
        marg_b[static_cast<int>(row[1])] += 1.0;
        if (row[0] == row[1]) agree += 1.0;
    }
    const double po = agree / n;
    double pe = 0.0;
    for (int k = 0; k < kEmotionCount; ++k) pe += (marg_a[k] / n) * (marg_b[k] / n);
    if (po >= 1.0) return 1.0;  // perfect agreement, regardless of marginals
    if (1.0 - pe <= 0.0) return 0.0;
    return (po - pe) / (1.0 - pe);
}

double fleiss_kappa(const std::vector<std::vector<EmotionLabel>>& annotations) {
    const double n_items = static_cast<double>(annotations.size());
    const double m = static_cast<double>(annotations.front().size());
    std::array<double, kEmotionCount> category_mass{};
    double p_bar = 0.0;
    for (const auto& row : annotations) {
        std::array<double, kEmotionCount> counts{};
        for (auto label : row) counts[static_cast<int>(label)] += 1.0;
        double same_pairs = 0.0;
        for (int k = 0; k < kEmotionCount; ++k) {
            same_pairs += counts[k] * (counts[k] - 1.0);
            category_mass[k] += counts[k];
        }
        p_bar += same_pairs / (m * (m - 1.0));
    }
    p_bar /= n_items;
    double pe = 0.0;
    for (int k = 0; k < kEmotionCount; ++k) {
        const double p = category_mass[k] / (n_items * m);
        pe += p * p;
    }
    if (p_bar >= 1.0) return 1.0;
    if (1.0 - pe <= 0.0) return 0.0;
    return (p_bar - pe) / (1.0 - pe);
}

}  // namespace

AgreementResult agreement(const std::vector<std::vector<EmotionLabel>>& annotations) {
    check_annotations(annotations);
    const std::size_t m = annotations.front().size();

    double agree_pairs = 0.0, total_pairs = 0.0;
    for (const auto& row : annotations)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b) {
                total_pairs += 1.0;
                if (row[a] == row[b]) agree_pairs += 1.0;
            }

    AgreementResult r;
    r.overall_agreement = agree_pairs / total_pairs;
    r.kappa = m == 2 ? cohen_kappa(annotations) : fleiss_kappa(annotations);
    return r;
}

std::map<std::pair<EmotionLabel, EmotionLabel>, double> pairwise_confusability(
    const std::vector<std::vector<EmotionLabel>>& annotations) {
    check_annotations(annotations);
    const std::size_t m = annotations.front().size();

    std::map<std::pair<EmotionLabel, EmotionLabel>, double> out;
    for (int i = 0; i < kEmotionCount; ++i)
        for (int j = i + 1; j < kEmotionCount; ++j)
            out[{static_cast<EmotionLabel>(i), static_cast<EmotionLabel>(j)}] = 0.0;

    double disagreements = 0.0;
    for (const auto& row : annotations)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b) {
                if (row[a] == row[b]) continue;
                disagreements += 1.0;
                auto key = std::minmax(row[a], row[b]);
                out[{key.first, key.second}] += 1.0;
            }
    if (disagreements > 0.0)
        for (auto& [key, value] : out) value /= disagreements;
    return out;
}

std::string to_string(Method m) {
    switch (m) {
        case Method::LowLevel: return "lowlevel";
        case Method::EmotionAware: return "aware";
        case Method::EmotionBased: return "emotion";
        case Method::Latent: return "latent";
    }
    throw Error("to_string: bad method");
}

Method method_from_string(const std::string& s) {
    if (s == "lowlevel") return Method::LowLevel;
    if (s == "aware") return Method::EmotionAware;
    if (s == "emotion") return Method::EmotionBased;
    if (s == "latent") return Method::Latent;
    throw Error("unknown method '" + s + "' (expected lowlevel|aware|emotion|latent)");
}

namespace {

bool needs_encoding(Method m) { return m != Method::EmotionAware; }

std::vector<std::string> behavior_order(const Dataset& ds) {
    std::vector<std::string> order(ds.behavior_count);
    for (int c = 0; c < ds.behavior_count; ++c) order[c] = behavior_name(c, ds.behavior_count);
    return order;
}

}  // namespace

FoldModels fit_fold(const Dataset& train, const ExperimentConfig& cfg,
                    std::uint64_t fold_seed) {
    FoldModels fm;
    Dataset encoded;

    if (needs_encoding(cfg.method)) {
        const auto channels = train.channel_names();
        if (channels.empty()) throw Error("fit_fold: training clips carry no descriptors");
        for (std::size_t ci = 0; ci < channels.size(); ++ci) {
            const auto sample =
                sample_descriptors(train, channels[ci], cfg.codebook_sample_fraction,
                                   substream_seed(fold_seed, 100 + ci));
            fm.codebooks.push_back(build_codebook(sample, cfg.codebook_size,
                                                  substream_seed(fold_seed, 200 + ci),
                                                  cfg.kmeans_max_iter, cfg.kmeans_tol));
        }
        encoded = encode_dataset(train, fm.codebooks, cfg.combine_channels);
    }

    TrainConfig svm_cfg = cfg.svm;
    svm_cfg.threads = 1;

    switch (cfg.method) {
        case Method::LowLevel: {
            std::vector<std::vector<double>> xs;
            std::vector<int> ys;
            for (const auto& clip : encoded.clips) {
                xs.push_back(*clip.feature);
                ys.push_back(static_cast<int>(clip.behavior));
            }
            svm_cfg.seed = substream_seed(fold_seed, 1);
            fm.behavior_model = train_one_vs_all(xs, ys, behavior_order(train), svm_cfg);
            break;
        }
        case Method::EmotionAware: {
            svm_cfg.seed = substream_seed(fold_seed, 2);
            fm.behavior_model = train_emotion_aware(train, svm_cfg);
            break;
        }
        case Method::EmotionBased: {
            svm_cfg.seed = substream_seed(fold_seed, 3);
            fm.bank = train_emotion_bank(encoded, svm_cfg);
            svm_cfg.seed = substream_seed(fold_seed, 4);
            fm.behavior_model =
                train_behavior_on_emotion(encoded, fm.bank, svm_cfg).behavior_model;
            break;
        }
        case Method::Latent: {
            // the latent regularizer is isotropic over the raw template and the
            // score terms; scale the encoded features to unit deviation (fitted
            // on train) so both blocks carry weight
            const std::size_t dim = encoded.clips.front().feature->size();
            std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
            for (const auto& clip : encoded.clips)
                for (std::size_t j = 0; j < dim; ++j) mean[j] += (*clip.feature)[j];
            for (auto& v : mean) v /= static_cast<double>(encoded.clips.size());
            for (const auto& clip : encoded.clips)
                for (std::size_t j = 0; j < dim; ++j) {
                    const double t = (*clip.feature)[j] - mean[j];
                    sd[j] += t * t;
                }
            fm.feature_scale.resize(dim);
            for (std::size_t j = 0; j < dim; ++j)
                fm.feature_scale[j] = std::max(
                    std::sqrt(sd[j] / static_cast<double>(encoded.clips.size())), 1e-12);
            Dataset scaled = encoded;
            for (auto& clip : scaled.clips)
                for (std::size_t j = 0; j < dim; ++j)
                    (*clip.feature)[j] /= fm.feature_scale[j];

            svm_cfg.seed = substream_seed(fold_seed, 3);
            fm.bank = train_emotion_bank(scaled, svm_cfg);
            LatentConfig lat = cfg.latent;
            lat.threads = 1;
            lat.inner.seed = substream_seed(fold_seed, 5);
            fm.latent_models = train_latent(scaled, fm.bank, lat);
            break;
        }
    }
    return fm;
}

std::string FoldModels::fingerprint() const {
    std::string out;
    for (const auto& cb : codebooks) out += codebook_to_json(cb);
    if (!bank.classifiers.empty()) {
        EmotionPipeline p;
        p.bank = bank;
        // reuse the pipeline serialization for the bank half
        p.behavior_model.class_order = {};
        out += pipeline_to_json(p);
    }
    if (!behavior_model.models.empty()) out += multiclass_to_json(behavior_model);
    if (!latent_models.per_class.empty()) out += latent_to_json(latent_models);
    if (!feature_scale.empty()) out += json(feature_scale).dump();
    return out;
}

namespace {

struct FoldOutcome {
    std::vector<int> truth;
    std::vector<int> pred;
    // latent: winning configuration bits per test clip
    std::vector<EmotionVector> configs;
};

FoldOutcome run_fold(const Dataset& ds, const Fold& fold, const ExperimentConfig& cfg,
                     std::uint64_t fold_seed) {
    Dataset train;
    train.emotion_count = ds.emotion_count;
    train.behavior_count = ds.behavior_count;
    std::vector<const ClipRecord*> test_clips;
    for (const auto& clip : ds.clips) {
        if (clip.sequence_id == fold.test_sequence) {
            test_clips.push_back(&clip);
        } else {
            train.clips.push_back(clip);
            train.sequences.insert(clip.sequence_id);
        }
    }
    if (train.clips.empty() || test_clips.empty())
        throw Error("run_experiment: fold '" + fold.test_sequence +
                    "' has an empty train or test side");

    const FoldModels fm = fit_fold(train, cfg, fold_seed);

    FoldOutcome out;
    for (const ClipRecord* clip : test_clips) {
        out.truth.push_back(static_cast<int>(clip->behavior));
        std::vector<double> feature;
        if (needs_encoding(cfg.method)) {
            for (const auto& cb : fm.codebooks) {
                const BowHistogram h = quantize(*clip, cb, true);
                feature.insert(feature.end(), h.counts.begin(), h.counts.end());
            }
        }
        switch (cfg.method) {
            case Method::LowLevel:
                out.pred.push_back(predict(fm.behavior_model, feature).first);
                break;
            case Method::EmotionAware:
                out.pred.push_back(
                    predict(fm.behavior_model, emotion_aware_feature(clip->emotion)).first);
                break;
            case Method::EmotionBased:
                out.pred.push_back(
                    predict(fm.behavior_model, emotion_representation(feature, fm.bank))
                        .first);
                break;
            case Method::Latent: {
                for (std::size_t j = 0; j < feature.size(); ++j)
                    feature[j] /= fm.feature_scale[j];
                const LatentPrediction p =
                    predict_latent(fm.latent_models, feature, cfg.latent_predict);
                out.pred.push_back(p.class_index);
                out.configs.push_back(p.configurations[p.class_index]);
                break;
            }
        }
    }
    return out;
}

}  // namespace

ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg) {
    const FoldPlan plan = loso_splits(ds);

    std::vector<FoldOutcome> outcomes(plan.folds.size());
    parallel_for(plan.folds.size(), cfg.threads, [&](std::size_t f) {
        try {
            outcomes[f] = run_fold(ds, plan.folds[f], cfg, substream_seed(cfg.seed, f));
        } catch (const Error& e) {
            throw Error("fold '" + plan.folds[f].test_sequence + "': " + e.what());
        }
    });

    ExperimentReport report;
    report.method = to_string(cfg.method);
    report.seed = cfg.seed;
    report.config_json = experiment_config_to_json(cfg);

    std::vector<int> truth, pred;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const auto& o = outcomes[f];
        FoldResult fr;
        fr.test_sequence = plan.folds[f].test_sequence;
        fr.n_test = static_cast<int>(o.truth.size());
        fr.accuracy = micro_accuracy(o.truth, o.pred);
        report.per_fold.push_back(fr);
        truth.insert(truth.end(), o.truth.begin(), o.truth.end());
        pred.insert(pred.end(), o.pred.begin(), o.pred.end());
    }

    const auto order = behavior_order(ds);
    report.confusion = confusion_matrix(truth, pred, order);
    report.average_accuracy = average_accuracy(truth, pred);
    report.micro_accuracy = micro_accuracy(truth, pred);
    for (int c = 0; c < static_cast<int>(order.size()); ++c) {
        long long total = 0, correct = 0;
        for (std::size_t i = 0; i < truth.size(); ++i)
            if (truth[i] == c) {
                ++total;
                if (pred[i] == c) ++correct;
            }
        if (total > 0)
            report.per_class_recall[order[c]] =
                static_cast<double>(correct) / static_cast<double>(total);
    }

    if (cfg.method == Method::Latent) {
        report.emotion_usage.assign(order.size(),
                                    std::vector<double>(ds.emotion_count, 0.0));
        std::vector<long long> per_class(order.size(), 0);
        std::size_t cursor = 0;
        for (const auto& o : outcomes)
            for (std::size_t i = 0; i < o.truth.size(); ++i, ++cursor) {
                const int cls = o.truth[i];
                per_class[cls]++;
                for (int l = 0; l < ds.emotion_count; ++l)
                    if (o.configs[i].get(l)) report.emotion_usage[cls][l] += 1.0;
            }
        for (std::size_t c = 0; c < order.size(); ++c)
            if (per_class[c] > 0)
                for (auto& v : report.emotion_usage[c]) v /= static_cast<double>(per_class[c]);
    }
    return report;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["method"] = to_string(cfg.method);
    doc["codebook_size"] = cfg.codebook_size;
    doc["codebook_sample_fraction"] = cfg.codebook_sample_fraction;
    doc["kmeans_max_iter"] = cfg.kmeans_max_iter;
    doc["kmeans_tol"] = cfg.kmeans_tol;
    doc["combine_channels"] = cfg.combine_channels;
    doc["svm"] = {{"lambda", cfg.svm.lambda},
                  {"epochs", cfg.svm.epochs},
                  {"tol", cfg.svm.tol},
                  {"fit_bias", cfg.svm.fit_bias}};
    doc["latent"] = {
        {"lambda", cfg.latent.lambda},
        {"outer_iters", cfg.latent.outer_iters},
        {"inner_epochs", cfg.latent.inner.epochs},
        {"init_mode", cfg.latent.init_mode == LatentConfig::Init::BehaviorInherited
                          ? "behavior-inherited"
                          : "bank-predicted"},
        {"freeze_pairwise", cfg.latent.freeze_pairwise},
        {"freeze_latents", cfg.latent.freeze_latents}};
    doc["latent_predict"] =
        cfg.latent_predict == LatentPredictMode::MaxInference ? "max" : "fixed";
    doc["seed"] = cfg.seed;
    doc["threads"] = cfg.threads;
    return doc.dump();
}

std::string report_to_json(const ExperimentReport& r) {
    json doc;
    doc["schema"] = r.schema;
    doc["method"] = r.method;
    doc["seed"] = r.seed;
    doc["average_accuracy"] = r.average_accuracy;
    doc["micro_accuracy"] = r.micro_accuracy;
    doc["per_class_recall"] = r.per_class_recall;
    doc["per_fold"] = json::array();
    for (const auto& f : r.per_fold)
        doc["per_fold"].push_back({{"test_sequence", f.test_sequence},
                                   {"accuracy", f.accuracy},
                                   {"n_test", f.n_test}});
    doc["confusion"] = {{"labels", r.confusion.labels},
                        {"counts", r.confusion.counts},
                        {"row_percent", r.confusion.row_percent}};
    if (!r.emotion_usage.empty()) doc["emotion_usage"] = r.emotion_usage;
    doc["config"] = json::parse(r.config_json);
    return doc.dump(2);
}

ExperimentReport report_from_json(const std::string& text) {
    ExperimentReport r;
    try {
        const auto doc = json::parse(text);
        r.schema = doc.at("schema").get<int>();
        r.method = doc.at("method").get<std::string>();
        r.seed = doc.at("seed").get<std::uint64_t>();
        r.average_accuracy = doc.at("average_accuracy").get<double>();
        r.micro_accuracy = doc.at("micro_accuracy").get<double>();
        r.per_class_recall =
            doc.at("per_class_recall").get<std::map<std::string, double>>();
        for (const auto& jf : doc.at("per_fold")) {
            FoldResult f;
            f.test_sequence = jf.at("test_sequence").get<std::string>();
            f.accuracy = jf.at("accuracy").get<double>();
            f.n_test = jf.at("n_test").get<int>();
            r.per_fold.push_back(std::move(f));
        }
        r.confusion.labels = doc.at("confusion").at("labels").get<std::vector<std::string>>();
        r.confusion.counts =
            doc.at("confusion").at("counts").get<std::vector<std::vector<long long>>>();
        r.confusion.row_percent =
            doc.at("confusion").at("row_percent").get<std::vector<std::vector<double>>>();
        if (doc.contains("emotion_usage"))
            r.emotion_usage = doc["emotion_usage"].get<std::vector<std::vector<double>>>();
        r.config_json = doc.at("config").dump();
    } catch (const json::exception& e) {
        throw Error(std::string("report json: ") + e.what());
    }
    return r;
}

namespace {

std::string format_pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
    return buf;
}

}  // namespace

std::string report_to_text(const ExperimentReport& r) {
    std::ostringstream out;
    out << "method: " << r.method << "  seed: " << r.seed << "\n";
    out << "average accuracy (class-averaged): " << format_pct(r.average_accuracy) << "%\n";
    out << "micro accuracy:                    " << format_pct(r.micro_accuracy) << "%\n\n";
    out << "per-class recall:\n";
    for (const auto& [cls, recall] : r.per_class_recall)
        out << "  " << cls << ": " << format_pct(recall) << "%\n";
    out << "\nper-fold accuracy:\n";
    for (const auto& f : r.per_fold)
        out << "  " << f.test_sequence << ": " << format_pct(f.accuracy) << "%  (n="
            << f.n_test << ")\n";
    out << "\nconfusion (row %):\n";
    out << "  truth\\pred";
    for (const auto& l : r.confusion.labels) out << "  " << l;
    out << "\n";
    for (std::size_t i = 0; i < r.confusion.labels.size(); ++i) {
        out << "  " << r.confusion.labels[i];
        for (std::size_t j = 0; j < r.confusion.labels.size(); ++j) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "  %6.2f", r.confusion.row_percent[i][j]);
            out << buf;
        }
        out << "\n";
    }
    if (!r.emotion_usage.empty()) {
        out << "\nmean inferred emotion bits per true class (latent):\n";
        for (std::size_t c = 0; c < r.emotion_usage.size(); ++c) {
            out << "  " << r.confusion.labels[c] << ":";
            for (double v : r.emotion_usage[c]) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), " %.2f", v);
                out << buf;
            }
            out << "\n";
        }
    }
    return out.str();
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "# counts\n";
    out << "truth\\pred";
    for (const auto& l : cm.labels) out << "," << l;
    out << "\n";
    for (std::size_t i = 0; i < cm.labels.size(); ++i) {
        out << cm.labels[i];
        for (std::size_t j = 0; j < cm.labels.size(); ++j) out << "," << cm.counts[i][j];
        out << "\n";
    }
    out << "# row_percent\n";
    out << "truth\\pred";
    for (const auto& l : cm.labels) out << "," << l;
    out << "\n";
    for (std::size_t i = 0; i < cm.labels.size(); ++i) {
        out << cm.labels[i];
        for (std::size_t j = 0; j < cm.labels.size(); ++j) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), ",%.6f", cm.row_percent[i][j]);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace emorep
