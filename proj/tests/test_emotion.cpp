#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "emorep/bow.hpp"
#include "emorep/emotion.hpp"
#include "emorep/eval.hpp"
#include "emorep/rng.hpp"
#include "emorep/synth.hpp"

using namespace emorep;

namespace {

// encoded dataset with a clean behavior->emotion bijection and 10x separation
Dataset separable_encoded(std::uint64_t seed, int n_sequences = 4, int clips = 20) {
    SynthConfig cfg;
    cfg.n_sequences = n_sequences;
    cfg.clips_per_sequence = clips;
    cfg.behavior_to_emotion = bijective_behavior_emotion_table(5, 6);
    cfg.mean_separation = 10.0;
    cfg.noise_scale = 1.0;
    cfg.descriptor_dim = 12;
    cfg.descriptors_per_clip = 8;
    cfg.seed = seed;
    const Dataset ds = synthesize_dataset(cfg);
    const auto sample = sample_descriptors(ds, "synthetic", 1.0, seed + 1);
    const Codebook cb = build_codebook(sample, 16, seed + 2, 60, 1e-6);
    return encode_dataset(ds, {cb});
}

EmotionClassifierBank zero_bank(int k, int dim) {
    EmotionClassifierBank bank;
    bank.classifiers.resize(k);
    for (auto& m : bank.classifiers) m.w.assign(dim, 0.0);
    return bank;
}

}  // namespace

TEST_CASE("bank has six classifiers in fixed emotion order") {
    const Dataset enc = separable_encoded(3);
    TrainConfig cfg;
    cfg.epochs = 150;
    const EmotionClassifierBank bank = train_emotion_bank(enc, cfg);
    CHECK(bank.emotion_count() == 6);
    CHECK(bank.warnings.size() == 1);  // bijective 5->6 leaves one emotion unused

    // classifier k scores its own emotion's clips above other clips
    for (int k = 0; k < 5; ++k) {
        double own = 0, other = 0;
        int n_own = 0, n_other = 0;
        for (const auto& clip : enc.clips) {
            const double s = score(bank.classifiers[k], *clip.feature);
            if (clip.emotion.get(k)) {
                own += s;
                ++n_own;
            } else {
                other += s;
                ++n_other;
            }
        }
        CHECK(own / n_own > other / n_other);
    }
}

TEST_CASE("bank training accuracy on separable data") {
    const Dataset enc = separable_encoded(11);
    TrainConfig cfg;
    cfg.epochs = 150;
    const EmotionClassifierBank bank = train_emotion_bank(enc, cfg);
    for (int k = 0; k < 5; ++k) {
        int correct = 0;
        for (const auto& clip : enc.clips) {
            const double s = score(bank.classifiers[k], *clip.feature);
            const bool positive = clip.emotion.get(k);
            if ((s >= 0) == positive) ++correct;
        }
        CHECK(static_cast<double>(correct) / enc.clips.size() >= 0.95);
    }
}

TEST_CASE("all-neutral dataset degenerates gracefully") {
    Dataset enc = separable_encoded(7);
    for (auto& clip : enc.clips) {
        clip.emotion = EmotionVector::one_hot(EmotionLabel::Neutral);
        clip.emotion_annotations = {EmotionLabel::Neutral};
    }
    TrainConfig cfg;
    const EmotionClassifierBank bank = train_emotion_bank(enc, cfg);
    CHECK(bank.warnings.size() == 6);  // 5 without positives, 1 without negatives
    for (int k = 0; k < 5; ++k) {
        CHECK(bank.classifiers[k].degenerate);
        CHECK(score(bank.classifiers[k], *enc.clips[0].feature) == -1.0);
    }
    CHECK(bank.classifiers[5].degenerate);
    CHECK(score(bank.classifiers[5], *enc.clips[0].feature) == 1.0);
}

TEST_CASE("emotion_representation equals per-classifier scores") {
    const Dataset enc = separable_encoded(13);
    TrainConfig cfg;
    cfg.epochs = 100;
    const EmotionClassifierBank bank = train_emotion_bank(enc, cfg);

    SUBCASE("zero bank gives the zero vector") {
        const auto zb = zero_bank(6, bank.feature_dim());
        const EmotionScores s = emotion_representation(*enc.clips[0].feature, zb);
        CHECK(s == EmotionScores(6, 0.0));
    }

    SUBCASE("recompute oracle") {
        for (const auto& clip : enc.clips) {
            const EmotionScores s = emotion_representation(*clip.feature, bank);
            for (int k = 0; k < 6; ++k)
                CHECK(s[k] == doctest::Approx(score(bank.classifiers[k], *clip.feature))
                                  .epsilon(1e-12));
        }
    }

    SUBCASE("prototype scores highest on its own emotion") {
        // strongly-angry prototype: the mean histogram of angry training clips
        std::vector<double> proto(static_cast<std::size_t>(bank.feature_dim()), 0.0);
        int n = 0;
        for (const auto& clip : enc.clips)
            if (clip.emotion.get(0)) {
                for (std::size_t j = 0; j < proto.size(); ++j) proto[j] += (*clip.feature)[j];
                ++n;
            }
        REQUIRE(n > 0);
        for (auto& v : proto) v /= n;
        const EmotionScores s = emotion_representation(proto, bank);
        int argmax = 0;
        for (int k = 1; k < 6; ++k)
            if (s[k] > s[argmax]) argmax = k;
        CHECK(argmax == 0);
    }
}

TEST_CASE("classify is exactly the composition") {
    const Dataset enc = separable_encoded(17);
    TrainConfig cfg;
    cfg.epochs = 100;
    const EmotionClassifierBank bank = train_emotion_bank(enc, cfg);
    const EmotionPipeline pipe = train_behavior_on_emotion(enc, bank, cfg);
    CHECK(pipe.behavior_model.feature_dim() == 6);

    Rng rng(5);
    const int dim = bank.feature_dim();
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x(dim);
        for (auto& v : x) v = rng.gaussian();
        const auto [label, scores] = classify(pipe, x);
        const auto [index, expected] = predict(pipe.behavior_model,
                                               emotion_representation(x, pipe.bank));
        CHECK(static_cast<int>(label) == index);
        CHECK(scores == expected);
    }
}

TEST_CASE("all-zero bank classifies to the first class by tie-break") {
    EmotionPipeline pipe;
    pipe.bank = zero_bank(6, 4);
    pipe.behavior_model.class_order = {"panic", "fight", "congestion", "obstacle", "neutral"};
    pipe.behavior_model.models.resize(5);
    for (auto& m : pipe.behavior_model.models) m.w.assign(6, 0.0);
    CHECK(classify(pipe, {1, 2, 3, 4}).first == BehaviorLabel::Panic);
}

TEST_CASE("pipeline reaches high accuracy on separable data") {
    const Dataset enc = separable_encoded(19);
    TrainConfig cfg;
    cfg.epochs = 150;
    const EmotionClassifierBank bank = train_emotion_bank(enc, cfg);
    const EmotionPipeline pipe = train_behavior_on_emotion(enc, bank, cfg);
    int correct = 0;
    for (const auto& clip : enc.clips)
        if (classify(pipe, *clip.feature).first == clip.behavior) ++correct;
    CHECK(static_cast<double>(correct) / enc.clips.size() >= 0.95);
}

TEST_CASE("uninformative emotions drive the pipeline to chance") {
    // behavior->emotion uniform: emotion carries no behavior information, so
    // held-out accuracy must sit near 1/5
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthConfig cfg;
        cfg.n_sequences = 6;
        cfg.clips_per_sequence = 50;
        cfg.behavior_to_emotion = uniform_behavior_emotion_table(5, 6);
        cfg.mean_separation = 6.0;
        cfg.noise_scale = 1.0;
        cfg.descriptor_dim = 12;
        cfg.descriptors_per_clip = 8;
        cfg.seed = seed;
        const Dataset ds = synthesize_dataset(cfg);

        Dataset train, test;
        train.emotion_count = test.emotion_count = 6;
        train.behavior_count = test.behavior_count = 5;
        for (const auto& clip : ds.clips) {
            if (clip.sequence_id < "seq003") {
                train.clips.push_back(clip);
                train.sequences.insert(clip.sequence_id);
            } else {
                test.clips.push_back(clip);
                test.sequences.insert(clip.sequence_id);
            }
        }
        const auto sample = sample_descriptors(train, "synthetic", 1.0, seed);
        const Codebook cb = build_codebook(sample, 16, seed, 40, 1e-4);
        const Dataset etrain = encode_dataset(train, {cb});
        const Dataset etest = encode_dataset(test, {cb});

        TrainConfig tc;
        tc.epochs = 100;
        tc.seed = seed;
        const EmotionClassifierBank bank = train_emotion_bank(etrain, tc);
        const EmotionPipeline pipe = train_behavior_on_emotion(etrain, bank, tc);
        std::vector<int> truth, pred;
        for (const auto& clip : etest.clips) {
            truth.push_back(static_cast<int>(clip.behavior));
            pred.push_back(static_cast<int>(classify(pipe, *clip.feature).first));
        }
        total += average_accuracy(truth, pred);
    }
    const double mean = total / 5.0;
    CHECK(mean >= 0.15);
    CHECK(mean <= 0.25);
}

TEST_CASE("emotion_aware_feature encodes the one-hot annotation") {
    CHECK(emotion_aware_feature(EmotionVector::one_hot(EmotionLabel::Happy)) ==
          std::vector<double>{0, 1, 0, 0, 0, 0});
    CHECK(emotion_aware_feature(EmotionVector::one_hot(EmotionLabel::Angry)) ==
          std::vector<double>{1, 0, 0, 0, 0, 0});
    EmotionVector two(6);
    two.set(1, true);
    two.set(2, true);
    CHECK_THROWS_AS(emotion_aware_feature(two), Error);
}

TEST_CASE("emotion-aware under a bijection is perfect end to end") {
    SynthConfig cfg;
    cfg.n_sequences = 4;
    cfg.clips_per_sequence = 15;
    cfg.behavior_to_emotion = bijective_behavior_emotion_table(5, 6);
    cfg.mean_separation = 2.0;
    cfg.noise_scale = 1.0;
    cfg.descriptor_dim = 8;
    cfg.descriptors_per_clip = 5;
    cfg.seed = 77;
    const Dataset ds = synthesize_dataset(cfg);

    ExperimentConfig ec;
    ec.method = Method::EmotionAware;
    ec.seed = 1;
    const ExperimentReport report = run_experiment(ds, ec);
    CHECK(report.average_accuracy == doctest::Approx(1.0));
}

TEST_CASE("two behaviors sharing an emotion split their recall") {
    // behaviors 0 and 1 both map to emotion 0; the aware method cannot tell
    // them apart, so the pair's mass stays inside the pair at ~50% mean recall
    SynthConfig cfg;
    cfg.n_sequences = 6;
    cfg.clips_per_sequence = 30;
    cfg.behavior_to_emotion = bijective_behavior_emotion_table(5, 6);
    cfg.behavior_to_emotion[1] = cfg.behavior_to_emotion[0];
    cfg.mean_separation = 6.0;
    cfg.noise_scale = 1.0;
    cfg.descriptor_dim = 8;
    cfg.descriptors_per_clip = 5;
    cfg.seed = 31;
    const Dataset ds = synthesize_dataset(cfg);

    ExperimentConfig ec;
    ec.method = Method::EmotionAware;
    ec.seed = 2;
    const ExperimentReport report = run_experiment(ds, ec);

    const auto& cm = report.confusion;
    long long pair_total = 0, pair_inside = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 5; ++j) {
            pair_total += cm.counts[i][j];
            if (j < 2) pair_inside += cm.counts[i][j];
        }
    CHECK(static_cast<double>(pair_inside) / pair_total >= 0.9);
    const double pair_recall =
        (report.per_class_recall.at("panic") + report.per_class_recall.at("fight")) / 2.0;
    CHECK(pair_recall >= 0.35);
    CHECK(pair_recall <= 0.65);
    CHECK(report.per_class_recall.at("congestion") >= 0.9);
    CHECK(report.per_class_recall.at("obstacle") >= 0.9);
    CHECK(report.per_class_recall.at("neutral") >= 0.9);
}

TEST_CASE("emotion_representation is linear for zero-bias banks") {
    Rng rng(43);
    EmotionClassifierBank bank = zero_bank(6, 5);
    for (auto& m : bank.classifiers) {
        for (auto& v : m.w) v = rng.gaussian();
        m.b = 0.0;
    }
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x1(5), x2(5);
        for (auto& v : x1) v = rng.gaussian();
        for (auto& v : x2) v = rng.gaussian();
        const double alpha = rng.uniform01();
        std::vector<double> mix(5);
        for (int j = 0; j < 5; ++j) mix[j] = alpha * x1[j] + (1 - alpha) * x2[j];
        const EmotionScores s1 = emotion_representation(x1, bank);
        const EmotionScores s2 = emotion_representation(x2, bank);
        const EmotionScores sm = emotion_representation(mix, bank);
        for (int k = 0; k < 6; ++k)
            CHECK(sm[k] == doctest::Approx(alpha * s1[k] + (1 - alpha) * s2[k])
                               .epsilon(1e-9));
    }
}

TEST_CASE("consistent emotion permutation leaves classification unchanged") {
    const Dataset enc = separable_encoded(23);
    TrainConfig cfg;
    cfg.epochs = 100;
    const EmotionClassifierBank bank = train_emotion_bank(enc, cfg);
    const EmotionPipeline pipe = train_behavior_on_emotion(enc, bank, cfg);

    const std::vector<int> perm = {2, 0, 5, 1, 4, 3};
    EmotionPipeline permuted = pipe;
    for (int k = 0; k < 6; ++k)
        permuted.bank.classifiers[k] = pipe.bank.classifiers[perm[k]];
    for (std::size_t c = 0; c < pipe.behavior_model.models.size(); ++c)
        for (int k = 0; k < 6; ++k)
            permuted.behavior_model.models[c].w[k] =
                pipe.behavior_model.models[c].w[perm[k]];

    for (const auto& clip : enc.clips) {
        CHECK(classify(pipe, *clip.feature).first ==
              classify(permuted, *clip.feature).first);
    }
}

TEST_CASE("pipeline json round trip with schema") {
    const Dataset enc = separable_encoded(29);
    TrainConfig cfg;
    cfg.epochs = 60;
    const EmotionClassifierBank bank = train_emotion_bank(enc, cfg);
    const EmotionPipeline pipe = train_behavior_on_emotion(enc, bank, cfg);
    const std::string text = pipeline_to_json(pipe);
    CHECK(text.find("\"schema\":1") != std::string::npos);
    const EmotionPipeline back = pipeline_from_json(text);
    CHECK(back.bank.classifiers.size() == 6);
    for (int k = 0; k < 6; ++k)
        CHECK(back.bank.classifiers[k].w == pipe.bank.classifiers[k].w);
    CHECK(back.behavior_model.class_order == pipe.behavior_model.class_order);
    CHECK_THROWS_AS(pipeline_from_json("{\"schema\":2}"), Error);
}
