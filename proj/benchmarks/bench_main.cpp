#include <benchmark/benchmark.h>

#include "emorep/bow.hpp"
#include "emorep/emotion.hpp"
#include "emorep/latent.hpp"
#include "emorep/rng.hpp"
#include "emorep/svm.hpp"
#include "emorep/synth.hpp"

using namespace emorep;

namespace {

Dataset bench_dataset(int sequences, int clips, int dim, int per_clip) {
    SynthConfig cfg;
    cfg.n_sequences = sequences;
    cfg.clips_per_sequence = clips;
    cfg.behavior_to_emotion = mediated_behavior_emotion_table(5, 6, 0.8);
    cfg.mean_separation = 1.5;
    cfg.noise_scale = 1.0;
    cfg.descriptor_dim = dim;
    cfg.descriptors_per_clip = per_clip;
    cfg.seed = 9;
    return synthesize_dataset(cfg);
}

void BM_CodebookBuild(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const Dataset ds = bench_dataset(4, 25, 32, 20);
    const DescriptorSample sample = sample_descriptors(ds, "synthetic", 1.0, 1);
    for (auto _ : state) {
        Codebook cb = build_codebook(sample, d, 2, 20, 1e-4);
        benchmark::DoNotOptimize(cb);
    }
    state.SetItemsProcessed(state.iterations() * sample.vectors.size());
}
BENCHMARK(BM_CodebookBuild)->Arg(16)->Arg(64);

void BM_Quantize(benchmark::State& state) {
    const Dataset ds = bench_dataset(2, 10, 32, 50);
    const DescriptorSample sample = sample_descriptors(ds, "synthetic", 1.0, 1);
    const Codebook cb = build_codebook(sample, 64, 2, 20, 1e-4);
    for (auto _ : state) {
        BowHistogram h = quantize(ds.clips.front(), cb, true);
        benchmark::DoNotOptimize(h);
    }
    state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_Quantize);

void BM_SvmTrain(benchmark::State& state) {
    Rng rng(3);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int i = 0; i < 200; ++i) {
        const double offset = i % 2 == 0 ? -1.0 : 1.0;
        xs.push_back({offset + 0.3 * rng.gaussian(), rng.gaussian()});
        ys.push_back(i % 2 == 0 ? -1 : 1);
    }
    TrainConfig cfg;
    cfg.epochs = 100;
    for (auto _ : state) {
        LinearModel m = train_binary(xs, ys, cfg);
        benchmark::DoNotOptimize(m);
    }
}
BENCHMARK(BM_SvmTrain);

void BM_EmotionScores(benchmark::State& state) {
    Rng rng(5);
    EmotionClassifierBank bank;
    bank.classifiers.resize(kEmotionCount);
    for (auto& m : bank.classifiers) {
        m.w.resize(64);
        for (auto& v : m.w) v = rng.gaussian();
    }
    std::vector<double> x(64);
    for (auto& v : x) v = rng.gaussian();
    for (auto _ : state) {
        EmotionScores s = emotion_representation(x, bank);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_EmotionScores);

void BM_LatentInference(benchmark::State& state) {
    Rng rng(7);
    EmotionClassifierBank bank;
    bank.classifiers.resize(kEmotionCount);
    for (auto& m : bank.classifiers) {
        m.w.resize(64);
        for (auto& v : m.w) v = rng.gaussian();
        m.b = rng.gaussian();
    }
    LatentWeights w = LatentWeights::zeros(64, kEmotionCount);
    for (auto& v : w.feature_weights) v = rng.gaussian();
    for (auto& e : w.emotion_weights) e = {rng.gaussian(), rng.gaussian()};
    for (auto& p : w.pair_weights)
        p = {rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian()};
    std::vector<double> x(64);
    for (auto& v : x) v = rng.gaussian();

    for (auto _ : state) {
        auto result = infer_best_emotions(w, x, bank);
        benchmark::DoNotOptimize(result);
    }
    state.SetItemsProcessed(state.iterations() * 64);  // configurations scanned
}
BENCHMARK(BM_LatentInference);

}  // namespace

BENCHMARK_MAIN();
