#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emorep/dataset.hpp"

namespace emorep {

struct Codebook {
    std::string channel;
    int d = 0;    // word count
    int dim = 0;  // descriptor dimension
    std::vector<std::vector<double>> centroids;  // d vectors of length dim
};

struct BowHistogram {
    std::vector<double> counts;  // d entries
    bool normalized = false;
};

struct DescriptorSample {
    std::string channel;
    int dim = 0;
    std::vector<std::vector<double>> vectors;
};

struct KMeansStats {
    std::vector<double> distortion_history;  // total squared distance after each assignment
    int iterations = 0;
    bool converged = false;
};

// Uniform sample without replacement of ceil(fraction * total) descriptors of
// one channel, deterministic given seed. fraction = 1 returns everything in
// canonical (clip, descriptor) order.
DescriptorSample sample_descriptors(const Dataset& ds, const std::string& channel,
                                    double fraction, std::uint64_t seed);

// Lloyd's k-means with k-means++ initialization, Euclidean distance, and
// nearest-word ties broken by lowest centroid index. Empty clusters are
// repaired by reseeding on the point farthest from its assigned centroid.
// Terminates when the largest centroid movement drops below tol or after
// max_iter iterations. The distortion history is non-increasing.
Codebook build_codebook(const DescriptorSample& sample, int d, std::uint64_t seed,
                        int max_iter = 100, double tol = 1e-6,
                        KMeansStats* stats = nullptr, int threads = 1);

// Index of the nearest centroid (lowest index wins ties).
int nearest_centroid(const Codebook& cb, const std::vector<double>& x);

// Histogram of nearest-word counts for the clip's matching channel; optional
// L1 normalization. A clip with no descriptors yields the zero histogram.
BowHistogram quantize(const ClipRecord& clip, const Codebook& cb, bool normalize = true);

// Encodes every clip. With combine set, the feature is the concatenation of
// all channel histograms in the order the codebooks are given; otherwise
// exactly one codebook is expected and its histogram becomes the feature.
Dataset encode_dataset(const Dataset& ds, const std::vector<Codebook>& codebooks,
                       bool combine = true, int threads = 1);

// JSON: { "channel": "...", "d": d, "centroids": [[...], ...] }
std::string codebook_to_json(const Codebook& cb);
Codebook codebook_from_json(const std::string& text);

}  // namespace emorep
