#include "emorep/bow.hpp"

#include <cmath>
#include <limits>

#include "emorep/parallel.hpp"
#include "emorep/rng.hpp"
#include "json.hpp"

namespace emorep {

namespace {

double sq_dist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

DescriptorSample sample_descriptors(const Dataset& ds, const std::string& channel,
                                    double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw Error("sample_descriptors: fraction must be in (0, 1]");
    if (ds.clips.empty()) throw Error("sample_descriptors: empty dataset");

    // canonical order: clips in dataset order, descriptors in file order
    std::vector<const std::vector<double>*> pool;
    int dim = -1;
    for (const auto& clip : ds.clips) {
        const DescriptorChannel* ch = clip.find_channel(channel);
        if (!ch)
            throw Error("sample_descriptors: clip '" + clip.clip_id + "' lacks channel '" +
                        channel + "'");
        if (dim < 0)
            dim = ch->dim;
        else if (ch->dim != dim)
            throw Error("sample_descriptors: channel '" + channel +
                        "' has inconsistent dim across clips");
        for (const auto& v : ch->vectors) pool.push_back(&v);
    }
    if (pool.empty()) throw Error("sample_descriptors: no descriptors in channel");

    const std::size_t total = pool.size();
    const std::size_t k =
        std::min(total, static_cast<std::size_t>(std::ceil(fraction * total)));

    DescriptorSample out;
    out.channel = channel;
    out.dim = dim;
    out.vectors.reserve(k);
    Rng rng(seed);
    for (std::size_t idx : rng.sample_indices(total, k)) out.vectors.push_back(*pool[idx]);
    return out;
}

Codebook build_codebook(const DescriptorSample& sample, int d, std::uint64_t seed,
                        int max_iter, double tol, KMeansStats* stats, int threads) {
    const std::size_t n = sample.vectors.size();
    const int dim = sample.dim;
    if (d < 1) throw Error("build_codebook: d must be >= 1");
    if (n < static_cast<std::size_t>(d))
        throw Error("build_codebook: sample of " + std::to_string(n) +
                    " descriptors is smaller than d=" + std::to_string(d));

    // contiguous copy of the points for cache-friendly scans
    std::vector<double> points(n * dim);
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) points[i * dim + j] = sample.vectors[i][j];
    auto point = [&](std::size_t i) { return &points[i * dim]; };

    std::vector<double> centroids(static_cast<std::size_t>(d) * dim);
    auto centroid = [&](int c) { return &centroids[static_cast<std::size_t>(c) * dim]; };

    // k-means++ seeding
    Rng rng(seed);
    {
        std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
        const std::size_t first = rng.below(n);
        std::copy(point(first), point(first) + dim, centroid(0));
        for (int c = 1; c < d; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dist = sq_dist(point(i), centroid(c - 1), dim);
                if (dist < min_sq[i]) min_sq[i] = dist;
                total += min_sq[i];
            }
            std::size_t pick;
            if (total <= 0.0) {
                // all remaining mass at already-chosen points (duplicates)
                pick = rng.below(n);
            } else {
                const double u = rng.uniform01() * total;
                double cum = 0.0;
                pick = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    cum += min_sq[i];
                    if (u < cum) {
                        pick = i;
                        break;
                    }
                }
            }
            std::copy(point(pick), point(pick) + dim, centroid(c));
        }
    }

    std::vector<int> assign(n, 0);
    std::vector<double> dist_to_assigned(n, 0.0);
    if (stats) {
        stats->distortion_history.clear();
        stats->iterations = 0;
        stats->converged = false;
    }

    double prev_distortion = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        // assignment; parallel-safe: disjoint writes per point
        parallel_for_blocked(n, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                int best = 0;
                double best_d = sq_dist(point(i), centroid(0), dim);
                for (int c = 1; c < d; ++c) {
                    const double dd = sq_dist(point(i), centroid(c), dim);
                    if (dd < best_d) {  // strict: ties keep the lowest index
                        best_d = dd;
                        best = c;
                    }
                }
                assign[i] = best;
                dist_to_assigned[i] = best_d;
            }
        });

        double distortion = 0.0;
        for (std::size_t i = 0; i < n; ++i) distortion += dist_to_assigned[i];
        if (stats) stats->distortion_history.push_back(distortion);
        if (distortion > prev_distortion + 1e-9 * std::max(1.0, prev_distortion))
            throw Error("build_codebook: distortion increased, numerical inconsistency");
        prev_distortion = distortion;

        // centroid update
        std::vector<double> sums(static_cast<std::size_t>(d) * dim, 0.0);
        std::vector<std::size_t> counts(d, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const int c = assign[i];
            counts[c]++;
            double* s = &sums[static_cast<std::size_t>(c) * dim];
            const double* p = point(i);
            for (int j = 0; j < dim; ++j) s[j] += p[j];
        }

        double max_shift_sq = 0.0;
        for (int c = 0; c < d; ++c) {
            if (counts[c] == 0) continue;
            double shift = 0.0;
            double* ctr = centroid(c);
            const double* s = &sums[static_cast<std::size_t>(c) * dim];
            for (int j = 0; j < dim; ++j) {
                const double v = s[j] / counts[c];
                const double delta = v - ctr[j];
                shift += delta * delta;
                ctr[j] = v;
            }
            max_shift_sq = std::max(max_shift_sq, shift);
        }

        // empty-cluster repair: reseed on the point farthest from its centroid.
        // The repaired centroid coincides with a point, so the next assignment
        // cannot raise the distortion.
        for (int c = 0; c < d; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dd = sq_dist(point(i), centroid(assign[i]), dim);
                if (dd > far_d) {
                    far_d = dd;
                    far = i;
                }
            }
            std::copy(point(far), point(far) + dim, centroid(c));
            assign[far] = c;  // claims the point; keeps later repairs distinct
            max_shift_sq = std::numeric_limits<double>::infinity();
        }

        if (std::sqrt(std::max(0.0, max_shift_sq)) < tol) {
            ++iter;
            if (stats) stats->converged = true;
            break;
        }
    }
    if (stats) stats->iterations = iter;

    Codebook cb;
    cb.channel = sample.channel;
    cb.d = d;
    cb.dim = dim;
    cb.centroids.resize(d);
    for (int c = 0; c < d; ++c)
        cb.centroids[c].assign(centroid(c), centroid(c) + dim);
    return cb;
}

int nearest_centroid(const Codebook& cb, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != cb.dim)
        throw Error("nearest_centroid: descriptor dim " + std::to_string(x.size()) +
                    " != codebook dim " + std::to_string(cb.dim));
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < cb.d; ++c) {
        const double dd = sq_dist(x.data(), cb.centroids[c].data(), cb.dim);
        if (dd < best_d) {
            best_d = dd;
            best = c;
        }
    }
    return best;
}

BowHistogram quantize(const ClipRecord& clip, const Codebook& cb, bool normalize) {
    const DescriptorChannel* ch = clip.find_channel(cb.channel);
    if (!ch)
        throw Error("quantize: clip '" + clip.clip_id + "' lacks channel '" + cb.channel +
                    "'");
    if (ch->dim != cb.dim)
        throw Error("quantize: clip '" + clip.clip_id + "' channel dim " +
                    std::to_string(ch->dim) + " != codebook dim " + std::to_string(cb.dim));

    BowHistogram h;
    h.counts.assign(cb.d, 0.0);
    for (const auto& v : ch->vectors) h.counts[nearest_centroid(cb, v)] += 1.0;
    if (normalize) {
        double total = 0.0;
        for (double c : h.counts) total += c;
        if (total > 0.0)
            for (double& c : h.counts) c /= total;
        h.normalized = true;  // all-zero histogram of an empty clip stays zero
    }
    return h;
}

Dataset encode_dataset(const Dataset& ds, const std::vector<Codebook>& codebooks,
                       bool combine, int threads) {
    if (codebooks.empty()) throw Error("encode_dataset: no codebooks");
    if (!combine && codebooks.size() != 1)
        throw Error("encode_dataset: without combine, exactly one codebook is expected");

    Dataset out = ds;
    parallel_for(out.clips.size(), threads, [&](std::size_t i) {
        auto& clip = out.clips[i];
        std::vector<double> feature;
        for (const auto& cb : codebooks) {
            const BowHistogram h = quantize(clip, cb, /*normalize=*/true);
            feature.insert(feature.end(), h.counts.begin(), h.counts.end());
        }
        clip.feature = std::move(feature);
    });
    return out;
}

std::string codebook_to_json(const Codebook& cb) {
    nlohmann::json doc;
    doc["channel"] = cb.channel;
    doc["d"] = cb.d;
    doc["centroids"] = cb.centroids;
    return doc.dump();
}

Codebook codebook_from_json(const std::string& text) {
    Codebook cb;
    try {
        const auto doc = nlohmann::json::parse(text);
        cb.channel = doc.at("channel").get<std::string>();
        cb.d = doc.at("d").get<int>();
        cb.centroids = doc.at("centroids").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("codebook json: ") + e.what());
    }
    if (cb.centroids.size() != static_cast<std::size_t>(cb.d) || cb.d < 1)
        throw Error("codebook json: centroid count does not match d");
    cb.dim = static_cast<int>(cb.centroids.front().size());
    for (const auto& c : cb.centroids) {
        if (static_cast<int>(c.size()) != cb.dim)
            throw Error("codebook json: inconsistent centroid dims");
        for (double v : c)
            if (!std::isfinite(v)) throw Error("codebook json: non-finite centroid entry");
    }
    return cb;
}

}  // namespace emorep
