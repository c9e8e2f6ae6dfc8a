#include "emorep/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace emorep {

namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

constexpr const char* kHeader = "clip_id,sequence_id,behavior,emotions,descriptor_path";

std::vector<DescriptorChannel> load_descriptor_file(const std::filesystem::path& path,
                                                    long row) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open descriptor file '" + path.string() + "'", row,
                                 "descriptor_path");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ManifestError("descriptor file '" + path.string() + "': " + e.what(), row,
                            "descriptor_path");
    }
    if (!doc.is_object() || !doc.contains("channels") || !doc["channels"].is_array())
        throw ManifestError("descriptor file '" + path.string() + "' lacks a channels array",
                            row, "descriptor_path");

    std::vector<DescriptorChannel> channels;
    for (const auto& jc : doc["channels"]) {
        DescriptorChannel ch;
        try {
            ch.name = jc.at("name").get<std::string>();
            ch.dim = jc.at("dim").get<int>();
            ch.vectors = jc.at("vectors").get<std::vector<std::vector<double>>>();
        } catch (const json::exception& e) {
            throw ManifestError(
                "descriptor file '" + path.string() + "' has a malformed channel: " + e.what(),
                row, "descriptor_path");
        }
        if (ch.dim <= 0)
            throw ManifestError("descriptor file '" + path.string() + "' channel '" + ch.name +
                                    "' has non-positive dim",
                                row, "descriptor_path");
        for (const auto& v : ch.vectors)
            if (static_cast<int>(v.size()) != ch.dim)
                throw ManifestError("descriptor file '" + path.string() + "' channel '" +
                                        ch.name + "' has a vector of length " +
                                        std::to_string(v.size()) + ", expected " +
                                        std::to_string(ch.dim),
                                    row, "descriptor_path");
        channels.push_back(std::move(ch));
    }
    return channels;
}

}  // namespace

Dataset load_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw Error("cannot open manifest '" + manifest_path.string() + "'");
    const auto base = manifest_path.has_parent_path() ? manifest_path.parent_path()
                                                      : std::filesystem::path(".");

    Dataset ds;
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        const std::string trimmed = strip(line);
        if (trimmed.empty()) continue;
        if (row == 1) {
            if (trimmed != kHeader)
                throw ManifestError("manifest header must be '" + std::string(kHeader) + "'",
                                    row, "header");
            continue;
        }
        auto fields = split(trimmed, ',');
        if (fields.size() != 5)
            throw ManifestError(
                "expected 5 comma-separated fields, got " + std::to_string(fields.size()), row,
                "row");
        for (auto& f : fields) f = strip(f);

        ClipRecord clip;
        clip.clip_id = fields[0];
        clip.sequence_id = fields[1];
        if (clip.clip_id.empty()) throw ManifestError("empty clip_id", row, "clip_id");
        if (clip.sequence_id.empty())
            throw ManifestError("empty sequence_id", row, "sequence_id");

        try {
            clip.behavior = behavior_from_string(fields[2]);
        } catch (const Error& e) {
            throw ManifestError(e.what(), row, "behavior");
        }

        for (const auto& tok : split(fields[3], ';')) {
            const std::string label = strip(tok);
            if (label.empty()) continue;
            try {
                clip.emotion_annotations.push_back(emotion_from_string(label));
            } catch (const Error& e) {
                throw ManifestError(e.what(), row, "emotions");
            }
        }
        if (clip.emotion_annotations.empty())
            throw ManifestError("no emotion annotations", row, "emotions");
        clip.emotion = EmotionVector::one_hot(majority_vote(clip.emotion_annotations));
        clip.emotion_is_ground_truth = true;

        if (fields[4].empty())
            throw ManifestError("empty descriptor_path", row, "descriptor_path");
        clip.channels = load_descriptor_file(base / fields[4], row);

        ds.sequences.insert(clip.sequence_id);
        ds.clips.push_back(std::move(clip));
    }
    if (row == 0) throw Error("manifest '" + manifest_path.string() + "' is empty");
    return ds;
}

std::filesystem::path save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "descriptors");

    std::ostringstream manifest;
    manifest << kHeader << "\n";
    for (const auto& clip : ds.clips) {
        if (clip.channels.empty())
            throw Error("save_dataset: clip '" + clip.clip_id +
                        "' has no descriptors; the manifest format cannot carry encoded "
                        "features");
        json doc;
        doc["channels"] = json::array();
        for (const auto& ch : clip.channels) {
            json jc;
            jc["name"] = ch.name;
            jc["dim"] = ch.dim;
            jc["vectors"] = ch.vectors;
            doc["channels"].push_back(jc);
        }
        const std::string rel = "descriptors/" + clip.clip_id + ".json";
        std::ofstream out(dir / rel);
        if (!out) throw Error("save_dataset: cannot write '" + (dir / rel).string() + "'");
        out << doc.dump(2) << "\n";

        std::string emotions;
        for (std::size_t i = 0; i < clip.emotion_annotations.size(); ++i) {
            if (i) emotions += ';';
            emotions += to_string(clip.emotion_annotations[i]);
        }
        manifest << clip.clip_id << ',' << clip.sequence_id << ','
                 << to_string(clip.behavior) << ',' << emotions << ',' << rel << "\n";
    }

    const fs::path manifest_path = dir / "manifest.csv";
    std::ofstream out(manifest_path);
    if (!out) throw Error("save_dataset: cannot write '" + manifest_path.string() + "'");
    out << manifest.str();
    return manifest_path;
}

}  // namespace emorep
