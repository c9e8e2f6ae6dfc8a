#pragma once

#include <filesystem>

#include "emorep/dataset.hpp"

namespace emorep {

// Manifest format: CSV with header
//   clip_id,sequence_id,behavior,emotions,descriptor_path
// where `emotions` is a ';'-separated annotator list, labels lowercase, and
// `descriptor_path` is resolved relative to the manifest's directory.
// Descriptor files are one JSON document per clip:
//   { "channels": [ { "name": "...", "dim": D, "vectors": [[...], ...] } ] }
//
// Loading aggregates multi-annotator emotions by majority_vote. Malformed
// input raises ManifestError carrying the row and field.
Dataset load_manifest(const std::filesystem::path& manifest_path);

// Writes manifest.csv plus descriptors/<clip_id>.json under `dir`; returns the
// manifest path. Requires every clip to carry descriptors (the manifest format
// has no column for already-encoded features). load_manifest(save_dataset(ds))
// reproduces the dataset contents exactly.
std::filesystem::path save_dataset(const Dataset& ds, const std::filesystem::path& dir);

}  // namespace emorep
