#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deconfound/data/utterance.hpp"
#include "deconfound/features/mfb.hpp"

namespace dcfd::data {

// Binary tensor file: u64 rank, u64 dims[rank], f64 payload, all
// little-endian. Used for precomputed acoustic features.
net::Tensor read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const net::Tensor& tensor);

// Minimal RIFF/WAVE reader: mono PCM16 or IEEE float32.
features::Waveform read_wav(const std::filesystem::path& path);

// Writes content to a temp file in the target directory, then renames into
// place, so partial outputs are never observed at the final path.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

// Manifest: one JSON object per line. Relative acoustic paths resolve
// against the manifest's directory.
//
//   {"id": "...", "speaker": "...", "session": "...", "corpus": "...",
//    "duration_s": 5.2, "tokens": ["i", ...],
//    "activation": 6.5, "valence": 4.0,
//    "confound": {"kind": "pss", "score": 21.0}
//               | {"kind": "spontaneity", "value": "improvised"}
//               | null,
//    "acoustic": "features/u00001.dtn" | null}
//
// load_features: eagerly reads referenced feature files (.dtn) into the
// utterance; .wav references stay as paths for cmd_featurize.
std::vector<Utterance> read_manifest(const std::filesystem::path& path, bool load_features = true);

// Writes the manifest plus one feature file per inline acoustic tensor into
// feature_dir (relative to the manifest's directory). Utterances that came
// with a path and no inline tensor keep their path.
void write_manifest(const std::filesystem::path& path, std::vector<Utterance>& utterances,
                    const std::string& feature_dir = "features");

}  // namespace dcfd::data
