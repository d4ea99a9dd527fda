#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skelact/types.hpp"

namespace skelact {

enum class DatasetFormat { canonical_jsonl, csv_frames };

struct LoadOptions {
  // When set, trials violating invariants are skipped and reported
  // instead of aborting the load.
  bool skip_invalid = false;
};

// Canonical format: line-delimited JSON, one trial per line:
//   {"subject": str, "action": str, "trial": int,
//    "frames": [[[x,y,z] * J] * tau]}
// csv-frames: a directory of one CSV per trial, 3J columns
// j0x,j0y,j0z,..., one row per frame, metadata from the filename
// pattern <subject>_<action>_<trial>.csv (subject is the text before
// the first underscore, trial after the last; the action may itself
// contain underscores).
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const LoadOptions& opts = {},
                     std::vector<std::string>* skipped_ids = nullptr);

// Directory -> csv_frames, regular file -> canonical_jsonl.
DatasetFormat detect_format(const std::filesystem::path& path);

// Writes the canonical line-delimited JSON form; round-trips exactly.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// FNV-1a 64-bit digest of a file's bytes, as 16 hex chars. Used in run
// manifests to pin the input a report was computed from.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string fnv1a64_hex(std::uint64_t digest);

}  // namespace skelact
