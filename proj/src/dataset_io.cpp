#include "skelact/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "skelact/errors.hpp"

namespace skelact {

using nlohmann::json;

namespace {

// Header fields identify the trial; failures here are hard errors.
Trial trial_header_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw DataError(where + ": record is not a JSON object");
  for (const char* key : {"subject", "action", "trial", "frames"}) {
    if (!j.contains(key))
      throw DataError(where + ": missing field \"" + key + "\"");
  }
  if (!j["subject"].is_string() || !j["action"].is_string())
    throw DataError(where + ": subject/action must be strings");
  if (!j["trial"].is_number_integer())
    throw DataError(where + ": trial must be an integer");

  Trial t;
  t.subject = j["subject"].get<std::string>();
  t.action = j["action"].get<std::string>();
  t.trial_index = j["trial"].get<int>();
  return t;
}

// Body errors are attributable to the trial id and may be skipped
// under --skip-invalid.
void trial_frames_from_json(const json& j, Trial& t,
                            const std::string& where) {
  const json& frames = j["frames"];
  if (!frames.is_array() || frames.empty())
    throw DataError(where + ": frames must be a nonempty array");

  t.joint_count = -1;
  for (const json& frame : frames) {
    if (!frame.is_array() || frame.empty())
      throw DataError(where + ": each frame must be a nonempty array");
    if (t.joint_count < 0) {
      t.joint_count = static_cast<int>(frame.size());
      t.coords.reserve(frames.size() * frame.size() * 3);
    } else if (static_cast<int>(frame.size()) != t.joint_count) {
      throw DataError(where + ": trial " + t.id() +
                      " has frames with differing joint counts");
    }
    for (const json& joint : frame) {
      if (!joint.is_array() || joint.size() != 3)
        throw DataError(where + ": each joint must be an [x,y,z] triple");
      for (const json& v : joint) {
        if (!v.is_number())
          throw DataError(where + ": joint coordinates must be numbers");
        t.coords.push_back(v.get<double>());
      }
    }
  }
  validate_trial(t);
}

json trial_to_json(const Trial& t) {
  json frames = json::array();
  const int tau = t.frame_count();
  for (int f = 0; f < tau; ++f) {
    json frame = json::array();
    const auto fr = t.frame(f);
    for (int j = 0; j < t.joint_count; ++j) {
      frame.push_back(json::array(
          {fr[3 * j + 0], fr[3 * j + 1], fr[3 * j + 2]}));
    }
    frames.push_back(std::move(frame));
  }
  json j;
  j["subject"] = t.subject;
  j["action"] = t.action;
  j["trial"] = t.trial_index;
  j["frames"] = std::move(frames);
  return j;
}

std::vector<Trial> load_jsonl(const std::filesystem::path& path,
                              const LoadOptions& opts,
                              std::vector<std::string>* skipped_ids) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<Trial> trials;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": malformed JSON record: " + e.what());
    }
    Trial t = trial_header_from_json(j, where);
    try {
      trial_frames_from_json(j, t, where);
    } catch (const DataError&) {
      if (opts.skip_invalid) {
        if (skipped_ids) skipped_ids->push_back(t.id());
        continue;
      }
      throw;
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

// Parses "<subject>_<action>_<trial>" from a csv-frames filename stem.
void parse_csv_stem(const std::string& stem, Trial& t,
                    const std::string& where) {
  const auto first = stem.find('_');
  const auto last = stem.rfind('_');
  if (first == std::string::npos || first == last)
    throw DataError(where +
                    ": filename does not match <subject>_<action>_<trial>.csv");
  t.subject = stem.substr(0, first);
  t.action = stem.substr(first + 1, last - first - 1);
  const std::string idx = stem.substr(last + 1);
  auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(),
                                 t.trial_index);
  if (ec != std::errc() || p != idx.data() + idx.size())
    throw DataError(where + ": trial index \"" + idx + "\" is not an integer");
}

Trial load_csv_trial(const std::filesystem::path& file,
                     const LoadOptions& opts) {
  (void)opts;
  Trial t;
  parse_csv_stem(file.stem().string(), t, file.string());

  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());

  std::string line;
  int lineno = 0;
  int columns = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    // A header row (starts with a letter) is optional; skip it.
    if (lineno == 1 && !line.empty() &&
        (std::isalpha(static_cast<unsigned char>(line[0])) != 0)) {
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    int count = 0;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const char* begin = cell.data();
      const char* end = cell.data() + cell.size();
      while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
      while (end > begin &&
             (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r'))
        --end;
      auto [p, ec] = std::from_chars(begin, end, v);
      if (ec != std::errc() || p != end)
        throw DataError(file.string() + ":" + std::to_string(lineno) +
                        ": cannot parse value \"" + cell + "\"");
      t.coords.push_back(v);
      ++count;
    }
    if (columns < 0) {
      if (count == 0 || count % 3 != 0)
        throw DataError(file.string() + ":" + std::to_string(lineno) +
                        ": column count must be a positive multiple of 3");
      columns = count;
    } else if (count != columns) {
      throw DataError(file.string() + ":" + std::to_string(lineno) +
                      ": inconsistent column count");
    }
  }
  if (columns <= 0) throw DataError(file.string() + ": no frames");
  t.joint_count = columns / 3;
  return t;
}

std::vector<Trial> load_csv_frames(const std::filesystem::path& dir,
                                   const LoadOptions& opts,
                                   std::vector<std::string>* skipped_ids) {
  if (!std::filesystem::is_directory(dir))
    throw IoError(dir.string() + " is not a directory (csv-frames expects one)");

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<Trial> trials;
  for (const auto& f : files) {
    Trial t = load_csv_trial(f, opts);
    try {
      validate_trial(t);
    } catch (const DataError&) {
      if (opts.skip_invalid) {
        if (skipped_ids) skipped_ids->push_back(t.id());
        continue;
      }
      throw;
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

}  // namespace

DatasetFormat detect_format(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? DatasetFormat::csv_frames
                                             : DatasetFormat::canonical_jsonl;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const LoadOptions& opts,
                     std::vector<std::string>* skipped_ids) {
  if (!std::filesystem::exists(path))
    throw IoError("no such file or directory: " + path.string());

  std::vector<Trial> trials =
      format == DatasetFormat::canonical_jsonl
          ? load_jsonl(path, opts, skipped_ids)
          : load_csv_frames(path, opts, skipped_ids);
  if (trials.empty()) throw DataError("empty dataset: " + path.string());
  return Dataset::assemble(path.stem().string(), std::move(trials));
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const Trial& t : ds.trials) {
    out << trial_to_json(t).dump() << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

std::string fnv1a64_hex(std::uint64_t digest) {
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = hex[digest & 0xf];
    digest >>= 4;
  }
  return s;
}

}  // namespace skelact
