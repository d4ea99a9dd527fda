#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "skelact/dataset_io.hpp"
#include "skelact/errors.hpp"
#include "skelact/types.hpp"

#include "test_util.hpp"

using namespace skelact;
namespace fs = std::filesystem;
using testutil::make_trial;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("skelact_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

Dataset two_trial_dataset() {
  std::vector<Trial> trials;
  trials.push_back(make_trial("alice", "wave", 0,
                              {{0, 0, 0, 1, 1, 1}, {0.5, 0, 0, 1, 1, 2}}));
  trials.push_back(make_trial("bob", "wave", 0,
                              {{0, 0, 1, 1, 0, 1}, {0, 0, 2, 1, 0, 3},
                               {0, 0, 3, 1, 0, 4}}));
  return Dataset::assemble("toy", std::move(trials));
}

}  // namespace

TEST_CASE("load_dataset: well-formed jsonl") {
  const fs::path dir = temp_dir();
  const fs::path file = dir / "ds.jsonl";
  write_file(file,
             R"({"subject":"s1","action":"a1","trial":0,"frames":[[[0,0,0],[1,1,1]],[[0,0,1],[1,1,2]]]})"
             "\n"
             R"({"subject":"s2","action":"a1","trial":0,"frames":[[[0,1,0],[2,1,1]]]})"
             "\n");
  const Dataset ds = load_dataset(file, DatasetFormat::canonical_jsonl);
  CHECK(ds.n_trials() == 2);
  CHECK(ds.joint_count == 2);
  CHECK(ds.subjects == std::vector<std::string>{"s1", "s2"});
  CHECK(ds.trials[0].frame_count() == 2);
}

TEST_CASE("load_dataset: inconsistent joint count names the trial") {
  const fs::path file = temp_dir() / "bad.jsonl";
  write_file(file,
             R"({"subject":"s1","action":"a1","trial":0,"frames":[[[0,0,0],[1,1,1]]]})"
             "\n"
             R"({"subject":"s1","action":"a1","trial":1,"frames":[[[0,0,0]]]})"
             "\n");
  CHECK_THROWS_WITH_AS(load_dataset(file, DatasetFormat::canonical_jsonl),
                       doctest::Contains("s1/a1/1"), DataError);
}

TEST_CASE("load_dataset: ragged frames within a trial name the trial") {
  const fs::path file = temp_dir() / "ragged.jsonl";
  write_file(file,
             R"({"subject":"s","action":"a","trial":0,"frames":[[[0,0,0],[1,1,1]],[[0,0,0]]]})"
             "\n");
  CHECK_THROWS_AS(load_dataset(file, DatasetFormat::canonical_jsonl),
                  DataError);
}

TEST_CASE("load_dataset: empty file") {
  const fs::path file = temp_dir() / "empty.jsonl";
  write_file(file, "");
  CHECK_THROWS_WITH_AS(load_dataset(file, DatasetFormat::canonical_jsonl),
                       doctest::Contains("empty dataset"), DataError);
}

TEST_CASE("load_dataset: malformed json reports the line number") {
  const fs::path file = temp_dir() / "broken.jsonl";
  write_file(file,
             R"({"subject":"s","action":"a","trial":0,"frames":[[[0,0,0]],[[1,1,1]]]})"
             "\n{not json\n");
  CHECK_THROWS_WITH_AS(load_dataset(file, DatasetFormat::canonical_jsonl),
                       doctest::Contains(":2"), DataError);
}

TEST_CASE("load_dataset: missing file is an IO error") {
  CHECK_THROWS_AS(load_dataset(temp_dir() / "nope.jsonl",
                               DatasetFormat::canonical_jsonl),
                  IoError);
}

TEST_CASE("load_dataset: skip-invalid reports skipped trial ids") {
  const fs::path file = temp_dir() / "mixed.jsonl";
  // Record two has ragged frames, record three a negative trial index.
  write_file(file,
             R"({"subject":"ok","action":"a","trial":0,"frames":[[[0,0,0]],[[1,0,0]]]})"
             "\n"
             R"({"subject":"bad","action":"a","trial":0,"frames":[[[0,0,0],[1,1,1]],[[0,0,0]]]})"
             "\n"
             R"({"subject":"worse","action":"a","trial":-3,"frames":[[[0,0,0]]]})"
             "\n");
  std::vector<std::string> skipped;
  LoadOptions opts;
  opts.skip_invalid = true;
  const Dataset ds =
      load_dataset(file, DatasetFormat::canonical_jsonl, opts, &skipped);
  CHECK(ds.n_trials() == 1);
  REQUIRE(skipped.size() == 2);
  CHECK(skipped[0] == "bad/a/0");
  CHECK(skipped[1] == "worse/a/-3");

  // Without the option the same file hard-fails.
  CHECK_THROWS_AS(load_dataset(file, DatasetFormat::canonical_jsonl),
                  DataError);

  // Numeric overflow makes the record unparseable: hard error even
  // with skip-invalid, reported with its line number.
  const fs::path overflow = temp_dir() / "overflow.jsonl";
  write_file(overflow,
             R"({"subject":"s","action":"a","trial":0,"frames":[[[1e999,0,0]]]})"
             "\n");
  CHECK_THROWS_WITH_AS(
      load_dataset(overflow, DatasetFormat::canonical_jsonl, opts),
      doctest::Contains(":1"), DataError);
}

TEST_CASE("save/load round trip is the identity") {
  const Dataset ds = two_trial_dataset();
  const fs::path file = temp_dir() / "rt.jsonl";
  save_dataset(ds, file);
  const Dataset back = load_dataset(file, DatasetFormat::canonical_jsonl);
  CHECK(back.trials == ds.trials);
  CHECK(back.joint_count == ds.joint_count);
}

TEST_CASE("unicode subject ids survive the round trip") {
  std::vector<Trial> trials;
  trials.push_back(make_trial("søren☺", "händewinken", 0,
                              {{0, 0, 0}, {1, 0, 0}}));
  trials.push_back(make_trial("søren☺", "händewinken", 1,
                              {{0, 0, 1}, {1, 0, 1}}));
  const Dataset ds = Dataset::assemble("uni", std::move(trials));
  const fs::path file = temp_dir() / "uni.jsonl";
  save_dataset(ds, file);
  const Dataset back = load_dataset(file, DatasetFormat::canonical_jsonl);
  CHECK(back.trials[0].subject == "søren☺");
  CHECK(back.trials[0].action == "händewinken");
}

TEST_CASE("save_dataset: unwritable path is an IO error") {
  CHECK_THROWS_AS(save_dataset(two_trial_dataset(),
                               "/nonexistent_dir_zz/out.jsonl"),
                  IoError);
}

TEST_CASE("dataset invariants: duplicates and mixed J rejected") {
  std::vector<Trial> dup;
  dup.push_back(make_trial("s", "a", 0, {{0, 0, 0}, {1, 0, 0}}));
  dup.push_back(make_trial("s", "a", 0, {{0, 0, 1}, {1, 0, 1}}));
  CHECK_THROWS_WITH_AS(Dataset::assemble("d", std::move(dup)),
                       doctest::Contains("duplicate"), DataError);

  std::vector<Trial> mixed;
  mixed.push_back(make_trial("s", "a", 0, {{0, 0, 0}}));
  mixed.push_back(make_trial("s", "a", 1, {{0, 0, 0, 1, 1, 1}}));
  CHECK_THROWS_AS(Dataset::assemble("m", std::move(mixed)), DataError);

  CHECK_THROWS_WITH_AS(Dataset::assemble("e", {}),
                       doctest::Contains("empty dataset"), DataError);
}

TEST_CASE("csv-frames: directory of per-trial csv files") {
  const fs::path dir = temp_dir();
  write_file(dir / "alice_wave_0.csv",
             "j0x,j0y,j0z\n0,0,0\n1,0,0\n2,0,0\n");
  write_file(dir / "bob_raise_arm_1.csv", "0,1,0\n0,2,0\n");  // no header
  const Dataset ds = load_dataset(dir, DatasetFormat::csv_frames);
  CHECK(ds.n_trials() == 2);
  CHECK(ds.joint_count == 1);
  CHECK(ds.trials[0].subject == "alice");
  CHECK(ds.trials[0].action == "wave");
  CHECK(ds.trials[0].trial_index == 0);
  CHECK(ds.trials[0].frame_count() == 3);
  // Action keeps interior underscores.
  CHECK(ds.trials[1].subject == "bob");
  CHECK(ds.trials[1].action == "raise_arm");
  CHECK(ds.trials[1].trial_index == 1);

  CHECK(detect_format(dir) == DatasetFormat::csv_frames);
  CHECK(detect_format(dir / "alice_wave_0.csv") ==
        DatasetFormat::canonical_jsonl);
}

TEST_CASE("csv-frames: bad filename or cell rejected") {
  const fs::path dir = temp_dir();
  write_file(dir / "nounderscore.csv", "0,0,0\n");
  CHECK_THROWS_AS(load_dataset(dir, DatasetFormat::csv_frames), DataError);

  const fs::path dir2 = temp_dir();
  write_file(dir2 / "a_b_0.csv", "0,zz,0\n");
  CHECK_THROWS_WITH_AS(load_dataset(dir2, DatasetFormat::csv_frames),
                       doctest::Contains("zz"), DataError);
}

TEST_CASE("fnv1a64 digest is stable and content-sensitive") {
  const fs::path dir = temp_dir();
  write_file(dir / "x.bin", "hello");
  write_file(dir / "y.bin", "hello");
  write_file(dir / "z.bin", "hellp");
  CHECK(fnv1a64_file(dir / "x.bin") == fnv1a64_file(dir / "y.bin"));
  CHECK(fnv1a64_file(dir / "x.bin") != fnv1a64_file(dir / "z.bin"));
  CHECK(fnv1a64_hex(fnv1a64_file(dir / "x.bin")).size() == 16);
}
