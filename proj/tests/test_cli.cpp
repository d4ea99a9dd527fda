// Integration tests driving the real CLI binary (path via SKELACT_BIN).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("SKELACT_BIN");
  REQUIRE_MESSAGE(b != nullptr, "SKELACT_BIN must point at the skelact binary");
  return b;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path work_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("skelact_cli_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: ", p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  long n = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_CASE("synth: trial count and byte-identical reruns") {
  const fs::path dir = work_dir();
  const std::string args =
      "synth --subjects 5 --actions 8 --trials 6 --joints 3 --tau-min 8 "
      "--tau-max 12 --seed 1 --output-dir ";
  CHECK(run(args + (dir / "a").string()) == 0);
  CHECK(run(args + (dir / "b").string()) == 0);
  CHECK(count_lines(dir / "a" / "dataset.jsonl") == 5 * 8 * 6);
  CHECK(slurp(dir / "a" / "dataset.jsonl") ==
        slurp(dir / "b" / "dataset.jsonl"));
}

TEST_CASE("synth: zero trials is a usage error (exit 3)") {
  CHECK(run("synth --trials 0") == 3);
}

TEST_CASE("eval: rerun with the same seed is byte-identical; reps counted") {
  const fs::path dir = work_dir();
  REQUIRE(run("synth --subjects 3 --actions 3 --trials 3 --joints 2 "
              "--tau-min 8 --tau-max 12 --sigma-noise 0.2 --seed 4 "
              "--output-dir " + (dir / "ds").string()) == 0);
  const std::string data = (dir / "ds" / "dataset.jsonl").string();

  const std::string eval_args =
      "eval --data " + data + " --feature cov --strategy pers --reps 5 "
      "--seed 42 --output-dir ";
  REQUIRE(run(eval_args + (dir / "e1").string()) == 0);
  REQUIRE(run(eval_args + (dir / "e2").string()) == 0);
  CHECK(slurp(dir / "e1" / "eval_report.json") ==
        slurp(dir / "e2" / "eval_report.json"));

  const json report = json::parse(slurp(dir / "e1" / "eval_report.json"));
  CHECK(report["per_unit_pct"].size() == 5);
  CHECK(report["strategy"] == "pers");
}

TEST_CASE("eval: exit codes for config, io and training failures") {
  const fs::path dir = work_dir();
  REQUIRE(run("synth --subjects 2 --actions 1 --trials 3 --joints 2 "
              "--tau-min 8 --tau-max 10 --seed 2 --output-dir " +
              (dir / "one_action").string()) == 0);

  CHECK(run("eval --strategy nope --data x.jsonl") == 3);
  CHECK(run("eval --strategy cv --data /does/not/exist.jsonl") == 2);
  // Single action class cannot train: training family (exit 5).
  CHECK(run("eval --strategy cv --reps 2 --data " +
            (dir / "one_action" / "dataset.jsonl").string() +
            " --output-dir " + (dir / "out").string()) == 5);
}

TEST_CASE("two-stage: single-subject dataset exits with the data code") {
  const fs::path dir = work_dir();
  REQUIRE(run("synth --subjects 1 --actions 3 --trials 3 --joints 2 "
              "--tau-min 8 --tau-max 10 --seed 2 --output-dir " +
              (dir / "solo").string()) == 0);
  CHECK(run("two-stage --data " + (dir / "solo" / "dataset.jsonl").string() +
            " --output-dir " + (dir / "out").string()) == 4);
}

TEST_CASE("stats: report files and summary") {
  const fs::path dir = work_dir();
  REQUIRE(run("synth --subjects 3 --actions 3 --trials 3 --joints 2 "
              "--tau-min 8 --tau-max 12 --sigma-noise 0.15 --seed 6 "
              "--output-dir " + (dir / "ds").string()) == 0);
  REQUIRE(run("stats --data " + (dir / "ds" / "dataset.jsonl").string() +
              " --feature cov --reps 2 --seed 3 --output-dir " +
              (dir / "st").string()) == 0);
  const std::string csv = slurp(dir / "st" / "variability_report.csv");
  CHECK(csv.find("dataset,feature,p_subject,p_inter,p_intra,delta") == 0);
  const json j = json::parse(slurp(dir / "st" / "variability_report.json"));
  CHECK(j.contains("p_inter"));
}

TEST_CASE("reproduce: byte-identical reports at any thread count") {
  const fs::path dir = work_dir();
  REQUIRE(run("synth --subjects 3 --actions 3 --trials 3 --joints 2 "
              "--tau-min 8 --tau-max 12 --sigma-noise 0.2 --seed 11 "
              "--output-dir " + (dir / "ds").string()) == 0);
  const std::string data = (dir / "ds" / "dataset.jsonl").string();

  for (const std::string feature : {std::string("cov"), std::string("dtw")}) {
    const fs::path out = dir / ("eval_" + feature);
    REQUIRE(run("eval --data " + data + " --feature " + feature +
                " --strategy cv --reps 3 --seed 8 --threads 2 "
                "--output-dir " + out.string()) == 0);
    const fs::path redo = dir / ("redo_" + feature);
    REQUIRE(run("reproduce " + (out / "manifest.json").string() +
                " --threads 1 --output-dir " + redo.string()) == 0);
    CHECK(slurp(out / "eval_report.json") == slurp(redo / "eval_report.json"));
    CHECK(slurp(out / "eval_report.csv") == slurp(redo / "eval_report.csv"));
  }

  // A reproduced synth regenerates the identical dataset.
  const fs::path redo_ds = dir / "redo_ds";
  REQUIRE(run("reproduce " + (dir / "ds" / "manifest.json").string() +
              " --output-dir " + redo_ds.string()) == 0);
  CHECK(slurp(dir / "ds" / "dataset.jsonl") ==
        slurp(redo_ds / "dataset.jsonl"));

  // Tampering with the input file is caught via the digest.
  std::ofstream append(data, std::ios::app);
  append << "\n";
  append.close();
  CHECK(run("reproduce " + (dir / "eval_cov" / "manifest.json").string() +
            " --output-dir " + (dir / "tampered").string()) == 4);
}

TEST_CASE("config file provides defaults; flags override") {
  const fs::path dir = work_dir();
  REQUIRE(run("synth --subjects 3 --actions 3 --trials 3 --joints 2 "
              "--tau-min 8 --tau-max 12 --seed 13 --output-dir " +
              (dir / "ds").string()) == 0);

  json config;
  config["data_path"] = (dir / "ds" / "dataset.jsonl").string();
  config["strategy"] = "cv";
  config["reps"] = 4;
  config["seed"] = 21;
  config["output_dir"] = (dir / "from_config").string();
  std::ofstream(dir / "config.json") << config.dump(2);

  REQUIRE(run("eval --config " + (dir / "config.json").string()) == 0);
  const json r1 = json::parse(slurp(dir / "from_config" / "eval_report.json"));
  CHECK(r1["per_unit_pct"].size() == 4);

  // --reps on the command line beats the file.
  REQUIRE(run("eval --config " + (dir / "config.json").string() +
              " --reps 2 --output-dir " + (dir / "override").string()) == 0);
  const json r2 = json::parse(slurp(dir / "override" / "eval_report.json"));
  CHECK(r2["per_unit_pct"].size() == 2);
}

TEST_CASE("audit dumps: gram csv for dtw, descriptors csv for cov") {
  const fs::path dir = work_dir();
  REQUIRE(run("synth --subjects 2 --actions 2 --trials 2 --joints 2 "
              "--tau-min 8 --tau-max 10 --seed 17 --output-dir " +
              (dir / "ds").string()) == 0);
  const std::string data = (dir / "ds" / "dataset.jsonl").string();

  REQUIRE(run("eval --data " + data + " --feature dtw --strategy oso "
              "--dump-gram --output-dir " + (dir / "g").string()) == 0);
  CHECK(slurp(dir / "g" / "gram.csv").rfind("id,", 0) == 0);

  REQUIRE(run("eval --data " + data + " --feature cov --strategy oso "
              "--dump-descriptors --dump-models --output-dir " +
              (dir / "d").string()) == 0);
  CHECK(slurp(dir / "d" / "descriptors.csv").rfind("subject,action,trial", 0) ==
        0);
  CHECK(fs::exists(dir / "d" / "models" / "plan_0.json"));
  const json model = json::parse(slurp(dir / "d" / "models" / "plan_0.json"));
  CHECK(model["format"] == "skelact-svm");
}

TEST_CASE("csv-frames directory loads through the CLI") {
  const fs::path dir = work_dir();
  const fs::path csv_dir = dir / "frames";
  fs::create_directories(csv_dir);
  const auto write_trial = [&](const std::string& name, double offset) {
    std::ofstream out(csv_dir / name);
    out << "j0x,j0y,j0z\n";
    for (int f = 0; f < 6; ++f)
      out << offset + f << "," << offset << "," << offset << "\n";
  };
  write_trial("s1_wave_0.csv", 0.0);
  write_trial("s1_wave_1.csv", 0.1);
  write_trial("s1_jump_0.csv", 5.0);
  write_trial("s1_jump_1.csv", 5.1);
  write_trial("s2_wave_0.csv", 0.2);
  write_trial("s2_wave_1.csv", 0.3);
  write_trial("s2_jump_0.csv", 5.2);
  write_trial("s2_jump_1.csv", 5.3);

  REQUIRE(run("eval --data " + csv_dir.string() +
              " --feature dtw --strategy cv --reps 2 --output-dir " +
              (dir / "out").string()) == 0);
  const json report = json::parse(slurp(dir / "out" / "eval_report.json"));
  CHECK(report["feature"] == "dtw");
}
