// skelact: skeleton-motion action recognition evaluation toolkit CLI.
//
// Subcommands: synth, eval, stats, two-stage, reproduce. Every run
// writes a manifest.json with the resolved configuration and input
// digest; `reproduce <manifest>` replays it byte-identically.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "skelact/dataset_io.hpp"
#include "skelact/errors.hpp"
#include "skelact/format.hpp"
#include "skelact/protocols.hpp"
#include "skelact/stats.hpp"
#include "skelact/svm.hpp"
#include "skelact/synth.hpp"
#include "skelact/two_stage.hpp"
#include "skelact/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skelact;

namespace {

// Every flag of every subcommand, in one round-trippable bag. The
// manifest stores exactly this.
struct ExperimentConfig {
  // input dataset
  std::string data_path;
  std::string data_format = "auto";  // auto | jsonl | csv
  bool skip_invalid = false;
  // synth
  int subjects = 5;
  int actions = 8;
  int trials = 6;
  int joints = 6;
  int tau_min = 20;
  int tau_max = 40;
  double sigma_subj = 1.0;
  double sigma_noise = 0.1;
  // features
  std::string feature = "cov";
  double eps_scale = 1e-6;
  bool sqrt2_offdiag = false;
  double variance_floor = 1e-8;
  bool dtw_normalize = false;
  int dtw_band = -1;
  // svm
  double svm_c = 10.0;
  double svm_tol = 1e-3;
  int max_passes = 50;
  bool spectral_shift = false;
  // protocol
  std::string strategy = "cv";  // oso | cv | pers
  int reps = 20;
  double train_frac = 2.0 / 3.0;
  bool stratify_actions = false;
  // stats
  bool zscore_cov = false;
  bool exclude_single_cells = false;
  bool per_rep_p_subject = false;
  // two-stage
  bool per_subject_normalizers = false;
  // dumps
  bool dump_gram = false;
  bool dump_descriptors = false;
  bool dump_models = false;
  // global
  std::uint64_t seed = 0;
  int threads = 0;
  std::string output_dir = "out";
  std::string report_format = "both";  // json | csv | both
};

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["data_path"] = c.data_path;
  j["data_format"] = c.data_format;
  j["skip_invalid"] = c.skip_invalid;
  j["subjects"] = c.subjects;
  j["actions"] = c.actions;
  j["trials"] = c.trials;
  j["joints"] = c.joints;
  j["tau_min"] = c.tau_min;
  j["tau_max"] = c.tau_max;
  j["sigma_subj"] = c.sigma_subj;
  j["sigma_noise"] = c.sigma_noise;
  j["feature"] = c.feature;
  j["eps_scale"] = c.eps_scale;
  j["sqrt2_offdiag"] = c.sqrt2_offdiag;
  j["variance_floor"] = c.variance_floor;
  j["dtw_normalize"] = c.dtw_normalize;
  j["dtw_band"] = c.dtw_band;
  j["svm_c"] = c.svm_c;
  j["svm_tol"] = c.svm_tol;
  j["max_passes"] = c.max_passes;
  j["spectral_shift"] = c.spectral_shift;
  j["strategy"] = c.strategy;
  j["reps"] = c.reps;
  j["train_frac"] = c.train_frac;
  j["stratify_actions"] = c.stratify_actions;
  j["zscore_cov"] = c.zscore_cov;
  j["exclude_single_cells"] = c.exclude_single_cells;
  j["per_rep_p_subject"] = c.per_rep_p_subject;
  j["per_subject_normalizers"] = c.per_subject_normalizers;
  j["dump_gram"] = c.dump_gram;
  j["dump_descriptors"] = c.dump_descriptors;
  j["dump_models"] = c.dump_models;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["report_format"] = c.report_format;
  return j;
}

void config_from_json(const json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto get = [&](const char* key, auto& target) {
    if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
  };
  get("data_path", c.data_path);
  get("data_format", c.data_format);
  get("skip_invalid", c.skip_invalid);
  get("subjects", c.subjects);
  get("actions", c.actions);
  get("trials", c.trials);
  get("joints", c.joints);
  get("tau_min", c.tau_min);
  get("tau_max", c.tau_max);
  get("sigma_subj", c.sigma_subj);
  get("sigma_noise", c.sigma_noise);
  get("feature", c.feature);
  get("eps_scale", c.eps_scale);
  get("sqrt2_offdiag", c.sqrt2_offdiag);
  get("variance_floor", c.variance_floor);
  get("dtw_normalize", c.dtw_normalize);
  get("dtw_band", c.dtw_band);
  get("svm_c", c.svm_c);
  get("svm_tol", c.svm_tol);
  get("max_passes", c.max_passes);
  get("spectral_shift", c.spectral_shift);
  get("strategy", c.strategy);
  get("reps", c.reps);
  get("train_frac", c.train_frac);
  get("stratify_actions", c.stratify_actions);
  get("zscore_cov", c.zscore_cov);
  get("exclude_single_cells", c.exclude_single_cells);
  get("per_rep_p_subject", c.per_rep_p_subject);
  get("per_subject_normalizers", c.per_subject_normalizers);
  get("dump_gram", c.dump_gram);
  get("dump_descriptors", c.dump_descriptors);
  get("dump_models", c.dump_models);
  get("seed", c.seed);
  get("threads", c.threads);
  get("output_dir", c.output_dir);
  get("report_format", c.report_format);
}

FeatureOptions feature_options(const ExperimentConfig& c) {
  FeatureOptions f;
  f.eps_scale = c.eps_scale;
  f.sqrt2_offdiag = c.sqrt2_offdiag;
  f.variance_floor = c.variance_floor;
  f.dtw.normalize_by_path = c.dtw_normalize;
  f.dtw.band = c.dtw_band;
  return f;
}

SvmConfig svm_config(const ExperimentConfig& c) {
  SvmConfig s;
  s.C = c.svm_c;
  s.tol = c.svm_tol;
  s.max_passes = c.max_passes;
  s.spectral_shift = c.spectral_shift;
  s.seed = c.seed;
  return s;
}

SplitConfig split_config(const ExperimentConfig& c) {
  SplitConfig s;
  s.reps = c.reps;
  s.train_frac = c.train_frac;
  s.seed = c.seed;
  s.stratify_actions = c.stratify_actions;
  return s;
}

SynthConfig synth_config(const ExperimentConfig& c) {
  SynthConfig s;
  s.n_subjects = c.subjects;
  s.n_actions = c.actions;
  s.trials_per_pair = c.trials;
  s.joint_count = c.joints;
  s.frame_count_min = c.tau_min;
  s.frame_count_max = c.tau_max;
  s.subject_style_scale = c.sigma_subj;
  s.intra_noise_scale = c.sigma_noise;
  s.seed = c.seed;
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command) {
  json m;
  m["tool"] = "skelact";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = config_to_json(cfg);
  if (!cfg.data_path.empty() && fs::exists(cfg.data_path) &&
      !fs::is_directory(cfg.data_path)) {
    m["input"] = {{"path", cfg.data_path},
                  {"fnv1a64", fnv1a64_hex(fnv1a64_file(cfg.data_path))}};
  } else {
    m["input"] = nullptr;
  }
  write_text(fs::path(cfg.output_dir) / "manifest.json", m.dump(2) + "\n");
}

Dataset load_input(const ExperimentConfig& cfg) {
  if (cfg.data_path.empty())
    throw ConfigError("missing --data <path> (dataset file or csv directory)");
  DatasetFormat format;
  if (cfg.data_format == "auto") format = detect_format(cfg.data_path);
  else if (cfg.data_format == "jsonl") format = DatasetFormat::canonical_jsonl;
  else if (cfg.data_format == "csv") format = DatasetFormat::csv_frames;
  else throw ConfigError("unknown data format \"" + cfg.data_format + "\"");

  LoadOptions opts;
  opts.skip_invalid = cfg.skip_invalid;
  std::vector<std::string> skipped;
  Dataset ds = load_dataset(cfg.data_path, format, opts, &skipped);
  for (const std::string& id : skipped)
    std::cerr << "skipped invalid trial: " << id << "\n";
  return ds;
}

void apply_threads(const ExperimentConfig& cfg) {
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
}

void ensure_output_dir(const ExperimentConfig& cfg) {
  if (!fs::exists(cfg.output_dir)) fs::create_directories(cfg.output_dir);
}

void dump_feature_artifacts(const ExperimentConfig& cfg, const Dataset& ds,
                            const FeatureCache& cache) {
  const fs::path dir(cfg.output_dir);
  if (cfg.dump_gram && cache.kind == FeatureKind::dtw) {
    GramMatrix gram;
    gram.values = Matrix(ds.n_trials(), ds.n_trials());
    for (int i = 0; i < ds.n_trials(); ++i) {
      gram.row_ids.push_back(ds.trials[i].id());
      for (int j = 0; j < ds.n_trials(); ++j)
        gram.values(i, j) = i == j ? 0.0 : -cache.delta(i, j);
    }
    gram.col_ids = gram.row_ids;
    std::ofstream out(dir / "gram.csv");
    if (!out) throw IoError("cannot write gram.csv");
    gram_to_csv(gram, out);
  }
  if (cfg.dump_descriptors && cache.kind == FeatureKind::cov) {
    std::ofstream out(dir / "descriptors.csv");
    if (!out) throw IoError("cannot write descriptors.csv");
    out << "subject,action,trial";
    if (!cache.descriptors.empty())
      for (std::size_t d = 0; d < cache.descriptors[0].size(); ++d)
        out << ",d" << d;
    out << "\n";
    for (int i = 0; i < ds.n_trials(); ++i) {
      out << ds.trials[i].subject << "," << ds.trials[i].action << ","
          << ds.trials[i].trial_index;
      for (double v : cache.descriptors[i]) out << "," << fmt_double(v);
      out << "\n";
    }
  }
}

int cmd_synth(const ExperimentConfig& cfg) {
  ensure_output_dir(cfg);
  const Dataset ds = generate_synthetic(synth_config(cfg));
  const fs::path out = fs::path(cfg.output_dir) / "dataset.jsonl";
  save_dataset(ds, out);
  write_manifest(cfg, "synth");
  std::cout << "wrote " << out.string() << ": " << ds.n_subjects()
            << " subjects x " << ds.n_actions() << " actions, "
            << ds.n_trials() << " trials, J=" << ds.joint_count << "\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg) {
  ensure_output_dir(cfg);
  apply_threads(cfg);
  const Dataset ds = load_input(cfg);

  EvalConfig eval_cfg;
  eval_cfg.feature = feature_from_name(cfg.feature);
  eval_cfg.features = feature_options(cfg);
  eval_cfg.svm = svm_config(cfg);
  eval_cfg.threads = cfg.threads;

  const Strategy strategy = strategy_from_name(cfg.strategy);
  std::vector<SplitPlan> plans;
  std::vector<std::pair<std::string, std::string>> dropped;
  switch (strategy) {
    case Strategy::one_subject_out:
      plans = plan_one_subject_out(ds);
      break;
    case Strategy::cross_validation:
      plans = plan_cross_validation(ds, split_config(cfg));
      break;
    case Strategy::personalization:
      plans = plan_personalization(ds, split_config(cfg), &dropped);
      break;
  }
  for (const auto& [subject, action] : dropped)
    std::cerr << "personalization: dropped (" << subject << ", " << action
              << ") with < 2 trials\n";

  const FeatureCache cache =
      build_feature_cache(ds, eval_cfg.feature, eval_cfg.features,
                          cfg.threads);
  const EvalReport report = run_strategy(ds, plans, eval_cfg, &cache);

  const fs::path dir(cfg.output_dir);
  if (cfg.report_format != "csv") {
    json j = eval_report_to_json(report);
    j["dataset"] = ds.name;
    write_text(dir / "eval_report.json", j.dump(2) + "\n");
  }
  if (cfg.report_format != "json") {
    std::ostringstream csv;
    eval_report_to_csv(report, csv);
    write_text(dir / "eval_report.csv", csv.str());
  }
  if (cfg.dump_models) {
    const fs::path models_dir = dir / "models";
    fs::create_directories(models_dir);
    for (std::size_t p = 0; p < plans.size(); ++p) {
      const PlanModel pm = train_plan_model(ds, cache, plans[p], eval_cfg, p);
      write_text(models_dir / ("plan_" + std::to_string(p) + ".json"),
                 model_to_json(pm.svm).dump(2) + "\n");
    }
  }
  dump_feature_artifacts(cfg, ds, cache);
  write_manifest(cfg, "eval");

  std::printf("%s  %s  %s: %.2f +- %.2f %%  (units=%zu)\n", ds.name.c_str(),
              feature_name(report.feature).c_str(),
              strategy_name(report.strategy).c_str(), report.accuracy_mean,
              report.accuracy_std, report.per_unit.size());
  return 0;
}

int cmd_stats(const ExperimentConfig& cfg) {
  ensure_output_dir(cfg);
  apply_threads(cfg);
  const Dataset ds = load_input(cfg);

  StatsOptions opts;
  opts.feature = feature_from_name(cfg.feature);
  opts.features = feature_options(cfg);
  opts.zscore_cov = cfg.zscore_cov;
  opts.exclude_single_trial_cells = cfg.exclude_single_cells;
  opts.per_repetition_p_subject = cfg.per_rep_p_subject;
  opts.threads = cfg.threads;

  const VariabilityReport report =
      variability_report(ds, opts, split_config(cfg), svm_config(cfg));

  const fs::path dir(cfg.output_dir);
  if (cfg.report_format != "csv")
    write_text(dir / "variability_report.json",
               variability_report_to_json(report, ds).dump(2) + "\n");
  if (cfg.report_format != "json") {
    std::ostringstream csv;
    variability_report_to_csv(report, ds.name, csv);
    write_text(dir / "variability_report.csv", csv.str());
  }
  write_manifest(cfg, "stats");

  const auto show = [](const std::optional<double>& v) {
    return v.has_value() ? fmt_double(*v) : std::string("n/a");
  };
  std::cout << ds.name << "  " << feature_name(report.feature)
            << "  p_subject=" << show(report.p_subject)
            << "  p_inter=" << show(report.p_inter)
            << "  p_intra=" << show(report.p_intra)
            << "  delta=" << show(report.delta) << "\n";
  return 0;
}

int cmd_two_stage(const ExperimentConfig& cfg) {
  ensure_output_dir(cfg);
  apply_threads(cfg);
  const Dataset ds = load_input(cfg);

  TwoStageConfig ts;
  ts.feature = feature_from_name(cfg.feature);
  ts.features = feature_options(cfg);
  ts.svm = svm_config(cfg);
  ts.per_subject_normalizers = cfg.per_subject_normalizers;
  ts.threads = cfg.threads;

  const TwoStageReport report = run_two_stage(ds, split_config(cfg), ts);

  const fs::path dir(cfg.output_dir);
  if (cfg.report_format != "csv") {
    json j = two_stage_report_to_json(report);
    j["dataset"] = ds.name;
    write_text(dir / "two_stage_report.json", j.dump(2) + "\n");
  }
  if (cfg.report_format != "json") {
    std::ostringstream csv;
    two_stage_report_to_csv(report, ds.name, csv);
    write_text(dir / "two_stage_report.csv", csv.str());
  }
  write_manifest(cfg, "two-stage");

  std::printf("%s  subject-SVM: %.2f +- %.2f %%   action-SVMs: %.2f +- %.2f %%\n",
              ds.name.c_str(), report.subject_mean, report.subject_std,
              report.action_mean, report.action_std);
  return 0;
}

int dispatch(const std::string& command, const ExperimentConfig& cfg) {
  if (command == "synth") return cmd_synth(cfg);
  if (command == "eval") return cmd_eval(cfg);
  if (command == "stats") return cmd_stats(cfg);
  if (command == "two-stage") return cmd_two_stage(cfg);
  throw ConfigError("unknown command \"" + command + "\" in manifest");
}

int cmd_reproduce(const std::string& manifest_path,
                  const std::string& output_dir_override, int threads_override) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path);
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  if (!m.is_object() || !m.contains("command") || !m.contains("config"))
    throw DataError("manifest missing command/config");

  ExperimentConfig cfg;
  config_from_json(m["config"], cfg);
  if (!output_dir_override.empty()) cfg.output_dir = output_dir_override;
  if (threads_override >= 0) cfg.threads = threads_override;

  // Verify the input file still matches the recorded digest.
  if (m.contains("input") && m["input"].is_object()) {
    const std::string path = m["input"].value("path", "");
    const std::string digest = m["input"].value("fnv1a64", "");
    if (!path.empty() && fs::exists(path) && !fs::is_directory(path)) {
      const std::string now = fnv1a64_hex(fnv1a64_file(path));
      if (!digest.empty() && now != digest)
        throw DataError("input file " + path +
                        " does not match the manifest digest (" + now +
                        " != " + digest + ")");
    }
  }
  return dispatch(m["command"].get<std::string>(), cfg);
}

// Pre-scan for --config so file values become defaults that explicit
// flags then override.
void preload_config_file(int argc, char** argv, ExperimentConfig& cfg) {
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
    if (path.empty()) continue;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed config file: ") + e.what());
    }
    config_from_json(j, cfg);
  }
}

void add_common_options(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--config", "JSON config file (flags override it)");
  cmd->add_option("--seed", cfg.seed, "base RNG seed");
  cmd->add_option("--threads", cfg.threads,
                  "OpenMP thread cap (0 = library default)");
  cmd->add_option("--output-dir", cfg.output_dir, "report directory");
  cmd->add_option("--format", cfg.report_format, "report files to write")
      ->check(CLI::IsMember({"json", "csv", "both"}));
}

void add_data_options(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--data", cfg.data_path,
                  "dataset file (jsonl) or directory (csv-frames)");
  cmd->add_option("--data-format", cfg.data_format, "input format")
      ->check(CLI::IsMember({"auto", "jsonl", "csv"}));
  cmd->add_flag("--skip-invalid", cfg.skip_invalid,
                "skip invalid trials (reported on stderr)");
}

void add_feature_options(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--feature", cfg.feature, "feature encoding")
      ->check(CLI::IsMember({"cov", "dtw"}));
  cmd->add_option("--eps-scale", cfg.eps_scale,
                  "covariance log regularization scale");
  cmd->add_flag("--sqrt2-offdiag", cfg.sqrt2_offdiag,
                "norm-preserving sqrt(2) off-diagonal weighting");
  cmd->add_option("--variance-floor", cfg.variance_floor,
                  "z-score standard deviation floor");
  cmd->add_flag("--dtw-normalize", cfg.dtw_normalize,
                "divide DTW cost by path length");
  cmd->add_option("--dtw-band", cfg.dtw_band,
                  "Sakoe-Chiba band half-width (-1 = off)");
}

void add_svm_options(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--svm-c", cfg.svm_c, "SVM cost parameter C");
  cmd->add_option("--svm-tol", cfg.svm_tol, "SMO KKT tolerance");
  cmd->add_option("--max-passes", cfg.max_passes,
                  "consecutive clean SMO sweeps before stopping");
  cmd->add_flag("--spectral-shift", cfg.spectral_shift,
                "shift indefinite precomputed kernels to PSD");
}

void add_split_options(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--reps", cfg.reps, "number of seeded repetitions");
  cmd->add_option("--train-frac", cfg.train_frac,
                  "training fraction per group");
  cmd->add_flag("--stratify-actions", cfg.stratify_actions,
                "cross-validation: stratify per (subject, action)");
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig cfg;

  CLI::App app{"skeleton-motion action recognition evaluation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--subjects", cfg.subjects, "number of subjects")
      ->check(CLI::PositiveNumber);
  synth->add_option("--actions", cfg.actions, "number of actions")
      ->check(CLI::PositiveNumber);
  synth->add_option("--trials", cfg.trials, "trials per (subject, action)")
      ->check(CLI::PositiveNumber);
  synth->add_option("--joints", cfg.joints, "joint count J")
      ->check(CLI::PositiveNumber);
  synth->add_option("--tau-min", cfg.tau_min, "minimum frame count");
  synth->add_option("--tau-max", cfg.tau_max, "maximum frame count");
  synth->add_option("--sigma-subj", cfg.sigma_subj, "subject style scale");
  synth->add_option("--sigma-noise", cfg.sigma_noise, "per-frame noise scale");
  add_common_options(synth, cfg);

  CLI::App* eval = app.add_subcommand("eval", "run an evaluation strategy");
  add_data_options(eval, cfg);
  add_feature_options(eval, cfg);
  add_svm_options(eval, cfg);
  add_split_options(eval, cfg);
  eval->add_option("--strategy", cfg.strategy, "evaluation strategy")
      ->check(CLI::IsMember({"oso", "cv", "pers"}));
  eval->add_flag("--dump-gram", cfg.dump_gram,
                 "write the negative-DTW Gram matrix as CSV");
  eval->add_flag("--dump-descriptors", cfg.dump_descriptors,
                 "write raw covariance descriptors as CSV");
  eval->add_flag("--dump-models", cfg.dump_models,
                 "write per-plan SVM models as JSON");
  add_common_options(eval, cfg);

  CLI::App* stats = app.add_subcommand(
      "stats", "compute the four variability statistics");
  add_data_options(stats, cfg);
  add_feature_options(stats, cfg);
  add_svm_options(stats, cfg);
  add_split_options(stats, cfg);
  stats->add_flag("--zscore-cov", cfg.zscore_cov,
                  "z-score cov descriptors over the full dataset");
  stats->add_flag("--exclude-single-cells", cfg.exclude_single_cells,
                  "drop single-trial (action, subject) cells from delta");
  stats->add_flag("--per-rep-p-subject", cfg.per_rep_p_subject,
                  "average p_subject per repetition instead of pooling");
  add_common_options(stats, cfg);

  CLI::App* two_stage = app.add_subcommand(
      "two-stage", "subject-SVM routing into per-subject action-SVMs");
  add_data_options(two_stage, cfg);
  add_feature_options(two_stage, cfg);
  add_svm_options(two_stage, cfg);
  add_split_options(two_stage, cfg);
  two_stage->add_flag("--per-subject-normalizers",
                      cfg.per_subject_normalizers,
                      "fit one normalizer per subject for stage 2");
  add_common_options(two_stage, cfg);

  std::string manifest_path, reproduce_outdir;
  int reproduce_threads = -1;
  CLI::App* reproduce =
      app.add_subcommand("reproduce", "replay a run from its manifest");
  reproduce->add_option("manifest", manifest_path, "manifest.json path")
      ->required();
  reproduce->add_option("--output-dir", reproduce_outdir,
                        "override the output directory");
  reproduce->add_option("--threads", reproduce_threads,
                        "override the thread cap");

  try {
    preload_config_file(argc, argv, cfg);
    app.parse(argc, argv);

    if (reproduce->parsed())
      return cmd_reproduce(manifest_path, reproduce_outdir, reproduce_threads);
    if (synth->parsed()) return cmd_synth(cfg);
    if (eval->parsed()) return cmd_eval(cfg);
    if (stats->parsed()) return cmd_stats(cfg);
    if (two_stage->parsed()) return cmd_two_stage(cfg);
    throw ConfigError("no subcommand given");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints message and usage hint
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 4;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
