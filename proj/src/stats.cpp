#include "skelact/stats.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "skelact/errors.hpp"
#include "skelact/format.hpp"
#include "skelact/spd.hpp"

namespace skelact {

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Nearest trial to `query` among `candidates` (self excluded); ties
// break to the lowest trial index because candidates are scanned in
// ascending order under strict comparison.
int nearest_in(const Matrix& dist, int query, const std::vector<int>& pool) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c : pool) {
    if (c == query) continue;
    const double d = dist(query, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

Matrix pairwise_distances(const Dataset& ds, const StatsOptions& opts) {
  const int n = ds.n_trials();
  if (opts.feature == FeatureKind::dtw)
    return dtw_delta_matrix(ds.trials, opts.features.dtw, opts.threads);

  std::vector<std::vector<double>> desc =
      batch_descriptors(ds, opts.features, opts.threads);
  if (opts.zscore_cov) {
    const Normalizer nrm = fit_normalizer(desc, opts.features.variance_floor);
    for (auto& d : desc) d = apply_normalizer(nrm, d);
  }
  Matrix dist(n, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = euclidean(desc[i], desc[j]);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  return dist;
}

std::optional<double> stat_p_subject(const Dataset& ds, const Matrix& dist,
                                     const std::vector<SplitPlan>& cv_plans,
                                     const EvalConfig& eval_cfg,
                                     const FeatureCache& cache,
                                     bool per_repetition, long* correct_count,
                                     std::string* note) {
  for (const SplitPlan& p : cv_plans)
    if (p.strategy != Strategy::cross_validation)
      throw ConfigError("p_subject requires cross-validation plans");

  long pooled_match = 0, pooled_correct = 0;
  std::vector<double> rep_fractions;

  for (std::size_t p = 0; p < cv_plans.size(); ++p) {
    const SplitPlan& plan = cv_plans[p];
    PlanModel model = train_plan_model(ds, cache, plan, eval_cfg, p);
    const std::vector<int> pred = predict_plan(ds, cache, plan, model,
                                               eval_cfg);
    long match = 0, correct = 0;
    for (std::size_t i = 0; i < plan.test_ids.size(); ++i) {
      const int t = plan.test_ids[i];
      if (pred[i] != ds.action_of[t]) continue;
      ++correct;
      const int nn = nearest_in(dist, t, plan.train_ids);
      if (nn >= 0 && ds.subject_of[nn] == ds.subject_of[t]) ++match;
    }
    pooled_match += match;
    pooled_correct += correct;
    if (correct > 0)
      rep_fractions.push_back(static_cast<double>(match) / correct);
  }

  if (correct_count) *correct_count = pooled_correct;
  if (pooled_correct == 0) {
    if (note) *note = "no correctly classified test trials";
    return std::nullopt;
  }
  if (per_repetition) {
    double s = 0.0;
    for (double f : rep_fractions) s += f;
    return s / static_cast<double>(rep_fractions.size());
  }
  return static_cast<double>(pooled_match) / pooled_correct;
}

std::optional<double> stat_p_inter(const Dataset& ds, const Matrix& dist,
                                   long* pair_count,
                                   std::vector<std::string>* excluded) {
  const auto by_action = ds.trials_by_action();
  long match = 0, total = 0;
  for (int a = 0; a < ds.n_actions(); ++a) {
    const auto& pool = by_action[a];
    if (pool.size() < 2) {
      if (excluded) excluded->push_back(ds.actions[a]);
      continue;
    }
    for (int t : pool) {
      const int nn = nearest_in(dist, t, pool);
      if (ds.subject_of[nn] == ds.subject_of[t]) ++match;
      ++total;
    }
  }
  if (pair_count) *pair_count = total;
  if (total == 0) return std::nullopt;
  return static_cast<double>(match) / total;
}

std::optional<double> stat_p_intra(const Dataset& ds, const Matrix& dist,
                                   long* pair_count,
                                   std::vector<std::string>* excluded) {
  const auto by_subject = ds.trials_by_subject();
  long differ = 0, total = 0;
  for (int s = 0; s < ds.n_subjects(); ++s) {
    const auto& pool = by_subject[s];
    if (pool.size() < 2) {
      if (excluded) excluded->push_back(ds.subjects[s]);
      continue;
    }
    for (int t : pool) {
      const int nn = nearest_in(dist, t, pool);
      if (ds.action_of[nn] != ds.action_of[t]) ++differ;
      ++total;
    }
  }
  if (pair_count) *pair_count = total;
  if (total == 0) return std::nullopt;
  return static_cast<double>(differ) / total;
}

std::optional<double> stat_delta(const Dataset& ds, const Matrix& dist,
                                 bool exclude_single_trial_cells,
                                 Matrix* table, long* cell_count,
                                 std::vector<std::string>* degenerate) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Matrix cells(ds.n_actions(), ds.n_subjects(), nan);
  const auto by_action = ds.trials_by_action();

  double sum = 0.0;
  long count = 0;
  for (int a = 0; a < ds.n_actions(); ++a) {
    const auto& pool = by_action[a];
    // Action diameter d_a: the two trials of maximal mutual distance.
    double d_a = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i)
      for (std::size_t j = i + 1; j < pool.size(); ++j)
        d_a = std::max(d_a, dist(pool[i], pool[j]));
    if (d_a <= 0.0) {
      if (degenerate) degenerate->push_back(ds.actions[a]);
      continue;
    }
    for (int s = 0; s < ds.n_subjects(); ++s) {
      std::vector<int> mine;
      for (int t : pool)
        if (ds.subject_of[t] == s) mine.push_back(t);
      if (mine.empty()) continue;
      if (mine.size() == 1 && exclude_single_trial_cells) continue;
      double d_as = 0.0;  // single-trial cells collapse to a point
      for (std::size_t i = 0; i < mine.size(); ++i)
        for (std::size_t j = i + 1; j < mine.size(); ++j)
          d_as = std::max(d_as, dist(mine[i], mine[j]));
      const double value = std::fabs(d_as - d_a) / d_a;
      cells(a, s) = value;
      sum += value;
      ++count;
    }
  }
  if (table) *table = cells;
  if (cell_count) *cell_count = count;
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

VariabilityReport variability_report(const Dataset& ds,
                                     const StatsOptions& opts,
                                     const SplitConfig& split_cfg,
                                     const SvmConfig& svm_cfg) {
  VariabilityReport report;
  report.feature = opts.feature;

  const Matrix dist = pairwise_distances(ds, opts);
  report.p_inter = stat_p_inter(ds, dist, &report.p_inter_pairs,
                                &report.excluded_actions);
  report.p_intra = stat_p_intra(ds, dist, &report.p_intra_pairs,
                                &report.excluded_subjects);
  report.delta =
      stat_delta(ds, dist, opts.exclude_single_trial_cells,
                 &report.delta_table, &report.delta_cells,
                 &report.degenerate_actions);

  // p_subject needs cross-validation runs; when the dataset is not
  // eligible (a subject with < 2 trials) the statistic is reported as
  // absent with the reason rather than failing the whole report.
  try {
    EvalConfig eval_cfg;
    eval_cfg.feature = opts.feature;
    eval_cfg.features = opts.features;
    eval_cfg.svm = svm_cfg;
    eval_cfg.threads = opts.threads;
    const FeatureCache cache =
        build_feature_cache(ds, opts.feature, opts.features, opts.threads);
    const std::vector<SplitPlan> plans = plan_cross_validation(ds, split_cfg);
    report.p_subject = stat_p_subject(
        ds, dist, plans, eval_cfg, cache, opts.per_repetition_p_subject,
        &report.p_subject_correct, &report.p_subject_note);
  } catch (const Error& e) {
    report.p_subject = std::nullopt;
    report.p_subject_note = e.what();
  }
  return report;
}

namespace {

nlohmann::json opt_to_json(const std::optional<double>& v) {
  if (!v.has_value()) return nullptr;
  return *v;
}

}  // namespace

nlohmann::json variability_report_to_json(const VariabilityReport& report,
                                          const Dataset& ds) {
  nlohmann::json j;
  j["feature"] = feature_name(report.feature);
  j["p_subject"] = opt_to_json(report.p_subject);
  j["p_inter"] = opt_to_json(report.p_inter);
  j["p_intra"] = opt_to_json(report.p_intra);
  j["delta"] = opt_to_json(report.delta);
  j["counts"] = {{"p_subject_correct", report.p_subject_correct},
                 {"p_inter_pairs", report.p_inter_pairs},
                 {"p_intra_pairs", report.p_intra_pairs},
                 {"delta_cells", report.delta_cells}};
  if (!report.excluded_actions.empty())
    j["excluded_actions"] = report.excluded_actions;
  if (!report.excluded_subjects.empty())
    j["excluded_subjects"] = report.excluded_subjects;
  if (!report.degenerate_actions.empty())
    j["degenerate_actions"] = report.degenerate_actions;
  if (!report.p_subject_note.empty())
    j["p_subject_note"] = report.p_subject_note;

  nlohmann::json table = nlohmann::json::object();
  for (std::size_t a = 0; a < report.delta_table.rows(); ++a) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t s = 0; s < report.delta_table.cols(); ++s) {
      const double v = report.delta_table(a, s);
      if (!std::isnan(v)) row[ds.subjects[s]] = v;
    }
    if (!row.empty()) table[ds.actions[a]] = std::move(row);
  }
  j["delta_table"] = std::move(table);
  return j;
}

void variability_report_to_csv(const VariabilityReport& report,
                               const std::string& dataset_name,
                               std::ostream& out) {
  const auto cell = [](const std::optional<double>& v) {
    return v.has_value() ? fmt_double(*v) : std::string();
  };
  out << "dataset,feature,p_subject,p_inter,p_intra,delta\n";
  out << dataset_name << "," << feature_name(report.feature) << ","
      << cell(report.p_subject) << "," << cell(report.p_inter) << ","
      << cell(report.p_intra) << "," << cell(report.delta) << "\n";
}

}  // namespace skelact
