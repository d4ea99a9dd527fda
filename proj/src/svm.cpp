#include "skelact/svm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "skelact/errors.hpp"
#include "skelact/rng.hpp"
#include "skelact/spd.hpp"

namespace skelact {

namespace {

constexpr std::uint64_t kTagMachine = 0x5703;
constexpr double kAlphaEps = 1e-12;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Matrix linear_gram(const std::vector<std::vector<double>>& x) {
  const std::size_t m = x.size();
  Matrix k(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      const double v = dot(x[i], x[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

struct SmoState {
  std::vector<double> alpha;
  double b = 0.0;
};

// Decision value without bias: g(i) = sum_k alpha_k y_k K(k, i).
double g_value(const Matrix& k, const std::vector<double>& alpha,
               const std::vector<int>& y, std::size_t i) {
  double s = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j)
    if (alpha[j] > 0.0) s += alpha[j] * y[j] * k(j, i);
  return s;
}

}  // namespace

BinaryMachine train_binary(const Matrix& kernel, const std::vector<int>& y,
                           const SvmConfig& cfg) {
  const std::size_t m = y.size();
  if (kernel.rows() != m || kernel.cols() != m)
    throw TrainingError("train_binary: kernel size does not match labels");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw TrainingError("train_binary: labels must be +-1");
  }
  if (!has_pos || !has_neg)
    throw TrainingError("train_binary: need at least one example per sign");
  if (cfg.C <= 0.0) throw ConfigError("svm: C must be positive");
  if (cfg.tol <= 0.0) throw ConfigError("svm: tol must be positive");

  const double C = cfg.C;
  std::vector<double> alpha(m, 0.0);
  double b = 0.0;
  Rng rng(derive_seed(cfg.seed, kTagMachine));

  std::uint64_t updates = 0;
  int clean_passes = 0;
  bool capped = false;

  while (clean_passes < cfg.max_passes && !capped) {
    int changed = 0;
    for (std::size_t i = 0; i < m && !capped; ++i) {
      const double e_i = g_value(kernel, alpha, y, i) + b - y[i];
      const double r_i = y[i] * e_i;
      if (!((r_i < -cfg.tol && alpha[i] < C) || (r_i > cfg.tol && alpha[i] > 0)))
        continue;

      std::size_t j = rng.next_below(m - 1);
      if (j >= i) ++j;
      const double e_j = g_value(kernel, alpha, y, j) + b - y[j];

      const double ai_old = alpha[i];
      const double aj_old = alpha[j];
      double lo, hi;
      if (y[i] != y[j]) {
        lo = std::max(0.0, aj_old - ai_old);
        hi = std::min(C, C + aj_old - ai_old);
      } else {
        lo = std::max(0.0, ai_old + aj_old - C);
        hi = std::min(C, ai_old + aj_old);
      }
      if (hi - lo < kAlphaEps) continue;

      const double eta = 2.0 * kernel(i, j) - kernel(i, i) - kernel(j, j);
      // Objective change when alpha_j moves by t (alpha_i follows the
      // equality constraint): dW(t) = y_j (E_i - E_j) t + eta/2 t^2.
      const double lin = y[j] * (e_i - e_j);
      auto obj_delta = [&](double t) { return lin * t + 0.5 * eta * t * t; };

      double aj_new;
      if (eta < 0.0) {
        aj_new = std::clamp(aj_old - y[j] * (e_i - e_j) / eta, lo, hi);
      } else {
        // Non-concave direction: take the better endpoint, or skip if
        // neither improves the clipped objective.
        const double d_lo = obj_delta(lo - aj_old);
        const double d_hi = obj_delta(hi - aj_old);
        if (d_lo <= 1e-12 && d_hi <= 1e-12) continue;
        aj_new = d_lo > d_hi ? lo : hi;
      }
      const double t = aj_new - aj_old;
      if (std::fabs(t) < 1e-5 * (aj_new + aj_old + 1e-5)) continue;
      if (obj_delta(t) < -1e-12) continue;  // monotonicity guard

      const double ai_new = ai_old + y[i] * y[j] * (aj_old - aj_new);
      alpha[i] = ai_new;
      alpha[j] = aj_new;

      const double b1 = b - e_i - y[i] * (ai_new - ai_old) * kernel(i, i) -
                        y[j] * (aj_new - aj_old) * kernel(i, j);
      const double b2 = b - e_j - y[i] * (ai_new - ai_old) * kernel(i, j) -
                        y[j] * (aj_new - aj_old) * kernel(j, j);
      if (ai_new > kAlphaEps && ai_new < C - kAlphaEps) {
        b = b1;
      } else if (aj_new > kAlphaEps && aj_new < C - kAlphaEps) {
        b = b2;
      } else {
        b = 0.5 * (b1 + b2);
      }

      ++changed;
      if (++updates >= cfg.max_pair_updates) capped = true;
    }
    clean_passes = changed == 0 ? clean_passes + 1 : 0;
  }

  // Final bias from KKT-interior support vectors; fall back to the
  // midpoint of the interval the bound constraints allow.
  std::vector<double> g(m);
  for (std::size_t i = 0; i < m; ++i) g[i] = g_value(kernel, alpha, y, i);
  {
    double sum = 0.0;
    int interior = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (alpha[i] > kAlphaEps && alpha[i] < C - kAlphaEps) {
        sum += y[i] - g[i];
        ++interior;
      }
    }
    if (interior > 0) {
      b = sum / interior;
    } else {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        const double bound = y[i] - g[i];
        const bool at_zero = alpha[i] <= kAlphaEps;
        // alpha = 0 requires y f >= 1; alpha = C requires y f <= 1.
        if ((y[i] == 1) == at_zero) lo = std::max(lo, bound);
        else hi = std::min(hi, bound);
      }
      if (std::isfinite(lo) && std::isfinite(hi)) b = 0.5 * (lo + hi);
      else if (std::isfinite(lo)) b = lo;
      else if (std::isfinite(hi)) b = hi;
    }
  }

  BinaryMachine machine;
  machine.bias = b;

  double max_residual = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double margin = y[i] * (g[i] + b);
    double res = 0.0;
    if (alpha[i] <= kAlphaEps) res = std::max(0.0, 1.0 - margin);
    else if (alpha[i] >= C - kAlphaEps) res = std::max(0.0, margin - 1.0);
    else res = std::fabs(margin - 1.0);
    max_residual = std::max(max_residual, res);
  }
  machine.max_kkt_residual = max_residual;
  machine.converged = !capped && max_residual <= cfg.tol;

  double obj = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (alpha[i] == 0.0) continue;
    obj += alpha[i] - 0.5 * alpha[i] * y[i] * g[i];
  }
  machine.dual_objective = obj;

  for (std::size_t i = 0; i < m; ++i) {
    if (alpha[i] > kAlphaEps) {
      machine.support.push_back(static_cast<int>(i));
      machine.alpha_y.push_back(alpha[i] * y[i]);
    }
  }
  return machine;
}

namespace {

std::vector<int> sorted_classes(const std::vector<int>& labels) {
  std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

SvmModel train_ovr(const Matrix& kernel, const std::vector<int>& labels,
                   const SvmConfig& cfg, KernelKind kind) {
  const std::vector<int> classes = sorted_classes(labels);
  if (classes.size() < 2)
    throw TrainingError("svm: need at least 2 classes, got " +
                        std::to_string(classes.size()));

  SvmModel model;
  model.kind = kind;
  model.C = cfg.C;
  model.class_ids = classes;
  model.train_size = static_cast<int>(labels.size());
  model.machines.resize(classes.size());

  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      y[i] = labels[i] == classes[c] ? 1 : -1;
    SvmConfig machine_cfg = cfg;
    machine_cfg.seed = derive_seed(cfg.seed, kTagMachine, c);
    model.machines[c] = train_binary(kernel, y, machine_cfg);
  }
  return model;
}

}  // namespace

SvmModel train_multiclass_linear(const std::vector<std::vector<double>>& x,
                                 const std::vector<int>& labels,
                                 const SvmConfig& cfg) {
  if (x.size() != labels.size() || x.empty())
    throw TrainingError("svm: features/labels size mismatch or empty");
  for (const auto& row : x)
    if (row.size() != x[0].size())
      throw TrainingError("svm: feature vectors have mixed lengths");

  SvmModel model = train_ovr(linear_gram(x), labels, cfg, KernelKind::linear);

  // Keep the union of support vectors for standalone prediction.
  std::set<int> wanted;
  for (const auto& machine : model.machines)
    wanted.insert(machine.support.begin(), machine.support.end());
  for (int idx : wanted) {
    model.sv_index.push_back(idx);
    model.sv_rows.push_back(x[idx]);
  }
  return model;
}

SvmModel train_multiclass_precomputed(const Matrix& kernel,
                                      const std::vector<int>& labels,
                                      const SvmConfig& cfg) {
  if (kernel.rows() != labels.size())
    throw TrainingError("svm: kernel size does not match labels");
  if (max_asymmetry(kernel) > 1e-9)
    throw TrainingError("svm: precomputed kernel must be symmetric");

  if (cfg.spectral_shift) {
    EigResult eig = jacobi_eigendecompose(kernel);
    const double lmin = eig.values.empty() ? 0.0 : eig.values.front();
    if (lmin < 0.0) {
      Matrix shifted = kernel;
      for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, i) -= lmin;
      return train_ovr(shifted, labels, cfg, KernelKind::precomputed);
    }
  }
  return train_ovr(kernel, labels, cfg, KernelKind::precomputed);
}

namespace {

Matrix decisions_from_kernel_lookup(
    const SvmModel& model, std::size_t n_rows,
    const std::function<double(std::size_t, int)>& k_of) {
  Matrix out(n_rows, model.machines.size());
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t c = 0; c < model.machines.size(); ++c) {
      const BinaryMachine& machine = model.machines[c];
      double f = machine.bias;
      for (std::size_t s = 0; s < machine.support.size(); ++s)
        f += machine.alpha_y[s] * k_of(r, machine.support[s]);
      out(r, c) = f;
    }
  }
  return out;
}

std::vector<int> argmax_rows(const SvmModel& model, const Matrix& decisions) {
  std::vector<int> out(decisions.rows());
  for (std::size_t r = 0; r < decisions.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < decisions.cols(); ++c)
      if (decisions(r, c) > decisions(r, best)) best = c;  // ties keep lowest
    out[r] = model.class_ids[best];
  }
  return out;
}

}  // namespace

Matrix decision_values(const SvmModel& model,
                       const std::vector<std::vector<double>>& x) {
  if (model.kind != KernelKind::linear)
    throw TrainingError("predict: model expects precomputed kernel rows");
  // Map train index -> stored support vector slot.
  std::vector<int> slot(model.train_size, -1);
  for (std::size_t s = 0; s < model.sv_index.size(); ++s)
    slot[model.sv_index[s]] = static_cast<int>(s);
  for (const auto& row : x)
    if (!model.sv_rows.empty() && row.size() != model.sv_rows[0].size())
      throw TrainingError("predict: feature dimension mismatch");

  return decisions_from_kernel_lookup(
      model, x.size(), [&](std::size_t r, int train_idx) {
        return dot(x[r], model.sv_rows[slot[train_idx]]);
      });
}

Matrix decision_values_precomputed(const SvmModel& model,
                                   const Matrix& kernel_rows) {
  if (model.kind != KernelKind::precomputed)
    throw TrainingError("predict: model expects vector features");
  if (kernel_rows.cols() != static_cast<std::size_t>(model.train_size))
    throw TrainingError("predict: kernel rows must have one column per "
                        "training example");
  return decisions_from_kernel_lookup(
      model, kernel_rows.rows(),
      [&](std::size_t r, int train_idx) { return kernel_rows(r, train_idx); });
}

std::vector<int> predict(const SvmModel& model,
                         const std::vector<std::vector<double>>& x) {
  return argmax_rows(model, decision_values(model, x));
}

std::vector<int> predict_precomputed(const SvmModel& model,
                                     const Matrix& kernel_rows) {
  return argmax_rows(model, decision_values_precomputed(model, kernel_rows));
}

nlohmann::json model_to_json(const SvmModel& model) {
  nlohmann::json j;
  j["format"] = "skelact-svm";
  j["format_version"] = 1;
  j["kernel"] = model.kind == KernelKind::linear ? "linear" : "precomputed";
  j["C"] = model.C;
  j["train_size"] = model.train_size;
  j["classes"] = model.class_ids;
  nlohmann::json machines = nlohmann::json::array();
  for (const auto& machine : model.machines) {
    nlohmann::json m;
    m["support"] = machine.support;
    m["alpha_y"] = machine.alpha_y;
    m["bias"] = machine.bias;
    m["converged"] = machine.converged;
    m["dual_objective"] = machine.dual_objective;
    m["max_kkt_residual"] = machine.max_kkt_residual;
    machines.push_back(std::move(m));
  }
  j["machines"] = std::move(machines);
  j["sv_index"] = model.sv_index;
  j["sv_rows"] = model.sv_rows;
  return j;
}

SvmModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "skelact-svm")
    throw DataError("model_from_json: not a skelact-svm document");
  if (j.value("format_version", 0) != 1)
    throw DataError("model_from_json: unsupported format_version");

  SvmModel model;
  model.kind = j.at("kernel").get<std::string>() == "linear"
                   ? KernelKind::linear
                   : KernelKind::precomputed;
  model.C = j.at("C").get<double>();
  model.train_size = j.at("train_size").get<int>();
  model.class_ids = j.at("classes").get<std::vector<int>>();
  for (const auto& m : j.at("machines")) {
    BinaryMachine machine;
    machine.support = m.at("support").get<std::vector<int>>();
    machine.alpha_y = m.at("alpha_y").get<std::vector<double>>();
    machine.bias = m.at("bias").get<double>();
    machine.converged = m.at("converged").get<bool>();
    machine.dual_objective = m.at("dual_objective").get<double>();
    machine.max_kkt_residual = m.at("max_kkt_residual").get<double>();
    model.machines.push_back(std::move(machine));
  }
  model.sv_index = j.at("sv_index").get<std::vector<int>>();
  model.sv_rows = j.at("sv_rows").get<std::vector<std::vector<double>>>();
  return model;
}

}  // namespace skelact
