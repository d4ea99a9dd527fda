#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "skelact/matrix.hpp"

namespace skelact {

enum class KernelKind { linear, precomputed };

struct SvmConfig {
  double C = 10.0;
  double tol = 1e-3;
  int max_passes = 50;  // consecutive clean sweeps before declaring done
  std::uint64_t max_pair_updates = 1'000'000;
  std::uint64_t seed = 0;
  // For indefinite precomputed kernels: add -lambda_min * I to the
  // training Gram when its smallest eigenvalue is negative. Off by
  // default (the indefinite Gram is used as-is).
  bool spectral_shift = false;
};

// One one-vs-rest binary machine. alpha_y holds alpha_i * y_i for the
// support vectors; support holds their training-set indices, ascending.
struct BinaryMachine {
  std::vector<int> support;
  std::vector<double> alpha_y;
  double bias = 0.0;
  bool converged = true;
  double dual_objective = 0.0;
  double max_kkt_residual = 0.0;
};

// Soft-margin dual via simplified SMO with random second-index choice
// under a seeded RNG. kernel is the full train-vs-train kernel matrix;
// y holds +-1 labels. Box constraints and the equality constraint hold
// at exit regardless of the converged flag. Non-concave pair updates
// (possible with indefinite kernels) fall back to the better interval
// endpoint and are rejected if they would decrease the objective.
BinaryMachine train_binary(const Matrix& kernel, const std::vector<int>& y,
                           const SvmConfig& cfg);

struct SvmModel {
  KernelKind kind = KernelKind::linear;
  double C = 10.0;
  std::vector<int> class_ids;          // ascending dense class ids
  std::vector<BinaryMachine> machines; // parallel to class_ids
  int train_size = 0;
  // Linear models keep the support vectors so prediction stands alone.
  // sv_rows[i] is the training vector at index sv_index[i].
  std::vector<int> sv_index;
  std::vector<std::vector<double>> sv_rows;
};

// One-vs-rest training. The linear form computes the Gram internally
// with plain ordered dot products (so an explicitly precomputed
// inner-product Gram yields a bit-identical model). Requires >= 2
// classes; throws TrainingError otherwise.
SvmModel train_multiclass_linear(const std::vector<std::vector<double>>& x,
                                 const std::vector<int>& labels,
                                 const SvmConfig& cfg);
SvmModel train_multiclass_precomputed(const Matrix& kernel,
                                      const std::vector<int>& labels,
                                      const SvmConfig& cfg);

// Per-class decision values; rows follow the input order, columns
// follow model.class_ids.
Matrix decision_values(const SvmModel& model,
                       const std::vector<std::vector<double>>& x);
// kernel_rows: one row per test point, columns indexed by the training
// set the model was fitted on.
Matrix decision_values_precomputed(const SvmModel& model,
                                   const Matrix& kernel_rows);

// Argmax of the decision values; ties break to the lowest class index.
std::vector<int> predict(const SvmModel& model,
                         const std::vector<std::vector<double>>& x);
std::vector<int> predict_precomputed(const SvmModel& model,
                                     const Matrix& kernel_rows);

// Versioned JSON round trip for reuse across CLI invocations.
nlohmann::json model_to_json(const SvmModel& model);
SvmModel model_from_json(const nlohmann::json& j);

}  // namespace skelact
