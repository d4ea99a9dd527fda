#pragma once

#include <string>
#include <vector>

#include "skelact/dtw.hpp"
#include "skelact/matrix.hpp"
#include "skelact/types.hpp"

namespace skelact {

enum class FeatureKind { dtw, cov };

std::string feature_name(FeatureKind kind);
FeatureKind feature_from_name(const std::string& name);

struct FeatureOptions {
  double eps_scale = 1e-6;
  bool sqrt2_offdiag = false;
  double variance_floor = 1e-8;
  DtwOptions dtw;
};

// Split-independent per-dataset feature state, computed once and shared
// across split plans: raw (unnormalized) covariance descriptors, or the
// full pairwise DTW delta matrix. Normalization and Gram-block slicing
// happen per plan, on training ids only.
struct FeatureCache {
  FeatureKind kind = FeatureKind::cov;
  std::vector<std::vector<double>> descriptors;  // cov
  Matrix delta;                                  // dtw
};

FeatureCache build_feature_cache(const Dataset& ds, FeatureKind kind,
                                 const FeatureOptions& opts, int threads = 0);

// Descriptor extraction for every trial; the parallel form distributes
// trials over threads and is bit-identical to the serial reference.
std::vector<std::vector<double>> batch_descriptors(const Dataset& ds,
                                                   const FeatureOptions& opts,
                                                   int threads = 0);
std::vector<std::vector<double>> batch_descriptors_serial(
    const Dataset& ds, const FeatureOptions& opts);

}  // namespace skelact
