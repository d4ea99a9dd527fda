#include "skelact/features.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "skelact/errors.hpp"
#include "skelact/spd.hpp"

namespace skelact {

std::string feature_name(FeatureKind kind) {
  return kind == FeatureKind::dtw ? "dtw" : "cov";
}

FeatureKind feature_from_name(const std::string& name) {
  if (name == "dtw") return FeatureKind::dtw;
  if (name == "cov") return FeatureKind::cov;
  throw ConfigError("unknown feature kind \"" + name + "\" (use dtw or cov)");
}

std::vector<std::vector<double>> batch_descriptors_serial(
    const Dataset& ds, const FeatureOptions& opts) {
  std::vector<std::vector<double>> out(ds.trials.size());
  for (std::size_t i = 0; i < ds.trials.size(); ++i)
    out[i] = cov_descriptor(ds.trials[i], opts.eps_scale, opts.sqrt2_offdiag);
  return out;
}

std::vector<std::vector<double>> batch_descriptors(const Dataset& ds,
                                                   const FeatureOptions& opts,
                                                   int threads) {
  std::vector<std::vector<double>> out(ds.trials.size());
  std::string error;
#ifdef _OPENMP
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(nt)
#else
  (void)threads;
#endif
  for (std::size_t i = 0; i < ds.trials.size(); ++i) {
    try {
      out[i] =
          cov_descriptor(ds.trials[i], opts.eps_scale, opts.sqrt2_offdiag);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      error = e.what();
    }
  }
  if (!error.empty()) throw DataError(error);
  return out;
}

FeatureCache build_feature_cache(const Dataset& ds, FeatureKind kind,
                                 const FeatureOptions& opts, int threads) {
  FeatureCache cache;
  cache.kind = kind;
  if (kind == FeatureKind::cov) {
    cache.descriptors = batch_descriptors(ds, opts, threads);
  } else {
    cache.delta = dtw_delta_matrix(ds.trials, opts.dtw, threads);
  }
  return cache;
}

}  // namespace skelact
