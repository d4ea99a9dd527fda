#include "skelact/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "skelact/errors.hpp"
#include "skelact/format.hpp"

namespace skelact {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int effective_band(const DtwOptions& opts, int ta, int tb) {
  if (opts.band < 0) return -1;
  return std::max(opts.band, std::abs(ta - tb));
}

}  // namespace

double frame_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty() || a.size() % 3 != 0)
    throw DataError("frame_distance: mismatched or invalid joint counts");
  const std::size_t joints = a.size() / 3;
  double sum = 0.0;
  for (std::size_t j = 0; j < joints; ++j) {
    const double dx = a[3 * j] - b[3 * j];
    const double dy = a[3 * j + 1] - b[3 * j + 1];
    const double dz = a[3 * j + 2] - b[3 * j + 2];
    sum += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return sum / static_cast<double>(joints);
}

DtwResult dtw_distance(const Trial& a, const Trial& b,
                       const DtwOptions& opts) {
  if (a.joint_count != b.joint_count)
    throw DataError("dtw_distance: trials have different joint counts");
  const int ta = a.frame_count();
  const int tb = b.frame_count();
  const int band = effective_band(opts, ta, tb);

  Matrix cost(ta, tb, kInf);
  for (int i = 0; i < ta; ++i) {
    const auto fa = a.frame(i);
    const int jlo = band < 0 ? 0 : std::max(0, i - band);
    const int jhi = band < 0 ? tb - 1 : std::min(tb - 1, i + band);
    for (int j = jlo; j <= jhi; ++j) {
      const double d = frame_distance(fa, b.frame(j));
      if (i == 0 && j == 0) {
        cost(i, j) = d;
      } else {
        double best = kInf;
        if (i > 0 && j > 0) best = std::min(best, cost(i - 1, j - 1));
        if (i > 0) best = std::min(best, cost(i - 1, j));
        if (j > 0) best = std::min(best, cost(i, j - 1));
        cost(i, j) = d + best;
      }
    }
  }

  // Backtrack for the path length; ties prefer the diagonal step.
  int i = ta - 1;
  int j = tb - 1;
  int length = 1;
  while (i > 0 || j > 0) {
    double diag = (i > 0 && j > 0) ? cost(i - 1, j - 1) : kInf;
    double up = i > 0 ? cost(i - 1, j) : kInf;
    double left = j > 0 ? cost(i, j - 1) : kInf;
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
    ++length;
  }

  DtwResult r;
  r.path_length = length;
  r.cost = opts.normalize_by_path ? cost(ta - 1, tb - 1) / length
                                  : cost(ta - 1, tb - 1);
  return r;
}

double dtw_cost(const Trial& a, const Trial& b, const DtwOptions& opts) {
  if (opts.normalize_by_path) return dtw_distance(a, b, opts).cost;
  if (a.joint_count != b.joint_count)
    throw DataError("dtw_cost: trials have different joint counts");
  const int ta = a.frame_count();
  const int tb = b.frame_count();
  const int band = effective_band(opts, ta, tb);

  std::vector<double> prev(tb, kInf), cur(tb, kInf);
  for (int i = 0; i < ta; ++i) {
    const auto fa = a.frame(i);
    std::fill(cur.begin(), cur.end(), kInf);
    const int jlo = band < 0 ? 0 : std::max(0, i - band);
    const int jhi = band < 0 ? tb - 1 : std::min(tb - 1, i + band);
    for (int j = jlo; j <= jhi; ++j) {
      const double d = frame_distance(fa, b.frame(j));
      if (i == 0 && j == 0) {
        cur[j] = d;
      } else {
        double best = kInf;
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        cur[j] = d + best;
      }
    }
    std::swap(prev, cur);
  }
  return prev[tb - 1];
}

namespace {

void check_uniform_joints(std::span<const Trial> trials) {
  for (std::size_t i = 1; i < trials.size(); ++i) {
    if (trials[i].joint_count != trials[0].joint_count)
      throw DataError("gram: trials have different joint counts");
  }
}

int resolve_threads(int threads) {
#ifdef _OPENMP
  return threads > 0 ? threads : omp_get_max_threads();
#else
  (void)threads;
  return 1;
#endif
}

}  // namespace

Matrix dtw_delta_matrix_serial(std::span<const Trial> trials,
                               const DtwOptions& opts) {
  check_uniform_joints(trials);
  const std::size_t n = trials.size();
  Matrix delta(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = dtw_cost(trials[i], trials[j], opts);
      delta(i, j) = d;
      delta(j, i) = d;
    }
  }
  return delta;
}

Matrix dtw_delta_matrix(std::span<const Trial> trials, const DtwOptions& opts,
                        int threads) {
  check_uniform_joints(trials);
  const std::size_t n = trials.size();
  Matrix delta(n, n, 0.0);

  // Flatten the strict upper triangle so the parallel loop load-balances
  // over pairs. Each entry is written exactly once; scheduling cannot
  // change any value.
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));

  const int nt = resolve_threads(threads);
  std::string error;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) num_threads(nt)
#endif
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    try {
      const auto [i, j] = pairs[p];
      const double d = dtw_cost(trials[i], trials[j], opts);
      delta(i, j) = d;
      delta(j, i) = d;
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      error = e.what();
    }
  }
  (void)nt;
  if (!error.empty()) throw DataError(error);
  return delta;
}

GramMatrix neg_dtw_gram(std::span<const Trial> trials, const DtwOptions& opts,
                        int threads) {
  Matrix delta = dtw_delta_matrix(trials, opts, threads);
  GramMatrix g;
  g.values = Matrix(trials.size(), trials.size(), 0.0);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    g.row_ids.push_back(trials[i].id());
    for (std::size_t j = 0; j < trials.size(); ++j)
      g.values(i, j) = i == j ? 0.0 : -delta(i, j);
  }
  g.col_ids = g.row_ids;
  return g;
}

GramMatrix neg_dtw_gram(std::span<const Trial> rows,
                        std::span<const Trial> cols, const DtwOptions& opts,
                        int threads) {
  if (!rows.empty() && !cols.empty() &&
      rows[0].joint_count != cols[0].joint_count)
    throw DataError("gram: trials have different joint counts");
  check_uniform_joints(rows);
  check_uniform_joints(cols);

  GramMatrix g;
  g.values = Matrix(rows.size(), cols.size(), 0.0);
  for (const Trial& t : rows) g.row_ids.push_back(t.id());
  for (const Trial& t : cols) g.col_ids.push_back(t.id());

  const int nt = resolve_threads(threads);
  std::string error;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4) num_threads(nt)
#endif
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      for (std::size_t j = 0; j < cols.size(); ++j)
        g.values(i, j) = -dtw_cost(rows[i], cols[j], opts);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      error = e.what();
    }
  }
  (void)nt;
  if (!error.empty()) throw DataError(error);
  return g;
}

void gram_to_csv(const GramMatrix& gram, std::ostream& out) {
  out << "id";
  for (const auto& id : gram.col_ids) out << "," << id;
  out << "\n";
  for (std::size_t i = 0; i < gram.values.rows(); ++i) {
    out << gram.row_ids[i];
    for (std::size_t j = 0; j < gram.values.cols(); ++j)
      out << "," << fmt_double(gram.values(i, j));
    out << "\n";
  }
}

}  // namespace skelact
