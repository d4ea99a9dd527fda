#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "skelact/matrix.hpp"
#include "skelact/types.hpp"

namespace skelact {

// Mean per-joint Euclidean distance between two frames (each a flat
// span of 3J coordinates). Throws DataError on mismatched J.
double frame_distance(std::span<const double> a, std::span<const double> b);

struct DtwOptions {
  // Divide the accumulated cost by the alignment path length.
  bool normalize_by_path = false;
  // Sakoe-Chiba band half-width; < 0 disables the constraint. The
  // effective band is widened to |tau - tau'| when needed so the
  // corner-to-corner path stays feasible.
  int band = -1;
};

struct DtwResult {
  double cost = 0.0;
  int path_length = 0;  // number of matched frame pairs, >= max(tau, tau')
};

// Classic DTW over frame_distance: monotone, boundary-anchored paths
// with steps (1,0), (0,1), (1,1) and unit weights. Keeps the full cost
// table to recover the path length.
DtwResult dtw_distance(const Trial& a, const Trial& b,
                       const DtwOptions& opts = {});

// Cost only, two-row rolling table. Equals dtw_distance(...).cost.
double dtw_cost(const Trial& a, const Trial& b, const DtwOptions& opts = {});

struct GramMatrix {
  Matrix values;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
};

// Negative-DTW kernel Gram: entry (i,k) = -delta(rows_i, cols_k).
// The one-argument form computes the symmetric zero-diagonal Gram of a
// trial list against itself (upper triangle computed, mirrored).
GramMatrix neg_dtw_gram(std::span<const Trial> trials,
                        const DtwOptions& opts = {}, int threads = 0);
GramMatrix neg_dtw_gram(std::span<const Trial> rows,
                        std::span<const Trial> cols,
                        const DtwOptions& opts = {}, int threads = 0);

// Symmetric pairwise delta matrix over a trial list. The parallel form
// computes entries concurrently; each entry depends only on its pair,
// so the result is bit-identical to the serial reference.
Matrix dtw_delta_matrix(std::span<const Trial> trials,
                        const DtwOptions& opts = {}, int threads = 0);
Matrix dtw_delta_matrix_serial(std::span<const Trial> trials,
                               const DtwOptions& opts = {});

// CSV with row/col trial ids in the headers, for audit.
void gram_to_csv(const GramMatrix& gram, std::ostream& out);

}  // namespace skelact
