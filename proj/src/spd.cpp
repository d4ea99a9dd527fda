#include "skelact/spd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skelact/errors.hpp"

namespace skelact {

Matrix covariance(const Trial& t) {
  const int tau = t.frame_count();
  if (tau < 2)
    throw DataError("covariance: trial " + t.id() +
                    " has fewer than 2 frames");
  const std::size_t n = 3 * static_cast<std::size_t>(t.joint_count);

  // Welford streaming update of mean and comoment.
  std::vector<double> mean(n, 0.0);
  std::vector<double> delta(n, 0.0);
  Matrix m2(n, n, 0.0);
  for (int f = 0; f < tau; ++f) {
    const auto p = t.frame(f);
    const double inv = 1.0 / (f + 1);
    for (std::size_t i = 0; i < n; ++i) {
      delta[i] = p[i] - mean[i];
      mean[i] += delta[i] * inv;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double di_post = p[i] - mean[i];
      for (std::size_t j = i; j < n; ++j) m2(i, j) += di_post * delta[j];
    }
  }

  // Only the upper triangle was accumulated; mirror for exact symmetry.
  const double scale = 1.0 / (tau - 1);
  Matrix c(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = m2(i, j) * scale;
      c(i, j) = v;
      c(j, i) = v;
    }
  return c;
}

EigResult jacobi_eigendecompose(const Matrix& sym, double off_tol,
                                int max_sweeps) {
  const std::size_t n = sym.rows();
  if (n != sym.cols()) throw DataError("jacobi: matrix is not square");

  Matrix a = sym;
  Matrix v = Matrix::identity(n);
  const double scale = std::max(1.0, frobenius_norm(sym));

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_norm() <= off_tol * scale) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        // Stable tangent of the rotation angle.
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double t =
            sign / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigResult r;
  r.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.values[i] = a(i, i);

  // Sort eigenpairs ascending for a deterministic output.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return r.values[x] < r.values[y];
  });
  EigResult sorted;
  sorted.values.resize(n);
  sorted.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    sorted.values[j] = r.values[order[j]];
    for (std::size_t i = 0; i < n; ++i) sorted.vectors(i, j) = v(i, order[j]);
  }
  return sorted;
}

namespace {

Matrix apply_spectral_map(const Matrix& sym, double (*map)(double),
                          const char* what) {
  const std::size_t n = sym.rows();
  EigResult eig = jacobi_eigendecompose(sym);
  Matrix out(n, n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double mapped = map(eig.values[k]);
    if (!std::isfinite(mapped))
      throw DataError(std::string(what) +
                      ": spectral map produced a non-finite value "
                      "(eigenvalue " +
                      std::to_string(eig.values[k]) + ")");
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = eig.vectors(i, k) * mapped;
      for (std::size_t j = i; j < n; ++j) {
        out(i, j) += vik * eig.vectors(j, k);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out(j, i) = out(i, j);
  return out;
}

}  // namespace

Matrix tangent_project(const Matrix& c, double eps_scale) {
  const std::size_t n = c.rows();
  if (n == 0 || n != c.cols())
    throw DataError("tangent_project: matrix is not square");
  if (eps_scale < 0.0)
    throw ConfigError("tangent_project: eps_scale must be >= 0");
  for (double v : c.data())
    if (!std::isfinite(v))
      throw DataError("tangent_project: non-finite entry");
  if (max_asymmetry(c) > 1e-9)
    throw DataError("tangent_project: input asymmetric beyond 1e-9");

  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += c(i, i);
  const double eps =
      eps_scale == 0.0
          ? 0.0
          : eps_scale * std::max(trace / static_cast<double>(n), 1.0);

  Matrix reg(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double sym = 0.5 * (c(i, j) + c(j, i));
      reg(i, j) = i == j ? sym + eps : sym;
    }

  return apply_spectral_map(reg, [](double x) { return std::log(x); },
                            "tangent_project");
}

Matrix expm_symmetric(const Matrix& sym) {
  if (max_asymmetry(sym) > 1e-9)
    throw DataError("expm_symmetric: input asymmetric beyond 1e-9");
  return apply_spectral_map(sym, [](double x) { return std::exp(x); },
                            "expm_symmetric");
}

std::vector<double> vectorize_upper(const Matrix& sym, bool sqrt2_offdiag) {
  const std::size_t n = sym.rows();
  std::vector<double> out;
  out.reserve(n * (n + 1) / 2);
  const double w = sqrt2_offdiag ? std::sqrt(2.0) : 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      out.push_back(i == j ? sym(i, j) : w * sym(i, j));
  return out;
}

std::vector<double> cov_descriptor(const Trial& t, double eps_scale,
                                   bool sqrt2_offdiag) {
  return vectorize_upper(tangent_project(covariance(t), eps_scale),
                         sqrt2_offdiag);
}

Normalizer fit_normalizer(std::span<const std::vector<double>> train,
                          double variance_floor) {
  if (train.empty())
    throw DataError("fit_normalizer: empty training descriptor list");
  if (variance_floor <= 0.0)
    throw ConfigError("fit_normalizer: variance_floor must be positive");
  const std::size_t dim = train[0].size();
  for (const auto& d : train)
    if (d.size() != dim)
      throw DataError("fit_normalizer: descriptors have mixed lengths");

  Normalizer nrm;
  nrm.variance_floor = variance_floor;
  nrm.mean.assign(dim, 0.0);
  nrm.std.assign(dim, 0.0);

  const double inv = 1.0 / static_cast<double>(train.size());
  for (const auto& d : train)
    for (std::size_t i = 0; i < dim; ++i) nrm.mean[i] += d[i];
  for (std::size_t i = 0; i < dim; ++i) nrm.mean[i] *= inv;

  for (const auto& d : train)
    for (std::size_t i = 0; i < dim; ++i) {
      const double v = d[i] - nrm.mean[i];
      nrm.std[i] += v * v;
    }
  for (std::size_t i = 0; i < dim; ++i)
    nrm.std[i] = std::max(std::sqrt(nrm.std[i] * inv), variance_floor);
  return nrm;
}

std::vector<double> apply_normalizer(const Normalizer& nrm,
                                     std::span<const double> d) {
  if (d.size() != nrm.mean.size())
    throw DataError("apply_normalizer: descriptor length mismatch");
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    out[i] = (d[i] - nrm.mean[i]) / nrm.std[i];
  return out;
}

}  // namespace skelact
