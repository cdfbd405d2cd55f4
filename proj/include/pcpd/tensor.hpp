#pragma once

#include <Eigen/Dense>
#include <initializer_list>
#include <span>
#include <vector>

namespace pcpd {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense N-way array, N >= 2. Values are stored flat in row-major order,
// i.e. the LAST index varies fastest. This layout is part of the on-disk
// tensor format and must not change.
struct DenseTensor {
  std::vector<Index> dims;
  std::vector<double> values;

  DenseTensor() = default;
  explicit DenseTensor(std::vector<Index> d);
  DenseTensor(std::vector<Index> d, std::vector<double> v);

  int order() const { return static_cast<int>(dims.size()); }
  Index size() const { return static_cast<Index>(values.size()); }

  Index flat_index(std::span<const Index> idx) const;
  double operator()(std::initializer_list<Index> idx) const {
    return values[flat_index({idx.begin(), idx.size()})];
  }
  double& operator()(std::initializer_list<Index> idx) {
    return values[flat_index({idx.begin(), idx.size()})];
  }

  void validate() const;  // throws std::invalid_argument on broken invariants
};

// Rank-bounded factorization: factor n is dims[n] x L. The model's rank
// bound L is the shared column count.
struct KruskalModel {
  std::vector<Matrix> factors;

  KruskalModel() = default;
  explicit KruskalModel(std::vector<Matrix> f);

  int order() const { return static_cast<int>(factors.size()); }
  Index rank_bound() const { return factors.empty() ? 0 : factors.front().cols(); }
  std::vector<Index> dims() const;

  void validate() const;
};

// Mode-k unfolding (0-based k). Row i is the slice with mode-k index i; the
// column index enumerates the remaining modes with the lowest retained mode
// varying fastest, which is exactly the ordering produced by
// khatri_rao_excluding, so that for any model U
//   unfold(reconstruct(U), k) == U[k] * khatri_rao_excluding(U, k)^T.
Matrix unfold(const DenseTensor& t, int mode);

// Inverse of unfold for the same mode; exact (bit-preserving) round trip.
DenseTensor refold(const Matrix& m, const std::vector<Index>& dims, int mode);

// Columnwise Kronecker product, col l = a_l (x) b_l (b's row index fastest).
Matrix khatri_rao(const Matrix& a, const Matrix& b);

// Khatri-Rao chain over all factors except `skip`, highest mode leftmost:
// F[N-1] (.) ... (.) F[skip+1] (.) F[skip-1] (.) ... (.) F[0].
// Pass skip = -1 to chain every factor.
Matrix khatri_rao_excluding(const std::vector<Matrix>& factors, int skip);
Matrix khatri_rao_excluding(const KruskalModel& model, int skip);

// Elementwise product of square matrices, skipping index `skip` (-1: none).
Matrix hadamard_product_excluding(const std::vector<Matrix>& mats, int skip);

// Kruskal reconstruction: entry (i_0,...,i_{N-1}) = sum_l prod_n F[n](i_n, l).
DenseTensor reconstruct(const KruskalModel& model);

// <t, reconstruct(factors)> computed by successive mode contractions,
// without materializing the Khatri-Rao chain or the reconstruction.
double kruskal_inner(const DenseTensor& t, const std::vector<Matrix>& factors);

double frob_norm_sq(const DenseTensor& t);

}  // namespace pcpd
