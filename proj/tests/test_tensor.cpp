#include <doctest.h>

#include <cmath>

#include "pcpd/rng.hpp"
#include "pcpd/tensor.hpp"

using namespace pcpd;

namespace {

DenseTensor random_tensor(std::vector<Index> dims, std::uint64_t seed) {
  DenseTensor t(std::move(dims));
  Rng rng(seed);
  for (double& v : t.values) v = rng.normal();
  return t;
}

KruskalModel random_model(const std::vector<Index>& dims, Index rank, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Matrix> factors(dims.size());
  for (std::size_t n = 0; n < dims.size(); ++n) {
    factors[n].resize(dims[n], rank);
    for (Index j = 0; j < rank; ++j)
      for (Index i = 0; i < dims[n]; ++i) factors[n](i, j) = rng.normal();
  }
  return KruskalModel(std::move(factors));
}

// Naive reconstruction by full index loops, the oracle for everything else.
DenseTensor reconstruct_loops(const KruskalModel& m) {
  DenseTensor t(m.dims());
  const int order = m.order();
  std::vector<Index> idx(static_cast<std::size_t>(order), 0);
  for (Index flat = 0; flat < t.size(); ++flat) {
    double sum = 0.0;
    for (Index l = 0; l < m.rank_bound(); ++l) {
      double prod = 1.0;
      for (int n = 0; n < order; ++n) prod *= m.factors[static_cast<std::size_t>(n)](idx[static_cast<std::size_t>(n)], l);
      sum += prod;
    }
    t.values[static_cast<std::size_t>(flat)] = sum;
    for (int n = order - 1; n >= 0; --n) {
      if (++idx[static_cast<std::size_t>(n)] < t.dims[static_cast<std::size_t>(n)]) break;
      idx[static_cast<std::size_t>(n)] = 0;
    }
  }
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("DenseTensor invariants") {
  CHECK_THROWS(DenseTensor({4}));                                   // order >= 2
  CHECK_THROWS(DenseTensor({2, 0}));                                // dims >= 1
  CHECK_THROWS(DenseTensor({2, 2}, {1.0, 2.0, 3.0}));               // length mismatch
  DenseTensor t({2, 3});
  CHECK(t.size() == 6);
  t({1, 2}) = 5.0;
  CHECK(t.values[5] == 5.0);
  CHECK_THROWS(static_cast<void>(t.flat_index(std::vector<Index>{2, 0})));
}

TEST_CASE("unfold of a matrix is the matrix itself") {
  DenseTensor t({2, 2}, {1, 2, 3, 4});  // t(i,j) = row-major [[1,2],[3,4]]
  const Matrix m0 = unfold(t, 0);
  CHECK(m0(0, 0) == 1);
  CHECK(m0(0, 1) == 2);
  CHECK(m0(1, 0) == 3);
  CHECK(m0(1, 1) == 4);
  const Matrix m1 = unfold(t, 1);  // transpose
  CHECK(m1(0, 1) == 3);
  CHECK(m1(1, 0) == 2);
}

TEST_CASE("unfold column ordering matches the Khatri-Rao convention") {
  // t(i,j,k) = 4i + 2j + k: columns of the mode-0 unfolding enumerate (j,k)
  // with j (the lowest retained mode) fastest.
  DenseTensor t({2, 2, 2});
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j)
      for (Index k = 0; k < 2; ++k) t({i, j, k}) = static_cast<double>(4 * i + 2 * j + k);
  const Matrix m = unfold(t, 0);
  const double expect0[4] = {0, 2, 1, 3};
  const double expect1[4] = {4, 6, 5, 7};
  for (Index c = 0; c < 4; ++c) {
    CHECK(m(0, c) == expect0[c]);
    CHECK(m(1, c) == expect1[c]);
  }
  CHECK_THROWS(unfold(t, 3));
  CHECK_THROWS(unfold(t, -1));
}

TEST_CASE("unfold then refold is the identity, bit exact") {
  const DenseTensor t = random_tensor({3, 4, 5}, 11u);
  for (int mode = 0; mode < 3; ++mode) {
    const DenseTensor back = refold(unfold(t, mode), t.dims, mode);
    REQUIRE(back.values.size() == t.values.size());
    for (std::size_t i = 0; i < t.values.size(); ++i) CHECK(back.values[i] == t.values[i]);
  }
}

TEST_CASE("khatri_rao basics") {
  Matrix a(2, 1), b(2, 1);
  a << 1, 2;
  b << 3, 4;
  // chain over both factors, highest leftmost: b (x) a with a's index fastest
  const Matrix chain = khatri_rao_excluding(std::vector<Matrix>{a, b}, -1);
  REQUIRE(chain.rows() == 4);
  CHECK(chain(0, 0) == 3);
  CHECK(chain(1, 0) == 6);
  CHECK(chain(2, 0) == 4);
  CHECK(chain(3, 0) == 8);

  // chain with a single retained factor returns that factor
  Matrix c(3, 2);
  c << 1, 2, 3, 4, 5, 6;
  CHECK(max_abs_diff(khatri_rao_excluding(std::vector<Matrix>{a, c}, 0), c) == 0.0);

  // 3-mode all-ones, skip 1 -> 4 x 2 ones
  std::vector<Matrix> ones(3, Matrix::Ones(2, 2));
  const Matrix k = khatri_rao_excluding(ones, 1);
  CHECK(k.rows() == 4);
  CHECK(k.cols() == 2);
  CHECK(k.minCoeff() == 1.0);
  CHECK(k.maxCoeff() == 1.0);
}

TEST_CASE("hadamard_product_excluding") {
  std::vector<Matrix> eye(3, Matrix::Identity(4, 4));
  CHECK(max_abs_diff(hadamard_product_excluding(eye, 0), Matrix::Identity(4, 4)) == 0.0);

  std::vector<Matrix> scaled{2.0 * Matrix::Ones(3, 3), 3.0 * Matrix::Ones(3, 3)};
  CHECK(max_abs_diff(hadamard_product_excluding(scaled, -1), 6.0 * Matrix::Ones(3, 3)) == 0.0);

  std::vector<Matrix> bad{Matrix::Ones(2, 2), Matrix::Ones(3, 3)};
  CHECK_THROWS(hadamard_product_excluding(bad, -1));
}

TEST_CASE("gram identity: chain product equals Hadamard of Grams") {
  // (A (.) B)^T (A (.) B) == A^T A  .*  B^T B
  const KruskalModel m = random_model({4, 3, 5}, 3, 21u);
  std::vector<Matrix> grams;
  for (const Matrix& f : m.factors) grams.push_back(f.transpose() * f);
  for (int skip = -1; skip < 3; ++skip) {
    const Matrix chain = khatri_rao_excluding(m, skip);
    const Matrix lhs = chain.transpose() * chain;
    const Matrix rhs = hadamard_product_excluding(grams, skip);
    CHECK(max_abs_diff(lhs, rhs) < 1e-10 * rhs.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("reconstruct rank-1 outer product") {
  Matrix u(2, 1);
  u << 1, 2;
  const KruskalModel m({u, u, u});
  const DenseTensor t = reconstruct(m);
  CHECK(t({1, 1, 1}) == doctest::Approx(8.0));
  CHECK(t({0, 1, 1}) == doctest::Approx(4.0));
  CHECK(t({0, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("reconstruct ignores zero columns") {
  KruskalModel m = random_model({3, 3, 3}, 3, 31u);
  const DenseTensor before = reconstruct(m);
  for (auto& f : m.factors) {
    Matrix wide(f.rows(), 4);
    wide.leftCols(3) = f;
    wide.col(3).setZero();
    f = wide;
  }
  const DenseTensor after = reconstruct(m);
  for (std::size_t i = 0; i < before.values.size(); ++i)
    CHECK(after.values[i] == doctest::Approx(before.values[i]).epsilon(1e-14));
}

TEST_CASE("reconstruct matches brute-force loops") {
  const KruskalModel m = random_model({3, 3, 3}, 2, 41u);
  const DenseTensor fast = reconstruct(m);
  const DenseTensor slow = reconstruct_loops(m);
  for (std::size_t i = 0; i < fast.values.size(); ++i)
    CHECK(fast.values[i] == doctest::Approx(slow.values[i]).epsilon(1e-12));
}

TEST_CASE("unfold(reconstruct(U), k) == U_k * khatri_rao_excluding(U, k)^T") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const KruskalModel m = random_model({3, 4, 5}, 3, seed);
    const DenseTensor t = reconstruct(m);
    for (int mode = 0; mode < 3; ++mode) {
      const Matrix lhs = unfold(t, mode);
      const Matrix rhs = m.factors[static_cast<std::size_t>(mode)] *
                         khatri_rao_excluding(m, mode).transpose();
      CHECK(max_abs_diff(lhs, rhs) < 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff()));
    }
  }
  // the spot check called out in the contract: mode 1 of a 3x4x5 tensor
  const KruskalModel m = random_model({3, 4, 5}, 2, 90u);
  const DenseTensor t = reconstruct(m);
  const Matrix rhs = m.factors[1] * khatri_rao(m.factors[2], m.factors[0]).transpose();
  CHECK(max_abs_diff(unfold(t, 1), rhs) < 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
}

TEST_CASE("kruskal_inner agrees with explicit reconstruction") {
  const DenseTensor y = random_tensor({3, 4, 5}, 51u);
  const KruskalModel m = random_model({3, 4, 5}, 3, 52u);
  const DenseTensor recon = reconstruct(m);
  double expect = 0.0;
  for (std::size_t i = 0; i < y.values.size(); ++i) expect += y.values[i] * recon.values[i];
  CHECK(kruskal_inner(y, m.factors) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("frob_norm_sq") {
  CHECK(frob_norm_sq(DenseTensor({2, 2, 2})) == 0.0);
  DenseTensor ones({2, 2, 2}, std::vector<double>(8, 1.0));
  CHECK(frob_norm_sq(ones) == 8.0);
  const DenseTensor t = random_tensor({4, 5}, 61u);
  double expect = 0.0;
  for (double v : t.values) expect += v * v;
  CHECK(frob_norm_sq(t) == doctest::Approx(expect).epsilon(1e-14));
}
