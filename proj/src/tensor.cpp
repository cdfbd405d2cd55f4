#include "pcpd/tensor.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace pcpd {

namespace {

Index checked_product(const std::vector<Index>& dims) {
  Index p = 1;
  for (Index d : dims) {
    if (d < 1) throw std::invalid_argument("tensor dimensions must be >= 1");
    if (p > std::numeric_limits<Index>::max() / d)
      throw std::invalid_argument("tensor size overflows Index");
    p *= d;
  }
  return p;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<Index> d) : dims(std::move(d)) {
  values.assign(static_cast<std::size_t>(checked_product(dims)), 0.0);
  validate();
}

DenseTensor::DenseTensor(std::vector<Index> d, std::vector<double> v)
    : dims(std::move(d)), values(std::move(v)) {
  validate();
}

void DenseTensor::validate() const {
  if (dims.size() < 2) throw std::invalid_argument("tensor order must be >= 2");
  const Index expect = checked_product(dims);
  if (static_cast<Index>(values.size()) != expect)
    throw std::invalid_argument("tensor value count does not match dimensions");
}

Index DenseTensor::flat_index(std::span<const Index> idx) const {
  if (static_cast<int>(idx.size()) != order())
    throw std::invalid_argument("index arity does not match tensor order");
  Index flat = 0;
  for (int n = 0; n < order(); ++n) {
    if (idx[n] < 0 || idx[n] >= dims[n]) throw std::out_of_range("tensor index out of range");
    flat = flat * dims[n] + idx[n];
  }
  return flat;
}

KruskalModel::KruskalModel(std::vector<Matrix> f) : factors(std::move(f)) { validate(); }

std::vector<Index> KruskalModel::dims() const {
  std::vector<Index> d(factors.size());
  for (std::size_t n = 0; n < factors.size(); ++n) d[n] = factors[n].rows();
  return d;
}

void KruskalModel::validate() const {
  if (factors.size() < 2) throw std::invalid_argument("model order must be >= 2");
  const Index l = factors.front().cols();
  for (const Matrix& f : factors) {
    if (f.cols() != l) throw std::invalid_argument("all factors must share the column count");
    if (f.rows() < 1) throw std::invalid_argument("factor must have at least one row");
  }
}

namespace {

void check_mode(int mode, int order) {
  if (mode < 0 || mode >= order)
    throw std::invalid_argument("mode " + std::to_string(mode) + " out of range for order " +
                                std::to_string(order));
}

// Column strides of the unfolding: cs[n] = prod_{m < n, m != mode} dims[m],
// so the lowest retained mode varies fastest.
std::vector<Index> unfold_col_strides(const std::vector<Index>& dims, int mode) {
  std::vector<Index> cs(dims.size(), 0);
  Index acc = 1;
  for (int n = 0; n < static_cast<int>(dims.size()); ++n) {
    if (n == mode) continue;
    cs[n] = acc;
    acc *= dims[n];
  }
  return cs;
}

}  // namespace

Matrix unfold(const DenseTensor& t, int mode) {
  t.validate();
  const int order = t.order();
  check_mode(mode, order);
  const Index rows = t.dims[mode];
  const Index cols = t.size() / rows;
  const std::vector<Index> cs = unfold_col_strides(t.dims, mode);

  Matrix out(rows, cols);
  std::vector<Index> idx(order, 0);
  Index col = 0;
  for (Index flat = 0; flat < t.size(); ++flat) {
    out(idx[mode], col) = t.values[static_cast<std::size_t>(flat)];
    // advance the multi-index (last mode fastest) and the column index
    for (int n = order - 1; n >= 0; --n) {
      if (n != mode) col += cs[n];
      if (++idx[n] < t.dims[n]) break;
      idx[n] = 0;
      if (n != mode) col -= cs[n] * t.dims[n];
    }
  }
  return out;
}

DenseTensor refold(const Matrix& m, const std::vector<Index>& dims, int mode) {
  const int order = static_cast<int>(dims.size());
  check_mode(mode, order);
  DenseTensor t(dims);
  if (m.rows() != dims[mode] || m.cols() != t.size() / dims[mode])
    throw std::invalid_argument("unfolded matrix shape does not match dims/mode");
  const std::vector<Index> cs = unfold_col_strides(dims, mode);

  std::vector<Index> idx(order, 0);
  Index col = 0;
  for (Index flat = 0; flat < t.size(); ++flat) {
    t.values[static_cast<std::size_t>(flat)] = m(idx[mode], col);
    for (int n = order - 1; n >= 0; --n) {
      if (n != mode) col += cs[n];
      if (++idx[n] < dims[n]) break;
      idx[n] = 0;
      if (n != mode) col -= cs[n] * dims[n];
    }
  }
  return t;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("khatri_rao: column counts differ");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Index l = 0; l < a.cols(); ++l)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), l, b.rows(), 1) = a(i, l) * b.col(l);
  return out;
}

Matrix khatri_rao_excluding(const std::vector<Matrix>& factors, int skip) {
  const int order = static_cast<int>(factors.size());
  if (skip < -1 || skip >= order) throw std::invalid_argument("khatri_rao_excluding: bad skip");
  Matrix chain;
  bool started = false;
  for (int n = 0; n < order; ++n) {
    if (n == skip) continue;
    if (!started) {
      chain = factors[n];
      started = true;
    } else {
      chain = khatri_rao(factors[n], chain);
    }
  }
  if (!started) throw std::invalid_argument("khatri_rao_excluding: empty chain");
  return chain;
}

Matrix khatri_rao_excluding(const KruskalModel& model, int skip) {
  return khatri_rao_excluding(model.factors, skip);
}

Matrix hadamard_product_excluding(const std::vector<Matrix>& mats, int skip) {
  const int count = static_cast<int>(mats.size());
  if (skip < -1 || skip >= count)
    throw std::invalid_argument("hadamard_product_excluding: bad skip");
  Matrix out;
  bool started = false;
  for (int n = 0; n < count; ++n) {
    if (n == skip) continue;
    const Matrix& m = mats[n];
    if (m.rows() != m.cols()) throw std::invalid_argument("hadamard: inputs must be square");
    if (!started) {
      out = m;
      started = true;
    } else {
      if (out.rows() != m.rows()) throw std::invalid_argument("hadamard: shape mismatch");
      out = out.cwiseProduct(m);
    }
  }
  if (!started) throw std::invalid_argument("hadamard: empty product");
  return out;
}

DenseTensor reconstruct(const KruskalModel& model) {
  model.validate();
  const int last = model.order() - 1;
  const Matrix unfolded =
      model.factors[last] * khatri_rao_excluding(model, last).transpose();
  return refold(unfolded, model.dims(), last);
}

double kruskal_inner(const DenseTensor& t, const std::vector<Matrix>& factors) {
  const int order = t.order();
  if (static_cast<int>(factors.size()) != order)
    throw std::invalid_argument("kruskal_inner: factor count mismatch");
  for (int n = 0; n < order; ++n)
    if (factors[n].rows() != t.dims[n])
      throw std::invalid_argument("kruskal_inner: factor rows mismatch");

  const Index rank = factors.front().cols();
  // Contract the last mode with one GEMM, then peel the remaining modes off
  // column by column; B.col(l) always holds the partial contraction for
  // component l, flattened with the highest remaining mode fastest.
  Index lead = t.size() / t.dims[order - 1];
  using RowMajorMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  Matrix b = RowMajorMap(t.values.data(), lead, t.dims[order - 1]) * factors[order - 1];
  for (int n = order - 2; n >= 1; --n) {
    lead /= t.dims[n];
    Matrix next(lead, rank);
    for (Index l = 0; l < rank; ++l)
      next.col(l) = RowMajorMap(b.col(l).data(), lead, t.dims[n]) * factors[n].col(l);
    b = std::move(next);
  }
  return (b.cwiseProduct(factors[0])).sum();
}

double frob_norm_sq(const DenseTensor& t) {
  double s = 0.0;
  for (double v : t.values) s += v * v;
  return s;
}

}  // namespace pcpd
