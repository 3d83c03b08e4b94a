#pragma once

#include "actlumos/core/types.hpp"

namespace actlumos {

template <typename S>
S logsumexp(const Vec<S>& v) {
  const S m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

template <typename S>
Vec<S> softmax(const Vec<S>& v) {
  const S m = v.maxCoeff();
  Vec<S> e = (v.array() - m).exp();
  return e / e.sum();
}

/// d(loss)/d(logits) given the softmax output s and d(loss)/d(softmax).
template <typename S>
Vec<S> softmax_backward(const Vec<S>& s, const Vec<S>& ds) {
  return s.cwiseProduct(ds - Vec<S>::Constant(s.size(), s.dot(ds)));
}

template <typename S>
Mat<S> rowwise_softmax(const Mat<S>& m) {
  Mat<S> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = softmax<S>(m.row(i).transpose()).transpose();
  return out;
}

}  // namespace actlumos
