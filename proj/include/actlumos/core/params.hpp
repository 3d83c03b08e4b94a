#pragma once

#include <string>
#include <vector>

#include "actlumos/core/types.hpp"

namespace actlumos {

/// Flat view over a model's named parameter arrays. Modules append their
/// matrices in a fixed order; the optimizer, checkpointing and the
/// finite-difference harness all address parameters through this list.
template <typename S>
struct ParamRefs {
  struct Entry {
    std::string name;
    S* data;
    Eigen::Index rows, cols;
    Eigen::Index size() const { return rows * cols; }
  };

  std::vector<Entry> entries;

  void add(const std::string& name, Mat<S>& m) { entries.push_back({name, m.data(), m.rows(), m.cols()}); }
  void add(const std::string& name, Vec<S>& v) { entries.push_back({name, v.data(), v.rows(), 1}); }

  Eigen::Index total_size() const {
    Eigen::Index n = 0;
    for (const Entry& e : entries) n += e.size();
    return n;
  }

  Vec<S> flatten() const {
    Vec<S> out(total_size());
    Eigen::Index at = 0;
    for (const Entry& e : entries) {
      out.segment(at, e.size()) = Eigen::Map<const Vec<S>>(e.data, e.size());
      at += e.size();
    }
    return out;
  }

  void unflatten(const Vec<S>& flat) {
    Eigen::Index at = 0;
    for (const Entry& e : entries) {
      Eigen::Map<Vec<S>>(e.data, e.size()) = flat.segment(at, e.size());
      at += e.size();
    }
  }

  void set_zero() {
    for (const Entry& e : entries) Eigen::Map<Vec<S>>(e.data, e.size()).setZero();
  }
};

}  // namespace actlumos
