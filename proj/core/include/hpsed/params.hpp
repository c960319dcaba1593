// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace hpsed {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct TensorSlot {
  std::string name;
  std::vector<int> shape;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;

  /// First dimension; 1 for scalars.
  Eigen::Index rows() const { return shape.empty() ? 1 : shape.front(); }
  Eigen::Index cols() const { return rows() ? size / rows() : 0; }

  friend bool operator==(const TensorSlot&, const TensorSlot&) = default;
};

/// Named tensors packed back to back into one flat vector.
class ParamLayout {
 public:
  int add(std::string name, std::vector<int> shape);
  int find(const std::string& name) const;  // -1 when absent

  const std::vector<TensorSlot>& slots() const { return slots_; }
  const TensorSlot& slot(int i) const { return slots_[static_cast<std::size_t>(i)]; }
  int count() const { return static_cast<int>(slots_.size()); }
  Eigen::Index total() const { return total_; }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;

 private:
  std::vector<TensorSlot> slots_;
  Eigen::Index total_ = 0;
};

template <typename S>
struct ParamSet {
  ParamLayout layout;
  Vector<S> values;

  ParamSet() = default;
  explicit ParamSet(ParamLayout l) : layout(std::move(l)), values(Vector<S>::Zero(layout.total())) {}

  /// Tensor i viewed as rows x (product of remaining dims).
  Eigen::Map<Matrix<S>> mat(int i) {
    const auto& s = layout.slot(i);
    return {values.data() + s.offset, s.rows(), s.cols()};
  }
  Eigen::Map<const Matrix<S>> mat(int i) const {
    const auto& s = layout.slot(i);
    return {values.data() + s.offset, s.rows(), s.cols()};
  }
  /// Tensors i and i+1 stacked along rows; both must have equal column counts.
  Eigen::Map<Matrix<S>> stacked(int i) {
    const auto& s = layout.slot(i);
    return {values.data() + s.offset, 2 * s.rows(), s.cols()};
  }
  Eigen::Map<const Matrix<S>> stacked(int i) const {
    const auto& s = layout.slot(i);
    return {values.data() + s.offset, 2 * s.rows(), s.cols()};
  }
  Eigen::Map<Vector<S>> vec(int i) {
    const auto& s = layout.slot(i);
    return {values.data() + s.offset, s.size};
  }
  Eigen::Map<const Vector<S>> vec(int i) const {
    const auto& s = layout.slot(i);
    return {values.data() + s.offset, s.size};
  }
  Eigen::Map<const Vector<S>> vec2(int i) const {
    const auto& s = layout.slot(i);
    return {values.data() + s.offset, 2 * s.size};
  }
  Eigen::Map<Vector<S>> vec2(int i) {
    const auto& s = layout.slot(i);
    return {values.data() + s.offset, 2 * s.size};
  }

  template <typename T>
  ParamSet<T> cast() const {
    ParamSet<T> out;
    out.layout = layout;
    out.values = values.template cast<T>();
    return out;
  }

  bool all_finite() const { return values.allFinite(); }
};

}  // namespace hpsed
