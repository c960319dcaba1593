// SPDX-License-Identifier: Apache-2.0
#include "hpsed/params.hpp"

#include "hpsed/errors.hpp"

#include <functional>
#include <numeric>

namespace hpsed {

int ParamLayout::add(std::string name, std::vector<int> shape) {
  if (find(name) >= 0) throw InvalidInput("duplicate tensor name: " + name);
  TensorSlot s;
  s.size = std::accumulate(shape.begin(), shape.end(), Eigen::Index{1}, std::multiplies<>());
  s.offset = total_;
  s.name = std::move(name);
  s.shape = std::move(shape);
  total_ += s.size;
  slots_.push_back(std::move(s));
  return count() - 1;
}

int ParamLayout::find(const std::string& name) const {
  for (int i = 0; i < count(); ++i)
    if (slots_[static_cast<std::size_t>(i)].name == name) return i;
  return -1;
}

}  // namespace hpsed
