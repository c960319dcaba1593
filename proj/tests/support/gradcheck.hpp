// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/model.hpp"
#include "hpsed/objectives.hpp"
#include "hpsed/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace hpsed::testing {

struct GroupCheck {
  std::string name;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
  double rel_error = 0.0;
};

inline double term_value(const LossBundle& l, Term t) {
  switch (t) {
    case Term::Weak:
      return l.l_w;
    case Term::Strong:
      return l.l_s;
    case Term::ConsistencyWeak:
      return l.l_cw;
    case Term::ConsistencyStrong:
      return l.l_cs;
    case Term::Total:
      return l.total;
  }
  return l.total;
}

/// Drops the sub-batches a term does not read so each evaluation is cheap.
inline ObjectiveInputs<double> inputs_for(const ObjectiveInputs<double>& in, Term t) {
  ObjectiveInputs<double> out = in;
  const bool weak = t == Term::Weak || t == Term::Total;
  const bool strong = t == Term::Strong || t == Term::Total || (t == Term::Weak && !in.strong_weak_y.empty());
  const bool unl = t == Term::ConsistencyWeak || t == Term::ConsistencyStrong || t == Term::Total;
  if (!weak) out.weak_x.clear(), out.weak_y.clear();
  if (!strong) out.strong_x.clear(), out.strong_y.clear(), out.strong_weak_y.clear();
  if (!unl) out.unlabeled_x.clear(), out.teacher_weak.clear(), out.teacher_strong.clear();
  return out;
}

/// Central differences on `per_group` random entries of every parameter
/// tensor plus one random direction inside it. The per-group error is
/// ||a - n|| / max(||a||, ||n||) over the stacked samples; groups whose
/// analytic and numeric samples are both below `zero_tol` report 0.
inline std::vector<GroupCheck> gradient_check(const PseCrnn<double>& model, const ModelState<double>& state,
                                              const ObjectiveInputs<double>& full, Term term, int per_group,
                                              std::uint64_t seed, double h = 1e-5, double zero_tol = 1e-12) {
  const ObjectiveInputs<double> in = inputs_for(full, term);
  ParamSet<double> grads = model.zero_grads();
  evaluate_objective(model, state, in, 1.0, &grads, term);

  ModelState<double> probe = state;
  auto loss_at = [&]() { return term_value(evaluate_objective(model, probe, in, 1.0), term); };

  std::vector<GroupCheck> out;
  Rng rng = make_stream(seed, "gradcheck");
  const auto& slots = model.param_layout().slots();
  for (std::size_t g = 0; g < slots.size(); ++g) {
    const auto& slot = slots[g];
    std::vector<double> a, n;
    std::uniform_int_distribution<Eigen::Index> pick(0, slot.size - 1);
    const int samples = static_cast<int>(std::min<Eigen::Index>(per_group, slot.size));
    for (int k = 0; k < samples; ++k) {
      const Eigen::Index i = slot.offset + pick(rng);
      const double saved = probe.params.values[i];
      probe.params.values[i] = saved + h;
      const double up = loss_at();
      probe.params.values[i] = saved - h;
      const double down = loss_at();
      probe.params.values[i] = saved;
      a.push_back(grads.values[i]);
      n.push_back((up - down) / (2.0 * h));
    }
    {
      std::normal_distribution<double> normal(0.0, 1.0);
      Vector<double> v(slot.size);
      for (auto& x : v) x = normal(rng);
      v /= v.norm();
      const Vector<double> saved = probe.params.values.segment(slot.offset, slot.size);
      probe.params.values.segment(slot.offset, slot.size) = saved + h * v;
      const double up = loss_at();
      probe.params.values.segment(slot.offset, slot.size) = saved - h * v;
      const double down = loss_at();
      probe.params.values.segment(slot.offset, slot.size) = saved;
      a.push_back(grads.values.segment(slot.offset, slot.size).dot(v));
      n.push_back((up - down) / (2.0 * h));
    }
    GroupCheck c;
    c.name = slot.name;
    double diff = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      c.analytic_norm += a[k] * a[k];
      c.numeric_norm += n[k] * n[k];
      diff += (a[k] - n[k]) * (a[k] - n[k]);
    }
    c.analytic_norm = std::sqrt(c.analytic_norm);
    c.numeric_norm = std::sqrt(c.numeric_norm);
    const double scale = std::max(c.analytic_norm, c.numeric_norm);
    c.rel_error = scale < zero_tol ? 0.0 : std::sqrt(diff) / scale;
    out.push_back(c);
  }
  return out;
}

}  // namespace hpsed::testing
