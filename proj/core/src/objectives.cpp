// SPDX-License-Identifier: Apache-2.0
#include "hpsed/objectives.hpp"

#include "hpsed/errors.hpp"
#include "hpsed/labels.hpp"

#include <algorithm>
#include <numeric>

namespace hpsed {

namespace {

std::vector<Clip> permuted(const std::vector<Clip>& clips, Rng& rng) {
  std::vector<std::size_t> order(clips.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Clip> out;
  out.reserve(clips.size());
  for (auto i : order) out.push_back(clips[i]);
  return out;
}

std::vector<Clip> augmented(const std::vector<Clip>& clips, const AugmentationPolicy& policy, Rng& rng) {
  std::vector<Clip> out;
  out.reserve(clips.size());
  for (const auto& c : clips) {
    const auto spec = sample_augmentation(policy, static_cast<int>(c.spec.cols()), rng);
    out.push_back(apply_augmentation(c, spec, policy.log_floor).clip);
  }
  return out;
}

template <typename S>
std::vector<Matrix<S>> specs(const std::vector<Clip>& clips) {
  std::vector<Matrix<S>> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.push_back(c.spec.cast<S>());
  return out;
}

template <typename S>
std::vector<Matrix<S>> mixed_specs(const std::vector<Clip>& a, const std::vector<Clip>& b, double lambda) {
  if (a.size() != b.size()) throw InvalidInput("mix: sub-batch sizes differ");
  std::vector<Matrix<S>> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(mix(a[i].spec.cast<S>(), b[i].spec.cast<S>(), lambda));
  return out;
}

const WeakLabel& weak_of(const Clip& c) {
  if (!c.weak) throw InvalidInput("clip " + c.id + " has no weak label");
  return *c.weak;
}

const StrongLabelGrid& strong_of(const Clip& c) {
  if (!c.strong) throw InvalidInput("clip " + c.id + " has no strong label");
  return *c.strong;
}

template <typename S>
std::vector<Vector<S>> weak_labels(const std::vector<Clip>& clips) {
  std::vector<Vector<S>> out;
  for (const auto& c : clips) out.push_back(weak_of(c).cast<S>());
  return out;
}

template <typename S>
std::vector<Matrix<S>> strong_labels(const std::vector<Clip>& clips) {
  std::vector<Matrix<S>> out;
  for (const auto& c : clips) out.push_back(strong_of(c).cast<S>());
  return out;
}

template <typename V>
std::vector<V> mix_all(const std::vector<V>& a, const std::vector<V>& b, double lambda) {
  if (a.size() != b.size()) throw InvalidInput("mix: sub-batch sizes differ");
  std::vector<V> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(mix(a[i], b[i], lambda));
  return out;
}

template <typename S>
BatchOutput<S> run(const PseCrnn<S>& model, const ModelState<S>& state, const std::vector<Matrix<S>>& x) {
  if (x.empty()) return {};
  return model.forward(state, x, Mode::Train);
}

template <typename S>
void set_teacher_targets(ObjectiveInputs<S>& in, const PseCrnn<S>& model, const ModelState<S>& teacher,
                         const std::vector<Clip>& a, const std::vector<Clip>& b, double lambda) {
  const auto ta = run(model, teacher, specs<S>(a));
  if (lambda == 1.0) {
    in.teacher_weak = ta.weak;
    in.teacher_strong = ta.strong;
    return;
  }
  const auto tb = run(model, teacher, specs<S>(b));
  in.teacher_weak = mix_all(ta.weak, tb.weak, lambda);
  in.teacher_strong = mix_all(ta.strong, tb.strong, lambda);
}

// Supervised targets for mixing clips `a` with clips `b`.
template <typename S>
void set_weak_targets(ObjectiveInputs<S>& in, const PseCrnn<S>& model, const std::vector<Clip>& a,
                      const std::vector<Clip>& b, double lambda, SupervisedTargets targets,
                      const ModelState<S>* student) {
  if (targets == SupervisedTargets::MixedLabels) {
    in.weak_y = mix_all(weak_labels<S>(a), weak_labels<S>(b), lambda);
    return;
  }
  if (!student) throw InvalidInput("student-output targets need the student state");
  in.weak_y = mix_all(run(model, *student, specs<S>(a)).weak, run(model, *student, specs<S>(b)).weak, lambda);
}

template <typename S>
void set_strong_targets(ObjectiveInputs<S>& in, const PseCrnn<S>& model, const std::vector<Clip>& a,
                        const std::vector<Clip>& b, double lambda, SupervisedTargets targets,
                        const ModelState<S>* student) {
  if (targets == SupervisedTargets::MixedLabels) {
    in.strong_y = mix_all(strong_labels<S>(a), strong_labels<S>(b), lambda);
    return;
  }
  if (!student) throw InvalidInput("student-output targets need the student state");
  in.strong_y =
      mix_all(run(model, *student, specs<S>(a)).strong, run(model, *student, specs<S>(b)).strong, lambda);
}

template <typename S>
Matrix<S> stack(const std::vector<Vector<S>>& rows, Eigen::Index cols) {
  Matrix<S> m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw InvalidInput("weak vector length mismatch");
    m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return m;
}

}  // namespace

Batch shuffle_within_type(const Batch& batch, Rng& rng) {
  return {permuted(batch.weak, rng), permuted(batch.strong, rng), permuted(batch.unlabeled, rng)};
}

Batch augment_batch(const Batch& batch, const AugmentationPolicy& policy, Rng& rng) {
  return {augmented(batch.weak, policy, rng), augmented(batch.strong, policy, rng),
          augmented(batch.unlabeled, policy, rng)};
}

template <typename S>
LossBundle evaluate_objective(const PseCrnn<S>& model, const ModelState<S>& student, const ObjectiveInputs<S>& in,
                              double w_t, ParamSet<S>* grads, Term term, std::vector<ForwardCache<S>>* caches) {
  if (in.weak_x.size() != in.weak_y.size()) throw InvalidInput("weak inputs and targets differ in count");
  if (in.strong_x.size() != in.strong_y.size()) throw InvalidInput("strong inputs and targets differ in count");
  if (!in.strong_weak_y.empty() && in.strong_weak_y.size() != in.strong_x.size())
    throw InvalidInput("strong clip-level targets differ in count");
  if (in.unlabeled_x.size() != in.teacher_weak.size() || in.unlabeled_x.size() != in.teacher_strong.size())
    throw InvalidInput("unlabeled inputs and teacher targets differ in count");

  const double cw = (term == Term::Total || term == Term::Weak) ? 1.0 : 0.0;
  const double cs = (term == Term::Total || term == Term::Strong) ? 1.0 : 0.0;
  const double ccw = term == Term::Total ? w_t : (term == Term::ConsistencyWeak ? 1.0 : 0.0);
  const double ccs = term == Term::Total ? w_t : (term == Term::ConsistencyStrong ? 1.0 : 0.0);
  const bool keep = grads != nullptr || caches != nullptr;
  const Eigen::Index classes = model.config().classes;

  LossBundle out;
  out.lambda = in.lambda;
  out.w_t = w_t;

  ForwardCache<S> weak_cache, strong_cache, unl_cache;
  BatchOutput<S> weak_out, strong_out, unl_out;
  if (!in.weak_x.empty()) weak_out = model.forward(student, in.weak_x, Mode::Train, keep ? &weak_cache : nullptr);
  if (!in.strong_x.empty())
    strong_out = model.forward(student, in.strong_x, Mode::Train, keep ? &strong_cache : nullptr);
  if (!in.unlabeled_x.empty())
    unl_out = model.forward(student, in.unlabeled_x, Mode::Train, keep ? &unl_cache : nullptr);

  // Clip-level loss over weak clips, plus strong clips when they have clip targets.
  std::vector<Vector<S>> d_weak_w, d_weak_s;
  {
    const std::size_t nw = in.weak_x.size();
    const std::size_t ns = in.strong_weak_y.empty() ? 0 : in.strong_x.size();
    std::vector<Vector<S>> pred(weak_out.weak), target(in.weak_y);
    for (std::size_t i = 0; i < ns; ++i) {
      pred.push_back(strong_out.weak[i]);
      target.push_back(in.strong_weak_y[i]);
    }
    if (!pred.empty()) {
      Matrix<S> g;
      out.l_w = static_cast<double>(binary_cross_entropy<S>(stack(pred, classes), stack(target, classes), &g));
      g *= static_cast<S>(cw);
      for (std::size_t i = 0; i < nw; ++i) d_weak_w.push_back(g.row(static_cast<Eigen::Index>(i)).transpose());
      for (std::size_t i = 0; i < ns; ++i)
        d_weak_s.push_back(g.row(static_cast<Eigen::Index>(nw + i)).transpose());
    }
  }

  // Frame-level loss: one mean over every frame of every strong clip.
  std::vector<Matrix<S>> d_strong_s;
  if (!in.strong_x.empty()) {
    const Eigen::Index frames = strong_out.strong.front().rows();
    const auto n = static_cast<Eigen::Index>(in.strong_x.size());
    Matrix<S> p(n * frames, classes), y(n * frames, classes);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in.strong_y[i].rows() != frames || in.strong_y[i].cols() != classes)
        throw InvalidInput("strong target shape mismatch");
      p.middleRows(i * frames, frames) = strong_out.strong[i];
      y.middleRows(i * frames, frames) = in.strong_y[i];
    }
    Matrix<S> g;
    out.l_s = static_cast<double>(binary_cross_entropy<S>(p, y, &g));
    g *= static_cast<S>(cs);
    for (Eigen::Index i = 0; i < n; ++i) d_strong_s.push_back(g.middleRows(i * frames, frames));
  }

  std::vector<Vector<S>> d_weak_u;
  std::vector<Matrix<S>> d_strong_u;
  if (!in.unlabeled_x.empty()) {
    const auto n = static_cast<Eigen::Index>(in.unlabeled_x.size());
    const Eigen::Index frames = unl_out.strong.front().rows();
    Matrix<S> gw, gs;
    out.l_cw = static_cast<double>(
        mean_squared_error<S>(stack(unl_out.weak, classes), stack(in.teacher_weak, classes), &gw));
    Matrix<S> p(n * frames, classes), y(n * frames, classes);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in.teacher_strong[i].rows() != frames || in.teacher_strong[i].cols() != classes)
        throw InvalidInput("teacher target shape mismatch");
      p.middleRows(i * frames, frames) = unl_out.strong[i];
      y.middleRows(i * frames, frames) = in.teacher_strong[i];
    }
    out.l_cs = static_cast<double>(mean_squared_error<S>(p, y, &gs));
    gw *= static_cast<S>(ccw);
    gs *= static_cast<S>(ccs);
    for (Eigen::Index i = 0; i < n; ++i) {
      d_weak_u.push_back(gw.row(i).transpose());
      d_strong_u.push_back(gs.middleRows(i * frames, frames));
    }
  }
  out.finalize();

  if (grads) {
    if (!in.weak_x.empty() && cw != 0.0) model.backward(student, weak_cache, {}, d_weak_w, *grads);
    const bool strong_weak = !d_weak_s.empty() && cw != 0.0;
    if (!in.strong_x.empty() && (cs != 0.0 || strong_weak))
      model.backward(student, strong_cache, cs != 0.0 ? std::span<const Matrix<S>>(d_strong_s) : std::span<const Matrix<S>>{},
                     strong_weak ? std::span<const Vector<S>>(d_weak_s) : std::span<const Vector<S>>{}, *grads);
    if (!in.unlabeled_x.empty() && (ccw != 0.0 || ccs != 0.0))
      model.backward(student, unl_cache, ccs != 0.0 ? std::span<const Matrix<S>>(d_strong_u) : std::span<const Matrix<S>>{},
                     ccw != 0.0 ? std::span<const Vector<S>>(d_weak_u) : std::span<const Vector<S>>{}, *grads);
  }
  if (caches) {
    if (!in.weak_x.empty()) caches->push_back(std::move(weak_cache));
    if (!in.strong_x.empty()) caches->push_back(std::move(strong_cache));
    if (!in.unlabeled_x.empty()) caches->push_back(std::move(unl_cache));
  }
  return out;
}

template <typename S>
ObjectiveInputs<S> cct_inputs(const PseCrnn<S>& model, const ModelState<S>& teacher, const Batch& d,
                              const Batch& aug_d, double lambda, SupervisedTargets targets,
                              const ModelState<S>* student) {
  ObjectiveInputs<S> in;
  in.lambda = lambda;
  in.weak_x = mixed_specs<S>(d.weak, aug_d.weak, lambda);
  set_weak_targets(in, model, d.weak, aug_d.weak, lambda, targets, student);
  in.strong_x = mixed_specs<S>(d.strong, aug_d.strong, lambda);
  set_strong_targets(in, model, d.strong, aug_d.strong, lambda, targets, student);
  in.unlabeled_x = mixed_specs<S>(d.unlabeled, aug_d.unlabeled, lambda);
  set_teacher_targets(in, model, teacher, d.unlabeled, aug_d.unlabeled, lambda);
  return in;
}

template <typename S>
ObjectiveInputs<S> m3_inputs(const PseCrnn<S>& model, const ModelState<S>& teacher, const Batch& d,
                             const Batch& aug_a, const Batch& aug_b, double lambda, SupervisedTargets targets,
                             const ModelState<S>* student) {
  ObjectiveInputs<S> in;
  in.lambda = lambda;
  in.weak_x = mixed_specs<S>(d.weak, aug_a.weak, lambda);
  set_weak_targets(in, model, d.weak, aug_a.weak, lambda, targets, student);
  in.strong_x = mixed_specs<S>(d.strong, aug_b.strong, lambda);
  set_strong_targets(in, model, d.strong, aug_b.strong, lambda, targets, student);
  in.unlabeled_x = mixed_specs<S>(aug_a.unlabeled, aug_b.unlabeled, lambda);
  set_teacher_targets(in, model, teacher, aug_a.unlabeled, aug_b.unlabeled, lambda);
  return in;
}

template <typename S>
ObjectiveInputs<S> mean_teacher_inputs(const PseCrnn<S>& model, const ModelState<S>& teacher,
                                       const Batch& student_view, const Batch& teacher_view) {
  if (student_view.unlabeled.size() != teacher_view.unlabeled.size())
    throw InvalidInput("student and teacher views differ in size");
  ObjectiveInputs<S> in;
  in.weak_x = specs<S>(student_view.weak);
  in.weak_y = weak_labels<S>(student_view.weak);
  in.strong_x = specs<S>(student_view.strong);
  in.strong_y = strong_labels<S>(student_view.strong);
  for (const auto& c : student_view.strong)
    in.strong_weak_y.push_back((c.weak ? *c.weak : weak_from_grid(strong_of(c))).template cast<S>());
  in.unlabeled_x = specs<S>(student_view.unlabeled);
  set_teacher_targets(in, model, teacher, teacher_view.unlabeled, teacher_view.unlabeled, 1.0);
  return in;
}

template <typename S>
ObjectiveInputs<S> unmixed_inputs(const PseCrnn<S>& model, const ModelState<S>& teacher, const Batch& batch) {
  ObjectiveInputs<S> in;
  in.weak_x = specs<S>(batch.weak);
  in.weak_y = weak_labels<S>(batch.weak);
  in.strong_x = specs<S>(batch.strong);
  in.strong_y = strong_labels<S>(batch.strong);
  in.unlabeled_x = specs<S>(batch.unlabeled);
  set_teacher_targets(in, model, teacher, batch.unlabeled, batch.unlabeled, 1.0);
  return in;
}

template <typename S>
LossBundle cct_losses(const PseCrnn<S>& model, const ModelState<S>& student, const ModelState<S>& teacher,
                      const Batch& d, const Batch& aug_d, double lambda, double w_t) {
  return evaluate_objective(model, student, cct_inputs(model, teacher, d, aug_d, lambda), w_t);
}

template <typename S>
LossBundle m3_losses(const PseCrnn<S>& model, const ModelState<S>& student, const ModelState<S>& teacher,
                     const Batch& d, const Batch& aug_a, const Batch& aug_b, double lambda, double w_t) {
  return evaluate_objective(model, student, m3_inputs(model, teacher, d, aug_a, aug_b, lambda), w_t);
}

template <typename S>
LossBundle unmixed_losses(const PseCrnn<S>& model, const ModelState<S>& student, const ModelState<S>& teacher,
                          const Batch& batch, double w_t) {
  return evaluate_objective(model, student, unmixed_inputs(model, teacher, batch), w_t);
}

#define HPSED_INSTANTIATE(S)                                                                                       \
  template LossBundle evaluate_objective<S>(const PseCrnn<S>&, const ModelState<S>&, const ObjectiveInputs<S>&,    \
                                            double, ParamSet<S>*, Term, std::vector<ForwardCache<S>>*);            \
  template ObjectiveInputs<S> cct_inputs<S>(const PseCrnn<S>&, const ModelState<S>&, const Batch&, const Batch&,   \
                                            double, SupervisedTargets, const ModelState<S>*);                      \
  template ObjectiveInputs<S> m3_inputs<S>(const PseCrnn<S>&, const ModelState<S>&, const Batch&, const Batch&,    \
                                           const Batch&, double, SupervisedTargets, const ModelState<S>*);         \
  template ObjectiveInputs<S> mean_teacher_inputs<S>(const PseCrnn<S>&, const ModelState<S>&, const Batch&,        \
                                                     const Batch&);                                                \
  template ObjectiveInputs<S> unmixed_inputs<S>(const PseCrnn<S>&, const ModelState<S>&, const Batch&);            \
  template LossBundle cct_losses<S>(const PseCrnn<S>&, const ModelState<S>&, const ModelState<S>&, const Batch&,   \
                                    const Batch&, double, double);                                                 \
  template LossBundle m3_losses<S>(const PseCrnn<S>&, const ModelState<S>&, const ModelState<S>&, const Batch&,    \
                                   const Batch&, const Batch&, double, double);                                    \
  template LossBundle unmixed_losses<S>(const PseCrnn<S>&, const ModelState<S>&, const ModelState<S>&,             \
                                        const Batch&, double);

HPSED_INSTANTIATE(float)
HPSED_INSTANTIATE(double)
#undef HPSED_INSTANTIATE

}  // namespace hpsed
