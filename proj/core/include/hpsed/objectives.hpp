// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/augment.hpp"
#include "hpsed/losses.hpp"
#include "hpsed/model.hpp"
#include "hpsed/random.hpp"
#include "hpsed/types.hpp"

#include <cstdint>
#include <vector>

namespace hpsed {

/// One training batch, grouped by label type. Weak clips carry `weak`,
/// strong clips carry `strong` (and optionally `weak`), unlabeled clips
/// carry neither.
struct Batch {
  std::vector<Clip> weak;
  std::vector<Clip> strong;
  std::vector<Clip> unlabeled;
};

/// Permutes each sub-batch independently; clips never change type.
Batch shuffle_within_type(const Batch& batch, Rng& rng);

/// Draws and applies one augmentation per clip.
Batch augment_batch(const Batch& batch, const AugmentationPolicy& policy, Rng& rng);

/// Where the supervised targets of a mixed batch come from.
enum class SupervisedTargets {
  MixedLabels,         // mix of the ground-truth labels of both operands
  MixedStudentOutputs, // mix of the (detached) student outputs on both operands
};

/// Everything the student loss needs, already mixed.
template <typename S>
struct ObjectiveInputs {
  std::vector<Matrix<S>> weak_x;
  std::vector<Vector<S>> weak_y;
  std::vector<Matrix<S>> strong_x;
  std::vector<Matrix<S>> strong_y;
  /// Clip-level targets for the strong sub-batch; empty unless the strong
  /// clips also feed the weak loss.
  std::vector<Vector<S>> strong_weak_y;
  std::vector<Matrix<S>> unlabeled_x;
  std::vector<Vector<S>> teacher_weak;
  std::vector<Matrix<S>> teacher_strong;
  double lambda = 1.0;
};

enum class Term { Total, Weak, Strong, ConsistencyWeak, ConsistencyStrong };

/// Forward (and optionally backward) of the student over all sub-batches.
/// `grads` receives d(term)/d(params) for the selected term; with Term::Total
/// the consistency gradient is scaled by w_t and skipped entirely when
/// w_t == 0. `caches` (optional) keeps the forward caches in the order
/// weak, strong, unlabeled for a later running-statistics update.
template <typename S>
LossBundle evaluate_objective(const PseCrnn<S>& model, const ModelState<S>& student, const ObjectiveInputs<S>& in,
                              double w_t, ParamSet<S>* grads = nullptr, Term term = Term::Total,
                              std::vector<ForwardCache<S>>* caches = nullptr);

/// Cross-augmented mixing: every sub-batch of D is mixed with the same
/// sub-batch of aug_d (a shuffled, augmented copy of D).
template <typename S>
ObjectiveInputs<S> cct_inputs(const PseCrnn<S>& model, const ModelState<S>& teacher, const Batch& d,
                              const Batch& aug_d, double lambda,
                              SupervisedTargets targets = SupervisedTargets::MixedLabels,
                              const ModelState<S>* student = nullptr);

/// Multi-mixing: weak clips mix D with aug_a, strong clips mix D with aug_b,
/// unlabeled clips mix aug_a with aug_b.
template <typename S>
ObjectiveInputs<S> m3_inputs(const PseCrnn<S>& model, const ModelState<S>& teacher, const Batch& d,
                             const Batch& aug_a, const Batch& aug_b, double lambda,
                             SupervisedTargets targets = SupervisedTargets::MixedLabels,
                             const ModelState<S>* student = nullptr);

/// Plain mean teacher: the student sees `student_view` (augmented D), the
/// teacher sees the unlabeled clips of `teacher_view` (D). Strong clips also
/// contribute to the weak loss.
template <typename S>
ObjectiveInputs<S> mean_teacher_inputs(const PseCrnn<S>& model, const ModelState<S>& teacher,
                                       const Batch& student_view, const Batch& teacher_view);

/// No mixing: labels and teacher targets of `batch` itself.
template <typename S>
ObjectiveInputs<S> unmixed_inputs(const PseCrnn<S>& model, const ModelState<S>& teacher, const Batch& batch);

template <typename S>
LossBundle cct_losses(const PseCrnn<S>& model, const ModelState<S>& student, const ModelState<S>& teacher,
                      const Batch& d, const Batch& aug_d, double lambda, double w_t);

template <typename S>
LossBundle m3_losses(const PseCrnn<S>& model, const ModelState<S>& student, const ModelState<S>& teacher,
                     const Batch& d, const Batch& aug_a, const Batch& aug_b, double lambda, double w_t);

template <typename S>
LossBundle unmixed_losses(const PseCrnn<S>& model, const ModelState<S>& student, const ModelState<S>& teacher,
                          const Batch& batch, double w_t);

}  // namespace hpsed
