// SPDX-License-Identifier: Apache-2.0
#include "hpsed/trainer.hpp"

#include "hpsed/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hpsed {

std::string to_string(Principle p) {
  switch (p) {
    case Principle::Cct:
      return "cct";
    case Principle::M3:
      return "m3";
    case Principle::MeanTeacher:
      return "mean-teacher";
  }
  return "unknown";
}

Principle parse_principle(std::string_view name) {
  if (name == "cct") return Principle::Cct;
  if (name == "m3") return Principle::M3;
  if (name == "mean-teacher") return Principle::MeanTeacher;
  throw InvalidInput("unknown principle '" + std::string(name) + "' (expected cct, m3 or mean-teacher)");
}

void TrainingConfig::validate() const {
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  if (!(w_max >= 0.0)) throw InvalidInput("w_max must be nonnegative");
  if (ramp_steps < 0) throw InvalidInput("ramp_steps must be nonnegative");
  if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) throw InvalidInput("ema_decay must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
  if (steps < 0) throw InvalidInput("steps must be nonnegative");
  if (weak_batch < 0 || strong_batch < 0 || unlabeled_batch < 0) throw InvalidInput("batch sizes must be nonnegative");
  if (augmentation.noise_sigma < 0.0) throw InvalidInput("noise sigma must be nonnegative");
  if (augmentation.max_freq_shift < 0 || augmentation.max_freq_shift > kMaxFreqShift)
    throw InvalidInput("max frequency shift must lie in [0, 6]");
}

std::vector<int> sample_indices(std::uint64_t seed, std::string_view pool, int pool_size, int per_batch,
                                long long step) {
  std::vector<int> out;
  if (pool_size <= 0 || per_batch <= 0) return out;
  out.reserve(static_cast<std::size_t>(per_batch));
  long long cached_cycle = -1;
  std::vector<int> perm(static_cast<std::size_t>(pool_size));
  for (int j = 0; j < per_batch; ++j) {
    const long long g = step * per_batch + j;
    const long long cycle = g / pool_size;
    if (cycle != cached_cycle) {
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng = make_stream(seed, pool, static_cast<std::uint64_t>(cycle));
      std::shuffle(perm.begin(), perm.end(), rng);
      cached_cycle = cycle;
    }
    out.push_back(perm[static_cast<std::size_t>(g % pool_size)]);
  }
  return out;
}

Trainer::Trainer(ArchitectureConfig architecture, TrainingConfig config, TrainingPools pools)
    : architecture_(std::move(architecture)), config_(std::move(config)), pools_(pools), model_(architecture_) {
  config_.validate();
  static const std::vector<Clip> none;
  if (!pools_.weak) pools_.weak = &none;
  if (!pools_.strong) pools_.strong = &none;
  if (!pools_.unlabeled) pools_.unlabeled = &none;
  for (const auto& c : *pools_.weak)
    if (!c.weak) throw InvalidInput("weak pool clip " + c.id + " has no weak label");
  for (const auto& c : *pools_.strong)
    if (!c.strong) throw InvalidInput("strong pool clip " + c.id + " has no strong label");
}

TrainingState Trainer::initial_state() const {
  TrainingState s;
  s.student = model_.init(derive_seed(config_.seed, "init", 0));
  s.teacher = s.student;
  s.adam = AdamState::zeros(model_.parameter_count());
  return s;
}

Batch Trainer::sample_batch(long long step) const {
  Batch b;
  auto take = [&](const std::vector<Clip>& pool, const char* name, int n, std::vector<Clip>& out) {
    for (int i : sample_indices(config_.seed, name, static_cast<int>(pool.size()), n, step))
      out.push_back(pool[static_cast<std::size_t>(i)]);
  };
  take(*pools_.weak, "sample-weak", config_.weak_batch, b.weak);
  take(*pools_.strong, "sample-strong", config_.strong_batch, b.strong);
  take(*pools_.unlabeled, "sample-unlabeled", config_.unlabeled_batch, b.unlabeled);
  return b;
}

LossBundle Trainer::step(TrainingState& state) const {
  const long long t = state.step;
  const auto ut = static_cast<std::uint64_t>(t);
  Batch d = sample_batch(t);
  const double w_t = consistency_weight(t, config_.w_max, config_.ramp_steps);
  // An unweighted consistency term contributes nothing; skip its forwards.
  if (w_t == 0.0) d.unlabeled.clear();
  const AugmentationPolicy policy = config_.augment ? config_.augmentation : AugmentationPolicy::none();
  const std::uint64_t seed = config_.seed;
  auto augmented_copy = [&](const Batch& src, const char* shuffle_stream, const char* aug_stream) {
    Rng shuffle_rng = make_stream(seed, shuffle_stream, ut);
    Rng aug_rng = make_stream(seed, aug_stream, ut);
    return augment_batch(shuffle_within_type(src, shuffle_rng), policy, aug_rng);
  };

  ObjectiveInputs<float> inputs;
  ParamSet<float> grads = model_.zero_grads();
  std::vector<ForwardCache<float>> caches;
  LossBundle losses;
  try {
    switch (config_.principle) {
      case Principle::Cct: {
        Rng lrng = make_stream(seed, "lambda", ut);
        const double lambda = sample_lambda(config_.alpha, lrng);
        const Batch aug = augmented_copy(d, "shuffle", "augment");
        inputs = cct_inputs(model_, state.teacher, d, aug, lambda, config_.supervised_targets, &state.student);
        break;
      }
      case Principle::M3: {
        Rng lrng = make_stream(seed, "lambda", ut);
        const double lambda = sample_lambda(config_.alpha, lrng);
        const Batch a = augmented_copy(d, "shuffle-a", "augment-a");
        const Batch b = augmented_copy(d, "shuffle-b", "augment-b");
        inputs = m3_inputs(model_, state.teacher, d, a, b, lambda, config_.supervised_targets, &state.student);
        break;
      }
      case Principle::MeanTeacher: {
        Rng aug_rng = make_stream(seed, "augment", ut);
        inputs = mean_teacher_inputs(model_, state.teacher, augment_batch(d, policy, aug_rng), d);
        break;
      }
    }

    losses = evaluate_objective(model_, state.student, inputs, w_t, &grads, Term::Total, &caches);
  } catch (const NumericError& e) {
    throw DivergenceError(e.what(), t);
  }
  if (!std::isfinite(losses.total)) throw DivergenceError("non-finite loss", t);
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient", t);

  clip_grad_norm(grads, config_.grad_clip);
  AdamConfig adam;
  adam.learning_rate = config_.learning_rate;
  TrainingState next = state;
  adam_step(next.student.params, grads, next.adam, adam);
  for (const auto& c : caches) model_.update_running_stats(next.student, c);
  if (!next.student.params.all_finite()) throw DivergenceError("non-finite parameters", t);

  const double decay = ema_decay_at(t, config_.ema_decay, config_.ema_warmup);
  ema_update(next.teacher.params, next.student.params, decay);
  ema_update(next.teacher.buffers, next.student.buffers, decay);
  next.step = t + 1;
  state = std::move(next);
  return losses;
}

void Trainer::run(TrainingState& state, const StepCallback& on_step) const {
  while (state.step < config_.steps) {
    const LossBundle losses = step(state);
    if (on_step) on_step(state, losses);
  }
}

std::string loss_record(long long step, const LossBundle& l) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["lambda"] = l.lambda;
  j["w_t"] = l.w_t;
  j["L_w"] = l.l_w;
  j["L_s"] = l.l_s;
  j["L_cw"] = l.l_cw;
  j["L_cs"] = l.l_cs;
  j["total"] = l.total;
  return j.dump();
}

}  // namespace hpsed
