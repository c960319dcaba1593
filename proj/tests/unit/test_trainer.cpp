// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"
#include "hpsed/checkpoint.hpp"
#include "hpsed/errors.hpp"
#include "hpsed/trainer.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>
#include <set>

using namespace hpsed;
using namespace hpsed::testing;

namespace {

struct Pools {
  std::vector<Clip> weak, strong, unlabeled;
  TrainingPools view() const { return {&weak, &strong, &unlabeled}; }
};

Pools tiny_pools(std::uint64_t seed, int unlabeled = 10) {
  Rng rng = make_stream(seed, "pools");
  const Batch b = tiny_batch(rng, 5, 5, unlabeled);
  return {b.weak, b.strong, b.unlabeled};
}

TrainingConfig tiny_config(Principle p) {
  TrainingConfig c;
  c.principle = p;
  c.steps = 4;
  c.ramp_steps = 2;
  c.weak_batch = 2;
  c.strong_batch = 2;
  c.unlabeled_batch = 3;
  return c;
}

}  // namespace

TEST(Principle, ParseAndPrint) {
  for (auto p : {Principle::Cct, Principle::M3, Principle::MeanTeacher}) EXPECT_EQ(parse_principle(to_string(p)), p);
  EXPECT_THROW(parse_principle("fixmatch"), InvalidInput);
}

TEST(TrainingConfig, Validation) {
  TrainingConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.ema_decay = 1.01;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.w_max = -1.0;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(SampleIndices, CyclesCoverPool) {
  for (int pool : {7, 12, 50}) {
    std::vector<int> seen;
    for (long long step = 0; step < pool; ++step)
      for (int i : sample_indices(3, "u", pool, 1, step)) seen.push_back(i);
    EXPECT_EQ(std::set<int>(seen.begin(), seen.end()).size(), static_cast<std::size_t>(pool));
  }
  EXPECT_EQ(sample_indices(3, "u", 10, 4, 7), sample_indices(3, "u", 10, 4, 7));
  EXPECT_NE(sample_indices(3, "u", 100, 6, 0), sample_indices(4, "u", 100, 6, 0));
  EXPECT_TRUE(sample_indices(3, "u", 0, 4, 0).empty());
}

TEST(Trainer, StudentTeacherStartEqual) {
  const auto pools = tiny_pools(1);
  const Trainer tr(tiny_architecture(), tiny_config(Principle::Cct), pools.view());
  const auto s = tr.initial_state();
  EXPECT_EQ(s.student.params.values, s.teacher.params.values);
  EXPECT_EQ(s.step, 0);
}

TEST(Trainer, TeacherChangesOnlyThroughEma) {
  const auto pools = tiny_pools(2);
  for (auto p : {Principle::Cct, Principle::M3, Principle::MeanTeacher}) {
    const Trainer tr(tiny_architecture(), tiny_config(p), pools.view());
    auto s = tr.initial_state();
    tr.step(s);
    const auto before = s;
    tr.step(s);
    auto expected = before.teacher;
    const double decay = ema_decay_at(before.step, 0.999);
    ema_update(expected.params, s.student.params, decay);
    ema_update(expected.buffers, s.student.buffers, decay);
    EXPECT_EQ(s.teacher.params.values, expected.params.values) << to_string(p);
    EXPECT_EQ(s.teacher.buffers.values, expected.buffers.values) << to_string(p);
    EXPECT_NE(s.student.params.values, before.student.params.values);
  }
}

TEST(Trainer, LossesSatisfyTotalIdentity) {
  const auto pools = tiny_pools(3);
  for (auto p : {Principle::Cct, Principle::M3, Principle::MeanTeacher}) {
    const Trainer tr(tiny_architecture(), tiny_config(p), pools.view());
    auto s = tr.initial_state();
    tr.run(s, [&](const TrainingState& st, const LossBundle& l) {
      EXPECT_DOUBLE_EQ(l.total, l.l_w + l.l_s + l.w_t * (l.l_cw + l.l_cs));
      EXPECT_DOUBLE_EQ(l.w_t, consistency_weight(st.step - 1, 1.0, 2));
      EXPECT_GT(l.lambda, 0.0);
      EXPECT_LE(l.lambda, 1.0);
    });
    EXPECT_EQ(s.step, 4);
  }
}

TEST(Trainer, ZeroWeightIgnoresUnlabeledPool) {
  const auto a = tiny_pools(4, 10);
  auto b = a;
  Rng rng = make_stream(44, "other");
  b.unlabeled = tiny_batch(rng, 0, 0, 17).unlabeled;
  for (auto p : {Principle::Cct, Principle::M3, Principle::MeanTeacher}) {
    auto cfg = tiny_config(p);
    cfg.w_max = 0.0;
    const Trainer ta(tiny_architecture(), cfg, a.view()), tb(tiny_architecture(), cfg, b.view());
    auto sa = ta.initial_state(), sb = tb.initial_state();
    ta.run(sa, [](const TrainingState&, const LossBundle& l) {
      EXPECT_EQ(l.w_t, 0.0);
      EXPECT_EQ(l.l_cw, 0.0);
      EXPECT_EQ(l.l_cs, 0.0);
    });
    tb.run(sb);
    EXPECT_EQ(sa.student.params.values, sb.student.params.values) << to_string(p);
    EXPECT_EQ(sa.teacher.params.values, sb.teacher.params.values) << to_string(p);
  }
}

TEST(Trainer, PrinciplesDiffer) {
  const auto pools = tiny_pools(5);
  std::vector<double> totals;
  for (auto p : {Principle::Cct, Principle::M3, Principle::MeanTeacher}) {
    const Trainer tr(tiny_architecture(), tiny_config(p), pools.view());
    auto s = tr.initial_state();
    totals.push_back(tr.step(s).total);
  }
  EXPECT_NE(totals[0], totals[1]);
  EXPECT_NE(totals[0], totals[2]);
}

TEST(Trainer, DeterministicAndResumable) {
  const auto pools = tiny_pools(6);
  auto cfg = tiny_config(Principle::M3);
  cfg.steps = 6;
  const Trainer tr(tiny_architecture(), cfg, pools.view());
  std::vector<std::string> log1, log2, log3;
  auto s1 = tr.initial_state();
  tr.run(s1, [&](const TrainingState& s, const LossBundle& l) { log1.push_back(loss_record(s.step - 1, l)); });
  auto s2 = tr.initial_state();
  tr.run(s2, [&](const TrainingState& s, const LossBundle& l) { log2.push_back(loss_record(s.step - 1, l)); });
  EXPECT_EQ(log1, log2);
  EXPECT_EQ(s1.student.params.values, s2.student.params.values);

  // Interrupt after three steps, save, load, continue.
  const auto dir = std::filesystem::temp_directory_path() / "hpsed_resume_test";
  std::filesystem::create_directories(dir);
  auto s3 = tr.initial_state();
  while (s3.step < 3) {
    const long long t = s3.step;
    log3.push_back(loss_record(t, tr.step(s3)));
  }
  save_checkpoint(dir / "ck.bin", {tiny_architecture(), FeatureConfig::reduced(), cfg, s3});
  auto loaded = load_checkpoint(dir / "ck.bin");
  tr.run(loaded.state, [&](const TrainingState& s, const LossBundle& l) { log3.push_back(loss_record(s.step - 1, l)); });
  EXPECT_EQ(log3, log1);
  EXPECT_EQ(loaded.state.student.params.values, s1.student.params.values);
  EXPECT_EQ(loaded.state.teacher.params.values, s1.teacher.params.values);
  std::filesystem::remove_all(dir);
}

TEST(Trainer, DivergenceLeavesStateUntouched) {
  const auto pools = tiny_pools(7);
  const Trainer tr(tiny_architecture(), tiny_config(Principle::Cct), pools.view());
  auto s = tr.initial_state();
  s.student.params.values(0) = std::numeric_limits<float>::quiet_NaN();
  const auto before = s.student.params.values;
  try {
    tr.step(s);
    FAIL() << "expected an error";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 0);
  }
  EXPECT_EQ(s.step, 0);
  EXPECT_TRUE(before.cwiseEqual(s.student.params.values).count() == before.size() - 1);
}

TEST(Trainer, RejectsUnlabeledClipsInLabeledPools) {
  auto pools = tiny_pools(8);
  pools.weak[0].weak.reset();
  EXPECT_THROW(Trainer(tiny_architecture(), tiny_config(Principle::Cct), pools.view()), InvalidInput);
}

TEST(LossRecord, FieldOrder) {
  LossBundle l{0.5, 0.25, 0.125, 0.0625, 0.75, 2.0, 0.0};
  l.finalize();
  const auto j = nlohmann::ordered_json::parse(loss_record(3, l));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"step", "lambda", "w_t", "L_w", "L_s", "L_cw", "L_cs", "total"}));
  EXPECT_EQ(j["total"].get<double>(), l.total);
}
