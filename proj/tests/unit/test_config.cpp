// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"
#include "hpsed/checkpoint.hpp"
#include "hpsed/config.hpp"
#include "hpsed/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace hpsed;
namespace fs = std::filesystem;

TEST(Config, RoundTrips) {
  const auto a = ArchitectureConfig::reduced();
  EXPECT_EQ(architecture_from_json(to_json(a)), a);
  TrainingConfig t;
  t.principle = Principle::M3;
  t.w_max = 2.5;
  t.seed = 99;
  t.augmentation.max_freq_shift = 3;
  t.supervised_targets = SupervisedTargets::MixedStudentOutputs;
  const auto t2 = training_from_json(to_json(t));
  EXPECT_EQ(t2.principle, Principle::M3);
  EXPECT_EQ(t2.w_max, 2.5);
  EXPECT_EQ(t2.seed, 99u);
  EXPECT_EQ(t2.augmentation.max_freq_shift, 3);
  EXPECT_EQ(t2.supervised_targets, SupervisedTargets::MixedStudentOutputs);
  DecodingConfig d;
  d.median_window = 11;
  d.weak_gate = 0.4;
  const auto d2 = decoding_from_json(to_json(d));
  EXPECT_EQ(d2.median_window, 11);
  EXPECT_EQ(d2.weak_gate, 0.4);
  const auto f = features_from_json(to_json(FeatureConfig::reduced()));
  EXPECT_EQ(f.hop, 1724);
}

TEST(Config, PartialOverridesAndErrors) {
  const auto t = training_from_json(R"({"w_max": 0.0, "steps": 7})");
  EXPECT_EQ(t.w_max, 0.0);
  EXPECT_EQ(t.steps, 7);
  EXPECT_EQ(t.alpha, 1.0);
  EXPECT_THROW(training_from_json(R"({"wmax": 1})"), ParseError);
  EXPECT_THROW(training_from_json(R"({"principle": "fixmatch"})"), ParseError);
  EXPECT_THROW(training_from_json(R"({"alpha": -1})"), ParseError);
  EXPECT_THROW(training_from_json("{"), ParseError);
  EXPECT_THROW(decoding_from_json(R"({"median_window": 4})"), ParseError);
}

TEST(Config, RunConfigFile) {
  const auto dir = fs::temp_directory_path() / "hpsed_config_test";
  fs::create_directories(dir);
  std::ofstream(dir / "run.json") << R"({"training": {"principle": "mean-teacher"}, "decoding": {"threshold": 0.4}})";
  const auto rc = load_run_config(dir / "run.json");
  EXPECT_EQ(rc.training.principle, Principle::MeanTeacher);
  EXPECT_EQ(rc.decoding.threshold, 0.4);
  EXPECT_EQ(rc.architecture, ArchitectureConfig{});
  std::ofstream(dir / "bad.json") << R"({"optimizer": {}})";
  EXPECT_THROW(load_run_config(dir / "bad.json"), ParseError);
  fs::remove_all(dir);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto dir = fs::temp_directory_path() / "hpsed_checkpoint_test";
  fs::create_directories(dir);
  const auto arch = hpsed::testing::tiny_architecture();
  const PseCrnn<float> m(arch);
  TrainingState st;
  st.student = m.init(1);
  st.teacher = m.init(2);
  hpsed::testing::jitter_vectors(m, st.teacher, 3);
  st.student.buffers.values.setLinSpaced(-1.f, 1.f);
  st.adam = AdamState::zeros(m.parameter_count());
  st.adam.m.setConstant(0.25f);
  st.adam.v.setLinSpaced(0.f, 3.f);
  st.adam.t = 17;
  st.step = 17;
  TrainingConfig tc;
  tc.seed = 1234567890123ULL;
  tc.principle = Principle::M3;
  save_checkpoint(dir / "c.ck", {arch, FeatureConfig::reduced(), tc, st});
  EXPECT_FALSE(fs::exists(dir / "c.ck.tmp"));
  const auto c = load_checkpoint(dir / "c.ck");
  EXPECT_EQ(c.architecture, arch);
  EXPECT_EQ(c.features.hop, 1724);
  EXPECT_EQ(c.training.seed, tc.seed);
  EXPECT_EQ(c.training.principle, Principle::M3);
  EXPECT_EQ(c.state.step, 17);
  EXPECT_EQ(c.state.adam.t, 17);
  EXPECT_EQ(c.state.student.params.values, st.student.params.values);
  EXPECT_EQ(c.state.student.buffers.values, st.student.buffers.values);
  EXPECT_EQ(c.state.teacher.params.values, st.teacher.params.values);
  EXPECT_EQ(c.state.adam.m, st.adam.m);
  EXPECT_EQ(c.state.adam.v, st.adam.v);
  fs::remove_all(dir);
}

TEST(Checkpoint, RejectsGarbage) {
  const auto dir = fs::temp_directory_path() / "hpsed_checkpoint_bad";
  fs::create_directories(dir);
  std::ofstream(dir / "x.ck") << "not a checkpoint at all";
  EXPECT_THROW(load_checkpoint(dir / "x.ck"), ParseError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ck"), IoError);
  fs::remove_all(dir);
}
