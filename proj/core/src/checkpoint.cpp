// SPDX-License-Identifier: Apache-2.0
#include "hpsed/checkpoint.hpp"

#include "hpsed/config.hpp"
#include "hpsed/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace hpsed {

using json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'H', 'P', 'S', 'E', 'D', 'C', 'K', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

struct Section {
  std::string prefix;
  const ParamLayout* layout;
};

json manifest(const std::vector<Section>& sections, Eigen::Index adam_size) {
  json tensors = json::array();
  for (const auto& s : sections)
    for (const auto& slot : s.layout->slots()) tensors.push_back({{"name", s.prefix + slot.name}, {"shape", slot.shape}});
  tensors.push_back({{"name", "adam/m"}, {"shape", {adam_size}}});
  tensors.push_back({{"name", "adam/v"}, {"shape", {adam_size}}});
  return tensors;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto& st = ck.state;
  const std::vector<Section> sections{{"student/", &st.student.params.layout},
                                      {"student_buffers/", &st.student.buffers.layout},
                                      {"teacher/", &st.teacher.params.layout},
                                      {"teacher_buffers/", &st.teacher.buffers.layout}};
  json header;
  header["format"] = 1;
  header["architecture"] = json::parse(to_json(ck.architecture));
  header["features"] = json::parse(to_json(ck.features));
  header["training"] = json::parse(to_json(ck.training));
  header["step"] = st.step;
  header["adam_t"] = st.adam.t;
  header["rng"] = {{"seed", ck.training.seed}, {"keying", "seed/stream/step"}, {"next_step", st.step}};
  header["tensors"] = manifest(sections, st.adam.m.size());
  const std::string text = header.dump();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t n = text.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    auto put = [&](const Vector<float>& v) {
      out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    };
    put(st.student.params.values);
    put(st.student.buffers.values);
    put(st.teacher.params.values);
    put(st.teacher.buffers.values);
    put(st.adam.m);
    put(st.adam.v);
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint64_t n = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ParseError(path.string() + ": not a checkpoint file", 0);
  if (n > (std::uint64_t{1} << 30)) throw ParseError(path.string() + ": header too large", 0);
  std::string text(n, '\0');
  in.read(text.data(), static_cast<std::streamsize>(n));
  if (!in) throw IoError(path.string() + ": truncated header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": bad header: " + e.what(), 0);
  }

  Checkpoint ck;
  try {
    ck.architecture = architecture_from_json(header.at("architecture").dump());
    ck.features = features_from_json(header.at("features").dump());
    ck.training = training_from_json(header.at("training").dump());
    ck.state.step = header.at("step").get<long long>();
    ck.state.adam.t = header.at("adam_t").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": incomplete header: " + e.what(), 0);
  }

  const PseCrnn<float> model(ck.architecture);
  auto& st = ck.state;
  st.student = {model.zero_grads(), ParamSet<float>(model.buffer_layout())};
  st.teacher = st.student;
  const std::int64_t adam_t = st.adam.t;
  st.adam = AdamState::zeros(model.parameter_count());
  st.adam.t = adam_t;
  const std::vector<Section> sections{{"student/", &st.student.params.layout},
                                      {"student_buffers/", &st.student.buffers.layout},
                                      {"teacher/", &st.teacher.params.layout},
                                      {"teacher_buffers/", &st.teacher.buffers.layout}};
  if (manifest(sections, st.adam.m.size()) != header.at("tensors"))
    throw ParseError(path.string() + ": tensor manifest does not match the architecture", 0);

  auto get = [&](Vector<float>& v) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (!in) throw IoError(path.string() + ": truncated tensor data");
  };
  get(st.student.params.values);
  get(st.student.buffers.values);
  get(st.teacher.params.values);
  get(st.teacher.buffers.values);
  get(st.adam.m);
  get(st.adam.v);
  return ck;
}

}  // namespace hpsed
