// SPDX-License-Identifier: Apache-2.0
#include "hpsed/manifest.hpp"

#include "hpsed/errors.hpp"
#include "hpsed/labels.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace hpsed {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream s(line);
  while (std::getline(s, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \r\n");
  if (first == std::string::npos) return {};
  s.erase(0, first);
  s.erase(s.find_last_not_of(" \r\n") + 1);
  return s;
}

bool is_header(const std::string& line) { return line.rfind("filename", 0) == 0; }

double parse_time(const std::string& field, std::size_t line_no) {
  const std::string f = trim(field);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || p != f.data() + f.size() || f.empty())
    throw ParseError("not a number: '" + f + "'", line_no);
  return v;
}

int parse_label(const std::string& field, std::size_t line_no) {
  const auto label = class_index(trim(field));
  if (!label) throw ParseError("unknown label '" + trim(field) + "'", line_no);
  return *label;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

ClipEvents read_strong_manifest(std::istream& in) {
  ClipEvents out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line_no == 1 && is_header(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() == 1) {
      out[trim(fields[0])];
      continue;
    }
    if (fields.size() != 4) throw ParseError("expected 4 tab-separated fields", line_no);
    const std::string name = trim(fields[0]);
    if (name.empty()) throw ParseError("empty filename", line_no);
    Event e;
    e.onset = parse_time(fields[1], line_no);
    e.offset = parse_time(fields[2], line_no);
    e.label = parse_label(fields[3], line_no);
    if (!(e.onset >= 0.0 && e.onset < e.offset && e.offset <= kClipSeconds))
      throw ParseError("event times must satisfy 0 <= onset < offset <= 10", line_no);
    out[name].push_back(e);
  }
  return out;
}

ClipEvents load_strong_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_strong_manifest(in);
}

WeakManifest read_weak_manifest(std::istream& in) {
  WeakManifest out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line_no == 1 && is_header(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw ParseError("expected filename<TAB>labels", line_no);
    const std::string name = trim(fields[0]);
    if (name.empty()) throw ParseError("empty filename", line_no);
    WeakLabel w = WeakLabel::Zero(kNumClasses);
    for (const auto& item : split(fields[1], ',')) {
      if (trim(item).empty()) continue;
      w(parse_label(item, line_no)) = 1.f;
    }
    if (w.sum() == 0.f) throw ParseError("weak clip without labels", line_no);
    out[name] = w;
  }
  return out;
}

WeakManifest load_weak_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_weak_manifest(in);
}

std::vector<std::string> read_clip_list(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string name = trim(split(line, '\t').empty() ? line : split(line, '\t')[0]);
    if (name.empty()) continue;
    if (line_no == 1 && is_header(name)) continue;
    out.push_back(name);
  }
  return out;
}

std::vector<std::string> load_clip_list(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_clip_list(in);
}

void write_strong_manifest(const std::filesystem::path& path, const ClipEvents& events) {
  auto out = open_out(path);
  out << "filename\tonset\toffset\tevent_label\n";
  for (const auto& [name, list] : events) {
    if (list.empty())
      out << name << '\n';
    else
      write_event_table(out, ClipEvents{{name, list}});
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_weak_manifest(const std::filesystem::path& path, const WeakManifest& labels) {
  auto out = open_out(path);
  out << "filename\tevent_labels\n";
  for (const auto& [name, w] : labels) {
    out << name << '\t';
    bool first = true;
    for (int c = 0; c < w.size(); ++c) {
      if (w(c) <= 0.5f) continue;
      out << (first ? "" : ",") << class_name(c);
      first = false;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_clip_list(const std::filesystem::path& path, const std::vector<std::string>& names) {
  auto out = open_out(path);
  out << "filename\n";
  for (const auto& n : names) out << n << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hpsed
