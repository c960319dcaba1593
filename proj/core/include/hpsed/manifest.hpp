// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/postprocess.hpp"
#include "hpsed/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hpsed {

using WeakManifest = std::map<std::string, WeakLabel>;

/// "filename<TAB>onset<TAB>offset<TAB>label" lines. A line holding only a
/// filename lists a clip without events. Throws ParseError with the line
/// number on malformed lines, unknown labels or times outside
/// 0 <= onset < offset <= 10.
ClipEvents read_strong_manifest(std::istream& in);
ClipEvents load_strong_manifest(const std::filesystem::path& path);

/// "filename<TAB>label1,label2,..." lines. Throws ParseError on unknown or
/// missing labels.
WeakManifest read_weak_manifest(std::istream& in);
WeakManifest load_weak_manifest(const std::filesystem::path& path);

/// One filename per line.
std::vector<std::string> read_clip_list(std::istream& in);
std::vector<std::string> load_clip_list(const std::filesystem::path& path);

void write_strong_manifest(const std::filesystem::path& path, const ClipEvents& events);
void write_weak_manifest(const std::filesystem::path& path, const WeakManifest& labels);
void write_clip_list(const std::filesystem::path& path, const std::vector<std::string>& names);

}  // namespace hpsed
