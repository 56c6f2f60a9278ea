// Copyright 2026 The kforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kf/kernel_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace kf {
namespace {

constexpr std::string_view kMagic = "KGM1";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::string_view source, std::size_t line) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(Errc::input, fmt::format("{}:{}: not a number: '{}'", source, line, field));
  }
  return value;
}

int parse_int(std::string_view field, std::string_view source, std::size_t line) {
  int value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    // Accept labels written as "3.0".
    const double d = parse_double(field, source, line);
    if (d != static_cast<double>(static_cast<int>(d))) {
      throw Error(Errc::input, fmt::format("{}:{}: label is not an integer: '{}'", source, line, field));
    }
    return static_cast<int>(d);
  }
  return value;
}

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t& offset, std::string_view source) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  if (offset + sizeof(U) > bytes.size()) {
    throw Error(Errc::io, fmt::format("{}: truncated kernel file", source));
  }
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    bits |= static_cast<U>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
  }
  offset += sizeof(U);
  return std::bit_cast<T>(bits);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find('\n', start);
    lines.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return lines;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> out;
  const std::string text = read_file(path);
  for (auto line : split_lines(text)) {
    line = trim(line);
    if (!line.empty()) out.emplace_back(line);
  }
  return out;
}

LabeledFeatures parse_feature_csv(std::string_view text, bool has_header, std::string_view source) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t width = 0;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  for (auto line : split_lines(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = split_commas(line);
    if (fields.size() < 2) {
      throw Error(Errc::input, fmt::format("{}:{}: need at least one feature and a label", source, line_no));
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw Error(Errc::input, fmt::format("{}:{}: expected {} columns, got {}", source, line_no,
                                           width, fields.size()));
    }
    std::vector<double> row;
    row.reserve(width - 1);
    for (std::size_t c = 0; c + 1 < width; ++c) row.push_back(parse_double(fields[c], source, line_no));
    rows.push_back(std::move(row));
    labels.push_back(parse_int(fields.back(), source, line_no));
  }
  if (rows.empty()) throw Error(Errc::input, fmt::format("{}: no data rows", source));
  LabeledFeatures out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c + 1 < width; ++c)
      out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  out.labels = std::move(labels);
  return out;
}

LabeledFeatures read_feature_csv(const std::filesystem::path& path, bool has_header) {
  return parse_feature_csv(read_file(path), has_header, path.string());
}

std::string encode_kernel(const Gram& g) {
  const auto m = static_cast<std::uint32_t>(g.size());
  std::string out(kMagic);
  out.reserve(4 + 4 + 8 * std::size_t(m) * m + 4 + g.tag().size());
  put_le<std::uint32_t>(out, m);
  const auto& k = g.matrix();
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) put_le<double>(out, k(i, j));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.tag().size()));
  out += g.tag();
  return out;
}

Gram decode_kernel(std::string_view bytes, std::string_view source) {
  if (bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(Errc::io, fmt::format("{}: missing KGM1 magic", source));
  }
  std::size_t offset = kMagic.size();
  const auto m = get_le<std::uint32_t>(bytes, offset, source);
  if ((bytes.size() - offset) / 8 < std::size_t(m) * m) {
    throw Error(Errc::io, fmt::format("{}: truncated kernel file", source));
  }
  Matrix k(m, m);
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) k(i, j) = get_le<double>(bytes, offset, source);
  const auto len = get_le<std::uint32_t>(bytes, offset, source);
  if (offset + len != bytes.size()) {
    throw Error(Errc::io, fmt::format("{}: bad name length or trailing bytes", source));
  }
  return Gram(std::move(k), std::string(bytes.substr(offset, len)));
}

void write_kernel_binary(const std::filesystem::path& path, const Gram& g) {
  write_file(path, encode_kernel(g));
}

Gram read_kernel_binary(const std::filesystem::path& path) {
  return decode_kernel(read_file(path), path.string());
}

void write_kernel_csv(const std::filesystem::path& path, const Gram& g) {
  std::string out;
  const auto& k = g.matrix();
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      if (j) out += ',';
      out += fmt::format("{}", k(i, j));  // shortest round-trip representation
    }
    out += '\n';
  }
  write_file(path, out);
}

Gram read_kernel_csv(const std::filesystem::path& path, std::string name) {
  const std::string text = read_file(path);
  const std::string source = path.string();
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (auto field : split_commas(line)) row.push_back(parse_double(field, source, line_no));
    rows.push_back(std::move(row));
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  Matrix k(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != m) {
      throw Error(Errc::shape, fmt::format("{}: row {} has {} entries, expected {}", source, i + 1,
                                           rows[i].size(), m));
    }
    for (Eigen::Index j = 0; j < m; ++j) k(i, j) = rows[i][j];
  }
  if (name.empty()) name = path.stem().string();
  return Gram(std::move(k), std::move(name));
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  std::vector<int> labels;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) labels.push_back(parse_int(line, path.string(), ++line_no));
  return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::string out;
  for (int l : labels) out += fmt::format("{}\n", l);
  write_file(path, out);
}

}  // namespace kf
