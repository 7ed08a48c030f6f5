// Copyright 2026 The gckit Authors.
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

#pragma once

// Matrix file formats.
//
// LPM1 layout (all integers and floats little-endian):
//   bytes 0..3   ASCII "LPM1"
//   bytes 4..7   u32 n_docs
//   bytes 8..11  u32 n_texts
//   then n_docs * n_texts f64 values, row-major.
//
// Sidecars docs.jsonl / texts.jsonl hold one {"id":..., "text":...} object per
// line, aligned with matrix rows / columns by position.

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gckit/error.hpp"
#include "gckit/matrix.hpp"
#include "json.hpp"

namespace gckit {

enum class MatrixFormat { kBinary, kCsv };

namespace io_detail {

inline constexpr std::string_view kMagic = "LPM1";
inline constexpr std::size_t kHeaderBytes = 12;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline std::uint64_t get_le(std::string_view in, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int b = 0; b < width; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  }
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace io_detail

inline std::string encode_lpm1(const Matrix& m) {
  std::string out;
  out.reserve(io_detail::kHeaderBytes + 8 * m.data().size());
  out.append(io_detail::kMagic);
  io_detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  io_detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) io_detail::put_f64(out, v);
  return out;
}

/// Parses an LPM1 byte stream without checking log-probability invariants.
inline Matrix decode_lpm1(std::string_view bytes) {
  using namespace io_detail;
  if (bytes.size() < kHeaderBytes || bytes.substr(0, 4) != kMagic) {
    throw Error(ErrorCode::kMalformedHeader, "missing LPM1 magic or truncated header");
  }
  const auto rows = static_cast<std::size_t>(get_le(bytes, 4, 4));
  const auto cols = static_cast<std::size_t>(get_le(bytes, 8, 4));
  const std::size_t payload = bytes.size() - kHeaderBytes;
  if (payload % 8 != 0 || payload / 8 != rows * cols) {
    throw Error(ErrorCode::kDimensionMismatch,
                "header declares " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " but payload holds " +
                    std::to_string(payload) + " bytes");
  }
  std::vector<double> values(rows * cols);
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] = std::bit_cast<double>(get_le(bytes, kHeaderBytes + 8 * k, 8));
  }
  return Matrix(rows, cols, std::move(values));
}

/// Parses headerless CSV, one document per line.
inline Matrix parse_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string line(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    // Accept the typographic minus sign U+2212.
    for (std::size_t pos; (pos = line.find("\xE2\x88\x92")) != std::string::npos;) {
      line.replace(pos, 3, "-");
    }
    std::string_view rest = io_detail::trim(line);
    if (rest.empty()) continue;
    std::size_t count = 0;
    while (true) {
      const auto comma = rest.find(',');
      const auto field = io_detail::trim(rest.substr(0, comma));
      double v = 0.0;
      const auto* first = field.data();
      const auto* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || field.empty()) {
        throw Error(ErrorCode::kMalformedHeader,
                    "line " + std::to_string(line_no) + ": cannot parse '" +
                        std::string(field) + "'");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "line " + std::to_string(line_no) + " has " +
                      std::to_string(count) + " fields, expected " +
                      std::to_string(cols));
    }
    ++rows;
  }
  return Matrix(rows, cols, std::move(values));
}

/// Reads `{"id": ...}` per line. Numeric ids are kept in their JSON spelling.
inline std::vector<std::string> read_jsonl_ids(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id")) {
      throw Error(ErrorCode::kMalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": missing \"id\"");
    }
    const auto& id = j["id"];
    ids.push_back(id.is_string() ? id.get<std::string>() : id.dump());
  }
  return ids;
}

inline void write_jsonl_entries(const std::filesystem::path& path,
                                const std::vector<std::string>& ids,
                                const std::vector<std::string>& texts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    nlohmann::json j = {{"id", ids[i]}, {"text", i < texts.size() ? texts[i] : ""}};
    out << j.dump() << '\n';
  }
}

/// Loads a matrix and enforces the log-probability invariants. Sidecars named
/// docs.jsonl / texts.jsonl next to the file supply ids when present.
inline LogProbMatrix load_matrix(const std::filesystem::path& path,
                                 MatrixFormat format) {
  const std::string bytes = io_detail::read_file(path);
  LogProbMatrix m;
  m.log_p = format == MatrixFormat::kBinary ? decode_lpm1(bytes) : parse_csv(bytes);
  const auto dir = path.parent_path();
  if (std::filesystem::exists(dir / "docs.jsonl")) m.doc_ids = read_jsonl_ids(dir / "docs.jsonl");
  if (std::filesystem::exists(dir / "texts.jsonl")) m.text_ids = read_jsonl_ids(dir / "texts.jsonl");
  validate(m);
  return m;
}

inline MatrixFormat format_from_extension(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? MatrixFormat::kCsv : MatrixFormat::kBinary;
}

inline LogProbMatrix load_matrix(const std::filesystem::path& path) {
  return load_matrix(path, format_from_extension(path));
}

inline void store_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const std::string bytes = encode_lpm1(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace gckit
