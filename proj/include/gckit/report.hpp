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

// JSON / JSONL artifacts written and read by the command-line tool.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "gckit/engine.hpp"
#include "gckit/error.hpp"
#include "gckit/hierarchy.hpp"
#include "gckit/io.hpp"
#include "json.hpp"

namespace gckit {

using nlohmann::json;

/// One {"doc_id", "cluster", "distortion"} object per document, in row order.
inline void write_assignment_jsonl(std::ostream& out, const std::vector<std::string>& doc_ids,
                                   const Assignment& a) {
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    json j = {{"doc_id", doc_ids.at(i)},
              {"cluster", a.labels[i]},
              {"distortion", a.per_doc_distortion[i]}};
    out << j.dump() << '\n';
  }
}

/// Cluster labels from an assignment JSONL file, in file order.
inline std::vector<std::size_t> read_assignment_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::size_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      labels.push_back(j.at("cluster").get<std::size_t>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return labels;
}

/// Integer labels, one per line.
inline std::vector<long long> read_label_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<long long> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(line.data() + b, line.data() + e + 1, v);
    if (ec != std::errc() || ptr != line.data() + e + 1) {
      throw Error(ErrorCode::kMalformedHeader,
                  path.string() + ":" + std::to_string(line_no) + ": not an integer");
    }
    labels.push_back(v);
  }
  return labels;
}

inline json run_metadata(const RunResult& run, const Params& params, std::size_t n_texts) {
  return {{"seed", run.seed},
          {"iterations", run.assignment.iterations},
          {"converged", run.assignment.converged},
          {"total_distortion", run.assignment.total_distortion},
          {"alpha", params.alpha},
          {"K", params.k},
          {"J", n_texts}};
}

/// {"doc_id", "code": [digits..., ordinal]} per document, in row order.
inline void write_codes_jsonl(std::ostream& out, const std::vector<std::string>& doc_ids,
                              const std::vector<PrefixCode>& codes) {
  for (const auto& c : codes) {
    json j = {{"doc_id", doc_ids.at(c.row)}, {"code", c.code}};
    out << j.dump() << '\n';
  }
}

inline json tree_json(const HierNode& node) {
  json j = {{"depth", node.depth},
            {"path", node.path},
            {"size", node.doc_rows.size()},
            {"leaf", node.is_leaf}};
  if (!node.is_leaf) {
    json children = json::array();
    for (const auto& c : node.children) children.push_back(tree_json(c));
    j["children"] = std::move(children);
  }
  return j;
}

inline json tree_summary(const HierNode& root) {
  const TreeStats s = tree_stats(root);
  return {{"n_docs", root.doc_rows.size()},
          {"nodes", s.nodes},
          {"leaves", s.leaves},
          {"max_depth", s.max_depth},
          {"largest_leaf", s.largest_leaf},
          {"root", tree_json(root)}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace gckit
