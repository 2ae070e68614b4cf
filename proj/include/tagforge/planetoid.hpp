#pragma once

// Planetoid-style directory layout, for a dataset called <name>:
//   <name>.edges       two whitespace-separated node ids per line
//   <name>.labels      one integer class id per line; the line count is n
//   <name>.features    EMB1 feature matrix (optional)
//   <name>.texts       one raw document per line (optional)
//   <name>.split.json  {"train": [...], "val": [...], "test": [...]} (optional)
// At least one of .features / .texts must exist. Directed edge lists are
// symmetrized and duplicate edges merged. Public Cora/PubMed releases differ
// slightly in node and edge counts; whatever the files contain is used.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tagforge/dataset.hpp"
#include "tagforge/emb1.hpp"
#include "tagforge/error.hpp"

namespace tagforge {

namespace detail {

inline std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("missing file " + p.string());
  return in;
}

inline std::vector<ClassId> read_labels(const std::filesystem::path& p) {
  auto in = open_or_throw(p);
  std::vector<ClassId> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long v = -1;
    if (!(ls >> v) || v < 0)
      throw DataError(p.string() + ":" + std::to_string(lineno) + ": expected a non-negative class id");
    labels.push_back(static_cast<ClassId>(v));
  }
  return labels;
}

inline std::vector<Edge> read_edges(const std::filesystem::path& p) {
  auto in = open_or_throw(p);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long u = -1, v = -1;
    if (!(ls >> u >> v) || u < 0 || v < 0)
      throw DataError(p.string() + ":" + std::to_string(lineno) + ": expected two node ids");
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  return edges;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
  auto in = open_or_throw(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace detail

inline SplitMask read_split_json(const std::filesystem::path& p) {
  auto in = detail::open_or_throw(p);
  try {
    const auto j = nlohmann::json::parse(in);
    SplitMask s;
    s.train = j.at("train").get<std::vector<NodeId>>();
    s.val = j.at("val").get<std::vector<NodeId>>();
    s.test = j.at("test").get<std::vector<NodeId>>();
    for (auto* set : {&s.train, &s.val, &s.test}) std::sort(set->begin(), set->end());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

inline void write_split_json(const std::filesystem::path& p, const SplitMask& s) {
  const nlohmann::json j = {{"train", s.train}, {"val", s.val}, {"test", s.test}};
  detail::write_file_atomic(p, j.dump() + "\n");
}

inline Dataset load_planetoid(const std::filesystem::path& dir, const std::string& name) {
  const auto base = [&](const char* ext) { return dir / (name + ext); };

  Dataset ds;
  ds.name = name;
  ds.labels = make_labels(detail::read_labels(base(".labels")));
  const std::size_t n = ds.labels.size();
  ds.graph = graph_from_edges(n, detail::read_edges(base(".edges")));

  const bool has_features = std::filesystem::exists(base(".features"));
  const bool has_texts = std::filesystem::exists(base(".texts"));
  if (!has_features && !has_texts)
    throw DataError(dir.string() + ": neither " + name + ".features nor " + name + ".texts present");
  if (has_features) {
    ds.features = load_embedding_file(base(".features")).cast<double>();
    if (ds.features.rows() != n)
      throw DataError(base(".features").string() + ": " + std::to_string(ds.features.rows()) + " rows for " +
                      std::to_string(n) + " labelled nodes");
  }
  if (has_texts) {
    ds.texts = detail::read_lines(base(".texts"));
    // tolerate one trailing empty line
    if (ds.texts.size() == n + 1 && ds.texts.back().empty()) ds.texts.pop_back();
    if (ds.texts.size() != n)
      throw DataError(base(".texts").string() + ": " + std::to_string(ds.texts.size()) + " documents for " +
                      std::to_string(n) + " labelled nodes");
  }
  if (std::filesystem::exists(base(".split.json"))) ds.split = read_split_json(base(".split.json"));

  validate(ds);
  return ds;
}

/// Writes a dataset in the layout read by load_planetoid.
inline void save_planetoid(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  const auto base = [&](const char* ext) { return dir / (ds.name + ext); };
  {
    std::ostringstream os;
    for (NodeId i = 0; i < ds.num_nodes(); ++i)
      for (NodeId j : ds.graph.neighbors(i))
        if (i < j) os << i << ' ' << j << '\n';
    detail::write_file_atomic(base(".edges"), os.str());
  }
  {
    std::ostringstream os;
    for (ClassId c : ds.labels.labels) os << c << '\n';
    detail::write_file_atomic(base(".labels"), os.str());
  }
  if (!ds.features.empty()) save_embedding_file(base(".features"), ds.features);
  if (!ds.texts.empty()) {
    std::ostringstream os;
    for (const auto& t : ds.texts) os << t << '\n';
    detail::write_file_atomic(base(".texts"), os.str());
  }
  if (ds.split) write_split_json(base(".split.json"), *ds.split);
}

}  // namespace tagforge
