// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#include "grass/dataset.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "grass/error.hpp"

namespace grass {

using nlohmann::json;

namespace {

struct FieldError {
  std::string field;
  std::string message;
};

Mat parse_rows(const json& j, const char* field) {
  if (!j.is_array()) throw FieldError{field, "expected an array of rows"};
  if (j.empty()) return Mat();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array()) throw FieldError{field, "row " + std::to_string(r) + " is not an array"};
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) throw FieldError{field, "ragged rows"};
  }
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const json& v = j[r][c];
      if (!v.is_number()) throw FieldError{field, "non-numeric value"};
      m(r, c) = v.get<double>();
    }
  }
  if (!m.allFinite()) throw FieldError{field, "non-finite value"};
  return m;
}

const json& need(const json& obj, const char* key) {
  if (!obj.contains(key)) throw FieldError{key, "missing"};
  return obj.at(key);
}

Sample parse_object(const json& obj) {
  if (!obj.is_object()) throw FieldError{"<line>", "expected a JSON object"};
  const json& jn = need(obj, "num_nodes");
  if (!jn.is_number_integer() || jn.get<long long>() < 0) {
    throw FieldError{"num_nodes", "expected a non-negative integer"};
  }
  const auto n = jn.get<std::size_t>();

  const json& je = need(obj, "edges");
  if (!je.is_array()) throw FieldError{"edges", "expected an array of pairs"};
  std::vector<Edge> edges;
  edges.reserve(je.size());
  for (const json& p : je) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer() ||
        p[0].get<long long>() < 0 || p[1].get<long long>() < 0) {
      throw FieldError{"edges", "expected [head, tail] integer pairs"};
    }
    edges.push_back({p[0].get<Index>(), p[1].get<Index>()});
  }

  const json& jd = need(obj, "directed");
  if (!jd.is_boolean()) throw FieldError{"directed", "expected a boolean"};

  Mat nf = parse_rows(need(obj, "node_feat"), "node_feat");
  Mat ef = parse_rows(need(obj, "edge_feat"), "edge_feat");

  Sample s;
  const json& jt = need(obj, "target");
  if (jt.is_number()) {
    s.target.push_back(jt.get<double>());
  } else if (jt.is_array()) {
    for (const json& v : jt) {
      if (!v.is_number()) throw FieldError{"target", "non-numeric value"};
      s.target.push_back(v.get<double>());
    }
  } else {
    throw FieldError{"target", "expected a number or an array of numbers"};
  }

  try {
    s.graph = std::make_shared<const Graph>(
        build_graph(n, edges, std::move(nf), std::move(ef), jd.get<bool>()));
  } catch (const Error& e) {
    throw FieldError{"graph", e.what()};
  }
  return s;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

void check_header(const std::string& line, const std::filesystem::path& path) {
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception&) {
    fail(ErrorKind::data, path.string() + ": line 1: header is not valid JSON");
  }
  if (!h.is_object() || !h.contains("schema") || h["schema"] != kJsonlSchema) {
    fail(ErrorKind::data, path.string() + ": line 1: expected header {\"schema\": \"" +
                              std::string(kJsonlSchema) + "\"}");
  }
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open dataset '" + path.string() + "'");
  return in;
}

}  // namespace

Sample parse_sample(const std::string& line) {
  try {
    return parse_object(json::parse(line));
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("malformed JSON: ") + e.what());
  } catch (const FieldError& fe) {
    fail(ErrorKind::data, fe.field + ": " + fe.message);
  }
}

std::string format_sample(const Sample& s) {
  const Graph& g = *s.graph;
  json j;
  j["num_nodes"] = g.num_nodes();
  j["directed"] = g.directed();
  const std::size_t step = g.directed() ? 1 : 2;
  json edges = json::array(), ef = json::array(), nf = json::array();
  for (std::size_t e = 0; e < g.num_edges(); e += step) {
    edges.push_back({g.edge(e).head, g.edge(e).tail});
    json row = json::array();
    for (Eigen::Index c = 0; c < g.edge_features().cols(); ++c) row.push_back(g.edge_features()(e, c));
    ef.push_back(row);
  }
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < g.node_features().cols(); ++c) row.push_back(g.node_features()(i, c));
    nf.push_back(row);
  }
  j["edges"] = edges;
  j["node_feat"] = nf;
  j["edge_feat"] = ef;
  if (s.target.size() == 1) j["target"] = s.target[0];
  else j["target"] = s.target;
  return j.dump();
}

Dataset read_jsonl(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      check_header(line, path);
      continue;
    }
    if (is_blank(line)) continue;
    try {
      ds.samples.push_back(parse_sample(line));
    } catch (const Error& e) {
      fail(ErrorKind::data, path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  ds.content_hash = file_hash(path);
  return ds;
}

void write_jsonl(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write dataset '" + path.string() + "'");
  out << json{{"schema", kJsonlSchema}}.dump() << '\n';
  for (const Sample& s : ds.samples) out << format_sample(s) << '\n';
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

DatasetReport validate_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  DatasetReport rep;
  std::string line;
  std::size_t lineno = 0;
  double nodes = 0.0, edges = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      check_header(line, path);
      continue;
    }
    if (is_blank(line)) continue;
    try {
      const Sample s = parse_object(json::parse(line));
      ++rep.graphs;
      nodes += static_cast<double>(s.graph->num_nodes());
      const double m = static_cast<double>(s.graph->num_edges());
      edges += s.graph->directed() ? m : m / 2.0;
    } catch (const json::exception& e) {
      ++rep.invalid_lines;
      rep.problems.push_back("line " + std::to_string(lineno) + ": <json>: " + e.what());
    } catch (const FieldError& fe) {
      ++rep.invalid_lines;
      rep.problems.push_back("line " + std::to_string(lineno) + ": " + fe.field + ": " + fe.message);
    }
  }
  if (rep.graphs > 0) {
    rep.avg_nodes = nodes / static_cast<double>(rep.graphs);
    rep.avg_edges = edges / static_cast<double>(rep.graphs);
  }
  return rep;
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open '" + path.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

}  // namespace grass
