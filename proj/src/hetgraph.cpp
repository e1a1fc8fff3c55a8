#include "mhcl/hetgraph.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace mhcl {
namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void parse_fail(const std::filesystem::path& file, std::size_t line,
                             const std::string& what) {
  throw GraphParseError(file.filename().string() + ":" + std::to_string(line) + ": " + what);
}

bool skip_line(std::string_view line) { return line.empty() || line.front() == '#'; }

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::pair<TypeId, TypeId> ordered(TypeId a, TypeId b) { return a <= b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

HeteroGraph HeteroGraph::build(GraphData data, Check check) {
  const auto n = data.node_types.size();
  if (data.node_names.empty()) {
    data.node_names.resize(n);
    for (std::size_t i = 0; i < n; ++i) data.node_names[i] = std::to_string(i);
  }
  if (data.node_names.size() != n) throw std::invalid_argument("node name count differs from node count");
  if (static_cast<std::size_t>(data.features.rows()) != n) {
    if (data.features.size() == 0) {
      data.features.resize(static_cast<Eigen::Index>(n), 0);
    } else {
      throw std::invalid_argument("feature row count differs from node count");
    }
  }
  if (!data.labels.empty() && data.labels.size() != n) {
    throw std::invalid_argument("label count differs from node count");
  }
  for (auto t : data.node_types) {
    if (t < 0 || static_cast<std::size_t>(t) >= data.type_names.size()) {
      throw std::invalid_argument("node type id " + std::to_string(t) + " out of range");
    }
  }

  HeteroGraph g;
  g.node_names_ = std::move(data.node_names);
  g.type_names_ = std::move(data.type_names);
  g.node_types_ = std::move(data.node_types);
  g.features_ = std::move(data.features);
  g.labels_ = std::move(data.labels);
  if (std::all_of(g.labels_.begin(), g.labels_.end(), [](int l) { return l < 0; })) g.labels_.clear();

  for (std::size_t i = 0; i < n; ++i) {
    if (!g.name_index_.emplace(g.node_names_[i], static_cast<NodeId>(i)).second) {
      throw std::invalid_argument("duplicate node id '" + g.node_names_[i] + "'");
    }
  }

  std::set<std::pair<NodeId, NodeId>> unique;
  std::set<std::pair<TypeId, TypeId>> link_types;
  for (auto [u, v] : data.edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
      throw std::invalid_argument("edge endpoint out of range");
    }
    if (u == v) throw std::invalid_argument("self loop on node '" + g.node_names_[static_cast<std::size_t>(u)] + "'");
    unique.insert(u < v ? std::pair{u, v} : std::pair{v, u});
    link_types.insert(ordered(g.node_type(u), g.node_type(v)));
  }
  g.edges_.assign(unique.begin(), unique.end());
  g.link_types_.assign(link_types.begin(), link_types.end());

  if (check == Check::heterogeneous && g.type_names_.size() + g.link_types_.size() <= 2) {
    throw std::invalid_argument("graph is not heterogeneous: " + std::to_string(g.type_names_.size()) +
                                " node types and " + std::to_string(g.link_types_.size()) +
                                " link types");
  }

  std::vector<std::size_t> degree(n, 0);
  for (auto [u, v] : g.edges_) {
    ++degree[static_cast<std::size_t>(u)];
    ++degree[static_cast<std::size_t>(v)];
  }
  g.offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + degree[i];
  g.adjacency_.resize(g.offsets_[n]);
  auto fill = g.offsets_;
  for (auto [u, v] : g.edges_) {
    g.adjacency_[fill[static_cast<std::size_t>(u)]++] = v;
    g.adjacency_[fill[static_cast<std::size_t>(v)]++] = u;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
              g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));
  }
  return g;
}

std::span<const NodeId> HeteroGraph::neighbors(NodeId v) const {
  const auto i = static_cast<std::size_t>(v);
  return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

bool HeteroGraph::adjacent(NodeId u, NodeId v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::optional<int> HeteroGraph::label(NodeId v) const {
  if (labels_.empty()) return std::nullopt;
  const int l = labels_[static_cast<std::size_t>(v)];
  if (l < 0) return std::nullopt;
  return l;
}

std::optional<NodeId> HeteroGraph::find_node(const std::string& name) const {
  const auto it = name_index_.find(name);
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TypeId> HeteroGraph::find_type(const std::string& name) const {
  const auto it = std::find(type_names_.begin(), type_names_.end(), name);
  if (it == type_names_.end()) return std::nullopt;
  return static_cast<TypeId>(it - type_names_.begin());
}

std::vector<NodeId> HeteroGraph::nodes_of_type(TypeId t) const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_nodes(); ++v) {
    if (node_type(v) == t) out.push_back(v);
  }
  return out;
}

std::optional<std::size_t> HeteroGraph::link_type(TypeId a, TypeId b) const {
  const auto it = std::lower_bound(link_types_.begin(), link_types_.end(), ordered(a, b));
  if (it == link_types_.end() || *it != ordered(a, b)) return std::nullopt;
  return static_cast<std::size_t>(it - link_types_.begin());
}

std::string HeteroGraph::link_type_name(std::size_t link) const {
  const auto [a, b] = link_types_.at(link);
  return type_name(a) + "-" + type_name(b);
}

bool HeteroGraph::is_valid_metapath(const Metapath& m) const {
  if (m.types.size() < 2) return false;
  for (auto t : m.types) {
    if (t < 0 || static_cast<std::size_t>(t) >= type_names_.size()) return false;
  }
  for (std::size_t i = 0; i + 1 < m.types.size(); ++i) {
    if (!link_type(m.types[i], m.types[i + 1])) return false;
  }
  return true;
}

std::string HeteroGraph::metapath_name(const Metapath& m) const {
  std::string out;
  for (std::size_t i = 0; i < m.types.size(); ++i) {
    if (i) out += '-';
    out += type_name(m.types[i]);
  }
  return out;
}

Metapath HeteroGraph::parse_metapath(const std::string& text) const {
  Metapath m;
  for (auto part : split(text, '-')) {
    const auto t = find_type(std::string(part));
    if (!t) throw std::invalid_argument("unknown node type '" + std::string(part) + "' in metapath " + text);
    m.types.push_back(*t);
  }
  if (!is_valid_metapath(m)) throw std::invalid_argument("metapath " + text + " has no matching link types");
  return m;
}

HeteroGraph load_graph(const std::filesystem::path& nodes_path,
                       const std::filesystem::path& edges_path) {
  std::ifstream nodes_in(nodes_path);
  if (!nodes_in) throw GraphParseError("cannot open " + nodes_path.string());
  std::ifstream edges_in(edges_path);
  if (!edges_in) throw GraphParseError("cannot open " + edges_path.string());

  GraphData data;
  std::vector<std::vector<double>> rows;
  std::map<std::string, NodeId> ids;
  std::optional<std::size_t> dim;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(nodes_in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (skip_line(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 4) {
      parse_fail(nodes_path, line_no, "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    const std::string name(fields[0]);
    if (name.empty()) parse_fail(nodes_path, line_no, "empty node id");
    if (ids.count(name)) parse_fail(nodes_path, line_no, "duplicate node id '" + name + "'");

    const std::string type(fields[1]);
    if (type.empty()) parse_fail(nodes_path, line_no, "empty type name");
    auto type_it = std::find(data.type_names.begin(), data.type_names.end(), type);
    if (type_it == data.type_names.end()) {
      data.type_names.push_back(type);
      type_it = data.type_names.end() - 1;
    }

    int label = -1;
    if (fields[2] != "-") {
      const auto* end = fields[2].data() + fields[2].size();
      auto [ptr, ec] = std::from_chars(fields[2].data(), end, label);
      if (ec != std::errc() || ptr != end || label < 0) {
        parse_fail(nodes_path, line_no, "bad label '" + std::string(fields[2]) + "'");
      }
    }

    std::vector<double> feats;
    if (!fields[3].empty()) {
      for (auto tok : split(fields[3], ',')) {
        double x = 0;
        const auto* end = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(tok.data(), end, x);
        if (ec != std::errc() || ptr != end) {
          parse_fail(nodes_path, line_no, "bad feature value '" + std::string(tok) + "'");
        }
        feats.push_back(x);
      }
    }
    if (dim && *dim != feats.size()) {
      parse_fail(nodes_path, line_no, "feature dimension " + std::to_string(feats.size()) +
                                          " differs from " + std::to_string(*dim));
    }
    dim = feats.size();

    ids.emplace(name, static_cast<NodeId>(data.node_names.size()));
    data.node_names.push_back(name);
    data.node_types.push_back(static_cast<TypeId>(type_it - data.type_names.begin()));
    data.labels.push_back(label);
    rows.push_back(std::move(feats));
  }

  data.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim.value_or(0)));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }

  line_no = 0;
  while (std::getline(edges_in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (skip_line(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) {
      parse_fail(edges_path, line_no, "expected 2 tab-separated fields, got " + std::to_string(fields.size()));
    }
    NodeId ends[2];
    for (int k = 0; k < 2; ++k) {
      const auto it = ids.find(std::string(fields[static_cast<std::size_t>(k)]));
      if (it == ids.end()) {
        parse_fail(edges_path, line_no, "unknown node id '" + std::string(fields[static_cast<std::size_t>(k)]) + "'");
      }
      ends[k] = it->second;
    }
    if (ends[0] == ends[1]) parse_fail(edges_path, line_no, "self loop on '" + std::string(fields[0]) + "'");
    data.edges.emplace_back(ends[0], ends[1]);
  }

  try {
    return HeteroGraph::build(std::move(data));
  } catch (const std::invalid_argument& e) {
    throw GraphParseError(nodes_path.filename().string() + ": " + e.what());
  }
}

void write_graph(const HeteroGraph& g, const std::filesystem::path& nodes_path,
                 const std::filesystem::path& edges_path) {
  std::ofstream nodes_out(nodes_path);
  if (!nodes_out) throw std::runtime_error("cannot write " + nodes_path.string());
  char buf[32];
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    nodes_out << g.node_name(v) << '\t' << g.type_name(g.node_type(v)) << '\t';
    if (auto l = g.label(v)) {
      nodes_out << *l;
    } else {
      nodes_out << '-';
    }
    nodes_out << '\t';
    for (Eigen::Index j = 0; j < g.feature_dim(); ++j) {
      if (j) nodes_out << ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), g.features()(v, j));
      nodes_out.write(buf, ptr - buf);
    }
    nodes_out << '\n';
  }
  std::ofstream edges_out(edges_path);
  if (!edges_out) throw std::runtime_error("cannot write " + edges_path.string());
  for (auto [u, v] : g.edges()) edges_out << g.node_name(u) << '\t' << g.node_name(v) << '\n';
}

HeteroGraph metapath_subgraph(const HeteroGraph& g, const Metapath& metapath) {
  if (!g.is_valid_metapath(metapath)) throw std::invalid_argument("metapath not valid in graph");
  const TypeId first = metapath.types.front();
  const TypeId last = metapath.types.back();

  GraphData data;
  std::vector<NodeId> local(static_cast<std::size_t>(g.num_nodes()), -1);
  std::vector<NodeId> members;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.node_type(v) == first || g.node_type(v) == last) {
      local[static_cast<std::size_t>(v)] = static_cast<NodeId>(members.size());
      members.push_back(v);
    }
  }
  data.type_names.push_back(g.type_name(first));
  if (last != first) data.type_names.push_back(g.type_name(last));
  data.features.resize(static_cast<Eigen::Index>(members.size()), g.feature_dim());
  for (std::size_t i = 0; i < members.size(); ++i) {
    const NodeId v = members[i];
    data.node_names.push_back(g.node_name(v));
    data.node_types.push_back(g.node_type(v) == first ? 0 : 1);
    data.labels.push_back(g.label(v).value_or(-1));
    data.features.row(static_cast<Eigen::Index>(i)) = g.features().row(v);
  }

  // Type-constrained simple-path walk from every start-type node.
  std::vector<NodeId> path;
  std::vector<char> on_path(static_cast<std::size_t>(g.num_nodes()), 0);
  std::function<void(NodeId)> walk = [&](NodeId v) {
    if (path.size() == metapath.length()) {
      data.edges.emplace_back(local[static_cast<std::size_t>(path.front())],
                              local[static_cast<std::size_t>(v)]);
      return;
    }
    const TypeId want = metapath.types[path.size()];
    for (NodeId w : g.neighbors(v)) {
      if (g.node_type(w) != want || on_path[static_cast<std::size_t>(w)]) continue;
      path.push_back(w);
      on_path[static_cast<std::size_t>(w)] = 1;
      walk(w);
      on_path[static_cast<std::size_t>(w)] = 0;
      path.pop_back();
    }
  };
  for (NodeId v : members) {
    if (g.node_type(v) != first) continue;
    path.assign(1, v);
    on_path[static_cast<std::size_t>(v)] = 1;
    walk(v);
    on_path[static_cast<std::size_t>(v)] = 0;
  }
  return HeteroGraph::build(std::move(data), HeteroGraph::Check::none);
}

std::map<std::size_t, std::size_t> degree_distribution(const HeteroGraph& g, TypeId type) {
  if (type < 0 || static_cast<std::size_t>(type) >= g.num_node_types()) {
    throw std::invalid_argument("unknown node type id " + std::to_string(type));
  }
  std::map<std::size_t, std::size_t> hist;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.node_type(v) == type) ++hist[g.degree(v)];
  }
  return hist;
}

}  // namespace mhcl
