#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mhcl {

using NodeId = std::int32_t;
using TypeId = std::int32_t;

/// Raised by load_graph for malformed input; the message carries file and line.
class GraphParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sequence of node types; consecutive types must be joined by a link type.
struct Metapath {
  std::vector<TypeId> types;

  std::size_t length() const { return types.size(); }
  auto operator<=>(const Metapath&) const = default;
};

/// Concrete node sequence conforming to a metapath.
using MetapathInstance = std::vector<NodeId>;

struct EdgeList {
  std::vector<std::pair<NodeId, NodeId>> edges;
};

/// Inputs for HeteroGraph::build. Labels use -1 for "unlabeled".
struct GraphData {
  std::vector<std::string> node_names;
  std::vector<std::string> type_names;
  std::vector<TypeId> node_types;
  Eigen::MatrixXd features;  // one row per node
  std::vector<int> labels;   // empty or one entry per node
  std::vector<std::pair<NodeId, NodeId>> edges;
};

/// Undirected typed graph. Immutable once built.
class HeteroGraph {
 public:
  enum class Check { heterogeneous, none };

  /// Validates, deduplicates and symmetrizes. Throws std::invalid_argument.
  static HeteroGraph build(GraphData data, Check check = Check::heterogeneous);

  NodeId num_nodes() const { return static_cast<NodeId>(node_types_.size()); }
  std::size_t num_edges() const { return edges_.size(); }
  Eigen::Index feature_dim() const { return features_.cols(); }

  TypeId node_type(NodeId v) const { return node_types_[static_cast<std::size_t>(v)]; }
  std::span<const NodeId> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }
  bool adjacent(NodeId u, NodeId v) const;

  const Eigen::MatrixXd& features() const { return features_; }
  std::optional<int> label(NodeId v) const;
  bool has_labels() const { return !labels_.empty(); }
  const std::vector<int>& raw_labels() const { return labels_; }

  const std::string& node_name(NodeId v) const { return node_names_[static_cast<std::size_t>(v)]; }
  std::optional<NodeId> find_node(const std::string& name) const;

  std::size_t num_node_types() const { return type_names_.size(); }
  const std::string& type_name(TypeId t) const { return type_names_[static_cast<std::size_t>(t)]; }
  const std::vector<std::string>& type_names() const { return type_names_; }
  std::optional<TypeId> find_type(const std::string& name) const;
  std::vector<NodeId> nodes_of_type(TypeId t) const;

  /// Link types, one per unordered node-type pair that carries an edge.
  const std::vector<std::pair<TypeId, TypeId>>& link_types() const { return link_types_; }
  std::optional<std::size_t> link_type(TypeId a, TypeId b) const;
  std::string link_type_name(std::size_t link) const;

  /// Edges with first < second, sorted.
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }

  bool is_valid_metapath(const Metapath& m) const;
  std::string metapath_name(const Metapath& m) const;
  /// Parses "A-P-A"; throws std::invalid_argument on unknown types.
  Metapath parse_metapath(const std::string& text) const;

 private:
  std::vector<std::string> node_names_;
  std::vector<std::string> type_names_;
  std::vector<TypeId> node_types_;
  Eigen::MatrixXd features_;
  std::vector<int> labels_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> adjacency_;
  std::vector<std::pair<TypeId, TypeId>> link_types_;
  std::map<std::string, NodeId> name_index_;
};

HeteroGraph load_graph(const std::filesystem::path& nodes_path,
                       const std::filesystem::path& edges_path);

void write_graph(const HeteroGraph& g, const std::filesystem::path& nodes_path,
                 const std::filesystem::path& edges_path);

/// Homogeneous graph over the endpoint-type nodes of `metapath`, linking u and v
/// iff a simple path following the metapath connects them.
HeteroGraph metapath_subgraph(const HeteroGraph& g, const Metapath& metapath);

/// degree -> number of nodes of `type` with that degree.
std::map<std::size_t, std::size_t> degree_distribution(const HeteroGraph& g, TypeId type);

}  // namespace mhcl
