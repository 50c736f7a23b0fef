#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace teimit {

using NodeId = int;
using LinkId = int;

struct Link {
  NodeId src = 0;
  NodeId dst = 0;
  double capacity = 0.0;  // bandwidth units

  friend bool operator==(const Link&, const Link&) = default;
};

struct Range {
  double lo = 1000.0;
  double hi = 5000.0;

  friend bool operator==(const Range&, const Range&) = default;
};

/// How a topology came to be.
struct Provenance {
  enum class Kind { erdos_renyi, waxman, file };
  Kind kind = Kind::file;
  int n = 0;
  double q = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::string name;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Directed capacitated graph. At most one link per ordered node pair, no
/// self-loops, strictly positive capacities.
class NetworkTopology {
 public:
  NetworkTopology() = default;
  NetworkTopology(int num_nodes, std::vector<Link> links, Provenance provenance);

  int num_nodes() const { return num_nodes_; }
  int num_links() const { return static_cast<int>(links_.size()); }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(LinkId l) const { return links_.at(static_cast<std::size_t>(l)); }
  const Provenance& provenance() const { return provenance_; }

  /// Outgoing link ids of `u`, ascending.
  const std::vector<LinkId>& out_links(NodeId u) const {
    return out_.at(static_cast<std::size_t>(u));
  }
  std::optional<LinkId> find_link(NodeId u, NodeId v) const;

  friend bool operator==(const NetworkTopology& a, const NetworkTopology& b) {
    return a.num_nodes_ == b.num_nodes_ && a.links_ == b.links_ &&
           a.provenance_ == b.provenance_;
  }

 private:
  void validate() const;

  int num_nodes_ = 0;
  std::vector<Link> links_;
  Provenance provenance_;
  std::vector<std::vector<LinkId>> out_;
};

struct SDPair {
  NodeId source = 0;
  NodeId destination = 0;
  double demand = 0.0;

  friend bool operator==(const SDPair&, const SDPair&) = default;
};

/// A path is a link-contiguous sequence of link ids.
using Path = std::vector<LinkId>;

struct TEInstance {
  NetworkTopology topology;
  std::vector<SDPair> pairs;
  std::vector<std::vector<Path>> paths;  // paths[i] = P_i
  std::uint64_t seed = 0;
  std::string recipe;

  int num_paths() const;
  /// Throws ValidationError when any instance invariant is broken.
  void validate() const;

  friend bool operator==(const TEInstance&, const TEInstance&) = default;
};

NetworkTopology generate_erdos_renyi(int n, double q, std::uint64_t seed,
                                     Range capacity = {});

NetworkTopology generate_waxman(int n, double alpha, double beta, std::uint64_t seed,
                                Range capacity = {});

/// Line-oriented text format:
///   nodes <N>
///   link <src> <dst> <capacity>     directed
///   edge <u> <v> <capacity>         undirected, expands to two links
/// '#' begins a comment.
NetworkTopology parse_topology(std::istream& in, const std::string& name);
NetworkTopology load_topology_file(const std::filesystem::path& path);

/// Up to k loop-free paths in nondecreasing hop count, ties broken by
/// lexicographic order of link-id sequences.
std::vector<Path> yen_k_shortest_paths(const NetworkTopology& topology,
                                       NodeId source, NodeId destination, int k);

/// Draws distinct SD pairs with uniform demands and attaches k shortest
/// paths. A pair with no path is redrawn up to 50 times before failing.
TEInstance sample_instance(const NetworkTopology& topology, int num_pairs,
                           Range demand_range, int k, std::uint64_t seed);

NodeId path_source(const NetworkTopology& topology, const Path& path);
NodeId path_destination(const NetworkTopology& topology, const Path& path);

nlohmann::json to_json(const NetworkTopology& topology);
NetworkTopology topology_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TEInstance& instance);
TEInstance instance_from_json(const nlohmann::json& j);

}  // namespace teimit
