#include "teimit/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <set>
#include <sstream>

#include "teimit/error.hpp"
#include "teimit/rng.hpp"

namespace teimit {

NetworkTopology::NetworkTopology(int num_nodes, std::vector<Link> links,
                                 Provenance provenance)
    : num_nodes_(num_nodes), links_(std::move(links)), provenance_(std::move(provenance)) {
  validate();
  out_.assign(static_cast<std::size_t>(num_nodes_), {});
  for (std::size_t l = 0; l < links_.size(); ++l) {
    out_[static_cast<std::size_t>(links_[l].src)].push_back(static_cast<LinkId>(l));
  }
}

void NetworkTopology::validate() const {
  if (num_nodes_ < 1) throw ValidationError("topology needs at least one node");
  std::set<std::pair<NodeId, NodeId>> seen;
  for (std::size_t l = 0; l < links_.size(); ++l) {
    const Link& e = links_[l];
    if (e.src < 0 || e.src >= num_nodes_ || e.dst < 0 || e.dst >= num_nodes_) {
      throw ValidationError("link " + std::to_string(l) + " has an endpoint outside [0, " +
                            std::to_string(num_nodes_) + ")");
    }
    if (e.src == e.dst) throw ValidationError("link " + std::to_string(l) + " is a self-loop");
    if (!(e.capacity > 0.0) || !std::isfinite(e.capacity)) {
      throw ValidationError("link " + std::to_string(l) + " has non-positive capacity");
    }
    if (!seen.emplace(e.src, e.dst).second) {
      throw ValidationError("duplicate link " + std::to_string(e.src) + " -> " +
                            std::to_string(e.dst));
    }
  }
}

std::optional<LinkId> NetworkTopology::find_link(NodeId u, NodeId v) const {
  for (LinkId l : out_links(u)) {
    if (links_[static_cast<std::size_t>(l)].dst == v) return l;
  }
  return std::nullopt;
}

NodeId path_source(const NetworkTopology& topology, const Path& path) {
  return topology.link(path.front()).src;
}

NodeId path_destination(const NetworkTopology& topology, const Path& path) {
  return topology.link(path.back()).dst;
}

int TEInstance::num_paths() const {
  int total = 0;
  for (const auto& p : paths) total += static_cast<int>(p.size());
  return total;
}

void TEInstance::validate() const {
  const int n = topology.num_nodes();
  if (paths.size() != pairs.size()) {
    throw ValidationError("path groups do not match the number of SD pairs");
  }
  std::set<std::pair<NodeId, NodeId>> endpoints;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SDPair& sd = pairs[i];
    const std::string tag = "SD pair " + std::to_string(i);
    if (sd.source < 0 || sd.source >= n || sd.destination < 0 || sd.destination >= n) {
      throw ValidationError(tag + " references an unknown node");
    }
    if (sd.source == sd.destination) throw ValidationError(tag + " has source == destination");
    if (!(sd.demand > 0.0) || !std::isfinite(sd.demand)) {
      throw ValidationError(tag + " has non-positive demand");
    }
    if (!endpoints.emplace(sd.source, sd.destination).second) {
      throw ValidationError(tag + " repeats an (s, t) combination");
    }
    if (paths[i].empty()) throw ValidationError(tag + " has no candidate path");
    std::set<Path> unique;
    for (const Path& p : paths[i]) {
      if (p.empty()) throw ValidationError(tag + " has an empty path");
      std::vector<char> visited(static_cast<std::size_t>(n), 0);
      NodeId at = sd.source;
      visited[static_cast<std::size_t>(at)] = 1;
      for (LinkId l : p) {
        if (l < 0 || l >= topology.num_links()) {
          throw ValidationError(tag + " path references unknown link");
        }
        const Link& e = topology.link(l);
        if (e.src != at) throw ValidationError(tag + " path is not link-contiguous");
        at = e.dst;
        if (visited[static_cast<std::size_t>(at)]) {
          throw ValidationError(tag + " path repeats a node");
        }
        visited[static_cast<std::size_t>(at)] = 1;
      }
      if (at != sd.destination) throw ValidationError(tag + " path ends at the wrong node");
      if (!unique.insert(p).second) throw ValidationError(tag + " has duplicate paths");
    }
  }
}

namespace {

void check_capacity_range(Range r) {
  if (!(r.lo > 0.0) || !(r.hi >= r.lo) || !std::isfinite(r.hi)) {
    throw ValidationError("capacity range must satisfy 0 < lo <= hi");
  }
}

}  // namespace

NetworkTopology generate_erdos_renyi(int n, double q, std::uint64_t seed, Range capacity) {
  if (n < 2) throw ValidationError("Erdos-Renyi needs n >= 2");
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("Erdos-Renyi needs q in (0, 1]");
  check_capacity_range(capacity);
  Rng rng(seed);
  std::vector<Link> links;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u == v) continue;
      if (rng.uniform() < q) {
        links.push_back({u, v, rng.uniform(capacity.lo, capacity.hi)});
      }
    }
  }
  Provenance prov;
  prov.kind = Provenance::Kind::erdos_renyi;
  prov.n = n;
  prov.q = q;
  prov.seed = seed;
  return NetworkTopology(n, std::move(links), prov);
}

NetworkTopology generate_waxman(int n, double alpha, double beta, std::uint64_t seed,
                                Range capacity) {
  if (n < 2) throw ValidationError("Waxman needs n >= 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("Waxman needs alpha in (0, 1]");
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("Waxman needs beta in (0, 1]");
  check_capacity_range(capacity);
  Rng rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = rng.uniform();
    ys[i] = rng.uniform();
  }
  auto dist = [&](std::size_t a, std::size_t b) {
    return std::hypot(xs[a] - xs[b], ys[a] - ys[b]);
  };
  double max_dist = 0.0;
  for (std::size_t a = 0; a < xs.size(); ++a) {
    for (std::size_t b = a + 1; b < xs.size(); ++b) max_dist = std::max(max_dist, dist(a, b));
  }
  std::vector<Link> links;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u == v) continue;
      const double d = dist(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
      const double ratio = max_dist > 0.0 ? d / (beta * max_dist) : 0.0;
      if (rng.uniform() < alpha * std::exp(-ratio)) {
        links.push_back({u, v, rng.uniform(capacity.lo, capacity.hi)});
      }
    }
  }
  Provenance prov;
  prov.kind = Provenance::Kind::waxman;
  prov.n = n;
  prov.alpha = alpha;
  prov.beta = beta;
  prov.seed = seed;
  return NetworkTopology(n, std::move(links), prov);
}

NetworkTopology parse_topology(std::istream& in, const std::string& name) {
  std::string line;
  int line_no = 0;
  int nodes = -1;
  std::vector<Link> links;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string keyword;
    if (!(ss >> keyword)) continue;
    if (keyword == "nodes") {
      if (nodes >= 0) throw ParseError("repeated 'nodes' header", line_no);
      if (!(ss >> nodes) || nodes < 1) throw ParseError("expected 'nodes <N>' with N >= 1", line_no);
    } else if (keyword == "link" || keyword == "edge") {
      if (nodes < 0) throw ParseError("'" + keyword + "' before 'nodes' header", line_no);
      long long u = 0, v = 0;
      double cap = 0.0;
      if (!(ss >> u >> v >> cap)) {
        throw ParseError("expected '" + keyword + " <src> <dst> <capacity>'", line_no);
      }
      if (u < 0 || v < 0 || u >= nodes || v >= nodes) {
        throw ParseError("node id out of range", line_no);
      }
      links.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), cap});
      if (keyword == "edge") links.push_back({static_cast<NodeId>(v), static_cast<NodeId>(u), cap});
    } else {
      throw ParseError("unknown keyword '" + keyword + "'", line_no);
    }
    std::string trailing;
    if (ss >> trailing) throw ParseError("unexpected trailing token '" + trailing + "'", line_no);
  }
  if (nodes < 0) throw ParseError("missing 'nodes' header", line_no == 0 ? 1 : line_no);
  Provenance prov;
  prov.kind = Provenance::Kind::file;
  prov.n = nodes;
  prov.name = name;
  return NetworkTopology(nodes, std::move(links), prov);
}

NetworkTopology load_topology_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open topology file " + path.string(), 0);
  return parse_topology(in, path.filename().string());
}

namespace {

// Lexicographically smallest hop-shortest path, avoiding banned nodes/links.
std::optional<Path> lexmin_shortest_path(const NetworkTopology& topo, NodeId s, NodeId t,
                                         const std::vector<char>& banned_node,
                                         const std::vector<char>& banned_link) {
  const int n = topo.num_nodes();
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<std::vector<LinkId>> in_links(static_cast<std::size_t>(n));
  for (LinkId l = 0; l < topo.num_links(); ++l) {
    if (banned_link[static_cast<std::size_t>(l)]) continue;
    const Link& e = topo.link(l);
    if (banned_node[static_cast<std::size_t>(e.src)] || banned_node[static_cast<std::size_t>(e.dst)]) {
      continue;
    }
    in_links[static_cast<std::size_t>(e.dst)].push_back(l);
  }
  std::vector<int> dist(static_cast<std::size_t>(n), kInf);
  std::deque<NodeId> queue{t};
  dist[static_cast<std::size_t>(t)] = 0;
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    for (LinkId l : in_links[static_cast<std::size_t>(v)]) {
      const NodeId u = topo.link(l).src;
      if (dist[static_cast<std::size_t>(u)] == kInf) {
        dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(u);
      }
    }
  }
  if (dist[static_cast<std::size_t>(s)] == kInf) return std::nullopt;
  Path path;
  NodeId at = s;
  while (at != t) {
    LinkId next = -1;
    for (LinkId l : topo.out_links(at)) {  // ascending link ids
      if (banned_link[static_cast<std::size_t>(l)]) continue;
      const NodeId v = topo.link(l).dst;
      if (banned_node[static_cast<std::size_t>(v)]) continue;
      if (dist[static_cast<std::size_t>(v)] == dist[static_cast<std::size_t>(at)] - 1) {
        next = l;
        break;
      }
    }
    path.push_back(next);
    at = topo.link(next).dst;
  }
  return path;
}

struct PathOrder {
  bool operator()(const Path& a, const Path& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

}  // namespace

std::vector<Path> yen_k_shortest_paths(const NetworkTopology& topology, NodeId source,
                                       NodeId destination, int k) {
  const int n = topology.num_nodes();
  if (source < 0 || source >= n || destination < 0 || destination >= n) {
    throw ValidationError("Yen: node id out of range");
  }
  if (source == destination) throw ValidationError("Yen: source equals destination");
  if (k < 1) throw ValidationError("Yen: k must be >= 1");

  std::vector<char> banned_node(static_cast<std::size_t>(n), 0);
  std::vector<char> banned_link(static_cast<std::size_t>(topology.num_links()), 0);
  std::vector<Path> accepted;
  auto first = lexmin_shortest_path(topology, source, destination, banned_node, banned_link);
  if (!first) return accepted;
  accepted.push_back(std::move(*first));

  std::set<Path, PathOrder> candidates;
  while (static_cast<int>(accepted.size()) < k) {
    const Path& prev = accepted.back();
    NodeId spur = source;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      std::fill(banned_node.begin(), banned_node.end(), 0);
      std::fill(banned_link.begin(), banned_link.end(), 0);
      // Root nodes before the spur node may not be revisited.
      NodeId at = source;
      for (std::size_t r = 0; r < i; ++r) {
        banned_node[static_cast<std::size_t>(at)] = 1;
        at = topology.link(prev[r]).dst;
      }
      for (const Path& p : accepted) {
        if (p.size() > i && std::equal(prev.begin(), prev.begin() + static_cast<long>(i), p.begin())) {
          banned_link[static_cast<std::size_t>(p[i])] = 1;
        }
      }
      if (auto tail = lexmin_shortest_path(topology, spur, destination, banned_node, banned_link)) {
        Path candidate(prev.begin(), prev.begin() + static_cast<long>(i));
        candidate.insert(candidate.end(), tail->begin(), tail->end());
        if (std::find(accepted.begin(), accepted.end(), candidate) == accepted.end()) {
          candidates.insert(std::move(candidate));
        }
      }
      spur = topology.link(prev[i]).dst;
    }
    if (candidates.empty()) break;
    accepted.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }
  return accepted;
}

TEInstance sample_instance(const NetworkTopology& topology, int num_pairs, Range demand_range,
                           int k, std::uint64_t seed) {
  const long long n = topology.num_nodes();
  if (num_pairs < 1 || num_pairs > n * (n - 1)) {
    throw ValidationError("num_pairs must be in [1, |N|(|N|-1)]");
  }
  if (!(demand_range.lo > 0.0) || !(demand_range.hi >= demand_range.lo)) {
    throw ValidationError("demand range must satisfy 0 < lo <= hi");
  }
  if (k < 1) throw ValidationError("k must be >= 1");

  constexpr int kMaxRetries = 50;
  Rng rng(seed);
  TEInstance inst;
  inst.topology = topology;
  inst.seed = seed;
  std::set<std::pair<NodeId, NodeId>> used;
  for (int slot = 0; slot < num_pairs; ++slot) {
    int failures = 0;
    long long draws = 0;
    for (;;) {
      if (++draws > 1000 * n * n) {
        throw GenerationError("could not draw a fresh SD pair");
      }
      const auto s = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n)));
      auto t = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n - 1)));
      if (t >= s) ++t;
      if (used.count({s, t})) continue;
      auto paths = yen_k_shortest_paths(topology, s, t, k);
      if (paths.empty()) {
        used.insert({s, t});
        if (++failures > kMaxRetries) {
          throw GenerationError("SD pair " + std::to_string(slot) + " found no connected (s, t) after " +
                                std::to_string(kMaxRetries) + " retries; topology with " +
                                std::to_string(n) + " nodes and " +
                                std::to_string(topology.num_links()) + " links is too disconnected");
        }
        continue;
      }
      used.insert({s, t});
      inst.pairs.push_back({s, t, rng.uniform(demand_range.lo, demand_range.hi)});
      inst.paths.push_back(std::move(paths));
      break;
    }
  }
  inst.validate();
  return inst;
}

namespace {

const char* kind_name(Provenance::Kind k) {
  switch (k) {
    case Provenance::Kind::erdos_renyi: return "erdos_renyi";
    case Provenance::Kind::waxman: return "waxman";
    case Provenance::Kind::file: return "file";
  }
  return "file";
}

Provenance::Kind kind_from_name(const std::string& s) {
  if (s == "erdos_renyi") return Provenance::Kind::erdos_renyi;
  if (s == "waxman") return Provenance::Kind::waxman;
  if (s == "file") return Provenance::Kind::file;
  throw ParseError("unknown provenance kind '" + s + "'", 0);
}

}  // namespace

nlohmann::json to_json(const NetworkTopology& topology) {
  nlohmann::json links = nlohmann::json::array();
  for (const Link& l : topology.links()) links.push_back({l.src, l.dst, l.capacity});
  const Provenance& p = topology.provenance();
  return {{"nodes", topology.num_nodes()},
          {"links", std::move(links)},
          {"provenance",
           {{"kind", kind_name(p.kind)}, {"n", p.n}, {"q", p.q}, {"alpha", p.alpha},
            {"beta", p.beta}, {"seed", p.seed}, {"name", p.name}}}};
}

NetworkTopology topology_from_json(const nlohmann::json& j) {
  std::vector<Link> links;
  for (const auto& l : j.at("links")) {
    links.push_back({l.at(0).get<NodeId>(), l.at(1).get<NodeId>(), l.at(2).get<double>()});
  }
  Provenance p;
  if (j.contains("provenance")) {
    const auto& pj = j.at("provenance");
    p.kind = kind_from_name(pj.at("kind").get<std::string>());
    p.n = pj.value("n", 0);
    p.q = pj.value("q", 0.0);
    p.alpha = pj.value("alpha", 0.0);
    p.beta = pj.value("beta", 0.0);
    p.seed = pj.value("seed", std::uint64_t{0});
    p.name = pj.value("name", std::string{});
  }
  return NetworkTopology(j.at("nodes").get<int>(), std::move(links), p);
}

nlohmann::json to_json(const TEInstance& instance) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const SDPair& sd : instance.pairs) {
    pairs.push_back({{"s", sd.source}, {"t", sd.destination}, {"d", sd.demand}});
  }
  return {{"topology", to_json(instance.topology)},
          {"pairs", std::move(pairs)},
          {"paths", instance.paths},
          {"seed", instance.seed},
          {"recipe", instance.recipe}};
}

TEInstance instance_from_json(const nlohmann::json& j) {
  TEInstance inst;
  inst.topology = topology_from_json(j.at("topology"));
  for (const auto& p : j.at("pairs")) {
    inst.pairs.push_back({p.at("s").get<NodeId>(), p.at("t").get<NodeId>(), p.at("d").get<double>()});
  }
  inst.paths = j.at("paths").get<std::vector<std::vector<Path>>>();
  inst.seed = j.value("seed", std::uint64_t{0});
  inst.recipe = j.value("recipe", std::string{});
  inst.validate();
  return inst;
}

}  // namespace teimit
