#include "teimit/recipe.hpp"

#include <cstdio>
#include <set>

#include "teimit/error.hpp"
#include "teimit/io.hpp"
#include "teimit/rng.hpp"

namespace teimit {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw ValidationError("recipe field '" + field + "': " + why);
}

void only_keys(const nlohmann::json& j, const std::string& where,
               std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where, "must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) bad(where.empty() ? key : where + "." + key, "unknown field");
  }
}

template <class T>
T get(const nlohmann::json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(where + key, "wrong type");
  }
}

template <class T>
std::vector<T> list(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) bad(where + key, "missing");
  const auto& v = j.at(key);
  if (!v.is_array() || v.empty()) bad(where + key, "must be a nonempty array");
  try {
    return v.get<std::vector<T>>();
  } catch (const nlohmann::json::exception&) {
    bad(where + key, "wrong element type");
  }
}

Range range(const nlohmann::json& j, const char* key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    bad(key, "must be [lo, hi]");
  }
  Range r{v[0].get<double>(), v[1].get<double>()};
  if (!(r.lo > 0.0 && r.hi >= r.lo)) bad(key, "needs 0 < lo <= hi");
  return r;
}

std::vector<TopologyConfig> topologies(const nlohmann::json& t, const std::filesystem::path& base) {
  const std::string w = "topology.";
  const std::string family = get<std::string>(t, "family", w, "");
  std::vector<TopologyConfig> out;
  if (family == "erdos_renyi") {
    only_keys(t, "topology", {"family", "nodes", "q"});
    for (int n : list<int>(t, "nodes", w)) {
      for (double q : list<double>(t, "q", w)) {
        if (n < 2) bad("topology.nodes", "must be >= 2");
        if (!(q > 0.0 && q <= 1.0)) bad("topology.q", "must be in (0, 1]");
        TopologyConfig c;
        c.family = Provenance::Kind::erdos_renyi;
        c.nodes = n;
        c.q = q;
        out.push_back(c);
      }
    }
  } else if (family == "waxman") {
    auto add = [&](int n, double a, double b) {
      if (n < 2) bad("topology.nodes", "must be >= 2");
      if (!(a > 0.0 && a <= 1.0)) bad("topology.alpha", "must be in (0, 1]");
      if (!(b > 0.0)) bad("topology.beta", "must be positive");
      TopologyConfig c;
      c.family = Provenance::Kind::waxman;
      c.nodes = n;
      c.alpha = a;
      c.beta = b;
      out.push_back(c);
    };
    if (t.contains("configurations")) {
      only_keys(t, "topology", {"family", "configurations"});
      for (const auto& c : t.at("configurations")) {
        only_keys(c, "topology.configurations[]", {"nodes", "alpha", "beta"});
        const std::string cw = "topology.configurations[].";
        add(get<int>(c, "nodes", cw, 0), get<double>(c, "alpha", cw, 0.0), get<double>(c, "beta", cw, 0.0));
      }
      if (out.empty()) bad("topology.configurations", "must be nonempty");
    } else {
      only_keys(t, "topology", {"family", "nodes", "alpha", "beta"});
      for (int n : list<int>(t, "nodes", w)) {
        for (double a : list<double>(t, "alpha", w)) {
          for (double b : list<double>(t, "beta", w)) add(n, a, b);
        }
      }
    }
  } else if (family == "file") {
    only_keys(t, "topology", {"family", "path"});
    const std::string p = get<std::string>(t, "path", w, "");
    if (p.empty()) bad("topology.path", "missing");
    TopologyConfig c;
    c.family = Provenance::Kind::file;
    c.file = std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p;
    if (!std::filesystem::exists(c.file)) bad("topology.path", "no such file: " + c.file.string());
    c.nodes = load_topology_file(c.file).num_nodes();
    out.push_back(c);
  } else {
    bad("topology.family", "must be erdos_renyi, waxman or file");
  }
  return out;
}

IPMConfig parse_ipm(const nlohmann::json& j) {
  only_keys(j, "ipm", {"mu0", "tau", "epsilon", "max_newton_per_mu", "boundary_fraction",
                       "final_centering_steps", "certificate_tolerance"});
  IPMConfig c;
  const std::string w = "ipm.";
  c.mu0 = get(j, "mu0", w, c.mu0);
  c.tau = get(j, "tau", w, c.tau);
  c.epsilon = get(j, "epsilon", w, c.epsilon);
  c.max_newton_per_mu = get(j, "max_newton_per_mu", w, c.max_newton_per_mu);
  c.boundary_fraction = get(j, "boundary_fraction", w, c.boundary_fraction);
  c.final_centering_steps = get(j, "final_centering_steps", w, c.final_centering_steps);
  c.certificate_tolerance = get(j, "certificate_tolerance", w, c.certificate_tolerance);
  c.validate();
  return c;
}

nlohmann::json dump_ipm(const IPMConfig& c) {
  return {{"mu0", c.mu0},
          {"tau", c.tau},
          {"epsilon", c.epsilon},
          {"max_newton_per_mu", c.max_newton_per_mu},
          {"boundary_fraction", c.boundary_fraction},
          {"final_centering_steps", c.final_centering_steps},
          {"certificate_tolerance", c.certificate_tolerance}};
}

template <class F>
auto wrap(const char* section, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("recipe section '") + section + "': " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("recipe section '") + section + "': " + e.what());
  }
}

}  // namespace

nlohmann::json TopologyConfig::to_json() const {
  switch (family) {
    case Provenance::Kind::erdos_renyi:
      return {{"family", "erdos_renyi"}, {"nodes", nodes}, {"q", q}};
    case Provenance::Kind::waxman:
      return {{"family", "waxman"}, {"nodes", nodes}, {"alpha", alpha}, {"beta", beta}};
    case Provenance::Kind::file:
      return {{"family", "file"}, {"nodes", nodes}, {"path", file.filename().string()}};
  }
  return {};
}

Recipe recipe_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  only_keys(j, "", {"name", "description", "topology", "instances_per_config", "pairs_per_instance",
                    "demand_range", "capacity_range", "k", "seed", "ipm", "model", "train", "loss",
                    "attributes"});
  Recipe r;
  r.name = get<std::string>(j, "name", "", "");
  if (r.name.empty()) bad("name", "missing");
  if (!j.contains("topology")) bad("topology", "missing");
  r.configurations = topologies(j.at("topology"), base_dir);
  r.instances_per_config = get(j, "instances_per_config", "", 0);
  if (r.instances_per_config < 1) bad("instances_per_config", "must be >= 1");
  r.pairs_per_instance = get(j, "pairs_per_instance", "", r.pairs_per_instance);
  if (r.pairs_per_instance < 1) bad("pairs_per_instance", "must be >= 1");
  for (const TopologyConfig& c : r.configurations) {
    if (r.pairs_per_instance > c.nodes * (c.nodes - 1)) {
      bad("pairs_per_instance", "exceeds the number of ordered node pairs");
    }
  }
  r.demand_range = range(j, "demand_range", r.demand_range);
  r.capacity_range = range(j, "capacity_range", r.capacity_range);
  r.k = get(j, "k", "", r.k);
  if (r.k < 1) bad("k", "must be >= 1");
  r.seed = get<std::uint64_t>(j, "seed", "", r.seed);
  r.ipm = wrap("ipm", [&] { return parse_ipm(j.value("ipm", nlohmann::json::object())); });

  nlohmann::json model = j.value("model", nlohmann::json::object());
  r.init_seed = get<std::uint64_t>(model, "init_seed", "model.", r.init_seed);
  model.erase("init_seed");
  only_keys(model, "model", {"attr_dim", "hidden_dim", "enc_hidden", "readout_hidden1",
                             "readout_hidden2", "J", "K_max", "block_norm"});
  r.model = wrap("model", [&] { return model_config_from_json(model); });

  const nlohmann::json train = j.value("train", nlohmann::json::object());
  only_keys(train, "train", {"epochs", "batch_size", "learning_rate", "beta1", "beta2",
                             "adam_epsilon", "grad_clip", "lr_schedule", "seed",
                             "checkpoint_every", "max_steps", "workers", "strict_repro"});
  r.train = wrap("train", [&] { return train_config_from_json(train); });
  const nlohmann::json loss = j.value("loss", nlohmann::json::object());
  only_keys(loss, "loss", {"rho1", "rho2", "rho3", "xi", "normalize_objective"});
  r.loss = wrap("loss", [&] { return loss_weights_from_json(loss); });

  const nlohmann::json attrs = j.value("attributes", nlohmann::json::object());
  r.attributes = attributes_from_json(attrs);
  const std::string mode =
      r.attributes.mode == InitialAttributes::Mode::fixed ? "fixed" : "row_col_stats";

  // Canonical source with defaults filled in; file topologies are keyed by
  // content so the hash does not depend on where the repo lives.
  nlohmann::json topo = j.at("topology");
  if (r.configurations.front().family == Provenance::Kind::file) {
    const std::string text = read_text(r.configurations.front().file);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
    topo["content_hash"] = buf;
    topo["path"] = r.configurations.front().file.filename().string();
  }
  nlohmann::json model_out = to_json(r.model);
  model_out["init_seed"] = r.init_seed;
  r.source = {{"name", r.name},
              {"topology", topo},
              {"instances_per_config", r.instances_per_config},
              {"pairs_per_instance", r.pairs_per_instance},
              {"demand_range", {r.demand_range.lo, r.demand_range.hi}},
              {"capacity_range", {r.capacity_range.lo, r.capacity_range.hi}},
              {"k", r.k},
              {"seed", r.seed},
              {"ipm", dump_ipm(r.ipm)},
              {"model", model_out},
              {"train", to_json(r.train)},
              {"loss", to_json(r.loss)},
              {"attributes", {{"mode", mode}, {"value", r.attributes.value}}}};
  return r;
}

Recipe load_recipe(const std::filesystem::path& path) {
  const nlohmann::json j = read_json(path);
  return recipe_from_json(j, path.parent_path());
}

IPMConfig ipm_config_from_json(const nlohmann::json& j) { return parse_ipm(j); }

nlohmann::json to_json(const IPMConfig& config) { return dump_ipm(config); }

InitialAttributes attributes_from_json(const nlohmann::json& attrs) {
  only_keys(attrs, "attributes", {"mode", "value"});
  InitialAttributes a;
  const std::string mode = get<std::string>(attrs, "mode", "attributes.", "row_col_stats");
  if (mode == "row_col_stats") {
    a.mode = InitialAttributes::Mode::row_col_stats;
  } else if (mode == "fixed") {
    a.mode = InitialAttributes::Mode::fixed;
    a.value = get(attrs, "value", "attributes.", 1.0);
  } else {
    bad("attributes.mode", "must be row_col_stats or fixed");
  }
  return a;
}

std::string recipe_hash(const Recipe& recipe) {
  const std::string text = recipe.source.dump();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
  return buf;
}

}  // namespace teimit
