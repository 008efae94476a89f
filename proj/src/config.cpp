#include "fincode/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fincode/errors.hpp"

namespace fincode {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      // graph
      "kind", "d", "n", "k",
      // randomness
      "seed", "m", "eps",
      // cells
      "cell", "eps_schedule", "cell_eps", "max_level", "window_cap", "volume_cap", "level_shift",
      // order
      "order", "eps_ord", "max_label_bits",
      // process
      "process", "alphabet", "latent", "offsets", "map",
      // engine
      "policy", "max_time", "delta", "p", "mode", "target", "chunk_cap", "mutation", "bracket_len",
      "calibration_samples",
      // verification
      "verify", "radius_r", "radius_c", "min_samples", "equivariance_seeds", "min_termination", "cell_stat_levels",
      "cell_stat_seeds"};
  return keys;
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key \"") + key + "\": " + e.what());
  }
}

std::vector<std::string> symbols(const json& a, const char* key) {
  if (!a.is_array() || a.empty()) throw ConfigError(std::string("config key \"") + key + "\" must be a non-empty array");
  std::vector<std::string> out;
  for (const auto& x : a) {
    if (x.is_string()) {
      out.push_back(x.get<std::string>());
    } else if (x.is_number_integer()) {
      out.push_back(std::to_string(x.get<std::int64_t>()));
    } else {
      throw ConfigError(std::string("config key \"") + key + "\": symbols must be strings or integers");
    }
  }
  return out;
}

// Latent law: object symbol -> weight, array of weights, or array of
// probabilities. Non-integer probabilities become multiples of 2^-20.
void latent_from_json(const json& j, std::vector<std::string>& names, std::vector<std::uint64_t>& weights) {
  std::vector<double> raw;
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.value().is_number()) throw ConfigError("config key \"latent\": weights must be numbers");
      names.push_back(it.key());
      raw.push_back(it.value().get<double>());
    }
  } else if (j.is_array()) {
    for (const auto& x : j) {
      if (!x.is_number()) throw ConfigError("config key \"latent\": weights must be numbers");
      raw.push_back(x.get<double>());
    }
  } else {
    throw ConfigError("config key \"latent\" must be an object or an array");
  }
  bool integral = true;
  for (double x : raw) {
    if (!(x >= 0) || !std::isfinite(x)) throw ConfigError("config key \"latent\": weights must be finite and >= 0");
    if (x != std::floor(x)) integral = false;
  }
  for (double x : raw)
    weights.push_back(integral ? static_cast<std::uint64_t>(x) : static_cast<std::uint64_t>(std::llround(std::ldexp(x, 20))));
}

}  // namespace

LatticeGraph graph_from_json(const json& j) {
  const std::string kind = get<std::string>(j, "kind", "torus");
  const int d = get<int>(j, "d", 1);
  const int k = get<int>(j, "k", 1);
  if (k < 1) throw ConfigError("config key \"k\" must be >= 1");
  if (kind == "z") {
    if (d != 1) throw ConfigError("kind \"z\" has d = 1");
    return LatticeGraph::line(k);
  }
  if (kind == "zd") return LatticeGraph::lattice(d, k);
  if (kind == "torus") return LatticeGraph::torus(d, get<std::int64_t>(j, "n", 24), k);
  throw ConfigError("config key \"kind\" must be one of z, zd, torus");
}

ProcessSpec process_from_json(const json& j, int dim) {
  const std::string kind = get<std::string>(j, "process", "and");
  if (kind == "and") {
    if (dim != 1) throw ConfigError("the AND preset is one-dimensional");
    return ProcessSpec::and_process();
  }
  if (!j.contains("alphabet")) throw ConfigError("config key \"alphabet\" is required for process \"" + kind + "\"");
  auto alphabet = symbols(j.at("alphabet"), "alphabet");
  std::vector<std::string> latent_names;
  std::vector<std::uint64_t> weights;
  if (j.contains("latent")) {
    latent_from_json(j.at("latent"), latent_names, weights);
  }
  if (kind == "iid") {
    if (weights.empty()) weights.assign(alphabet.size(), 1);
    if (!latent_names.empty()) {
      // Reorder the object's weights to alphabet order.
      std::vector<std::uint64_t> w(alphabet.size(), 0);
      for (std::size_t i = 0; i < latent_names.size(); ++i) {
        auto it = std::find(alphabet.begin(), alphabet.end(), latent_names[i]);
        if (it == alphabet.end()) throw ConfigError("config key \"latent\": unknown symbol " + latent_names[i]);
        w[static_cast<std::size_t>(it - alphabet.begin())] = weights[i];
      }
      weights = w;
    }
    if (weights.size() != alphabet.size()) throw ConfigError("config key \"latent\": one weight per symbol");
    return ProcessSpec::iid(alphabet, weights, dim);
  }
  if (kind == "block_factor") {
    if (weights.empty()) throw ConfigError("config key \"latent\" is required for block_factor");
    if (latent_names.empty())
      for (std::size_t i = 0; i < weights.size(); ++i) latent_names.push_back(std::to_string(i));
    std::vector<Vertex> offsets;
    if (j.contains("offsets")) {
      for (const auto& o : j.at("offsets")) {
        Vertex v;
        if (o.is_number_integer()) {
          v[0] = o.get<std::int64_t>();
        } else if (o.is_array() && static_cast<int>(o.size()) == dim) {
          for (int i = 0; i < dim; ++i) v[i] = o.at(static_cast<std::size_t>(i)).get<std::int64_t>();
        } else {
          throw ConfigError("config key \"offsets\": each offset is an integer or a d-vector");
        }
        offsets.push_back(v);
      }
    } else {
      offsets = {Vertex{}, Vertex(1)};
    }
    if (!j.contains("map")) throw ConfigError("config key \"map\" is required for block_factor");
    std::vector<int> map;
    for (const auto& x : j.at("map")) {
      std::string s = x.is_string() ? x.get<std::string>() : std::to_string(x.get<std::int64_t>());
      auto it = std::find(alphabet.begin(), alphabet.end(), s);
      if (it == alphabet.end()) throw ConfigError("config key \"map\": symbol " + s + " not in alphabet");
      map.push_back(static_cast<int>(it - alphabet.begin()));
    }
    return ProcessSpec::block_factor(alphabet, latent_names, weights, offsets, map, dim);
  }
  throw ConfigError("config key \"process\" must be one of iid, block_factor, and");
}

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known_keys().count(it.key())) throw ConfigError("unknown config key \"" + it.key() + "\"");
  RunConfig rc;
  rc.raw = j;
  EngineConfig& e = rc.engine;
  e.graph = graph_from_json(j);
  e.process = process_from_json(j, e.graph.dim());
  e.seed = get<std::uint64_t>(j, "seed", 0);
  e.m = get<int>(j, "m", 8);
  e.eps = get<double>(j, "eps", 1.0);
  if (j.contains("p")) e.p_override = get<double>(j, "p", 0.0);
  if (j.contains("delta")) e.delta = get<double>(j, "delta", 0.0);

  const std::string cell = get<std::string>(j, "cell", e.graph.dim() == 1 ? "simple_z" : "voronoi");
  if (cell == "simple_z") {
    e.cell.kind = CellPolicy::Kind::SimpleZ;
  } else if (cell == "voronoi") {
    e.cell.kind = CellPolicy::Kind::Voronoi;
  } else {
    throw ConfigError("config key \"cell\" must be voronoi or simple_z");
  }
  e.cell.eps_schedule = get<std::vector<double>>(j, "eps_schedule", {});
  e.cell.eps = get<double>(j, "cell_eps", e.cell.eps);
  e.cell.max_level = get<int>(j, "max_level", e.cell.max_level);
  e.cell.window_cap = get<std::int64_t>(j, "window_cap", e.cell.window_cap);
  e.cell.volume_cap = get<std::int64_t>(j, "volume_cap", e.cell.volume_cap);
  if (j.contains("level_shift")) {
    const auto& ls = j.at("level_shift");
    if (ls.is_string() && ls.get<std::string>() == "auto") {
      e.auto_shift = true;
    } else if (ls.is_number_integer()) {
      e.auto_shift = false;
      e.cell.level_shift = ls.get<int>();
    } else {
      throw ConfigError("config key \"level_shift\" must be an integer or \"auto\"");
    }
  }

  const std::string order = get<std::string>(j, "order", "sphere_sum");
  if (order == "sphere_sum") {
    e.order.mode = OrderConfig::Mode::SphereSum;
  } else if (order == "uniform_label") {
    e.order.mode = OrderConfig::Mode::UniformLabel;
  } else {
    throw ConfigError("config key \"order\" must be sphere_sum or uniform_label");
  }
  e.order.eps_ord = get<double>(j, "eps_ord", e.order.eps_ord);
  e.order.max_label_bits = get<int>(j, "max_label_bits", e.order.max_label_bits);

  const std::string policy = get<std::string>(j, "policy", "entropy_controlled");
  if (policy == "entropy_controlled") {
    e.policy = BitPolicy::EntropyControlled;
  } else if (policy == "local_unbounded") {
    e.policy = BitPolicy::LocalUnbounded;
  } else {
    throw ConfigError("config key \"policy\" must be entropy_controlled or local_unbounded");
  }
  e.max_time = get<std::int64_t>(j, "max_time", e.max_time);
  e.chunk_cap = get<std::size_t>(j, "chunk_cap", e.chunk_cap);
  e.bracket_len = get<int>(j, "bracket_len", e.bracket_len);
  e.calibration_samples = get<std::size_t>(j, "calibration_samples", e.calibration_samples);
  const std::string mutation = get<std::string>(j, "mutation", "none");
  if (mutation == "none") {
    e.mutation = Mutation::None;
  } else if (mutation == "skip_conditioning") {
    e.mutation = Mutation::SkipConditioning;
  } else if (mutation == "reuse_bits") {
    e.mutation = Mutation::ReuseBits;
  } else if (mutation == "ignore_order") {
    e.mutation = Mutation::IgnoreOrder;
  } else {
    throw ConfigError("config key \"mutation\" must be none, skip_conditioning, reuse_bits or ignore_order");
  }

  rc.mode = get<std::string>(j, "mode", e.graph.finite() ? "torus" : "lazy");
  if (rc.mode != "torus" && rc.mode != "lazy") throw ConfigError("config key \"mode\" must be torus or lazy");
  if (rc.mode == "torus" && !e.graph.finite()) throw ConfigError("torus mode needs kind \"torus\"");
  if (rc.mode == "lazy" && e.graph.finite()) throw ConfigError("lazy mode needs kind \"z\" or \"zd\"");
  e.lazy = rc.mode == "lazy";
  if (j.contains("target")) {
    auto t = get<std::vector<std::int64_t>>(j, "target", {});
    if (static_cast<int>(t.size()) != e.graph.dim()) throw ConfigError("config key \"target\" must be a d-vector");
    for (int i = 0; i < e.graph.dim(); ++i) rc.target[i] = t[static_cast<std::size_t>(i)];
  }
  rc.verify = get<std::vector<std::string>>(j, "verify", rc.mode == "lazy" ? std::vector<std::string>{"radius"} : rc.verify);
  for (const auto& v : rc.verify) {
    static const std::set<std::string> suites = {"distribution", "dependence", "equivariance", "audit", "radius"};
    if (!suites.count(v)) throw ConfigError("config key \"verify\": unknown suite " + v);
  }
  rc.radius_r = get<std::vector<std::int64_t>>(j, "radius_r", rc.radius_r);
  for (auto r : rc.radius_r)
    if (r < 1) throw ConfigError("config key \"radius_r\": radii must be >= 1");
  rc.radius_c = get<double>(j, "radius_c", rc.radius_c);
  rc.min_samples = get<std::size_t>(j, "min_samples", rc.min_samples);
  rc.equivariance_seeds = get<std::size_t>(j, "equivariance_seeds", rc.equivariance_seeds);
  rc.min_termination = get<double>(j, "min_termination", rc.min_termination);
  rc.cell_stat_levels = get<int>(j, "cell_stat_levels", rc.cell_stat_levels);
  rc.cell_stat_seeds = get<std::size_t>(j, "cell_stat_seeds", rc.cell_stat_seeds);
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

std::string config_fingerprint(const json& j) {
  const std::string text = j.dump();
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (unsigned char c : text) h = mix64(h ^ c);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fincode
