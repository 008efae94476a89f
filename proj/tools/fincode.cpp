// Command-line driver: simulate, verify, radius, audit.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fincode/config.hpp"
#include "fincode/errors.hpp"
#include "fincode/replicas.hpp"
#include "fincode/verification.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fincode;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;
constexpr int kVerifyFailed = 3;

struct Options {
  std::string config;
  std::string seeds = "0..9";
  std::string out = ".";
  int jobs = 1;
  std::vector<std::string> overrides;  // KEY=VALUE
};

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      std::uint64_t x = std::stoull(s);
      return {x};
    }
    std::uint64_t a = std::stoull(s.substr(0, dots));
    std::uint64_t b = std::stoull(s.substr(dots + 2));
    if (b < a) return {};
    return seed_range(a, b);
  } catch (const std::exception&) {
    throw ConfigError("--seeds expects A..B, got " + s);
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("missing data file " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json params_json(const ParameterChoice& pc) {
  return {{"h_lower", pc.bracket.lower},
          {"h_upper", pc.bracket.upper},
          {"bracket_length", pc.bracket.length},
          {"m", pc.budget.m},
          {"eps", pc.budget.eps},
          {"p", pc.budget.p},
          {"expected_word_length", pc.budget.expected_length()},
          {"word_entropy", pc.budget.word_entropy()},
          {"delta", pc.delta},
          {"census_length", pc.census_length},
          {"level_shift", pc.level_shift},
          {"shift_event_rate", pc.shift_event_rate},
          {"shift_event_sigma", pc.shift_event_sigma},
          {"shift_threshold", pc.shift_threshold},
          {"flags", pc.flags}};
}

json trace_json(const RunResult& r, int dim, bool lazy) {
  json t;
  t["seed"] = r.seed;
  t["status"] = r.status;
  if (!r.message.empty()) t["message"] = r.message;
  t["terminated"] = r.terminated;
  t["steps"] = r.steps;
  t["top_level"] = r.top_level;
  t["label_bits"] = r.label_bits;
  t["total_W"] = r.total_W;
  t["total_M"] = r.total_M;
  std::map<std::int64_t, std::int64_t> hist;
  for (auto x : r.T) ++hist[x];
  json h = json::array();
  for (const auto& [k, v] : hist) h.push_back({k, v});
  t["T_histogram"] = h;
  t["bits_read_per_site"] = r.bits_read;
  t["bits_available_per_site"] = r.bits_available;
  std::map<int, std::vector<std::int64_t>> by_level;
  for (const auto& a : r.agents) by_level[a.level].push_back(a.completed);
  json c = json::object();
  for (auto& [lvl, times] : by_level) {
    std::sort(times.begin(), times.end());
    c[std::to_string(lvl)] = times;
  }
  t["completion_times_by_level"] = c;
  if (lazy) t["radius"] = r.radius;
  if (!r.stuck.empty()) {
    json s = json::array();
    for (auto i : r.stuck) {
      const auto& a = r.agents[i];
      s.push_back({{"vertex", format_vertex(a.vertex, dim)},
                   {"level", a.level},
                   {"fresh", a.fresh},
                   {"bits", a.bits},
                   {"chunks", a.chunks}});
    }
    t["stuck_agents"] = s;
  }
  return t;
}

struct Setup {
  RunConfig rc;
  std::unique_ptr<ProcessOracle> oracle;
  ParameterChoice params;
};

std::unique_ptr<Setup> prepare(const Options& o) {
  auto s = std::make_unique<Setup>();
  json j;
  try {
    j = json::parse(read_file(o.config));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& kv : o.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got " + kv);
    auto key = kv.substr(0, eq), text = kv.substr(eq + 1);
    json v = json::parse(text, nullptr, false);
    if (v.is_discarded()) v = text;
    if (v.is_structured()) throw ConfigError("--set only overrides scalar fields: " + key);
    j[key] = v;
  }
  s->rc = parse_run_config(j);
  s->oracle = std::make_unique<ProcessOracle>(s->rc.engine.process, s->rc.engine.graph);
  s->params = choose_parameters(s->rc.engine, *s->oracle);
  return s;
}

std::vector<RunResult> run_all(const Setup& s, const std::vector<std::uint64_t>& seeds, int jobs) {
  const auto& rc = s.rc;
  std::function<RunResult(std::uint64_t)> fn = [&](std::uint64_t seed) {
    if (rc.mode == "lazy") return run_lazy(rc.engine, s.params, *s.oracle, seed, rc.target);
    return run_torus(rc.engine, s.params, *s.oracle, seed);
  };
  return map_seeds<RunResult>(seeds, fn, jobs);
}

int report_failures(const std::vector<RunResult>& runs) {
  int bad = 0;
  for (const auto& r : runs) {
    if (r.terminated) continue;
    ++bad;
    if (bad <= 5) std::cerr << "seed " << r.seed << ": " << r.status << ": " << r.message << "\n";
  }
  if (bad > 0) std::cerr << bad << " of " << runs.size() << " runs did not finish\n";
  return bad;
}

int cmd_simulate(const Options& o) {
  auto seeds = parse_seeds(o.seeds);
  if (seeds.empty()) throw ConfigError("empty seed range");
  auto s = prepare(o);
  const auto& rc = s->rc;
  auto runs = run_all(*s, seeds, o.jobs);
  fs::create_directories(o.out);
  const int dim = rc.engine.graph.dim();
  std::string csv = "seed,vertex,value,T_v\n";
  for (const auto& r : runs) {
    if (rc.mode == "lazy") {
      if (r.terminated)
        csv += std::to_string(r.seed) + "," + format_vertex(r.sites[r.target], dim) + "," +
               std::to_string(r.value[r.target]) + "," + std::to_string(r.T[r.target]) + "\n";
      continue;
    }
    for (std::size_t i = 0; i < r.sites.size(); ++i) {
      if (r.value.empty() || r.value[i] < 0) continue;
      csv += std::to_string(r.seed) + "," + format_vertex(r.sites[i], dim) + "," + std::to_string(r.value[i]) + "," +
             std::to_string(r.T[i]) + "\n";
    }
  }
  write_file(fs::path(o.out) / "samples.csv", csv);
  json trace;
  trace["config_fingerprint"] = config_fingerprint(rc.raw);
  trace["mode"] = rc.mode;
  trace["policy"] = to_string(rc.engine.policy);
  trace["mutation"] = to_string(rc.engine.mutation);
  trace["parameters"] = params_json(s->params);
  json arr = json::array();
  for (const auto& r : runs) arr.push_back(trace_json(r, dim, rc.mode == "lazy"));
  trace["runs"] = arr;
  write_file(fs::path(o.out) / "trace.json", trace.dump(1) + "\n");
  if (!s->params.flags.empty()) {
    std::cerr << "config flags:";
    for (const auto& f : s->params.flags) std::cerr << " " << f;
    std::cerr << "\n";
  }
  return report_failures(runs) > 0 ? kRuntime : kOk;
}

SampleBatch load_samples(const fs::path& path, const LatticeGraph& g, std::size_t alphabet) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (line != "seed,vertex,value,T_v") throw ConfigError("samples.csv has an unexpected header");
  SampleBatch b;
  b.graph = &g;
  b.alphabet = alphabet;
  std::map<std::uint64_t, std::vector<int>> by_seed;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string seed, vertex, value;
    std::getline(ls, seed, ',');
    std::getline(ls, vertex, ',');
    std::getline(ls, value, ',');
    Vertex v;
    std::stringstream vs(vertex);
    std::string part;
    int i = 0;
    while (std::getline(vs, part, ';') && i < 3) v[i++] = std::stoll(part);
    auto& vals = by_seed[std::stoull(seed)];
    if (vals.empty()) vals.assign(g.vertex_count(), -1);
    vals[g.index(v)] = std::stoi(value);
  }
  for (auto& [seed, vals] : by_seed) {
    for (int x : vals)
      if (x < 0) throw ConfigError("samples.csv: seed " + std::to_string(seed) + " does not cover the torus");
    b.seeds.push_back(seed);
    b.values.push_back(std::move(vals));
  }
  return b;
}

RunResult run_from_trace(const json& t) {
  RunResult r;
  r.seed = t.at("seed").get<std::uint64_t>();
  r.terminated = t.at("terminated").get<bool>();
  r.status = t.at("status").get<std::string>();
  r.total_W = t.at("total_W").get<std::int64_t>();
  r.total_M = t.at("total_M").get<std::int64_t>();
  r.bits_read = t.at("bits_read_per_site").get<std::vector<std::int64_t>>();
  r.bits_available = t.at("bits_available_per_site").get<std::vector<std::int64_t>>();
  if (t.contains("radius")) r.radius = t.at("radius").get<std::int64_t>();
  return r;
}

int cmd_verify(const Options& o) {
  auto s = prepare(o);
  const auto& rc = s->rc;
  const auto& g = rc.engine.graph;
  json trace;
  try {
    trace = json::parse(read_file(fs::path(o.out) / "trace.json"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("trace.json is not valid JSON: ") + e.what());
  }
  if (trace.value("config_fingerprint", "") != config_fingerprint(rc.raw))
    std::cerr << "warning: trace.json was produced from a different config\n";
  std::vector<RunResult> runs;
  for (const auto& t : trace.at("runs")) runs.push_back(run_from_trace(t));

  std::vector<TestReport> reports;
  const bool lazy = rc.mode == "lazy";
  for (const auto& suite : rc.verify) {
    if (suite == "radius") {
      if (!lazy) throw ConfigError("radius suite needs lazy-mode data");
      std::vector<std::int64_t> radii;
      for (const auto& r : runs) radii.push_back(r.terminated ? r.radius : -1);
      for (const auto& row : radius_tail(radii, rc.radius_r, rc.radius_c)) {
        TestReport t;
        t.test = "radius_tail";
        t.statistic = "P(R>" + std::to_string(row.r) + ")";
        t.value = row.tail;
        t.bound = row.bound;
        t.slack = row.slack;
        t.n = radii.size();
        t.pass = row.pass;
        reports.push_back(t);
      }
      continue;
    }
    if (lazy) throw ConfigError("suite " + suite + " needs torus-mode data");
    if (suite == "audit") {
      if (rc.engine.policy != BitPolicy::EntropyControlled) throw ConfigError("audit suite needs entropy_controlled runs");
      auto a = entropy_audit(runs, rc.min_termination);
      reports.insert(reports.end(), a.reports.begin(), a.reports.end());
      continue;
    }
    if (suite == "equivariance") {
      std::size_t n = std::min(rc.equivariance_seeds, runs.size());
      for (const auto& gamma : standard_automorphisms(g)) {
        std::size_t bad = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (!equivariance_check(rc.engine, s->params, *s->oracle, runs[i].seed, gamma)) ++bad;
        TestReport t;
        t.test = "equivariance";
        t.statistic = gamma.describe();
        t.value = static_cast<double>(bad);
        t.n = n;
        t.pass = bad == 0;
        t.note = "seeds whose output under pulled-back randomness is not the image of the baseline";
        reports.push_back(t);
      }
      continue;
    }
    auto batch = load_samples(fs::path(o.out) / "samples.csv", g, rc.engine.process.alphabet.size());
    TvOptions opt;
    opt.min_samples = rc.min_samples;
    if (suite == "distribution") {
      for (const auto& p : window_patterns(g.dim())) reports.push_back(tv_against_oracle(batch, p, *s->oracle, opt));
    } else if (suite == "dependence") {
      std::int64_t range = s->oracle->dependence_range(false);
      std::int64_t k = (range + g.fuzz() - 1) / g.fuzz();
      auto d = dependence_suite(batch, k, opt);
      reports.insert(reports.end(), d.begin(), d.end());
    }
  }
  write_file(fs::path(o.out) / "report.csv", reports_csv(reports));
  write_file(fs::path(o.out) / "report.json", reports_json(reports));
  std::size_t failed = 0;
  for (const auto& r : reports)
    if (!r.pass) {
      ++failed;
      std::cerr << "FAIL " << r.test << " " << r.statistic << ": " << r.value << " (bound " << r.bound << " + slack "
                << r.slack << ")\n";
    }
  return failed > 0 ? kVerifyFailed : kOk;
}

int cmd_radius(const Options& o) {
  auto seeds = parse_seeds(o.seeds);
  if (seeds.empty()) throw ConfigError("radius needs at least one replica");
  auto s = prepare(o);
  if (s->rc.mode != "lazy") throw ConfigError("radius needs a lazy-mode config (kind z or zd)");
  auto runs = run_all(*s, seeds, o.jobs);
  std::vector<std::int64_t> radii;
  for (const auto& r : runs) radii.push_back(r.terminated ? r.radius : -1);
  auto rows = radius_tail(radii, s->rc.radius_r, s->rc.radius_c);
  std::string csv = "r,count,tail,bound,pass\n";
  bool all = true;
  for (const auto& row : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%lld,%zu,%.10g,%.10g,%d\n", static_cast<long long>(row.r), row.count, row.tail,
                  row.bound, row.pass ? 1 : 0);
    csv += buf;
    all = all && row.pass;
  }
  fs::create_directories(o.out);
  write_file(fs::path(o.out) / "radius_tail.csv", csv);
  return all ? kOk : kVerifyFailed;
}

int cmd_audit(const Options& o) {
  auto seeds = parse_seeds(o.seeds);
  if (seeds.empty()) throw ConfigError("empty seed range");
  auto s = prepare(o);
  const auto& rc = s->rc;
  if (rc.mode != "torus" || rc.engine.policy != BitPolicy::EntropyControlled)
    throw ConfigError("audit needs entropy_controlled torus runs");
  auto runs = run_all(*s, seeds, o.jobs);
  auto a = entropy_audit(runs, rc.min_termination);
  std::vector<TestReport> reports = a.reports;
  for (const auto& f : s->params.flags) {
    TestReport t;
    t.test = "parameters";
    t.statistic = f;
    t.value = 1;
    t.n = 1;
    t.pass = false;
    t.note = "budget inequality violated by the config";
    reports.push_back(t);
  }
  fs::create_directories(o.out);
  write_file(fs::path(o.out) / "report.csv", reports_csv(reports));
  write_file(fs::path(o.out) / "report.json", reports_json(reports));
  CellPolicy cp = rc.engine.cell;
  cp.level_shift = s->params.level_shift;
  auto stats = cell_level_stats(rc.engine.graph, cp, rc.cell_stat_levels, rc.engine.seed, rc.cell_stat_seeds);
  std::string csv = "level,p_covered,mean_cell_size,boundary_q50,boundary_q90,boundary_q99\n";
  for (const auto& st : stats) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", st.level, st.p_covered, st.mean_cell_size,
                  st.boundary_q50, st.boundary_q90, st.boundary_q99);
    csv += buf;
  }
  write_file(fs::path(o.out) / "cell_stats.csv", csv);
  bool pass = true;
  for (const auto& r : reports) pass = pass && r.pass;
  report_failures(runs);
  return pass ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finitary coding of finitely dependent processes"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub, bool seeds) {
    sub->add_option("--config", o.config, "run config (JSON)")->required();
    if (seeds) sub->add_option("--seeds", o.seeds, "seed range A..B (inclusive)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--set", o.overrides, "override a scalar config field, KEY=VALUE (repeatable)");
  };
  auto* sim = app.add_subcommand("simulate", "run engine replicas; writes samples.csv and trace.json");
  add_common(sim, true);
  auto* ver = app.add_subcommand("verify", "run the verification suites on simulate output; writes report.csv");
  add_common(ver, false);
  auto* rad = app.add_subcommand("radius", "lazy replicas on Z/Z^d; writes radius_tail.csv");
  add_common(rad, true);
  auto* aud = app.add_subcommand("audit", "entropy audit and cell statistics; writes report.csv, cell_stats.csv");
  add_common(aud, true);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    if (*sim) return cmd_simulate(o);
    if (*ver) return cmd_verify(o);
    if (*rad) return cmd_radius(o);
    if (*aud) return cmd_audit(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const CapacityError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const UnresolvedError& e) {
    std::cerr << "unresolved: " << e.what() << " (radius " << e.radius() << ")\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
