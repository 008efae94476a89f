#include "fincode/process_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "fincode/errors.hpp"

namespace fincode {

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

struct Site {
  Vertex v;
  int var = -1;    // sample index, or -1 when fixed
  int value = -1;  // fixed symbol
};

std::vector<Site> collect_sites(const ConditionalQuery& q) {
  std::vector<Site> sites;
  VertexSet seen;
  for (std::size_t i = 0; i < q.sample.size(); ++i) {
    if (!seen.insert(q.sample[i]).second) throw ConfigError("query samples a site twice");
    sites.push_back({q.sample[i], static_cast<int>(i), -1});
  }
  std::unordered_map<Vertex, int, VertexHash> given;
  for (const auto& [v, val] : q.given) {
    auto it = given.find(v);
    if (it != given.end()) {
      if (it->second != val) throw ZeroProbabilityError("conditioning assigns two values to one site");
      continue;
    }
    if (seen.count(v)) throw ConfigError("query conditions on a sampled site");
    given.emplace(v, val);
    sites.push_back({v, -1, val});
  }
  return sites;
}

// +1 or -1: sign of the displacement from the first site to the first site
// at a different position (shorter way round on a torus; antipodes skipped).
int chain_orientation(const std::vector<std::int64_t>& xs, bool torus, std::int64_t N) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    std::int64_t d = xs[i] - xs[0];
    if (torus) {
      d %= N;
      if (d < 0) d += N;
      if (d == 0 || 2 * d == N) continue;
      return 2 * d < N ? 1 : -1;
    }
    if (d == 0) continue;
    return d > 0 ? 1 : -1;
  }
  return 1;
}

// Weight kept as mantissa * 2^exp so long chains neither overflow nor
// underflow; rescaling is by exact powers of two.
struct Scaled {
  std::vector<double> m;
  long exp = 0;
  void renorm() {
    double mx = 0;
    for (double x : m) mx = std::max(mx, x);
    if (mx == 0) return;
    int e;
    std::frexp(mx, &e);
    if (e > 200 || e < -200) {
      for (double& x : m) x = std::ldexp(x, -e);
      exp += e;
    }
  }
};

}  // namespace

ProcessSpec ProcessSpec::iid(std::vector<std::string> alphabet, std::vector<std::uint64_t> weights, int dim) {
  ProcessSpec s;
  s.kind = Kind::Iid;
  s.alphabet = alphabet;
  s.latent_alphabet = alphabet;
  s.latent_weights = std::move(weights);
  s.offsets = {Vertex{}};
  s.map.resize(alphabet.size());
  for (std::size_t i = 0; i < alphabet.size(); ++i) s.map[i] = static_cast<int>(i);
  s.dim = dim;
  s.validate();
  return s;
}

ProcessSpec ProcessSpec::block_factor(std::vector<std::string> alphabet, std::vector<std::string> latent,
                                      std::vector<std::uint64_t> weights, std::vector<Vertex> offsets,
                                      std::vector<int> map, int dim) {
  ProcessSpec s;
  s.kind = Kind::BlockFactor;
  s.alphabet = std::move(alphabet);
  s.latent_alphabet = std::move(latent);
  s.latent_weights = std::move(weights);
  s.offsets = std::move(offsets);
  s.map = std::move(map);
  s.dim = dim;
  s.validate();
  return s;
}

ProcessSpec ProcessSpec::and_process() {
  return block_factor({"0", "1"}, {"0", "1"}, {1, 1}, {Vertex(0), Vertex(1)}, {0, 0, 0, 1}, 1);
}

void ProcessSpec::validate() const {
  if (alphabet.empty()) throw ConfigError("process alphabet is empty");
  if (latent_alphabet.empty()) throw ConfigError("latent alphabet is empty");
  if (latent_weights.size() != latent_alphabet.size()) throw ConfigError("latent weights do not match latent alphabet");
  std::uint64_t total = 0;
  for (auto w : latent_weights) {
    if (w > (1ULL << 40)) throw ConfigError("latent weight too large");
    total += w;
  }
  if (total == 0) throw ConfigError("latent weights sum to zero");
  if (offsets.empty()) throw ConfigError("window has no offsets");
  if (ipow(latent_alphabet.size(), offsets.size()) != map.size())
    throw ConfigError("map length must be |latent|^window (" +
                      std::to_string(ipow(latent_alphabet.size(), offsets.size())) + ")");
  for (int x : map)
    if (x < 0 || static_cast<std::size_t>(x) >= alphabet.size()) throw ConfigError("map value outside alphabet");
  if (dim < 1 || dim > kMaxDim) throw ConfigError("process dimension out of range");
}

std::int64_t ProcessSpec::base_range() const {
  std::int64_t r = 0;
  for (const auto& a : offsets)
    for (const auto& b : offsets) {
      std::int64_t d = 0;
      for (int i = 0; i < dim; ++i) d += std::llabs(a[i] - b[i]);
      r = std::max(r, d);
    }
  return r;
}

double entropy_of(const std::vector<double>& probabilities) {
  double h = 0;
  for (double p : probabilities)
    if (p > 0) h -= p * std::log2(p);
  return h;
}

ProcessOracle::ProcessOracle(ProcessSpec spec, const LatticeGraph& g) : spec_(std::move(spec)), g_(&g) {
  spec_.validate();
  if (spec_.dim != g.dim()) throw ConfigError("process dimension differs from graph dimension");
  single_offset_ = spec_.offsets.size() == 1;
  const std::size_t A = spec_.latent_alphabet.size();
  double W = 0;
  for (auto w : spec_.latent_weights) W += static_cast<double>(w);
  if (single_offset_) {
    marginal_.assign(spec_.alphabet.size(), 0.0);
    for (std::size_t a = 0; a < A; ++a) marginal_[spec_.map[a]] += static_cast<double>(spec_.latent_weights[a]) / W;
  }
  if (g.dim() == 1) {
    std::int64_t lo = spec_.offsets[0][0], hi = lo;
    for (const auto& o : spec_.offsets) {
      lo = std::min(lo, o[0]);
      hi = std::max(hi, o[0]);
    }
    span_ = hi - lo + 1;
    if (span_ > 24) throw CapacityError("window span too large for the chain route");
    states_ = ipow(A, static_cast<std::size_t>(span_ - 1));
    if (states_ > (1u << 16)) throw CapacityError("too many chain states");
    const std::size_t w = spec_.offsets.size();
    for (const auto& o : spec_.offsets) {
      arg_pos_.push_back(static_cast<int>(o[0] - lo));
      arg_pos_rev_.push_back(static_cast<int>(hi - o[0]));
    }
    const std::size_t tuples = states_ * A;
    f_table_.resize(tuples);
    f_table_rev_.resize(tuples);
    std::vector<int> digits(static_cast<std::size_t>(span_));
    for (std::size_t t = 0; t < tuples; ++t) {
      std::size_t x = t;
      for (std::int64_t i = span_ - 1; i >= 0; --i) {
        digits[static_cast<std::size_t>(i)] = static_cast<int>(x % A);
        x /= A;
      }
      std::size_t idx = 0, idx_rev = 0;
      for (std::size_t j = 0; j < w; ++j) {
        idx = idx * A + static_cast<std::size_t>(digits[static_cast<std::size_t>(arg_pos_[j])]);
        idx_rev = idx_rev * A + static_cast<std::size_t>(digits[static_cast<std::size_t>(arg_pos_rev_[j])]);
      }
      f_table_[t] = spec_.map[idx];
      f_table_rev_[t] = spec_.map[idx_rev];
    }
    // A symbol is a separator when a single latent tuple of positive weight
    // produces it: observing it pins the whole window, which splits the line
    // into conditionally independent halves.
    std::vector<int> preimages(spec_.alphabet.size(), 0);
    for (std::size_t t = 0; t < tuples; ++t) {
      std::size_t x = t;
      bool positive = true;
      for (std::int64_t i = 0; i < span_; ++i) {
        if (spec_.latent_weights[x % A] == 0) positive = false;
        x /= A;
      }
      if (positive) ++preimages[static_cast<std::size_t>(f_table_[t])];
    }
    separators_.assign(spec_.alphabet.size(), false);
    for (std::size_t x = 0; x < preimages.size(); ++x) separators_[x] = preimages[x] == 1;
  }
}

std::string ProcessOracle::route(const ConditionalQuery& q) const {
  (void)q;
  if (single_offset_) return "product";
  if (g_->dim() == 1) return "chain";
  return "enumeration";
}

Law ProcessOracle::from_weights(std::vector<std::vector<int>> outcomes, const std::vector<double>& w) const {
  double total = 0;
  for (double x : w) total += x;
  if (!(total > 0)) throw ZeroProbabilityError("conditioning event has probability zero");
  Law law;
  std::vector<double> p;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0) continue;
    law.outcomes.push_back(std::move(outcomes[i]));
    p.push_back(w[i] / total);
  }
  law.dist = TargetDistribution::from_doubles(p);
  law.probabilities = std::move(p);
  return law;
}

std::string ProcessOracle::cache_key(const ConditionalQuery& q) const {
  // Translation-canonical: displacements from the first sampled site. The
  // given sites enter as a set; the chain orientation, the only thing their
  // order can influence, is recorded separately.
  const Vertex& a = q.sample.empty() ? (q.given.empty() ? Vertex{} : q.given[0].first) : q.sample[0];
  auto disp = [&](const Vertex& v) {
    Vertex d;
    for (int i = 0; i < g_->dim(); ++i) d[i] = v[i] - a[i];
    return g_->canonical(d);
  };
  std::string key;
  key.reserve(16 * (q.sample.size() + q.given.size()) + 4);
  if (!single_offset_ && g_->dim() == 1) {
    std::vector<std::int64_t> xs;
    for (const auto& v : q.sample) xs.push_back(v[0]);
    for (const auto& gv : q.given) xs.push_back(gv.first[0]);
    key += chain_orientation(xs, g_->finite(), g_->side()) > 0 ? "+" : "-";
  }
  auto put = [&](const Vertex& d, int val) {
    for (int i = 0; i < g_->dim(); ++i) key += std::to_string(d[i]) + ",";
    key += std::to_string(val) + ";";
  };
  for (const auto& v : q.sample) put(disp(v), -1);
  key += "|";
  std::vector<std::pair<Vertex, int>> given;
  for (const auto& [v, val] : q.given) given.push_back({disp(v), val});
  std::sort(given.begin(), given.end());
  for (const auto& [d, val] : given) put(d, val);
  return key;
}

ConditionalQuery ProcessOracle::prune(const ConditionalQuery& q) const {
  if (single_offset_ || g_->dim() != 1 || q.sample.empty() || separators_.empty()) return q;
  const bool cyclic = g_->finite();
  const std::int64_t n = cyclic ? g_->side() : 0;
  std::vector<std::int64_t> xs;
  for (const auto& v : q.sample) xs.push_back(g_->canonical(v)[0]);
  std::sort(xs.begin(), xs.end());
  std::vector<std::int64_t> seps;
  for (const auto& [v, x] : q.given)
    if (separators_[static_cast<std::size_t>(x)]) seps.push_back(g_->canonical(v)[0]);
  std::sort(seps.begin(), seps.end());
  if (seps.empty()) return q;
  // Dropped open intervals (unwrapped coordinates on the torus).
  std::vector<std::pair<std::int64_t, std::int64_t>> drop;
  auto gap = [&](std::int64_t a, std::int64_t b) {
    std::int64_t first = 0, last = 0;
    int count = 0;
    for (int lap = 0; lap < (cyclic ? 2 : 1); ++lap) {
      for (auto s0 : seps) {
        std::int64_t s = s0 + lap * n;
        if (s <= a || s >= b) continue;
        if (count++ == 0) first = s;
        last = s;
      }
    }
    if (count >= 2) drop.push_back({first, last});
  };
  const std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) gap(xs[i], xs[i + 1]);
  if (cyclic) {
    gap(xs.back(), xs.front() + n);
  } else {
    auto lo = std::lower_bound(seps.begin(), seps.end(), xs.front());
    if (lo != seps.begin()) drop.push_back({-inf, *(lo - 1)});
    auto hi = std::upper_bound(seps.begin(), seps.end(), xs.back());
    if (hi != seps.end()) drop.push_back({*hi, inf});
  }
  if (drop.empty()) return q;
  ConditionalQuery out;
  out.sample = q.sample;
  for (const auto& gv : q.given) {
    std::int64_t x = g_->canonical(gv.first)[0];
    bool keep = true;
    for (const auto& [a, b] : drop) {
      if ((x > a && x < b) || (cyclic && x + n > a && x + n < b)) {
        keep = false;
        break;
      }
    }
    if (keep) out.given.push_back(gv);
  }
  return out;
}

Law ProcessOracle::conditional(const ConditionalQuery& q_in) const {
  const ConditionalQuery q = prune(q_in);
  const bool cacheable = q.sample.size() + q.given.size() <= 24;
  std::string key;
  if (cacheable) {
    key = cache_key(q);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  Law law;
  if (single_offset_) {
    law = product_route(q);
  } else if (g_->dim() == 1) {
    law = chain_route(q);
  } else {
    law = conditional_brute(q);
  }
  if (cacheable) {
    std::lock_guard<std::mutex> lock(mu_);
    if (cache_.size() > 200000) cache_.clear();
    cache_.emplace(key, law);
  }
  return law;
}

Law ProcessOracle::product_route(const ConditionalQuery& q) const {
  auto sites = collect_sites(q);
  const std::size_t S = spec_.alphabet.size();
  const std::size_t m = q.sample.size();
  // Conditioning sites are independent of the sample; only check feasibility.
  for (const auto& s : sites)
    if (s.var < 0 && marginal_[static_cast<std::size_t>(s.value)] <= 0)
      throw ZeroProbabilityError("conditioning event has probability zero");
  if (ipow(S, m) > (1u << 22)) throw CapacityError("product law has too many outcomes");
  std::vector<std::vector<int>> outcomes;
  std::vector<double> w;
  std::vector<int> cur(m, 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double acc) {
    if (i == m) {
      outcomes.push_back(cur);
      w.push_back(acc);
      return;
    }
    for (std::size_t x = 0; x < S; ++x) {
      if (marginal_[x] <= 0) continue;
      cur[i] = static_cast<int>(x);
      rec(i + 1, acc * marginal_[x]);
    }
  };
  rec(0, 1.0);
  return from_weights(std::move(outcomes), w);
}

Law ProcessOracle::chain_route(const ConditionalQuery& q) const {
  auto sites = collect_sites(q);
  const std::size_t m = q.sample.size();
  const std::size_t S = spec_.alphabet.size();
  const std::size_t A = spec_.latent_alphabet.size();
  const std::int64_t span = span_;
  const bool torus = g_->finite();
  const std::int64_t N = torus ? g_->side() : 0;

  if (sites.empty()) {
    Law law;
    law.outcomes = {{}};
    law.dist = TargetDistribution::from_doubles({1.0});
    law.probabilities = {1.0};
    return law;
  }

  // Orientation from the first two distinct sites of the serialization.
  const std::int64_t anchor = sites[0].v[0];
  std::vector<std::int64_t> xs;
  for (const auto& s : sites) xs.push_back(s.v[0]);
  const int sigma = chain_orientation(xs, torus, N);
  const std::vector<int>& ftab = sigma > 0 ? f_table_ : f_table_rev_;

  struct Pos {
    std::int64_t p;
    int var;
    int value;
  };
  std::vector<Pos> pos;
  for (const auto& s : sites) {
    std::int64_t p = sigma * (s.v[0] - anchor);
    if (torus) {
      p %= N;
      if (p < 0) p += N;
    }
    pos.push_back({p, s.var, s.value});
  }
  std::sort(pos.begin(), pos.end(), [](const Pos& a, const Pos& b) { return a.p < b.p; });

  bool cycle = false;
  if (torus) {
    if (N < span) throw CapacityError("torus shorter than the window span");
    // Cut the cycle at the widest gap if the windows on both sides do not
    // overlap across it.
    std::size_t best = pos.size() - 1;
    std::int64_t best_gap = pos.front().p + N - pos.back().p;
    for (std::size_t i = 0; i + 1 < pos.size(); ++i) {
      std::int64_t gap = pos[i + 1].p - pos[i].p;
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best_gap >= span) {
      std::int64_t start = pos[(best + 1) % pos.size()].p;
      for (auto& x : pos) {
        x.p -= start;
        if (x.p < 0) x.p += N;
      }
      std::sort(pos.begin(), pos.end(), [](const Pos& a, const Pos& b) { return a.p < b.p; });
    } else {
      cycle = true;
    }
  }

  // Step program over latent positions; a step adds one latent value and may
  // carry the constraint of the X-site whose window it completes.
  struct Step {
    int var = -1;
    int value = -1;
    bool constrained = false;
    bool jump = false;   // marginalise the whole state
    int forced = -1;     // cycle wrap: new latent equals digit of the start state
  };
  std::vector<Step> steps;
  std::int64_t first = pos.front().p;
  if (!cycle) {
    std::int64_t q = first + span - 1;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      std::int64_t target = pos[i].p + span - 1;
      std::int64_t free_steps = target - q;
      if (i > 0) {
        --free_steps;  // steps strictly between the previous constraint and this one
        if (free_steps >= span - 1 && span > 1) {
          Step j;
          j.jump = true;
          steps.push_back(j);
        } else {
          for (std::int64_t k = 0; k < free_steps; ++k) steps.push_back(Step{});
        }
      }
      Step s;
      s.constrained = true;
      s.var = pos[i].var;
      s.value = pos[i].value;
      steps.push_back(s);
      q = target;
    }
  } else {
    std::vector<const Pos*> at(static_cast<std::size_t>(N), nullptr);
    for (const auto& x : pos) at[static_cast<std::size_t>(x.p)] = &x;
    for (std::int64_t q = span - 1; q <= N + span - 2; ++q) {
      Step s;
      std::int64_t p = q - span + 1;
      if (at[static_cast<std::size_t>(p)]) {
        s.constrained = true;
        s.var = at[static_cast<std::size_t>(p)]->var;
        s.value = at[static_cast<std::size_t>(p)]->value;
      }
      if (q >= N) s.forced = static_cast<int>(q - N);
      steps.push_back(s);
    }
  }

  const std::size_t states = states_;
  std::vector<double> w(A);
  for (std::size_t a = 0; a < A; ++a) w[a] = static_cast<double>(spec_.latent_weights[a]);
  std::vector<double> prior(states, 1.0);
  for (std::size_t s = 0; s < states; ++s) {
    std::size_t x = s;
    for (std::int64_t i = 0; i < span - 1; ++i) {
      prior[s] *= w[x % A];
      x /= A;
    }
  }
  auto digit_of = [&](std::size_t s0, int i) {
    // i-th oldest latent of a start state
    std::size_t x = s0;
    for (std::int64_t k = span - 2; k > i; --k) x /= A;
    return static_cast<int>(x % A);
  };

  // One forward step; symbol < 0 means the constraint value is taken from the step.
  auto forward = [&](const Step& st, const Scaled& in, int symbol, std::size_t s0, Scaled& out) {
    out.m.assign(states, 0.0);
    out.exp = in.exp;
    if (st.jump) {
      double tot = 0;
      for (double x : in.m) tot += x;
      for (std::size_t s = 0; s < states; ++s) out.m[s] = tot * prior[s];
      out.renorm();
      return;
    }
    int need = st.constrained ? (st.var >= 0 ? symbol : st.value) : -1;
    for (std::size_t s = 0; s < states; ++s) {
      double ms = in.m[s];
      if (ms == 0) continue;
      for (std::size_t y = 0; y < A; ++y) {
        if (st.forced >= 0 && static_cast<int>(y) != digit_of(s0, st.forced)) continue;
        std::size_t t = s * A + y;
        if (need >= 0 && ftab[t] != need) continue;
        double wy = st.forced >= 0 ? 1.0 : w[y];
        out.m[t % states] += ms * wy;
      }
    }
    out.renorm();
  };

  // Backward messages: beta after step i.
  auto backward = [&](const Step& st, const Scaled& in, std::size_t s0, Scaled& out) {
    out.m.assign(states, 0.0);
    out.exp = in.exp;
    if (st.jump) {
      double tot = 0;
      for (std::size_t s = 0; s < states; ++s) tot += prior[s] * in.m[s];
      for (std::size_t s = 0; s < states; ++s) out.m[s] = tot;
      out.renorm();
      return;
    }
    int need = st.constrained ? st.value : -1;
    for (std::size_t s = 0; s < states; ++s) {
      double acc = 0;
      for (std::size_t y = 0; y < A; ++y) {
        if (st.forced >= 0 && static_cast<int>(y) != digit_of(s0, st.forced)) continue;
        std::size_t t = s * A + y;
        if (need >= 0 && ftab[t] != need) continue;
        double wy = st.forced >= 0 ? 1.0 : w[y];
        acc += wy * in.m[t % states];
      }
      out.m[s] = acc;
    }
    out.renorm();
  };

  std::size_t first_var = steps.size(), last_var = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].constrained && steps[i].var >= 0) {
      first_var = std::min(first_var, i);
      last_var = i;
    }
  }
  if (m == 0) {
    first_var = steps.size();
    last_var = steps.size() - 1;
  }

  if (ipow(S, m) > (1u << 24)) throw CapacityError("conditional law has too many outcomes");
  std::unordered_map<std::uint64_t, std::pair<double, long>> acc;
  std::vector<std::uint64_t> order_codes;

  const std::size_t n_start = cycle ? states : 1;
  std::vector<int> assign(m, 0);
  for (std::size_t s0 = 0; s0 < n_start; ++s0) {
    Scaled alpha;
    if (cycle) {
      alpha.m.assign(states, 0.0);
      alpha.m[s0] = prior[s0];
    } else {
      alpha.m = prior;
    }
    for (std::size_t i = 0; i < first_var && i < steps.size(); ++i) {
      Scaled nxt;
      forward(steps[i], alpha, -1, s0, nxt);
      alpha = std::move(nxt);
    }
    Scaled beta;
    beta.m.assign(states, 1.0);
    for (std::size_t i = steps.size(); i-- > last_var + 1;) {
      Scaled nxt;
      backward(steps[i], beta, s0, nxt);
      beta = std::move(nxt);
    }
    auto finish = [&](const Scaled& msg) {
      double tot = 0;
      for (std::size_t s = 0; s < states; ++s) tot += msg.m[s] * beta.m[s];
      if (tot == 0) return;
      std::uint64_t code = 0;
      for (std::size_t j = 0; j < m; ++j) code = code * S + static_cast<std::uint64_t>(assign[j]);
      long e = msg.exp + beta.exp;
      auto it = acc.find(code);
      if (it == acc.end()) {
        acc.emplace(code, std::make_pair(tot, e));
        order_codes.push_back(code);
      } else {
        // Combine two scaled numbers exactly up to rounding of the sum.
        long emax = std::max(it->second.second, e);
        it->second.first = std::ldexp(it->second.first, static_cast<int>(it->second.second - emax)) +
                           std::ldexp(tot, static_cast<int>(e - emax));
        it->second.second = emax;
      }
    };
    if (first_var >= steps.size()) {
      finish(alpha);
      continue;
    }
    // One message buffer per step, reused across sibling branches.
    std::vector<Scaled> buf(steps.size());
    auto dfs = [&](auto&& self, std::size_t i, const Scaled& msg) -> void {
      if (i > last_var) {
        finish(msg);
        return;
      }
      const Step& st = steps[i];
      Scaled& nxt = buf[i];
      auto nonzero = [&] {
        for (double v : nxt.m)
          if (v != 0) return true;
        return false;
      };
      if (st.constrained && st.var >= 0) {
        for (std::size_t x = 0; x < S; ++x) {
          forward(st, msg, static_cast<int>(x), s0, nxt);
          if (!nonzero()) continue;
          assign[static_cast<std::size_t>(st.var)] = static_cast<int>(x);
          self(self, i + 1, nxt);
        }
      } else {
        forward(st, msg, -1, s0, nxt);
        if (nonzero()) self(self, i + 1, nxt);
      }
    };
    dfs(dfs, first_var, alpha);
  }

  std::sort(order_codes.begin(), order_codes.end());
  long emax = std::numeric_limits<long>::min();
  for (auto c : order_codes) emax = std::max(emax, acc[c].second);
  std::vector<std::vector<int>> outcomes;
  std::vector<double> weights;
  for (auto c : order_codes) {
    std::vector<int> o(m);
    std::uint64_t x = c;
    for (std::size_t j = m; j-- > 0;) {
      o[j] = static_cast<int>(x % S);
      x /= S;
    }
    outcomes.push_back(std::move(o));
    const auto& [v, e] = acc[c];
    weights.push_back(std::ldexp(v, static_cast<int>(e - emax)));
  }
  return from_weights(std::move(outcomes), weights);
}

ExactLaw ProcessOracle::brute_force(const ConditionalQuery& q) const {
  auto sites = collect_sites(q);
  const std::size_t A = spec_.latent_alphabet.size();
  const std::size_t S = spec_.alphabet.size();
  const std::size_t m = q.sample.size();
  // Latent window.
  std::vector<Vertex> latent;
  for (const auto& s : sites)
    for (const auto& o : spec_.offsets) latent.push_back(g_->shifted(s.v, o));
  latent = sorted_unique(std::move(latent));
  double log_configs = static_cast<double>(latent.size()) * std::log2(static_cast<double>(A));
  if (log_configs > 26.0) throw CapacityError("enumeration exceeds 2^26 latent configurations");
  std::uint64_t wmax = *std::max_element(spec_.latent_weights.begin(), spec_.latent_weights.end());
  if (static_cast<double>(latent.size()) * std::log2(static_cast<double>(wmax) + 1) > 100)
    throw CapacityError("exact weights would overflow 128 bits");
  std::unordered_map<Vertex, std::size_t, VertexHash> where;
  for (std::size_t i = 0; i < latent.size(); ++i) where[latent[i]] = i;
  std::vector<std::vector<std::size_t>> win(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (const auto& o : spec_.offsets) win[i].push_back(where[g_->shifted(sites[i].v, o)]);

  std::map<std::vector<int>, u128> acc;
  std::vector<int> y(latent.size(), 0);
  std::vector<int> x(m, 0);
  const std::size_t total = ipow(A, latent.size());
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t r = c;
    u128 weight = 1;
    for (std::size_t i = 0; i < latent.size(); ++i) {
      y[i] = static_cast<int>(r % A);
      r /= A;
      weight *= spec_.latent_weights[static_cast<std::size_t>(y[i])];
    }
    if (weight == 0) continue;
    bool ok = true;
    for (std::size_t i = 0; i < sites.size() && ok; ++i) {
      std::size_t idx = 0;
      for (auto li : win[i]) idx = idx * A + static_cast<std::size_t>(y[li]);
      int val = spec_.map[idx];
      if (sites[i].var >= 0) {
        x[static_cast<std::size_t>(sites[i].var)] = val;
      } else if (val != sites[i].value) {
        ok = false;
      }
    }
    if (ok) acc[x] += weight;
  }
  ExactLaw out;
  for (auto& [k, v] : acc) {
    out.outcomes.push_back(k);
    out.weights.push_back(v);
  }
  (void)S;
  return out;
}

Law ProcessOracle::conditional_brute(const ConditionalQuery& q) const {
  auto ex = brute_force(q);
  if (ex.weights.empty()) throw ZeroProbabilityError("conditioning event has probability zero");
  Law law;
  law.outcomes = ex.outcomes;
  law.dist = TargetDistribution::from_weights(ex.weights);
  for (std::size_t i = 0; i < ex.weights.size(); ++i) law.probabilities.push_back(law.dist.probability(i));
  return law;
}

double ProcessOracle::entropy(const std::vector<Vertex>& F) const {
  if (F.empty()) return 0.0;
  ConditionalQuery q;
  q.sample = F;
  Law law = (single_offset_ || g_->dim() == 1) ? (single_offset_ ? product_route(q) : chain_route(q))
                                               : conditional_brute(q);
  return entropy_of(law.probabilities);
}

std::vector<double> ProcessOracle::interval_entropies(int max_len) const {
  std::vector<double> h;
  for (int L = 1; L <= max_len; ++L) {
    std::vector<Vertex> F;
    for (int i = 0; i < L; ++i) {
      Vertex v;
      v[0] = i;
      F.push_back(g_->canonical(v));
    }
    h.push_back(entropy(F));
  }
  return h;
}

EntropyBracket ProcessOracle::entropy_rate_bracket(int max_len) const {
  EntropyBracket b;
  if (single_offset_) {
    b.lower = b.upper = entropy_of(marginal_);
    b.length = 1;
    return b;
  }
  if (g_->dim() != 1) throw ConfigError("entropy-rate bracket is implemented for one-dimensional processes");
  if (max_len < 2) throw ConfigError("entropy-rate bracket needs max_len >= 2");
  const std::size_t A = spec_.latent_alphabet.size();
  const std::int64_t span = span_;
  // Largest L whose latent enumeration fits.
  int L = max_len;
  while (L > 2 && static_cast<double>(L + span - 1) * std::log2(static_cast<double>(A)) > 24.0) --L;
  if (static_cast<double>(L + span - 1) * std::log2(static_cast<double>(A)) > 24.0)
    throw CapacityError("entropy-rate bracket exceeds enumeration capacity");
  // Enumerate y_0..y_{L+span-2}; X_i uses the forward table on y_i..y_{i+span-1}.
  const std::size_t n_lat = static_cast<std::size_t>(L + span - 1);
  const std::size_t total = ipow(A, n_lat);
  const std::size_t S = spec_.alphabet.size();
  const std::size_t zcount = states_ * A;
  double W = 0;
  for (auto w : spec_.latent_weights) W += static_cast<double>(w);
  std::unordered_map<std::uint64_t, double> pL, pL1, pzL, pzL1;
  std::vector<int> y(n_lat);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t r = c;
    double prob = 1;
    for (std::size_t i = 0; i < n_lat; ++i) {
      y[i] = static_cast<int>(r % A);
      r /= A;
      prob *= static_cast<double>(spec_.latent_weights[static_cast<std::size_t>(y[i])]) / W;
    }
    if (prob == 0) continue;
    std::uint64_t code = 0, code1 = 0;
    std::size_t z = 0;
    for (std::int64_t i = 0; i < span; ++i) z = z * A + static_cast<std::size_t>(y[static_cast<std::size_t>(i)]);
    for (int i = 0; i < L; ++i) {
      std::size_t t = 0;
      for (std::int64_t j = 0; j < span; ++j) t = t * A + static_cast<std::size_t>(y[static_cast<std::size_t>(i + j)]);
      int xi = f_table_[t];
      code = code * S + static_cast<std::uint64_t>(xi);
      if (i < L - 1) code1 = code1 * S + static_cast<std::uint64_t>(xi);
    }
    pL[code] += prob;
    pL1[code1] += prob;
    pzL[code * zcount + z] += prob;
    pzL1[code1 * zcount + z] += prob;
  }
  auto H = [](const std::unordered_map<std::uint64_t, double>& mp) {
    double h = 0;
    for (const auto& kv : mp)
      if (kv.second > 0) h -= kv.second * std::log2(kv.second);
    return h;
  };
  double hL = H(pL), hL1 = H(pL1);
  b.upper = std::min(hL / L, hL - hL1);
  b.lower = H(pzL) - H(pzL1);
  b.lower = std::min(b.lower, b.upper);
  b.length = L;
  return b;
}

std::int64_t ProcessOracle::dependence_range(bool verify) const {
  std::int64_t K = spec_.base_range();
  if (!verify) return K;
  // Exact check on pairs of single sites along axis 0.
  auto joint_vs_product = [&](std::int64_t dist) {
    Vertex a{}, b{};
    b[0] = dist;
    b = g_->canonical(b);
    ConditionalQuery q;
    q.sample = {a, b};
    auto ex = brute_force(q);
    ConditionalQuery qa;
    qa.sample = {a};
    auto ea = brute_force(qa);
    long double tot = 0, tota = 0;
    for (auto w : ex.weights) tot += static_cast<long double>(w);
    for (auto w : ea.weights) tota += static_cast<long double>(w);
    std::map<int, long double> pa;
    for (std::size_t i = 0; i < ea.outcomes.size(); ++i) pa[ea.outcomes[i][0]] = static_cast<long double>(ea.weights[i]) / tota;
    long double worst = 0;
    for (std::size_t x = 0; x < spec_.alphabet.size(); ++x)
      for (std::size_t yv = 0; yv < spec_.alphabet.size(); ++yv) {
        long double pj = 0;
        for (std::size_t i = 0; i < ex.outcomes.size(); ++i)
          if (ex.outcomes[i][0] == static_cast<int>(x) && ex.outcomes[i][1] == static_cast<int>(yv))
            pj = static_cast<long double>(ex.weights[i]) / tot;
        worst = std::max(worst, std::fabs(pj - pa[static_cast<int>(x)] * pa[static_cast<int>(yv)]));
      }
    return static_cast<double>(worst);
  };
  if (g_->finite() && 2 * (K + 1) > g_->side()) return K;
  if (joint_vs_product(K + 1) > 1e-15)
    throw InvariantViolation("process is dependent beyond its window range");
  return K;
}

}  // namespace fincode
