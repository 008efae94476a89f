#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fincode/graph.hpp"
#include "fincode/ky_sampler.hpp"

namespace fincode {

// X_v = map(Y'_{v+o_1}, ..., Y'_{v+o_w}) with Y' iid over a latent alphabet
// with integer weights. An iid target is the one-offset case.
struct ProcessSpec {
  enum class Kind { Iid, BlockFactor };
  Kind kind = Kind::Iid;
  std::vector<std::string> alphabet;
  std::vector<std::string> latent_alphabet;
  std::vector<std::uint64_t> latent_weights;
  std::vector<Vertex> offsets;
  std::vector<int> map;  // index sum_j a_j |A|^(w-1-j)
  int dim = 1;

  static ProcessSpec iid(std::vector<std::string> alphabet, std::vector<std::uint64_t> weights, int dim = 1);
  static ProcessSpec block_factor(std::vector<std::string> alphabet, std::vector<std::string> latent,
                                  std::vector<std::uint64_t> weights, std::vector<Vertex> offsets, std::vector<int> map,
                                  int dim = 1);
  // X_v = Y'_v AND Y'_{v+1} with fair latent bits.
  static ProcessSpec and_process();

  void validate() const;
  std::size_t window() const { return offsets.size(); }
  // Largest base distance between two window offsets; sites farther apart
  // than this are independent.
  std::int64_t base_range() const;
};

struct ConditionalQuery {
  std::vector<Vertex> sample;                    // serialization order
  std::vector<std::pair<Vertex, int>> given;     // conditioned sites and values
};

struct Law {
  TargetDistribution dist;
  std::vector<std::vector<int>> outcomes;  // support outcomes, values in sample order
  std::vector<double> probabilities;
};

struct ExactLaw {
  std::vector<std::vector<int>> outcomes;
  std::vector<u128> weights;  // unnormalised, conditioning event included
};

struct EntropyBracket {
  double lower = 0.0;
  double upper = 0.0;
  int length = 0;
  double width() const { return upper - lower; }
};

class ProcessOracle {
 public:
  ProcessOracle(ProcessSpec spec, const LatticeGraph& g);

  const ProcessSpec& spec() const { return spec_; }
  std::size_t alphabet_size() const { return spec_.alphabet.size(); }

  // Fast route: product law, 1D transfer-matrix chain, or enumeration.
  // Conditioning beyond separator observations is dropped first (exact when
  // the conditioning event has positive probability).
  Law conditional(const ConditionalQuery& q) const;
  ConditionalQuery prune(const ConditionalQuery& q) const;
  // Independent reference: full latent enumeration with exact weights.
  ExactLaw brute_force(const ConditionalQuery& q) const;
  Law conditional_brute(const ConditionalQuery& q) const;
  std::string route(const ConditionalQuery& q) const;

  double entropy(const std::vector<Vertex>& F) const;
  // H(X_[0,L)) for L = 1..max_len (1D).
  std::vector<double> interval_entropies(int max_len) const;
  EntropyBracket entropy_rate_bracket(int max_len) const;
  // Dependence range in the base metric; with verify, exact independence at
  // range+1 and dependence at range are checked by enumeration.
  std::int64_t dependence_range(bool verify) const;

  std::size_t cache_hits() const { return hits_; }

 private:
  Law product_route(const ConditionalQuery& q) const;
  Law chain_route(const ConditionalQuery& q) const;
  Law from_weights(std::vector<std::vector<int>> outcomes, const std::vector<double>& w) const;
  std::string cache_key(const ConditionalQuery& q) const;

  ProcessSpec spec_;
  const LatticeGraph* g_;
  std::vector<double> marginal_;  // single-offset windows
  bool single_offset_ = false;
  std::int64_t span_ = 1;
  std::vector<int> arg_pos_;  // offset j -> position inside the span tuple
  std::vector<int> arg_pos_rev_;
  std::vector<int> f_table_;      // tuple code -> symbol, forward orientation
  std::vector<int> f_table_rev_;  // reversed orientation
  std::size_t states_ = 1;        // |A|^(span-1)
  std::vector<bool> separators_;

  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, Law> cache_;
  mutable std::size_t hits_ = 0;
};

double entropy_of(const std::vector<double>& probabilities);

}  // namespace fincode
