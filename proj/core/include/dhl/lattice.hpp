#pragma once

// Path space of the diamond hierarchical lattice D^{b,s}.
//
// A generation-n directed path is a choice of branch at every node of the
// recursive decomposition p = (i; p_1, ..., p_s). We store those choices
// breadth-first: level 0 holds the top branch, level k holds s^k entries, and
// the node at (level k, position j) has children (k+1, j*s + t), t = 0..s-1.
// The full array has (s^n - 1)/(s - 1) entries, each in {1..b}.
//
// Edges of generation n are words ((b_1,s_1), ..., (b_n,s_n)); a path crosses
// s^n of them, one per time slot, and two paths share the edges whose whole
// chain of branch choices agrees.

#include <cstdint>
#include <span>
#include <vector>

#include "dhl/big_count.hpp"
#include "dhl/random.hpp"

namespace dhl {

struct LatticeParams {
  int b = 2;  // branching number
  int s = 2;  // segmenting number

  LatticeParams() = default;
  LatticeParams(int branching, int segmenting);

  bool critical() const { return b == s; }
  friend bool operator==(const LatticeParams&, const LatticeParams&) = default;
};

// Throws UsageError unless b == s.
void require_critical(const LatticeParams& params, const char* who);

// (s^n - 1)/(s - 1): entries in a generation-n decision array.
std::size_t decision_count(const LatticeParams& params, int generation);
// s^n time slots (edges crossed by one path).
std::uint64_t slot_count(const LatticeParams& params, int generation);
// (b s)^n generation-n edges.
std::uint64_t edge_count(const LatticeParams& params, int generation);

class CylinderPath {
 public:
  CylinderPath(LatticeParams params, int generation, std::vector<std::uint8_t> decisions);

  // The unique generation-0 path.
  static CylinderPath trivial(LatticeParams params) { return {params, 0, {}}; }
  // (i; p_1, ..., p_s) with all sub-paths of equal generation.
  static CylinderPath compose(int top_branch, std::span<const CylinderPath> subpaths);

  const LatticeParams& params() const { return params_; }
  int generation() const { return generation_; }
  std::span<const std::uint8_t> decisions() const { return decisions_; }

  int top_branch() const;
  // p_j for j in [0, s): the sub-path through segment j of the top branch.
  CylinderPath subpath(int j) const;
  // [p]_k: truncation to the first k levels.
  CylinderPath coarsen(int k) const;

  friend bool operator==(const CylinderPath&, const CylinderPath&) = default;

 private:
  LatticeParams params_;
  int generation_;
  std::vector<std::uint8_t> decisions_;
};

inline constexpr int kDefaultExactGenerations = 6;

// |Gamma_n| = b^{(s^n - 1)/(s - 1)}, via c_{k+1} = b c_k^s. Exact through
// `exact_generations`, log-space only beyond.
BigCount path_count(const LatticeParams& params, int generation,
                    int exact_generations = kDefaultExactGenerations);
mpz_class exact_path_count(const LatticeParams& params, int generation);

CylinderPath sample_uniform_path(const LatticeParams& params, int generation, rng::Stream& rng);

// N_n(p, q): shared generation-n edges.
std::uint64_t shared_edge_count(const CylinderPath& p, const CylinderPath& q);

// kappa^2 N_n(p,q) / n^2 with kappa^2 = 2/(b-1). A finite-generation estimate
// of the intersection-time kernel, not its limit.
double kernel_estimate(const CylinderPath& p, const CylinderPath& q);

// Fixed point in (0,1) of x -> (1 - (1-x)^s)/b for b < s, by bisection.
double intersection_fixed_point(int b, int s);
// (log s - log b)/log s for b < s.
double intersection_hausdorff_dim(int b, int s);

// s^{-K}, K the deepest level at which the coarsenings agree. Stands in for
// the continuum path metric; an ultrametric on Gamma_n.
double ultrametric_proxy_distance(const CylinderPath& p, const CylinderPath& q);

// Position of p in the canonical enumeration of Gamma_n: top branch most
// significant, then p_1, ..., p_s as mixed-radix digits of base |Gamma_{n-1}|.
// Requires |Gamma_n| < 2^63.
std::uint64_t cylinder_index(const CylinderPath& p);
CylinderPath path_from_index(const LatticeParams& params, int generation, std::uint64_t index);
// All of Gamma_n in cylinder_index order.
std::vector<CylinderPath> enumerate_paths(const LatticeParams& params, int generation);
// |Gamma_n| as a machine integer; throws UsageError beyond 2^63.
std::uint64_t small_path_count(const LatticeParams& params, int generation);

// Indices in [0, (bs)^n) of the s^n edges crossed by p, in time order.
std::vector<std::uint32_t> path_edges(const CylinderPath& p);

}  // namespace dhl
