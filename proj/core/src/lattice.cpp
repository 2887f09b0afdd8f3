#include "dhl/lattice.hpp"

#include <cmath>
#include <string>

#include "dhl/errors.hpp"

namespace dhl {

namespace {

std::uint64_t ipow(std::uint64_t base, int exponent) {
  std::uint64_t result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (result > (std::uint64_t{1} << 62) / base) throw UsageError("integer power overflows 64 bits");
    result *= base;
  }
  return result;
}

// Breadth-first offset of the first node at `level`.
std::size_t level_offset(int s, int level) {
  return static_cast<std::size_t>((ipow(s, level) - 1) / static_cast<std::uint64_t>(s - 1));
}

void require_same_space(const CylinderPath& p, const CylinderPath& q) {
  if (!(p.params() == q.params()) || p.generation() != q.generation()) {
    throw UsageError("paths belong to different path spaces (params or generation differ)");
  }
}

}  // namespace

LatticeParams::LatticeParams(int branching, int segmenting) : b(branching), s(segmenting) {
  if (b < 2 || s < 2) throw UsageError("lattice parameters require b >= 2 and s >= 2");
  if (b > 255) throw UsageError("branching number above 255 is not supported");
}

void require_critical(const LatticeParams& params, const char* who) {
  if (!params.critical()) {
    throw UsageError(std::string(who) + " requires a critical lattice (b = s), got b=" +
                     std::to_string(params.b) + ", s=" + std::to_string(params.s));
  }
}

std::size_t decision_count(const LatticeParams& params, int generation) {
  if (generation < 0) throw UsageError("generation must be nonnegative");
  return level_offset(params.s, generation);
}

std::uint64_t slot_count(const LatticeParams& params, int generation) {
  return ipow(params.s, generation);
}

std::uint64_t edge_count(const LatticeParams& params, int generation) {
  return ipow(static_cast<std::uint64_t>(params.b) * params.s, generation);
}

CylinderPath::CylinderPath(LatticeParams params, int generation, std::vector<std::uint8_t> decisions)
    : params_(params), generation_(generation), decisions_(std::move(decisions)) {
  if (generation < 0) throw UsageError("generation must be nonnegative");
  if (decisions_.size() != decision_count(params_, generation_)) {
    throw UsageError("decision array length " + std::to_string(decisions_.size()) +
                     " does not match generation " + std::to_string(generation_));
  }
  for (auto d : decisions_) {
    if (d < 1 || d > params_.b) throw UsageError("branch decision outside {1..b}");
  }
}

CylinderPath CylinderPath::compose(int top_branch, std::span<const CylinderPath> subpaths) {
  if (subpaths.empty()) throw UsageError("compose needs s sub-paths");
  const LatticeParams params = subpaths.front().params();
  const int sub_generation = subpaths.front().generation();
  if (static_cast<int>(subpaths.size()) != params.s) throw UsageError("compose needs exactly s sub-paths");
  for (const auto& sp : subpaths) require_same_space(sp, subpaths.front());

  std::vector<std::uint8_t> decisions;
  decisions.reserve(decision_count(params, sub_generation + 1));
  decisions.push_back(static_cast<std::uint8_t>(top_branch));
  for (int level = 0; level < sub_generation; ++level) {
    const std::size_t begin = level_offset(params.s, level);
    const std::size_t width = ipow(params.s, level);
    for (const auto& sp : subpaths) {
      auto d = sp.decisions();
      decisions.insert(decisions.end(), d.begin() + begin, d.begin() + begin + width);
    }
  }
  return {params, sub_generation + 1, std::move(decisions)};
}

int CylinderPath::top_branch() const {
  if (generation_ == 0) throw UsageError("generation-0 path has no branch decisions");
  return decisions_.front();
}

CylinderPath CylinderPath::subpath(int j) const {
  if (generation_ == 0) throw UsageError("generation-0 path has no sub-paths");
  if (j < 0 || j >= params_.s) throw UsageError("sub-path index outside [0, s)");
  std::vector<std::uint8_t> decisions;
  decisions.reserve(decision_count(params_, generation_ - 1));
  for (int level = 1; level < generation_; ++level) {
    const std::size_t width = ipow(params_.s, level - 1);
    const std::size_t begin = level_offset(params_.s, level) + static_cast<std::size_t>(j) * width;
    decisions.insert(decisions.end(), decisions_.begin() + begin, decisions_.begin() + begin + width);
  }
  return {params_, generation_ - 1, std::move(decisions)};
}

CylinderPath CylinderPath::coarsen(int k) const {
  if (k < 0 || k > generation_) throw UsageError("coarsening generation outside [0, n]");
  const std::size_t len = decision_count(params_, k);
  return {params_, k, std::vector<std::uint8_t>(decisions_.begin(), decisions_.begin() + len)};
}

mpz_class exact_path_count(const LatticeParams& params, int generation) {
  if (generation < 0) throw UsageError("generation must be nonnegative");
  mpz_class count = 1;
  for (int k = 0; k < generation; ++k) {
    mpz_class next;
    mpz_pow_ui(next.get_mpz_t(), count.get_mpz_t(), static_cast<unsigned long>(params.s));
    count = next * params.b;
  }
  return count;
}

BigCount path_count(const LatticeParams& params, int generation, int exact_generations) {
  if (generation < 0) throw UsageError("generation must be nonnegative");
  if (generation <= exact_generations) return BigCount::exact(exact_path_count(params, generation));
  // log c_n = log b * (s^n - 1)/(s - 1), evaluated without forming s^n exactly.
  const double s = params.s;
  const double exponent = (std::pow(s, generation) - 1.0) / (s - 1.0);
  return BigCount::log_only(exponent * std::log(static_cast<double>(params.b)));
}

std::uint64_t small_path_count(const LatticeParams& params, int generation) {
  const mpz_class count = exact_path_count(params, generation);
  if (mpz_sizeinbase(count.get_mpz_t(), 2) > 63) {
    throw UsageError("|Gamma_" + std::to_string(generation) + "| exceeds 2^63; enumeration infeasible");
  }
  static_assert(sizeof(unsigned long) == 8, "mpz get_ui must hold 64 bits");
  return static_cast<std::uint64_t>(count.get_ui());
}

CylinderPath sample_uniform_path(const LatticeParams& params, int generation, rng::Stream& rng) {
  std::vector<std::uint8_t> decisions(decision_count(params, generation));
  for (auto& d : decisions) d = static_cast<std::uint8_t>(1 + rng.below(params.b));
  return {params, generation, std::move(decisions)};
}

std::uint64_t shared_edge_count(const CylinderPath& p, const CylinderPath& q) {
  require_same_space(p, q);
  const int n = p.generation();
  if (n == 0) return 1;
  const int s = p.params().s;
  auto dp = p.decisions();
  auto dq = q.decisions();
  // alive[j]: the chains of choices down to node (level, j) agree.
  std::vector<char> alive{static_cast<char>(dp[0] == dq[0])};
  for (int level = 1; level < n; ++level) {
    const std::size_t offset = level_offset(s, level);
    std::vector<char> next(alive.size() * s, 0);
    for (std::size_t j = 0; j < next.size(); ++j) {
      next[j] = alive[j / s] && dp[offset + j] == dq[offset + j];
    }
    alive = std::move(next);
  }
  std::uint64_t agreeing = 0;
  for (char a : alive) agreeing += a ? 1 : 0;
  return agreeing * static_cast<std::uint64_t>(s);
}

double kernel_estimate(const CylinderPath& p, const CylinderPath& q) {
  require_critical(p.params(), "kernel_estimate");
  const int n = p.generation();
  if (n < 1) throw UsageError("kernel_estimate requires generation >= 1");
  const double kappa_sq = 2.0 / (p.params().b - 1);
  return kappa_sq * static_cast<double>(shared_edge_count(p, q)) / (static_cast<double>(n) * n);
}

double intersection_fixed_point(int b, int s) {
  if (b >= s) {
    throw DomainError("no nontrivial intersection fixed point unless b < s (got b=" + std::to_string(b) +
                      ", s=" + std::to_string(s) + "); b = s is the critical case");
  }
  if (b < 2) throw DomainError("b must be >= 2");
  const auto excess = [b, s](double x) { return (1.0 - std::pow(1.0 - x, s)) / b - x; };
  // excess > 0 just above the repelling fixed point at 0, excess(1) = 1/b - 1 < 0.
  double lo = 0.5;
  while (excess(lo) <= 0.0) lo *= 0.5;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double intersection_hausdorff_dim(int b, int s) {
  if (b >= s) throw DomainError("intersection dimension formula needs b < s");
  return (std::log(static_cast<double>(s)) - std::log(static_cast<double>(b))) /
         std::log(static_cast<double>(s));
}

double ultrametric_proxy_distance(const CylinderPath& p, const CylinderPath& q) {
  require_same_space(p, q);
  const int s = p.params().s;
  auto dp = p.decisions();
  auto dq = q.decisions();
  int depth = 0;
  while (depth < p.generation()) {
    const std::size_t begin = level_offset(s, depth);
    const std::size_t end = level_offset(s, depth + 1);
    bool same = true;
    for (std::size_t i = begin; i < end && same; ++i) same = dp[i] == dq[i];
    if (!same) break;
    ++depth;
  }
  return std::pow(static_cast<double>(s), -depth);
}

std::uint64_t cylinder_index(const CylinderPath& p) {
  const int n = p.generation();
  if (n == 0) return 0;
  const std::uint64_t sub_count = small_path_count(p.params(), n - 1);
  small_path_count(p.params(), n);  // range check
  std::uint64_t index = static_cast<std::uint64_t>(p.top_branch() - 1);
  for (int j = 0; j < p.params().s; ++j) index = index * sub_count + cylinder_index(p.subpath(j));
  return index;
}

CylinderPath path_from_index(const LatticeParams& params, int generation, std::uint64_t index) {
  if (generation == 0) {
    if (index != 0) throw UsageError("cylinder index out of range");
    return CylinderPath::trivial(params);
  }
  const std::uint64_t total = small_path_count(params, generation);
  if (index >= total) throw UsageError("cylinder index out of range");
  const std::uint64_t sub_count = small_path_count(params, generation - 1);
  std::vector<CylinderPath> subs(params.s, CylinderPath::trivial(params));
  for (int j = params.s - 1; j >= 0; --j) {
    subs[j] = path_from_index(params, generation - 1, index % sub_count);
    index /= sub_count;
  }
  return CylinderPath::compose(static_cast<int>(index) + 1, subs);
}

std::vector<CylinderPath> enumerate_paths(const LatticeParams& params, int generation) {
  const std::uint64_t total = small_path_count(params, generation);
  std::vector<CylinderPath> paths;
  paths.reserve(total);
  for (std::uint64_t i = 0; i < total; ++i) paths.push_back(path_from_index(params, generation, i));
  return paths;
}

std::vector<std::uint32_t> path_edges(const CylinderPath& p) {
  const int n = p.generation();
  const int b = p.params().b;
  const int s = p.params().s;
  if (edge_count(p.params(), n) > (std::uint64_t{1} << 32)) throw UsageError("edge index exceeds 32 bits");
  auto d = p.decisions();
  const std::uint64_t slots = slot_count(p.params(), n);
  std::vector<std::uint32_t> edges(slots);
  for (std::uint64_t t = 0; t < slots; ++t) {
    // Digits of t in base s, most significant first, select the segment at
    // each level; the node position at level L is the first L digits.
    std::uint64_t edge = 0;
    std::uint64_t position = 0;
    std::uint64_t place = slots / s;
    for (int level = 0; level < n; ++level) {
      const std::uint64_t digit = (t / place) % s;
      const int branch = d[level_offset(s, level) + position];
      edge = edge * (static_cast<std::uint64_t>(b) * s) + static_cast<std::uint64_t>(branch - 1) * s + digit;
      position = position * s + digit;
      if (place > 1) place /= s;
    }
    edges[t] = static_cast<std::uint32_t>(edge);
  }
  return edges;
}

}  // namespace dhl
