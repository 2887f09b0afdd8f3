#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dhl/errors.hpp"
#include "dhl/lattice.hpp"
#include "dhl/stats.hpp"

using namespace dhl;

namespace {

// Shared edges computed from explicit edge lists.
std::uint64_t shared_by_edges(const CylinderPath& p, const CylinderPath& q) {
  const auto a = path_edges(p);
  const auto b = path_edges(q);
  std::set<std::uint32_t> sa(a.begin(), a.end());
  return std::count_if(b.begin(), b.end(), [&](std::uint32_t e) { return sa.count(e) > 0; });
}

}  // namespace

TEST(Lattice, PathCounts) {
  const LatticeParams p(2, 2);
  EXPECT_EQ(small_path_count(p, 0), 1u);
  EXPECT_EQ(small_path_count(p, 1), 2u);
  EXPECT_EQ(small_path_count(p, 2), 8u);
  EXPECT_EQ(small_path_count(p, 3), 128u);
  EXPECT_EQ(small_path_count(LatticeParams(3, 3), 2), 81u);
  EXPECT_EQ(exact_path_count(p, 6), mpz_class(1) << 63);
  EXPECT_THROW(small_path_count(p, 7), UsageError);
  const BigCount far = path_count(p, 20);
  EXPECT_FALSE(far.has_exact());
  EXPECT_NEAR(far.log(), ((1 << 20) - 1) * std::log(2.0), 1e-6);
}

TEST(Lattice, Sizes) {
  const LatticeParams p(2, 3);
  EXPECT_EQ(decision_count(p, 3), 13u);
  EXPECT_EQ(slot_count(p, 3), 27u);
  EXPECT_EQ(edge_count(p, 3), 216u);
}

TEST(Lattice, IndexRoundTrip) {
  for (const auto params : {LatticeParams(2, 2), LatticeParams(3, 3), LatticeParams(2, 3)}) {
    for (int n = 0; n <= 2; ++n) {
      const auto paths = enumerate_paths(params, n);
      ASSERT_EQ(paths.size(), small_path_count(params, n));
      for (std::uint64_t i = 0; i < paths.size(); ++i) {
        EXPECT_EQ(cylinder_index(paths[i]), i);
        EXPECT_EQ(path_from_index(params, n, i), paths[i]);
      }
    }
  }
}

TEST(Lattice, ComposeAndSubpath) {
  const LatticeParams params(2, 2);
  const auto sub = enumerate_paths(params, 1);
  const CylinderPath parts[] = {sub[1], sub[0]};
  const auto p = CylinderPath::compose(2, parts);
  EXPECT_EQ(p.generation(), 2);
  EXPECT_EQ(p.top_branch(), 2);
  EXPECT_EQ(p.subpath(0), sub[1]);
  EXPECT_EQ(p.subpath(1), sub[0]);
  EXPECT_EQ(p.coarsen(1).generation(), 1);
  EXPECT_EQ(p.coarsen(1).top_branch(), 2);
}

TEST(Lattice, SharedEdgesMatchEdgeLists) {
  for (const auto params : {LatticeParams(2, 2), LatticeParams(2, 3)}) {
    const int n = params.s == 2 ? 3 : 2;
    const auto paths = enumerate_paths(params, n);
    for (std::size_t i = 0; i < paths.size(); i += 3) {
      for (std::size_t j = 0; j < paths.size(); j += 5) {
        EXPECT_EQ(shared_edge_count(paths[i], paths[j]), shared_by_edges(paths[i], paths[j]));
      }
      EXPECT_EQ(shared_edge_count(paths[i], paths[i]), slot_count(params, n));
    }
  }
}

TEST(Lattice, EdgesInRangeAndDistinct) {
  const LatticeParams params(3, 3);
  for (const auto& p : enumerate_paths(params, 2)) {
    auto e = path_edges(p);
    ASSERT_EQ(e.size(), 9u);
    for (auto x : e) EXPECT_LT(x, edge_count(params, 2));
    std::sort(e.begin(), e.end());
    EXPECT_EQ(std::unique(e.begin(), e.end()), e.end());
  }
}

TEST(Lattice, Ultrametric) {
  const auto paths = enumerate_paths(LatticeParams(2, 2), 2);
  for (const auto& p : paths) {
    EXPECT_EQ(ultrametric_proxy_distance(p, p), 0.25);
    for (const auto& q : paths) {
      for (const auto& r : paths) {
        EXPECT_LE(ultrametric_proxy_distance(p, r),
                  std::max(ultrametric_proxy_distance(p, q), ultrametric_proxy_distance(q, r)));
      }
    }
  }
}

TEST(Lattice, KernelEstimate) {
  const auto paths = enumerate_paths(LatticeParams(2, 2), 2);
  EXPECT_DOUBLE_EQ(kernel_estimate(paths[0], paths[0]), 2.0 * 4 / 4);
}

TEST(Lattice, FixedPoint) {
  EXPECT_NEAR(intersection_fixed_point(2, 3), (3.0 - std::sqrt(5.0)) / 2.0, 1e-12);
  EXPECT_NEAR(intersection_hausdorff_dim(2, 3), 1.0 - std::log(2.0) / std::log(3.0), 1e-12);
  const double x = intersection_fixed_point(2, 5);
  EXPECT_NEAR((1 - std::pow(1 - x, 5)) / 2, x, 1e-14);
  EXPECT_THROW(intersection_fixed_point(2, 2), DomainError);
  EXPECT_THROW(intersection_fixed_point(3, 2), DomainError);
}

TEST(Lattice, UniformPathsAreUniform) {
  const LatticeParams params(2, 2);
  auto rng = rng::Stream::derive(7, rng::Domain::kTest, 1);
  std::vector<std::uint64_t> counts(8, 0);
  for (int i = 0; i < 80000; ++i) ++counts[cylinder_index(sample_uniform_path(params, 2, rng))];
  // chi-square with 7 degrees of freedom; 0.999 quantile is 24.3
  EXPECT_LT(stats::chi_square_uniform(counts), 24.3);
}

TEST(Lattice, CriticalRequirement) {
  EXPECT_NO_THROW(require_critical(LatticeParams(2, 2), "t"));
  EXPECT_THROW(require_critical(LatticeParams(2, 3), "t"), UsageError);
}
