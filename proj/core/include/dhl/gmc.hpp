#pragma once

// Finite-dimensional Gaussian multiplicative chaos on generation-n cylinders.
//
// The field lives on the (bs)^n generation-n edges: g_e iid N(0,1), and a path
// sees W(p) = sqrt(lambda) sum_{e in p} g_e. Hence Cov(W(p), W(q)) =
// lambda N_n(p,q) = K(p,q), and F(p,e) = sqrt(lambda) 1{p crosses e} is an exact
// Gram factor K = F F^T with no matrix decomposition.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dhl/lattice.hpp"
#include "dhl/random.hpp"
#include "dhl/rfunction.hpp"

namespace dhl {

enum class KernelMode { kExactDiscrete, kAsymptotic };

const char* to_string(KernelMode mode);
KernelMode parse_kernel_mode(const std::string& name);

struct KernelMatrix {
  std::vector<CylinderPath> support;
  std::vector<std::uint64_t> shared;  // N_n(p_i, p_j), row-major
  double lambda = 0.0;                // per-edge weight
  KernelMode mode = KernelMode::kExactDiscrete;
  double r = 0.0;
  double a = 0.0;
  int generation = 0;

  std::size_t size() const { return support.size(); }
  double operator()(std::size_t i, std::size_t j) const { return lambda * static_cast<double>(shared[i * size() + j]); }
  std::vector<double> dense() const;  // row-major
};

struct GramFactor {
  LatticeParams params;
  int generation = 0;
  std::uint64_t edge_count = 0;
  double sqrt_lambda = 0.0;
  std::vector<std::vector<std::uint32_t>> edges;  // edges crossed by support path i

  std::size_t rows() const { return edges.size(); }
  std::vector<double> dense() const;  // rows x edge_count, row-major
  // (F phi)(p_i) = sqrt(lambda) sum_{e in p_i} phi_e
  double apply_row(std::size_t i, std::span<const double> phi) const;
};

struct BuiltKernel {
  KernelMatrix kernel;
  GramFactor gram;
};

// Exact-discrete: lambda = log[(1 + R(r+a-n)) / (1 + R(r-n))].
// Asymptotic:     lambda = a kappa^2 / n^2.
BuiltKernel build_kernel(const VarianceProfile& profile, double r, double a, int generation,
                         std::vector<CylinderPath> support, KernelMode mode = KernelMode::kExactDiscrete);
// Same with an explicit per-edge weight.
BuiltKernel build_kernel_with_lambda(double lambda, int generation, std::vector<CylinderPath> support);

// max |(F F^T)_{ij} - K_{ij}|
double gram_max_error(const BuiltKernel& built);
// Smallest eigenvalue of K (self-adjoint eigensolver).
double kernel_min_eigenvalue(const KernelMatrix& kernel);
// max |L D L^T - K| from a pivoted LDL^T of K; a decomposition-based cross-check
// of the incidence factor for small supports.
double ldlt_reconstruction_error(const KernelMatrix& kernel);

struct GmcRealization {
  std::vector<double> reference;  // mu_p
  std::vector<double> field;      // g_e
  std::vector<double> weights;    // M(p)

  double total() const;
};

// M(p) = exp((F g)(p) - K(p,p)/2) mu_p for a given field.
GmcRealization realize_gmc(std::span<const double> reference, const GramFactor& gram, std::vector<double> field);
GmcRealization sample_gmc(std::span<const double> reference, const GramFactor& gram, rng::Stream& rng);
// Total mass only, without materializing the realization.
double sample_gmc_total(std::span<const double> reference, const GramFactor& gram, rng::Stream& rng,
                        std::vector<double>& scratch);

// Realization built from g + phi.
GmcRealization shift_field(const GmcRealization& realization, const GramFactor& gram, std::span<const double> phi);
// exp(<g, phi> - |phi|^2 / 2)
double cameron_martin_density(std::span<const double> phi, std::span<const double> g);
// prod_e phi_1(g_e - phi_e) / phi_1(g_e) from the standard normal density itself.
double shifted_likelihood_ratio(std::span<const double> phi, std::span<const double> g);

// sum over A^m of exp(sum_{i<j} K(p_i, p_j)) prod mu(p_i), by brute force.
long double kahane_moment(const KernelMatrix& kernel, std::span<const double> reference,
                          std::span<const std::size_t> subset, int m);

struct ThetaSummary {
  std::vector<double> t;  // t(p) = sum_q K(p,q) M(q)
  double total = 0.0;     // sum_{p,q} K(p,q) M(p) M(q)
};
ThetaSummary theta_summary(const KernelMatrix& kernel, std::span<const double> masses);

}  // namespace dhl
