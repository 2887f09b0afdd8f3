#include "dhl/gmc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dhl/correlation.hpp"
#include "dhl/errors.hpp"

namespace dhl {

const char* to_string(KernelMode mode) {
  return mode == KernelMode::kExactDiscrete ? "exact-discrete" : "asymptotic";
}

KernelMode parse_kernel_mode(const std::string& name) {
  if (name == "exact-discrete" || name == "exact") return KernelMode::kExactDiscrete;
  if (name == "asymptotic") return KernelMode::kAsymptotic;
  throw UsageError("unknown kernel mode '" + name + "' (expected exact-discrete or asymptotic)");
}

std::vector<double> KernelMatrix::dense() const {
  std::vector<double> out(size() * size());
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) out[i * size() + j] = (*this)(i, j);
  }
  return out;
}

std::vector<double> GramFactor::dense() const {
  std::vector<double> out(rows() * edge_count, 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    for (auto e : edges[i]) out[i * edge_count + e] = sqrt_lambda;
  }
  return out;
}

double GramFactor::apply_row(std::size_t i, std::span<const double> phi) const {
  double sum = 0.0;
  for (auto e : edges[i]) sum += phi[e];
  return sqrt_lambda * sum;
}

BuiltKernel build_kernel_with_lambda(double lambda, int generation, std::vector<CylinderPath> support) {
  if (!(lambda >= 0.0)) throw DomainError("per-edge weight must be >= 0");
  if (support.empty()) throw UsageError("kernel support is empty");
  const LatticeParams params = support.front().params();
  require_critical(params, "build_kernel");
  for (const auto& p : support) {
    if (!(p.params() == params) || p.generation() != generation) {
      throw UsageError("support paths must share params and generation");
    }
  }
  BuiltKernel built;
  built.gram.params = params;
  built.gram.generation = generation;
  built.gram.edge_count = edge_count(params, generation);
  built.gram.sqrt_lambda = std::sqrt(lambda);
  for (const auto& p : support) built.gram.edges.push_back(path_edges(p));

  const std::size_t size = support.size();
  built.kernel.shared.resize(size * size);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = i; j < size; ++j) {
      const auto n = shared_edge_count(support[i], support[j]);
      built.kernel.shared[i * size + j] = n;
      built.kernel.shared[j * size + i] = n;
    }
  }
  built.kernel.lambda = lambda;
  built.kernel.generation = generation;
  built.kernel.support = std::move(support);
  return built;
}

BuiltKernel build_kernel(const VarianceProfile& profile, double r, double a, int generation,
                         std::vector<CylinderPath> support, KernelMode mode) {
  if (a < 0.0) throw DomainError("parameter shift a must be >= 0");
  const double lambda = mode == KernelMode::kExactDiscrete
                            ? static_cast<double>(rn_edge_weight(profile, r, a, generation))
                            : static_cast<double>(asymptotic_edge_weight(profile, a, generation));
  BuiltKernel built = build_kernel_with_lambda(lambda, generation, std::move(support));
  if (built.gram.params.b != profile.b) throw UsageError("support and profile disagree on b");
  built.kernel.mode = mode;
  built.kernel.r = r;
  built.kernel.a = a;
  return built;
}

double gram_max_error(const BuiltKernel& built) {
  const auto& gram = built.gram;
  double worst = 0.0;
  for (std::size_t i = 0; i < gram.rows(); ++i) {
    for (std::size_t j = 0; j < gram.rows(); ++j) {
      // Inner product of two incidence rows, each sorted for the merge.
      auto a = gram.edges[i];
      auto b = gram.edges[j];
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      std::vector<std::uint32_t> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      const double ffT = gram.sqrt_lambda * gram.sqrt_lambda * static_cast<double>(common.size());
      worst = std::max(worst, std::fabs(ffT - built.kernel(i, j)));
    }
  }
  return worst;
}

namespace {

Eigen::MatrixXd to_eigen(const KernelMatrix& kernel) {
  const auto n = static_cast<Eigen::Index>(kernel.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = kernel(i, j);
  }
  return k;
}

}  // namespace

double kernel_min_eigenvalue(const KernelMatrix& kernel) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(kernel), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("eigensolver failed", 0.0L, 0.0L);
  return solver.eigenvalues().minCoeff();
}

double ldlt_reconstruction_error(const KernelMatrix& kernel) {
  const Eigen::MatrixXd k = to_eigen(kernel);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
  // Rank-deficient kernels may report a numerical issue; the rebuilt matrix
  // is still the thing to audit.
  const Eigen::MatrixXd rebuilt = ldlt.reconstructedMatrix();
  return (rebuilt - k).cwiseAbs().maxCoeff();
}

double GmcRealization::total() const {
  long double sum = 0.0L;
  for (double w : weights) sum += w;
  return static_cast<double>(sum);
}

GmcRealization realize_gmc(std::span<const double> reference, const GramFactor& gram, std::vector<double> field) {
  if (reference.size() != gram.rows()) throw UsageError("reference masses do not match the kernel support");
  if (field.size() != gram.edge_count) throw UsageError("field length must equal the edge count");
  GmcRealization out;
  out.reference.assign(reference.begin(), reference.end());
  out.weights.resize(reference.size());
  const double lambda = gram.sqrt_lambda * gram.sqrt_lambda;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double half_variance = 0.5 * lambda * static_cast<double>(gram.edges[i].size());
    out.weights[i] = std::exp(gram.apply_row(i, field) - half_variance) * reference[i];
  }
  out.field = std::move(field);
  return out;
}

GmcRealization sample_gmc(std::span<const double> reference, const GramFactor& gram, rng::Stream& rng) {
  std::vector<double> field(gram.edge_count);
  for (auto& g : field) g = rng.normal();
  return realize_gmc(reference, gram, std::move(field));
}

double sample_gmc_total(std::span<const double> reference, const GramFactor& gram, rng::Stream& rng,
                        std::vector<double>& scratch) {
  scratch.resize(gram.edge_count);
  for (auto& g : scratch) g = rng.normal();
  const double lambda = gram.sqrt_lambda * gram.sqrt_lambda;
  long double total = 0.0L;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i] == 0.0) continue;
    const double half_variance = 0.5 * lambda * static_cast<double>(gram.edges[i].size());
    total += std::exp(gram.apply_row(i, scratch) - half_variance) * reference[i];
  }
  return static_cast<double>(total);
}

GmcRealization shift_field(const GmcRealization& realization, const GramFactor& gram, std::span<const double> phi) {
  if (phi.size() != gram.edge_count) throw UsageError("shift length must equal the edge count");
  std::vector<double> field = realization.field;
  for (std::size_t e = 0; e < field.size(); ++e) field[e] += phi[e];
  return realize_gmc(realization.reference, gram, std::move(field));
}

double cameron_martin_density(std::span<const double> phi, std::span<const double> g) {
  if (phi.size() != g.size()) throw UsageError("shift and field lengths differ");
  long double inner = 0.0L;
  long double norm_sq = 0.0L;
  for (std::size_t e = 0; e < g.size(); ++e) {
    inner += static_cast<long double>(g[e]) * phi[e];
    norm_sq += static_cast<long double>(phi[e]) * phi[e];
  }
  return static_cast<double>(std::exp(inner - 0.5L * norm_sq));
}

double shifted_likelihood_ratio(std::span<const double> phi, std::span<const double> g) {
  if (phi.size() != g.size()) throw UsageError("shift and field lengths differ");
  const long double inv_sqrt_2pi = 0.398942280401432677939946059934L;
  long double ratio = 1.0L;
  for (std::size_t e = 0; e < g.size(); ++e) {
    const long double x = g[e];
    const long double shifted = x - phi[e];
    ratio *= (inv_sqrt_2pi * std::exp(-0.5L * shifted * shifted)) / (inv_sqrt_2pi * std::exp(-0.5L * x * x));
  }
  return static_cast<double>(ratio);
}

long double kahane_moment(const KernelMatrix& kernel, std::span<const double> reference,
                          std::span<const std::size_t> subset, int m) {
  if (m < 1) throw UsageError("moment order must be >= 1");
  const int max_order = kernel.generation <= 2 ? 4 : kernel.generation == 3 ? 3 : 0;
  if (m > max_order) {
    throw UsageError("kahane_moment budget: m <= 4 at n <= 2, m <= 3 at n = 3 (got m=" + std::to_string(m) +
                     ", n=" + std::to_string(kernel.generation) + ")");
  }
  if (reference.size() != kernel.size()) throw UsageError("reference masses do not match the kernel support");
  for (auto i : subset) {
    if (i >= kernel.size()) throw UsageError("subset index outside the support");
  }
  const std::size_t a = subset.size();
  if (a == 0) return 0.0L;
  std::vector<std::size_t> digits(m, 0);
  long double sum = 0.0L;
  while (true) {
    long double interaction = 0.0L;
    long double mass = 1.0L;
    for (int i = 0; i < m; ++i) {
      mass *= reference[subset[digits[i]]];
      for (int j = i + 1; j < m; ++j) interaction += kernel(subset[digits[i]], subset[digits[j]]);
    }
    sum += std::exp(interaction) * mass;
    int pos = m - 1;
    while (pos >= 0 && ++digits[pos] == a) digits[pos--] = 0;
    if (pos < 0) break;
  }
  return sum;
}

ThetaSummary theta_summary(const KernelMatrix& kernel, std::span<const double> masses) {
  if (masses.size() != kernel.size()) throw UsageError("masses do not match the kernel support");
  ThetaSummary out;
  out.t.assign(kernel.size(), 0.0);
  long double total = 0.0L;
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    long double t = 0.0L;
    for (std::size_t j = 0; j < kernel.size(); ++j) t += kernel(i, j) * masses[j];
    out.t[i] = static_cast<double>(t);
    total += t * masses[i];
  }
  out.total = static_cast<double>(total);
  return out;
}

}  // namespace dhl
