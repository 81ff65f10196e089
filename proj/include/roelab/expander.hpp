#pragma once

#include <cstdint>
#include <vector>

#include "roelab/operators.hpp"

namespace roelab {

// Finitely supported symmetric probability measure on generators + identity,
// stored aligned with the graph's generator list.
struct ProbabilityMeasure {
  double identity_weight = 0.0;
  std::vector<double> weights;

  // symmetry mu(g) = mu(g^-1), nonnegativity, total mass 1, support generates
  void validate(const CayleyGraph& graph) const;

  static ProbabilityMeasure lazy_uniform(const CayleyGraph& graph, double laziness = 0.5);
  static ProbabilityMeasure uniform(const CayleyGraph& graph) { return lazy_uniform(graph, 0.0); }
};

// Graph-independent recipe for a measure, instantiable on every level of a
// chain. generator_weights are relative masses (empty = uniform); they are
// scaled to total 1 - laziness.
struct MeasureSpec {
  double laziness = 0.5;
  std::vector<double> generator_weights;

  ProbabilityMeasure instantiate(const CayleyGraph& graph) const;
};

// Right-convolution Markov operator T_{x,y} = mu(x^-1 y): rows sum to 1,
// propagation <= 1, and T commutes with deck transformations of any cover
// (those act by left multiplication). Blocks are weight * identity.
BlockOperator markov_operator(const GraphPtr& graph, const ProbabilityMeasure& mu,
                              int block_dim = 1);

// max |eigenvalue| of the Markov operator restricted to the mean-zero
// subspace: the exact l^2 decay rate of ||mu^n - q||. Dense solve for small
// graphs, deflated Lanczos above that.
double spectral_gap(const GraphPtr& graph, const ProbabilityMeasure& mu,
                    const NormBudget& budget = {});

// q = (1/N) * (all-ones over points) tensor (rank-`internal_rank` diagonal
// projection); exactly idempotent and self-adjoint, trace = internal_rank.
BlockOperator averaging_projection(const GraphPtr& graph, int internal_rank = 1,
                                   int block_dim = 1);

// Block-diagonal sum of the level projections q_i over a box space.
BlockOperator ghost_projection(const BoxPtr& box, int internal_rank = 1, int block_dim = 1);

struct KazhdanRow {
  int level = 1;
  std::uint64_t modulus = 0;
  std::size_t order = 0;
  int n = 1;
  double p = 2.0;
  double lower = 0.0;        // measured interval for ||mu_i^n - q_i||_p
  double upper = 0.0;
  double interp_bound = 0.0; // 2^theta * rho^(n(1-theta)), theta = |2/p - 1|
  double rho = 0.0;
};

// Per-level convergence study of the approximants mu_i^n -> q_i. The table
// form shares one spectral gap and one incremental dense power per level
// across the whole (n, p) grid.
std::vector<KazhdanRow> kazhdan_table(const BoxPtr& box, const MeasureSpec& spec,
                                      const std::vector<int>& n_list,
                                      const std::vector<double>& p_list,
                                      const NormBudget& budget = {});
std::vector<KazhdanRow> kazhdan_approximant(const BoxPtr& box, const MeasureSpec& spec, int n,
                                            double p, const NormBudget& budget = {});

// Plain undirected graph view for isoperimetry. Cayley graphs produce simple
// regular graphs: generators are inverse-closed, identity-free, and
// duplicate-free, so no loops or parallel edges arise.
struct SimpleGraph {
  std::vector<std::vector<std::uint32_t>> adj;

  std::size_t order() const { return adj.size(); }
  bool connected() const;
  bool regular() const;
  std::size_t degree() const;  // of vertex 0

  static SimpleGraph from_cayley(const CayleyGraph& graph);
};

// h = min over nonempty proper A of |boundary edges| / min(|A|, |V \ A|),
// by exhaustive subset enumeration. Disconnected graphs give 0.
Rational cheeger_exact(const SimpleGraph& graph, std::size_t threshold = 20);

struct CheegerBounds {
  double lower = 0.0;
  double upper = 0.0;
  double lambda = 0.0;  // normalized-Laplacian second eigenvalue of the SRW
};

// d*lambda/2 <= h <= d*sqrt(2*lambda) for connected d-regular graphs. The
// walk is the non-lazy simple random walk: laziness shifts lambda but not h,
// so the sandwich is stated for the walk that makes it sharp.
CheegerBounds cheeger_bounds(const SimpleGraph& graph, const NormBudget& budget = {});

struct LevelExpansion {
  int level = 1;
  std::uint64_t modulus = 0;
  std::size_t order = 0;
  bool exact = false;  // true when h comes from enumeration
  Rational h;          // meaningful only when exact
  CheegerBounds bounds;

  double certified_lower() const { return exact ? h.value() : bounds.lower; }
};

struct ExpanderReport {
  double threshold = 0.0;
  bool expander = false;
  std::vector<LevelExpansion> levels;
};

// true iff every level's certified Cheeger lower value reaches tau
ExpanderReport is_expander_family(const BoxPtr& box, double tau,
                                  std::size_t exact_threshold = 20);

}  // namespace roelab
