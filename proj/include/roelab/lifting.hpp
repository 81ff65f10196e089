#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "roelab/coarse_space.hpp"
#include "roelab/expander.hpp"
#include "roelab/groups.hpp"
#include "roelab/operators.hpp"

namespace roelab {

// Operator on the source of a cover together with the cover it is
// equivariant for. Deck transformations act by left multiplication, so
// equivariance means T_{sigma x, sigma y} = T_{x, y} for every deck element
// sigma and every pair (x, y).
struct EquivariantOperator {
  BlockOperator op;
  CoverPtr cover;
};

// Pulls a finite-propagation operator on the cover target back to the source:
// entries are copied block-for-block across the fibers, placing T_{u,v} at
// every source pair (x, z) with pi(x) = u, pi(z) = v, d(x, z) <= S. This is
// well defined (each (x, v) pair meets exactly one such z) and the result is
// deck-equivariant, because balls of radius S lift isometrically whenever
// 2S < cover.radius.
//
// Preconditions: T lives on the cover target, propagation(T) <= S, and
// 2S < cover.radius. Violations throw ValidationError.
EquivariantOperator lift_operator(const BlockOperator& T, const CoverPtr& cover, int S);

// Checks every stored entry against all of its deck translates; throws
// InvariantViolation naming the deck element and the offending pair when a
// translate is missing or differs. Entries must match exactly: lifting copies
// bits, so any discrepancy is a real defect, not roundoff.
void verify_equivariance(const EquivariantOperator& T);

// Lifting is multiplicative as long as the product still fits inside the
// isometry radius: returns true iff lift(A*B) and lift(A)*lift(B) agree
// entrywise within tol. Preconditions (ValidationError on violation):
// propagation(A) + propagation(B) <= S and 2S < cover.radius.
bool lift_multiplicativity_check(const BlockOperator& A, const BlockOperator& B,
                                 const CoverPtr& cover, int S, double tol = 1e-12);

// Trace over one fundamental domain: the sum of the diagonal blocks at the
// transversal representatives, in target order. For lifted operators this
// reproduces trace() of the downstairs operator bit for bit, because the
// diagonal blocks are copies summed in the same order.
cplx transversal_trace(const EquivariantOperator& T);

// A deck-equivariant operator, re-encoded as finitely many operators on the
// cover target: component g holds the blocks T_{t_u, sigma_g t_v} between
// transversal representatives, indexed by the deck slot of sigma_g. The
// encoding is lossless (see reconstruct) and turns operator composition into
// a twisted convolution over the deck group (see untwisted_product).
struct UntwistedFamily {
  std::vector<BlockOperator> components;  // one per deck slot, on the target space
  CoverPtr cover;

  // The family assembled as a single deck-indexed block matrix: block (a, b)
  // is component slot(sigma_a^-1 sigma_b), acting on flat index
  // a * |target| + u. This is the original source operator up to the
  // relabeling x -> (deck slot of x, pi(x)), so all p-norms coincide.
  BlockOperator realized() const;
};

// Decomposes an equivariant operator into its deck components. Rejects
// non-equivariant input via verify_equivariance.
UntwistedFamily untwist(const EquivariantOperator& T);

// Exact inverse of untwist: places component g at (sigma_a t_u, sigma_a
// sigma_g t_v) for every deck slot a. Round-trips bit for bit.
EquivariantOperator reconstruct(const UntwistedFamily& family);

// Deck-twisted convolution: the components of the composed operator are
// (AB)^(g) = sum_h A^(h) * B^(h^-1 g). Matches untwist(lift(A)*lift(B))
// whenever both factors are equivariant over the same cover.
UntwistedFamily untwisted_product(const UntwistedFamily& a, const UntwistedFamily& b);

enum class OnlMode {
  exhaustive,  // every center, every admissible ball, exact restricted norms
  greedy,      // power iteration followed by truncation to the best ball
};

struct OnlParams {
  int propagation = 1;          // admissible operators satisfy prop(T) <= this
  double support_diameter = 2;  // admissible supports have diameter <= this
  double fraction = 0.5;        // success threshold against the global norm
  double p = 2.0;
  OnlMode mode = OnlMode::exhaustive;
  NormBudget budget;  // used for the global norm estimate away from p = 2
};

// A norm witness supported in one metric ball.
struct LocalizedVector {
  Eigen::VectorXcd xi;               // full-dimension coefficient vector
  std::vector<std::size_t> support;  // points of the supporting ball
  std::size_t center = 0;
  std::size_t diameter = 0;          // metric diameter of the supporting ball
  double achieved = 0.0;             // ||T xi||_p / ||xi||_p
  double ratio = 0.0;                // achieved / (global lower bound)
};

struct OnlResult {
  bool found = false;       // best ratio reached the requested fraction
  LocalizedVector best;     // highest ratio; ties -> least center, then least diameter
  double best_ratio = 0.0;
  // smallest ball diameter over all windows whose ratio met the fraction;
  // meaningful only when found
  std::size_t min_achieving_diameter = 0;
  double norm_lower = 0.0;  // global estimate the ratios are normalized by
  double norm_upper = 0.0;
};

// Searches for norm witnesses of small support: does some vector supported in
// a ball of diameter <= support_diameter achieve at least `fraction` of the
// operator norm? Exhaustive mode scans every center and every ball radius
// until the ball diameter overshoots, computing the exact restricted norm at
// p = 2 (top singular pair of the column block) and a certified achieved
// ratio otherwise. Deterministic, including tie-breaks.
OnlResult onl_search(const BlockOperator& T, const OnlParams& params = {});

// Lower bounds for the p-norms of the n-step walk minus-nothing on the
// infinite parent of the box family: the finite-window local ratio of the
// parent walk at truncation `ball_radius`. These bound every lift from below
// (the parent windows embed isometrically in deep enough levels), while the
// trivial stochastic bound 1 is the only upper bound available without
// further structure, so the interval is reported wide.
std::vector<NormEstimate> lifted_norm_sequence(const BoxPtr& box, const MeasureSpec& spec,
                                               const std::vector<int>& n_list, double p,
                                               std::size_t ball_radius);

// Everything the trace-versus-lift comparison needs, in one bundle: per-level
// traces of the averaging projections, ghost column norms, the measured decay
// of the walk approximants toward those projections, and the parent-walk
// lower bounds that any lift of the approximants must respect.
struct ObstructionData {
  std::string family;
  std::vector<std::uint64_t> moduli;
  std::vector<std::size_t> orders;
  std::vector<int> n_grid;
  double p = 2.0;
  std::size_t ball_radius = 0;
  double laziness = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> trace_vector;  // trace of q_i per level (internal rank 1)
  std::vector<double> ghost_values;  // ghost column norm at R = 0 per level
  // ||mu_i^n - q_i||_p intervals, indexed [level][n]
  std::vector<std::vector<double>> approx_error_lower;
  std::vector<std::vector<double>> approx_error_upper;
  std::vector<double> lift_norm_lower;  // parent-walk lower bound per n
};

ObstructionData obstruction_data(const BoxPtr& box, const MeasureSpec& spec,
                                 const std::vector<int>& n_list, double p,
                                 std::size_t ball_radius, const NormBudget& budget = {});

// Schema-versioned JSON rendering of an obstruction bundle ("roelab.obstruction/1").
std::string obstruction_to_json(const ObstructionData& data);

// The quantitative incompatibility check: a fraction-c localized witness for
// an operator within eps of a ghost projection pins its norm by
// ||lift|| <= 2 eps / c + eps. Returns true iff every n in the bundle
// satisfies lift_norm_lower[n] <= 2 eps_max(n) / c + eps_max(n), where
// eps_max(n) is the worst per-level approximation error at that n. Once the
// approximants are close enough to the projections, the inequality must fail:
// the left side decays geometrically slower than the right.
bool ghost_lift_inequality(const ObstructionData& data, double fraction = 0.5);

}  // namespace roelab
