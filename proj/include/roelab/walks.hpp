#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "roelab/expander.hpp"
#include "roelab/groups.hpp"

namespace roelab {

// Random walk on the infinite parent group that a quotient family
// approximates: the free group of rank two for sl2 (the two generating
// matrices satisfy no relation over the integers), the integers for cyclic,
// and the infinite dihedral group otherwise.
//
// The infinite group is realized exactly on a finite window: an n-step
// evolution of a vector supported in the ball of radius R - n never reaches
// the truncation boundary, so every quantity below is the true value on the
// infinite group as long as the step count stays within the window. Requests
// that would leave the window are rejected rather than silently truncated.
//
// For sl2 and cyclic the Cayley graph of the parent is distance-transitive
// (a regular tree, respectively a line), so the walk is reduced to the
// radius coordinate: spheres become single coordinates carrying their
// cardinality as a weight. The reduction is exact for delta norms (the
// starting vector is radial) and for largest singular values / eigenvalues
// (the relevant operators have nonnegative entries, so a top vector can be
// chosen nonnegative and averaged over the sphere-transitive automorphisms).
// The dihedral parent is handled on an explicit ball, which stays small.
class ParentWalk {
 public:
  // The measure spec carries the laziness and relative generator weights in
  // the canonical generator order of the family. Weights must respect the
  // symmetry of the walk: equal on a generator/inverse pair, and fully
  // uniform for sl2 (the radial reduction needs all four directions alike).
  ParentWalk(Family family, std::size_t truncation_radius, MeasureSpec spec = {});

  // p-norm of the n-step distribution started at the identity. Exact while
  // n stays within the truncation radius; throws otherwise.
  double delta_norm(std::size_t steps, double p = 2.0) const;

  // Consecutive-norm growth estimate at step n, the ratio of the n-step to
  // the (n-1)-step 2-norm. Converges to the walk's spectral radius much
  // faster than the literal n-th root, whose polynomial prefactor bias
  // vanishes only logarithmically.
  double step_ratio(std::size_t steps) const;

  // Literal n-th root of the n-step 2-norm, reported alongside the ratio.
  double nth_root(std::size_t steps) const;

  // Largest absolute eigenvalue of the walk restricted to the truncation
  // ball. A certified lower bound for the spectral radius on the infinite
  // group, increasing toward it as the radius grows.
  double ball_top_eigenvalue() const;

  // Best ratio ||mu^n v||_p / ||v||_p over vectors v supported in the safe
  // core (the ball of radius R - n, so the image is exact). Exact for
  // p in {1, 2, inf}; an achieved-vector lower bound otherwise, computed by
  // a fixed-point power iteration that converges to the true value for
  // entrywise-nonnegative operators such as this one.
  double local_ratio(std::size_t steps, double p = 2.0) const;

  Family family() const { return family_; }
  std::size_t truncation_radius() const { return radius_; }
  double laziness() const { return laziness_; }
  // number of coordinates in the reduced model (radius + 1 for the radial
  // families, the ball cardinality for the explicit one)
  std::size_t coordinate_count() const { return std::size_t(step_.rows()); }

 private:
  Eigen::MatrixXd step_power(std::size_t steps) const;
  double weighted_pnorm(const Eigen::VectorXd& values, double p) const;

  Family family_;
  std::size_t radius_ = 0;
  double laziness_ = 0.0;
  Eigen::MatrixXd step_;          // one-step matrix acting on value vectors
  Eigen::VectorXd multiplicity_;  // points per coordinate (all ones when explicit)
  std::vector<std::size_t> coordinate_radius_;  // word norm of each coordinate
};

// Growth summary for the parent walk of a family: the consecutive-norm
// estimate at the requested step count, the literal n-th root next to it,
// and the top eigenvalue of the ball restriction as an independent lower
// bound on the same limit.
struct WalkGrowth {
  std::size_t steps = 0;
  double growth = 0.0;
  double nth_root = 0.0;
  double ball_eigenvalue = 0.0;
  std::size_t ball_radius = 0;
};

WalkGrowth walk_growth(Family family, std::size_t steps, std::size_t ball_radius,
                       MeasureSpec spec = {});

}  // namespace roelab
