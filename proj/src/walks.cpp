#include "roelab/walks.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "roelab/common.hpp"

namespace roelab {

namespace {

constexpr std::size_t kMaxCoordinates = 8192;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t parent_generator_count(Family family) {
  switch (family) {
    case Family::sl2: return 4;
    case Family::cyclic: return 2;
    case Family::dihedral: return 3;
  }
  return 0;
}

// Per-generator step probabilities (canonical order, summing to
// 1 - laziness), validated against the symmetry the walk models require.
std::vector<double> parent_step_weights(Family family, const MeasureSpec& spec) {
  if (!(spec.laziness >= 0.0 && spec.laziness < 1.0))
    throw ValidationError("laziness must lie in [0, 1)");
  const std::size_t count = parent_generator_count(family);
  const double free_mass = 1.0 - spec.laziness;
  std::vector<double> w(count, free_mass / double(count));
  if (spec.generator_weights.empty()) return w;
  if (spec.generator_weights.size() != count)
    throw ValidationError("generator weight count does not match the parent generating set");
  double total = 0.0;
  for (double x : spec.generator_weights) {
    if (!(x > 0.0)) throw ValidationError("generator weights must be positive");
    total += x;
  }
  for (std::size_t i = 0; i < count; ++i)
    w[i] = spec.generator_weights[i] / total * free_mass;
  const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  switch (family) {
    case Family::sl2:
      if (!(close(w[0], w[1]) && close(w[0], w[2]) && close(w[0], w[3])))
        throw ValidationError("parent walk requires uniform generator weights");
      break;
    case Family::cyclic:
      if (!close(w[0], w[1]))
        throw ValidationError("generator weights must be symmetric");
      break;
    case Family::dihedral:
      // canonical order is rotation, flip, inverse rotation
      if (!close(w[0], w[2]))
        throw ValidationError("generator weights must be symmetric");
      break;
  }
  return w;
}

double vector_pnorm(const Eigen::VectorXd& v, double p) {
  if (p == kInf) return v.cwiseAbs().maxCoeff();
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) total += std::pow(std::abs(v(i)), p);
  return std::pow(total, 1.0 / p);
}

// Achieved-ratio lower bound for the p -> p norm of an entrywise-nonnegative
// block, by the classical fixed-point iteration (exact in the limit for
// nonnegative matrices; every reported value is realized by a unit vector).
double nonnegative_pnorm_lower(const Eigen::MatrixXd& block, double p) {
  const double q = p / (p - 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(block.cols());
  x /= vector_pnorm(x, p);
  double best = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd y = block * x;
    const double ratio = vector_pnorm(y, p);
    const bool stalled = it > 2 && ratio <= best * (1.0 + 1e-13);
    best = std::max(best, ratio);
    if (stalled) break;
    const Eigen::VectorXd z = y.array().abs().pow(p - 1.0).matrix();
    const Eigen::VectorXd w = block.transpose() * z;
    Eigen::VectorXd next = w.array().abs().pow(q - 1.0).matrix();
    const double norm = vector_pnorm(next, p);
    if (!(norm > 0.0)) break;
    x = next / norm;
  }
  return best;
}

}  // namespace

ParentWalk::ParentWalk(Family family, std::size_t truncation_radius, MeasureSpec spec)
    : family_(family), radius_(truncation_radius), laziness_(spec.laziness) {
  if (truncation_radius == 0) throw ValidationError("truncation radius must be positive");
  const std::vector<double> weights = parent_step_weights(family, spec);

  if (family == Family::sl2 || family == Family::cyclic) {
    // radial model: coordinate r carries the sphere of radius r
    const std::size_t n = radius_ + 1;
    if (n > kMaxCoordinates) throw ValidationError("truncation radius too large");
    const double degree = double(parent_generator_count(family));
    const double step_mass = weights[0];  // uniform across directions
    step_ = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    multiplicity_ = Eigen::VectorXd(Eigen::Index(n));
    coordinate_radius_.resize(n);
    multiplicity_(0) = 1.0;
    for (std::size_t r = 1; r < n; ++r)
      multiplicity_(Eigen::Index(r)) = degree * std::pow(degree - 1.0, double(r - 1));
    for (std::size_t r = 0; r < n; ++r) coordinate_radius_[r] = r;
    // value evolution: at the root every direction looks outward; elsewhere
    // exactly one of the `degree` directions cancels the last letter
    step_(0, 0) = laziness_;
    step_(0, 1) = degree * step_mass;
    for (std::size_t r = 1; r < n; ++r) {
      const Eigen::Index i = Eigen::Index(r);
      step_(i, i) = laziness_;
      step_(i, i - 1) = step_mass;
      if (r + 1 < n) step_(i, i + 1) = (degree - 1.0) * step_mass;
    }
    return;
  }

  // explicit model for the infinite dihedral parent: vertices are
  // (rotation count, flip) with word norm |k| + flip
  const std::int64_t r = std::int64_t(radius_);
  std::map<std::pair<std::int64_t, int>, std::size_t> index;
  std::vector<std::pair<std::int64_t, int>> verts;
  for (std::int64_t k = -r; k <= r; ++k) verts.push_back({k, 0});
  for (std::int64_t k = -(r - 1); k <= r - 1; ++k) verts.push_back({k, 1});
  if (verts.size() > kMaxCoordinates) throw ValidationError("truncation radius too large");
  for (std::size_t i = 0; i < verts.size(); ++i) index[verts[i]] = i;

  const std::size_t n = verts.size();
  step_ = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  multiplicity_ = Eigen::VectorXd::Ones(Eigen::Index(n));
  coordinate_radius_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    coordinate_radius_[i] = std::size_t(std::abs(verts[i].first)) + (verts[i].second ? 1 : 0);
  // right multiplication: a rotation moves with the orientation set by the
  // flip state; a flip toggles it in place
  const std::vector<std::pair<std::pair<std::int64_t, int>, double>> moves = {
      {{1, 0}, weights[0]}, {{0, 1}, weights[1]}, {{-1, 0}, weights[2]}};
  for (std::size_t i = 0; i < n; ++i) {
    const auto [k, e] = verts[i];
    step_(Eigen::Index(i), Eigen::Index(i)) += laziness_;
    for (const auto& [g, w] : moves) {
      const std::int64_t kk = e ? k - g.first : k + g.first;
      const auto it = index.find({kk, e ^ g.second});
      if (it != index.end())
        step_(Eigen::Index(i), Eigen::Index(it->second)) += w;
    }
  }
}

Eigen::MatrixXd ParentWalk::step_power(std::size_t steps) const {
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(step_.rows(), step_.cols());
  for (std::size_t k = 0; k < steps; ++k) power = (power * step_).eval();
  return power;
}

double ParentWalk::weighted_pnorm(const Eigen::VectorXd& values, double p) const {
  if (p == kInf) return values.cwiseAbs().maxCoeff();
  double total = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    total += multiplicity_(i) * std::pow(std::abs(values(i)), p);
  return std::pow(total, 1.0 / p);
}

double ParentWalk::delta_norm(std::size_t steps, double p) const {
  if (!(p >= 1.0)) throw ValidationError("p must be at least 1");
  if (steps > radius_) throw ValidationError("truncation radius too small for n");
  Eigen::VectorXd values = Eigen::VectorXd::Zero(step_.rows());
  Eigen::Index origin = 0;
  for (std::size_t i = 0; i < coordinate_radius_.size(); ++i)
    if (coordinate_radius_[i] == 0) origin = Eigen::Index(i);
  values(origin) = 1.0;
  for (std::size_t k = 0; k < steps; ++k) values = (step_ * values).eval();
  return weighted_pnorm(values, p);
}

double ParentWalk::step_ratio(std::size_t steps) const {
  if (steps == 0) throw ValidationError("step count must be at least 1");
  return delta_norm(steps, 2.0) / delta_norm(steps - 1, 2.0);
}

double ParentWalk::nth_root(std::size_t steps) const {
  if (steps == 0) throw ValidationError("step count must be at least 1");
  return std::pow(delta_norm(steps, 2.0), 1.0 / double(steps));
}

double ParentWalk::ball_top_eigenvalue() const {
  // symmetrize by conjugating with the square root of the sphere weights
  // (a no-op for the explicit model); the result is the walk matrix in an
  // orthonormal basis of the ball
  const Eigen::VectorXd half = multiplicity_.array().sqrt().matrix();
  const Eigen::MatrixXd sym =
      half.asDiagonal() * step_ * half.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double ParentWalk::local_ratio(std::size_t steps, double p) const {
  if (!(p >= 1.0)) throw ValidationError("p must be at least 1");
  if (steps > radius_) throw ValidationError("truncation radius too small for n");
  const std::size_t core = radius_ - steps;
  std::vector<Eigen::Index> cols;
  for (std::size_t i = 0; i < coordinate_radius_.size(); ++i)
    if (coordinate_radius_[i] <= core) cols.push_back(Eigen::Index(i));

  // conjugate so the weighted p-norm becomes the plain coordinate p-norm,
  // then restrict to columns whose image cannot feel the truncation
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(step_.rows());
  if (p != kInf) scale = multiplicity_.array().pow(1.0 / p).matrix();
  const Eigen::MatrixXd power = step_power(steps);
  Eigen::MatrixXd block(step_.rows(), Eigen::Index(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    block.col(Eigen::Index(j)) =
        (scale.array() * power.col(cols[j]).array()).matrix() / scale(cols[j]);

  if (p == 1.0) return block.cwiseAbs().colwise().sum().maxCoeff();
  if (p == kInf) return block.cwiseAbs().rowwise().sum().maxCoeff();
  if (p == 2.0) return Eigen::JacobiSVD<Eigen::MatrixXd>(block).singularValues()(0);
  return nonnegative_pnorm_lower(block, p);
}

WalkGrowth walk_growth(Family family, std::size_t steps, std::size_t ball_radius,
                       MeasureSpec spec) {
  if (steps == 0) throw ValidationError("step count must be at least 1");
  const ParentWalk walk(family, ball_radius, std::move(spec));
  WalkGrowth out;
  out.steps = steps;
  out.growth = walk.step_ratio(steps);
  out.nth_root = walk.nth_root(steps);
  out.ball_eigenvalue = walk.ball_top_eigenvalue();
  out.ball_radius = ball_radius;
  return out;
}

}  // namespace roelab
