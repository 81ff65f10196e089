#include "roelab/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "roelab/common.hpp"
#include "roelab/walks.hpp"

namespace roelab {

namespace {

void require_cover(const CoverPtr& cover, const char* who) {
  if (!cover) throw ValidationError(std::string(who) + " requires a cover");
}

void require_on_target(const BlockOperator& T, const CoverMap& cover) {
  if (T.space()->id() != as_space(cover.target)->id())
    throw ValidationError("operator does not live on the cover target");
}

void require_window(int S, const CoverMap& cover) {
  if (S < 0) throw ValidationError("propagation window must be nonnegative");
  if (2 * S >= cover.radius) throw ValidationError("cover too shallow for propagation S");
}

double max_abs_entry(const BlockOperator& T) {
  const std::size_t kk = std::size_t(T.block_dim()) * std::size_t(T.block_dim());
  double worst = 0.0;
  T.for_each([&](std::size_t, std::size_t, const cplx* blk) {
    for (std::size_t i = 0; i < kk; ++i) worst = std::max(worst, std::abs(blk[i]));
  });
  return worst;
}

}  // namespace

EquivariantOperator lift_operator(const BlockOperator& T, const CoverPtr& cover, int S) {
  require_cover(cover, "lift_operator");
  require_on_target(T, *cover);
  require_window(S, *cover);
  if (T.propagation() > S) throw ValidationError("operator propagation exceeds the window S");

  const CayleyGraph& src = *cover->source;
  std::vector<std::vector<Vertex>> fiber(cover->target->order());
  for (Vertex x = 0; x < Vertex(src.order()); ++x) fiber[cover->pi[x]].push_back(x);

  std::vector<std::vector<std::pair<std::size_t, const cplx*>>> rows(cover->target->order());
  T.for_each([&](std::size_t u, std::size_t v, const cplx* blk) { rows[u].push_back({v, blk}); });

  BlockOperator::Builder builder(as_space(cover->source), T.block_dim());
  for (std::size_t u = 0; u < rows.size(); ++u) {
    if (rows[u].empty()) continue;
    for (Vertex x : fiber[u]) {
      // balls of radius S map bijectively onto their images (2S < radius), so
      // each target column v is hit by exactly one z in the window around x
      const std::vector<Vertex> window = src.ball(x, S);
      for (const auto& [v, blk] : rows[u]) {
        for (Vertex z : window) {
          if (cover->pi[z] == Vertex(v)) {
            builder.add(x, z, blk);
            break;
          }
        }
      }
    }
  }
  return {builder.finish(), cover};
}

void verify_equivariance(const EquivariantOperator& T) {
  require_cover(T.cover, "verify_equivariance");
  const CoverMap& cover = *T.cover;
  if (T.op.space()->id() != as_space(cover.source)->id())
    throw ValidationError("operator does not live on the cover source");
  const std::size_t kk = std::size_t(T.op.block_dim()) * std::size_t(T.op.block_dim());
  T.op.for_each([&](std::size_t x, std::size_t y, const cplx* blk) {
    for (std::size_t d = 0; d < cover.deck_order(); ++d) {
      const Vertex xs = cover.deck_apply(d, Vertex(x));
      const Vertex ys = cover.deck_apply(d, Vertex(y));
      const cplx* moved = T.op.block(xs, ys);
      bool same = moved != nullptr;
      for (std::size_t i = 0; same && i < kk; ++i) same = moved[i] == blk[i];
      if (!same)
        throw InvariantViolation(
            "operator is not deck-equivariant: deck element " + std::to_string(cover.kernel[d]) +
            " moves entry (" + std::to_string(x) + ", " + std::to_string(y) + ") to (" +
            std::to_string(xs) + ", " + std::to_string(ys) + ") where the block " +
            (moved ? "differs" : "is absent"));
    }
  });
}

bool lift_multiplicativity_check(const BlockOperator& A, const BlockOperator& B,
                                 const CoverPtr& cover, int S, double tol) {
  require_cover(cover, "lift_multiplicativity_check");
  require_on_target(A, *cover);
  require_on_target(B, *cover);
  require_window(S, *cover);
  if (A.propagation() + B.propagation() > S)
    throw ValidationError("operator propagation exceeds the window S");

  const EquivariantOperator downstairs = lift_operator(A * B, cover, S);
  const EquivariantOperator lift_a = lift_operator(A, cover, S);
  const EquivariantOperator lift_b = lift_operator(B, cover, S);
  return max_abs_entry(downstairs.op - lift_a.op * lift_b.op) <= tol;
}

cplx transversal_trace(const EquivariantOperator& T) {
  require_cover(T.cover, "transversal_trace");
  if (T.op.space()->id() != as_space(T.cover->source)->id())
    throw ValidationError("operator does not live on the cover source");
  const int k = T.op.block_dim();
  cplx sum = 0.0;
  for (Vertex t : T.cover->transversal) {
    const cplx* blk = T.op.block(t, t);
    if (!blk) continue;
    for (int i = 0; i < k; ++i) sum += blk[std::size_t(i) * std::size_t(k) + std::size_t(i)];
  }
  return sum;
}

UntwistedFamily untwist(const EquivariantOperator& T) {
  verify_equivariance(T);
  const CoverMap& cover = *T.cover;
  const std::size_t deck = cover.deck_order();
  const SpacePtr target_space = as_space(cover.target);

  std::vector<BlockOperator::Builder> builders;
  builders.reserve(deck);
  for (std::size_t g = 0; g < deck; ++g) builders.emplace_back(target_space, T.op.block_dim());

  // one row per fiber suffices: every other row is a deck translate
  T.op.for_each([&](std::size_t x, std::size_t y, const cplx* blk) {
    const Vertex u = cover.pi[x];
    if (Vertex(x) != cover.transversal[u]) return;
    builders[cover.deck_index[y]].add(u, cover.pi[y], blk);
  });

  UntwistedFamily family;
  family.cover = T.cover;
  family.components.reserve(deck);
  for (auto& b : builders) family.components.push_back(b.finish());
  return family;
}

EquivariantOperator reconstruct(const UntwistedFamily& family) {
  require_cover(family.cover, "reconstruct");
  const CoverMap& cover = *family.cover;
  if (family.components.size() != cover.deck_order())
    throw ValidationError("untwisted family must carry one component per deck element");
  const int k = family.components.front().block_dim();
  const std::string target_id = as_space(cover.target)->id();
  for (const BlockOperator& comp : family.components)
    if (comp.space()->id() != target_id || comp.block_dim() != k)
      throw ValidationError("untwisted components must share the target space and block size");

  const CayleyGraph& src = *cover.source;
  BlockOperator::Builder builder(as_space(cover.source), k);
  for (std::size_t g = 0; g < family.components.size(); ++g) {
    family.components[g].for_each([&](std::size_t u, std::size_t v, const cplx* blk) {
      const Vertex shifted = src.mul(cover.kernel[g], cover.transversal[v]);
      for (std::size_t a = 0; a < cover.deck_order(); ++a)
        builder.add(src.mul(cover.kernel[a], cover.transversal[u]), src.mul(cover.kernel[a], shifted),
                    blk);
    });
  }
  return {builder.finish(), family.cover};
}

UntwistedFamily untwisted_product(const UntwistedFamily& a, const UntwistedFamily& b) {
  require_cover(a.cover, "untwisted_product");
  if (a.cover != b.cover) throw ValidationError("untwisted factors must share one cover");
  const CoverMap& cover = *a.cover;
  const std::size_t deck = cover.deck_order();
  if (a.components.size() != deck || b.components.size() != deck)
    throw ValidationError("untwisted family must carry one component per deck element");

  const CayleyGraph& src = *cover.source;
  UntwistedFamily out;
  out.cover = a.cover;
  out.components.reserve(deck);
  for (std::size_t g = 0; g < deck; ++g) {
    BlockOperator sum(as_space(cover.target), a.components.front().block_dim());
    for (std::size_t h = 0; h < deck; ++h) {
      const std::size_t rest =
          cover.kernel_slot(src.mul(src.inv(cover.kernel[h]), cover.kernel[g]));
      sum = sum + a.components[h] * b.components[rest];
    }
    out.components.push_back(std::move(sum));
  }
  return out;
}

BlockOperator UntwistedFamily::realized() const {
  require_cover(cover, "UntwistedFamily::realized");
  const CoverMap& cov = *cover;
  const std::size_t deck = cov.deck_order();
  if (components.size() != deck)
    throw ValidationError("untwisted family must carry one component per deck element");
  const std::size_t fold = cov.target->order();
  const CayleyGraph& src = *cov.source;

  BlockOperator::Builder builder(as_space(cov.source), components.front().block_dim());
  for (std::size_t g = 0; g < deck; ++g) {
    components[g].for_each([&](std::size_t u, std::size_t v, const cplx* blk) {
      for (std::size_t a = 0; a < deck; ++a) {
        const std::size_t b = cov.kernel_slot(src.mul(cov.kernel[a], cov.kernel[g]));
        builder.add(a * fold + u, b * fold + v, blk);
      }
    });
  }
  return builder.finish();
}

namespace {

cplx phase_of(cplx z) {
  const double m = std::abs(z);
  return m == 0.0 ? cplx(1.0, 0.0) : z / m;
}

double vec_pnorm(const Eigen::VectorXcd& v, double p) {
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += std::pow(std::abs(v[i]), p);
  return std::pow(sum, 1.0 / p);
}

// |y|^(p-1) phases, the duality map between l^p and its conjugate space
Eigen::VectorXcd duality_power(const Eigen::VectorXcd& y, double p) {
  Eigen::VectorXcd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    out[i] = std::pow(std::abs(y[i]), p - 1.0) * phase_of(y[i]);
  return out;
}

// Largest ||K c||_p / ||c||_p with the achieving coefficient vector. Exact at
// p = 2 (top singular pair); elsewhere a fixed-point iteration on the duality
// map whose value is always an achieved, certified lower bound.
std::pair<double, Eigen::VectorXcd> column_block_witness(const Eigen::MatrixXcd& K, double p) {
  const Eigen::Index cols = K.cols();
  if (cols == 0 || K.norm() == 0.0) return {0.0, Eigen::VectorXcd::Zero(std::max(cols, Eigen::Index(1)))};
  if (p == 2.0) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(K, Eigen::ComputeThinV);
    return {svd.singularValues()[0], svd.matrixV().col(0)};
  }
  if (std::isinf(p)) {
    // sup over the unit cube: phases aligned along the heaviest row
    Eigen::Index heaviest = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      const double mass = K.row(i).cwiseAbs().sum();
      if (mass > best) {
        best = mass;
        heaviest = i;
      }
    }
    Eigen::VectorXcd c(cols);
    for (Eigen::Index j = 0; j < cols; ++j) c[j] = std::conj(phase_of(K(heaviest, j)));
    return {vec_pnorm(K * c, p), c};
  }

  const double q = p / (p - 1.0);
  double best = 0.0;
  Eigen::VectorXcd best_vec = Eigen::VectorXcd::Zero(cols);
  // two deterministic starts: flat, and the heaviest single column
  Eigen::Index heavy_col = 0;
  K.colwise().norm().maxCoeff(&heavy_col);
  for (int start = 0; start < 2; ++start) {
    Eigen::VectorXcd c = start == 0 ? Eigen::VectorXcd::Constant(cols, cplx(1.0, 0.0))
                                    : Eigen::VectorXcd(Eigen::VectorXcd::Unit(cols, heavy_col));
    double prev = -1.0;
    for (int it = 0; it < 80; ++it) {
      const double cn = vec_pnorm(c, p);
      if (cn == 0.0) break;
      c /= cn;
      const Eigen::VectorXcd img = K * c;
      const double value = vec_pnorm(img, p);
      if (value > best) {
        best = value;
        best_vec = c;
      }
      if (value <= prev * (1.0 + 1e-14)) break;
      prev = value;
      c = duality_power(K.adjoint() * duality_power(img, p), q);
    }
  }
  return {best, best_vec};
}

// dense column block of T over the given points: coefficient vectors live on
// the listed points only, images on the whole space
Eigen::MatrixXcd extract_columns(const BlockOperator& T, const std::vector<std::size_t>& points) {
  const int k = T.block_dim();
  std::unordered_map<std::size_t, Eigen::Index> slot;
  slot.reserve(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) slot[points[j]] = Eigen::Index(j);
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(Eigen::Index(T.dim()), Eigen::Index(points.size() * std::size_t(k)));
  T.for_each([&](std::size_t x, std::size_t y, const cplx* blk) {
    const auto hit = slot.find(y);
    if (hit == slot.end()) return;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        K(Eigen::Index(x) * k + i, hit->second * k + j) = blk[std::size_t(i) * std::size_t(k) + std::size_t(j)];
  });
  return K;
}

std::size_t ball_diameter(const Space& space, const std::vector<std::size_t>& points) {
  std::size_t diam = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      diam = std::max(diam, std::size_t(space.distance(points[i], points[j])));
  return diam;
}

Eigen::VectorXcd scatter(const Eigen::VectorXcd& local, const std::vector<std::size_t>& points,
                         std::size_t dim, int k) {
  Eigen::VectorXcd xi = Eigen::VectorXcd::Zero(Eigen::Index(dim));
  for (std::size_t j = 0; j < points.size(); ++j)
    for (int i = 0; i < k; ++i) xi[Eigen::Index(points[j]) * k + i] = local[Eigen::Index(j) * k + i];
  return xi;
}

}  // namespace

OnlResult onl_search(const BlockOperator& T, const OnlParams& params) {
  const double p = params.p;
  if (!(p >= 1.0)) throw ValidationError("p must be at least 1");
  if (params.propagation < 0) throw ValidationError("propagation bound must be nonnegative");
  if (T.propagation() > params.propagation)
    throw ValidationError("operator propagation exceeds the search bound");
  if (params.support_diameter < 0) throw ValidationError("support diameter must be nonnegative");
  if (!(params.fraction > 0.0) || params.fraction > 1.0)
    throw ValidationError("fraction must lie in (0, 1]");
  if (T.entry_count() == 0) throw ValidationError("onl_search requires a nonzero operator");

  const Space& space = *T.space();
  const int k = T.block_dim();
  const NormEstimate global = pnorm_estimate(T, p, params.budget);

  OnlResult result;
  result.norm_lower = global.lower;
  result.norm_upper = global.upper;
  result.min_achieving_diameter = std::numeric_limits<std::size_t>::max();

  auto consider = [&](std::size_t center, const std::vector<std::size_t>& points,
                      std::size_t diam, double achieved, const Eigen::VectorXcd& local) {
    const double ratio = achieved / global.lower;
    if (ratio >= params.fraction) {
      result.found = true;
      result.min_achieving_diameter = std::min(result.min_achieving_diameter, diam);
    }
    if (ratio > result.best_ratio) {
      result.best_ratio = ratio;
      result.best.xi = scatter(local, points, T.dim(), k);
      result.best.support = points;
      result.best.center = center;
      result.best.diameter = diam;
      result.best.achieved = achieved;
      result.best.ratio = ratio;
    }
  };

  if (params.mode == OnlMode::exhaustive) {
    for (std::size_t center = 0; center < space.size(); ++center) {
      std::size_t prev_size = 0;
      for (int rho = 0;; ++rho) {
        const std::vector<std::size_t> points = space.ball(center, rho);
        if (rho > 0 && points.size() == prev_size) break;  // window saturated
        const std::size_t diam = ball_diameter(space, points);
        if (double(diam) > params.support_diameter) break;  // only grows with rho
        prev_size = points.size();
        const Eigen::MatrixXcd K = extract_columns(T, points);
        const auto [achieved, local] = column_block_witness(K, p);
        if (achieved > 0.0) consider(center, points, diam, achieved, local);
        if (points.size() == space.size()) break;
      }
    }
  } else {
    // ride the global witness: power iterate with the duality map, then
    // truncate to the best admissible window around the heaviest point
    const std::size_t dim = T.dim();
    std::vector<cplx> v(dim, cplx(1.0, 0.0));
    const double q = std::isinf(p) ? 1.0 : (p <= 1.0 ? std::numeric_limits<double>::infinity()
                                                     : p / (p - 1.0));
    for (int it = 0; it < 24; ++it) {
      std::vector<cplx> img = T.apply(v);
      Eigen::Map<Eigen::VectorXcd> y(img.data(), Eigen::Index(img.size()));
      const double yn = vec_pnorm(y, p);
      if (yn == 0.0) break;
      Eigen::VectorXcd back;
      if (std::isinf(p) || p == 1.0) {
        back = y / yn;  // plain power step where the duality map degenerates
      } else {
        const Eigen::VectorXcd dual = duality_power(y, p);
        std::vector<cplx> pulled = T.apply_adjoint(std::vector<cplx>(dual.data(), dual.data() + dual.size()));
        back = duality_power(Eigen::Map<Eigen::VectorXcd>(pulled.data(), Eigen::Index(pulled.size())), q);
      }
      const double bn = vec_pnorm(back, p);
      if (bn == 0.0) break;
      for (std::size_t i = 0; i < dim; ++i) v[i] = back[Eigen::Index(i)] / bn;
    }
    // heaviest point of the final iterate
    std::size_t center = 0;
    double best_mass = -1.0;
    for (std::size_t x = 0; x < space.size(); ++x) {
      double mass = 0.0;
      for (int i = 0; i < k; ++i) mass += std::norm(v[x * std::size_t(k) + std::size_t(i)]);
      if (mass > best_mass) {
        best_mass = mass;
        center = x;
      }
    }
    std::size_t prev_size = 0;
    for (int rho = 0;; ++rho) {
      const std::vector<std::size_t> points = space.ball(center, rho);
      if (rho > 0 && points.size() == prev_size) break;
      const std::size_t diam = ball_diameter(space, points);
      if (double(diam) > params.support_diameter) break;
      prev_size = points.size();
      Eigen::VectorXcd local(Eigen::Index(points.size() * std::size_t(k)));
      for (std::size_t j = 0; j < points.size(); ++j)
        for (int i = 0; i < k; ++i) local[Eigen::Index(j) * k + i] = v[points[j] * std::size_t(k) + std::size_t(i)];
      const double ln = vec_pnorm(local, p);
      if (ln == 0.0) continue;
      local /= ln;
      const Eigen::VectorXcd xi = scatter(local, points, dim, k);
      std::vector<cplx> img = T.apply(std::vector<cplx>(xi.data(), xi.data() + xi.size()));
      const double achieved = vec_pnorm(Eigen::Map<Eigen::VectorXcd>(img.data(), Eigen::Index(img.size())), p);
      if (achieved > 0.0) consider(center, points, diam, achieved, local);
      if (points.size() == space.size()) break;
    }
  }

  if (!result.found) result.min_achieving_diameter = 0;
  return result;
}

std::vector<NormEstimate> lifted_norm_sequence(const BoxPtr& box, const MeasureSpec& spec,
                                               const std::vector<int>& n_list, double p,
                                               std::size_t ball_radius) {
  if (!box) throw ValidationError("lifted_norm_sequence requires a box space");
  if (n_list.empty()) throw ValidationError("n grid must be nonempty");
  if (!(p >= 1.0)) throw ValidationError("p must be at least 1");
  for (int n : n_list)
    if (n < 0) throw ValidationError("walk length must be nonnegative");

  const ParentWalk walk(box->component(1).family(), ball_radius, spec);
  std::vector<NormEstimate> out;
  out.reserve(n_list.size());
  for (int n : n_list) {
    NormEstimate est;
    est.p = p;
    est.lower = walk.local_ratio(std::size_t(n), p);
    est.upper = 1.0;  // convolution by a probability measure never expands l^p
    est.wide = est.upper - est.lower > 1e-12;
    est.methods = {"parent window ratio", "stochastic bound"};
    out.push_back(std::move(est));
  }
  return out;
}

ObstructionData obstruction_data(const BoxPtr& box, const MeasureSpec& spec,
                                 const std::vector<int>& n_list, double p,
                                 std::size_t ball_radius, const NormBudget& budget) {
  if (!box) throw ValidationError("obstruction_data requires a box space");
  if (n_list.empty()) throw ValidationError("n grid must be nonempty");

  ObstructionData data;
  data.family = to_string(box->component(1).family());
  data.n_grid = n_list;
  data.p = p;
  data.ball_radius = ball_radius;
  data.laziness = spec.laziness;
  data.seed = budget.seed;

  const int levels = box->levels();
  for (int i = 1; i <= levels; ++i) {
    const CayleyGraph& g = box->component(i);
    data.moduli.push_back(g.modulus());
    data.orders.push_back(g.order());
    data.trace_vector.push_back(trace(averaging_projection(box->component_ptr(i))).real());
  }

  const GhostProfile profile = ghost_profile(ghost_projection(box), {0}, p, budget);
  for (int i = 1; i <= levels; ++i) data.ghost_values.push_back(profile.at(0, i));

  std::unordered_map<int, std::size_t> n_pos;
  for (std::size_t j = 0; j < n_list.size(); ++j) n_pos[n_list[j]] = j;
  data.approx_error_lower.assign(std::size_t(levels), std::vector<double>(n_list.size(), 0.0));
  data.approx_error_upper.assign(std::size_t(levels), std::vector<double>(n_list.size(), 0.0));
  for (const KazhdanRow& row : kazhdan_table(box, spec, n_list, {p}, budget)) {
    const std::size_t j = n_pos.at(row.n);
    data.approx_error_lower[std::size_t(row.level - 1)][j] = row.lower;
    data.approx_error_upper[std::size_t(row.level - 1)][j] = row.upper;
  }

  for (const NormEstimate& est : lifted_norm_sequence(box, spec, n_list, p, ball_radius))
    data.lift_norm_lower.push_back(est.lower);
  return data;
}

std::string obstruction_to_json(const ObstructionData& data) {
  nlohmann::ordered_json doc;
  doc["schema"] = "roelab.obstruction/1";
  doc["family"] = data.family;
  doc["levels"] = data.moduli;
  doc["orders"] = data.orders;
  doc["trace_vector"] = data.trace_vector;
  doc["ghost_values"] = data.ghost_values;
  doc["approx_error"] = {{"lower", data.approx_error_lower}, {"upper", data.approx_error_upper}};
  doc["lift_norm"] = {{"lower", data.lift_norm_lower}};
  doc["parameters"] = {{"p", data.p},
                       {"n", data.n_grid},
                       {"ball_radius", data.ball_radius},
                       {"seed", data.seed},
                       {"laziness", data.laziness}};
  return doc.dump(2) + "\n";
}

bool ghost_lift_inequality(const ObstructionData& data, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0) throw ValidationError("fraction must lie in (0, 1]");
  if (data.lift_norm_lower.size() != data.n_grid.size() || data.approx_error_upper.empty())
    throw ValidationError("obstruction bundle is incomplete");
  for (std::size_t j = 0; j < data.n_grid.size(); ++j) {
    double eps = 0.0;
    for (const std::vector<double>& level_row : data.approx_error_upper)
      eps = std::max(eps, level_row.at(j));
    if (data.lift_norm_lower[j] > 2.0 * eps / fraction + eps) return false;
  }
  return true;
}

}  // namespace roelab
