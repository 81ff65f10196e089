#include "roelab/expander.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Dense>

namespace roelab {

namespace {

constexpr std::size_t kGapDenseLimit = 600;

std::vector<std::size_t> inverse_generator_index(const CayleyGraph& graph) {
  const auto& elems = graph.generating_set().elements;
  std::vector<std::size_t> inv_at(elems.size());
  for (std::size_t g = 0; g < elems.size(); ++g) {
    const std::uint64_t target = graph.ops().inv(elems[g]);
    const auto it = std::find(elems.begin(), elems.end(), target);
    if (it == elems.end())
      throw InvariantViolation("generating set lost inverse closure");
    inv_at[g] = std::size_t(it - elems.begin());
  }
  return inv_at;
}

Eigen::MatrixXd dense_markov(const CayleyGraph& graph, const ProbabilityMeasure& mu) {
  const std::size_t n = graph.order();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  for (std::size_t x = 0; x < n; ++x) {
    T(Eigen::Index(x), Eigen::Index(x)) += mu.identity_weight;
    for (std::size_t g = 0; g < mu.weights.size(); ++g)
      T(Eigen::Index(x), Eigen::Index(graph.act(Vertex(x), g))) += mu.weights[g];
  }
  return T;
}

std::vector<cplx> remove_mean(std::vector<cplx> v) {
  cplx mean(0.0, 0.0);
  for (const cplx& c : v) mean += c;
  mean /= double(v.size());
  for (cplx& c : v) c -= mean;
  return v;
}

struct GapInterval {
  double lower = 0.0;
  double upper = 0.0;
};

GapInterval gap_interval(const GraphPtr& graph, const ProbabilityMeasure& mu,
                         const NormBudget& budget) {
  mu.validate(*graph);
  const std::size_t n = graph->order();
  if (n < 2) return {0.0, 0.0};
  if (n <= kGapDenseLimit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_markov(*graph, mu),
                                                      Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double rho = std::max(std::abs(ev(0)), std::abs(ev(Eigen::Index(n) - 2)));
    return {rho, rho};
  }
  const BlockOperator T = markov_operator(graph, mu);
  LinearMap map;
  map.dim = n;
  map.apply = [&T](const std::vector<cplx>& v) {
    return remove_mean(T.apply(remove_mean(v)));
  };
  map.apply_adjoint = map.apply;
  map.hermitian = true;
  map.norm1_hint = 4.0;
  map.norminf_hint = 4.0;
  map.norm2_upper_hint = 1.0;
  const NormEstimate est = pnorm_estimate(map, 2.0, budget);
  return {est.lower, est.upper};
}

void append_block_everywhere(BlockOperator::Builder& b, std::size_t begin, std::size_t end,
                             const std::vector<cplx>& block) {
  for (std::size_t x = begin; x < end; ++x)
    for (std::size_t y = begin; y < end; ++y) b.add(x, y, block.data());
}

std::vector<cplx> projection_block(std::size_t order, int internal_rank, int block_dim) {
  std::vector<cplx> block(std::size_t(block_dim) * std::size_t(block_dim), cplx(0.0, 0.0));
  for (int r = 0; r < internal_rank; ++r)
    block[std::size_t(r) * std::size_t(block_dim) + std::size_t(r)] =
        cplx(1.0 / double(order), 0.0);
  return block;
}

}  // namespace

void ProbabilityMeasure::validate(const CayleyGraph& graph) const {
  if (weights.size() != graph.generator_count())
    throw ValidationError("measure weights do not match the generator list");
  double total = identity_weight;
  if (!(identity_weight >= 0.0))
    throw ValidationError("measure weights must be nonnegative");
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("measure weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("measure weights must total 1");
  const auto inv_at = inverse_generator_index(graph);
  for (std::size_t g = 0; g < weights.size(); ++g)
    if (std::abs(weights[g] - weights[inv_at[g]]) > 1e-12)
      throw ValidationError("measure weights must be symmetric under inversion");

  // the positive-weight generators must reach the whole group
  std::vector<char> seen(graph.order(), 0);
  seen[0] = 1;
  std::deque<Vertex> queue{0};
  std::size_t reached = 1;
  while (!queue.empty()) {
    const Vertex x = queue.front();
    queue.pop_front();
    for (std::size_t g = 0; g < weights.size(); ++g) {
      if (weights[g] <= 0.0) continue;
      const Vertex y = graph.act(x, g);
      if (!seen[y]) {
        seen[y] = 1;
        ++reached;
        queue.push_back(y);
      }
    }
  }
  if (reached != graph.order())
    throw ValidationError("measure support does not generate the group");
}

ProbabilityMeasure ProbabilityMeasure::lazy_uniform(const CayleyGraph& graph, double laziness) {
  if (!(laziness >= 0.0 && laziness < 1.0))
    throw ValidationError("laziness must lie in [0, 1)");
  ProbabilityMeasure mu;
  mu.identity_weight = laziness;
  mu.weights.assign(graph.generator_count(), (1.0 - laziness) / double(graph.generator_count()));
  return mu;
}

ProbabilityMeasure MeasureSpec::instantiate(const CayleyGraph& graph) const {
  if (generator_weights.empty()) return ProbabilityMeasure::lazy_uniform(graph, laziness);
  if (!(laziness >= 0.0 && laziness < 1.0))
    throw ValidationError("laziness must lie in [0, 1)");
  if (generator_weights.size() != graph.generator_count())
    throw ValidationError("measure weights do not match the generator list");
  double total = 0.0;
  for (double w : generator_weights) {
    if (!(w >= 0.0)) throw ValidationError("measure weights must be nonnegative");
    total += w;
  }
  if (total <= 0.0) throw ValidationError("measure weights must have positive mass");
  ProbabilityMeasure mu;
  mu.identity_weight = laziness;
  mu.weights.reserve(generator_weights.size());
  for (double w : generator_weights) mu.weights.push_back((1.0 - laziness) * w / total);
  mu.validate(graph);
  return mu;
}

BlockOperator markov_operator(const GraphPtr& graph, const ProbabilityMeasure& mu,
                              int block_dim) {
  mu.validate(*graph);
  BlockOperator::Builder b(as_space(graph), block_dim);
  const std::size_t n = graph->order();
  for (std::size_t x = 0; x < n; ++x) {
    if (mu.identity_weight > 0.0)
      b.add_scaled_identity(x, x, cplx(mu.identity_weight, 0.0));
    for (std::size_t g = 0; g < mu.weights.size(); ++g)
      if (mu.weights[g] > 0.0)
        b.add_scaled_identity(x, graph->act(Vertex(x), g), cplx(mu.weights[g], 0.0));
  }
  return b.finish();
}

double spectral_gap(const GraphPtr& graph, const ProbabilityMeasure& mu,
                    const NormBudget& budget) {
  return gap_interval(graph, mu, budget).lower;
}

BlockOperator averaging_projection(const GraphPtr& graph, int internal_rank, int block_dim) {
  if (internal_rank < 1 || internal_rank > block_dim)
    throw ValidationError("internal rank must lie in [1, block_dim]");
  BlockOperator::Builder b(as_space(graph), block_dim);
  const auto block = projection_block(graph->order(), internal_rank, block_dim);
  append_block_everywhere(b, 0, graph->order(), block);
  return b.finish();
}

BlockOperator ghost_projection(const BoxPtr& box, int internal_rank, int block_dim) {
  if (internal_rank < 1 || internal_rank > block_dim)
    throw ValidationError("internal rank must lie in [1, block_dim]");
  BlockOperator::Builder b(box, block_dim);
  for (const ComponentRange& comp : box->components()) {
    const auto block = projection_block(comp.end - comp.begin, internal_rank, block_dim);
    append_block_everywhere(b, comp.begin, comp.end, block);
  }
  return b.finish();
}

std::vector<KazhdanRow> kazhdan_table(const BoxPtr& box, const MeasureSpec& spec,
                                      const std::vector<int>& n_list,
                                      const std::vector<double>& p_list,
                                      const NormBudget& budget) {
  for (int n : n_list)
    if (n < 1) throw ValidationError("approximant powers must be at least 1");
  std::vector<int> ns = n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  std::vector<KazhdanRow> rows;
  for (int level = 1; level <= box->levels(); ++level) {
    const GraphPtr graph = box->component_ptr(level);
    const std::size_t n_pts = graph->order();
    const ProbabilityMeasure mu = spec.instantiate(*graph);
    const GapInterval gap = gap_interval(graph, mu, budget);

    const bool dense = n_pts <= kGapDenseLimit;
    Eigen::MatrixXd D, Dn;
    BlockOperator T(as_space(graph), 1);
    if (dense) {
      D = dense_markov(*graph, mu);
      Dn = Eigen::MatrixXd::Identity(Eigen::Index(n_pts), Eigen::Index(n_pts));
    } else {
      T = markov_operator(graph, mu);
    }

    int reached = 0;
    for (int n : ns) {
      if (dense) {
        for (; reached < n; ++reached) Dn = (Dn * D).eval();
      }
      for (double p : p_list) {
        NormEstimate est;
        if (dense) {
          Eigen::MatrixXcd A =
              (Dn.array() - 1.0 / double(n_pts)).matrix().cast<cplx>();
          est = pnorm_estimate(A, p, budget);
        } else {
          LinearMap map;
          map.dim = n_pts;
          map.apply = [&T, n, n_pts](const std::vector<cplx>& v) {
            cplx mean(0.0, 0.0);
            for (const cplx& c : v) mean += c;
            mean /= double(n_pts);
            std::vector<cplx> w = v;
            for (int k = 0; k < n; ++k) w = T.apply(w);
            for (cplx& c : w) c -= mean;
            return w;
          };
          map.apply_adjoint = map.apply;
          map.hermitian = true;
          map.norm1_hint = 2.0;
          map.norminf_hint = 2.0;
          map.norm2_upper_hint = std::pow(gap.upper, n) * (1.0 + 1e-12);
          est = pnorm_estimate(map, p, budget);
        }
        KazhdanRow row;
        row.level = level;
        row.modulus = graph->modulus();
        row.order = n_pts;
        row.n = n;
        row.p = p;
        row.lower = est.lower;
        row.upper = est.upper;
        row.rho = gap.lower;
        const double theta = std::abs(2.0 / p - 1.0);
        row.interp_bound = std::pow(2.0, theta) * std::pow(row.rho, double(n) * (1.0 - theta));
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<KazhdanRow> kazhdan_approximant(const BoxPtr& box, const MeasureSpec& spec, int n,
                                            double p, const NormBudget& budget) {
  return kazhdan_table(box, spec, {n}, {p}, budget);
}

SimpleGraph SimpleGraph::from_cayley(const CayleyGraph& graph) {
  SimpleGraph g;
  g.adj.resize(graph.order());
  for (std::size_t x = 0; x < graph.order(); ++x) {
    for (std::size_t gi = 0; gi < graph.generator_count(); ++gi)
      g.adj[x].push_back(graph.act(Vertex(x), gi));
    std::sort(g.adj[x].begin(), g.adj[x].end());
  }
  return g;
}

bool SimpleGraph::connected() const {
  if (adj.empty()) return false;
  std::vector<char> seen(adj.size(), 0);
  seen[0] = 1;
  std::size_t reached = 1;
  std::deque<std::uint32_t> queue{0};
  while (!queue.empty()) {
    const std::uint32_t x = queue.front();
    queue.pop_front();
    for (std::uint32_t y : adj[x])
      if (!seen[y]) {
        seen[y] = 1;
        ++reached;
        queue.push_back(y);
      }
  }
  return reached == adj.size();
}

bool SimpleGraph::regular() const {
  for (const auto& nb : adj)
    if (nb.size() != adj[0].size()) return false;
  return !adj.empty();
}

std::size_t SimpleGraph::degree() const {
  if (!regular()) throw ValidationError("degree is only defined for regular graphs");
  return adj[0].size();
}

Rational cheeger_exact(const SimpleGraph& graph, std::size_t threshold) {
  const std::size_t n = graph.order();
  if (n < 2) throw ValidationError("cheeger constant needs at least two vertices");
  if (n > threshold)
    throw ValidationError("graph too large for exhaustive cheeger; use cheeger_bounds");
  if (!graph.connected()) return Rational{0, 1};

  // vertex n-1 stays outside A; the complementary subsets cover the other half
  std::int64_t best_num = std::numeric_limits<std::int64_t>::max();
  std::int64_t best_den = 1;
  const std::uint64_t masks = std::uint64_t(1) << (n - 1);
  for (std::uint64_t mask = 1; mask < masks; ++mask) {
    const int size = std::popcount(mask);
    std::int64_t boundary = 0;
    for (std::size_t x = 0; x < n - 1; ++x) {
      if (!((mask >> x) & 1u)) continue;
      for (std::uint32_t y : graph.adj[x]) boundary += ((mask >> y) & 1u) == 0;
    }
    const std::int64_t den = std::min<std::int64_t>(size, std::int64_t(n) - size);
    if (boundary * best_den < best_num * den) {
      best_num = boundary;
      best_den = den;
    }
  }
  Rational h{best_num, best_den};
  h.reduce();
  return h;
}

CheegerBounds cheeger_bounds(const SimpleGraph& graph, const NormBudget& budget) {
  if (!graph.connected()) throw ValidationError("cheeger bounds need a connected graph");
  const double d = double(graph.degree());
  const std::size_t n = graph.order();

  double lambda_lo, lambda_hi;  // normalized-Laplacian second eigenvalue
  if (n <= kGapDenseLimit) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t x = 0; x < n; ++x)
      for (std::uint32_t y : graph.adj[x]) T(Eigen::Index(x), Eigen::Index(y)) = 1.0 / d;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
    lambda_lo = lambda_hi = 1.0 - es.eigenvalues()(Eigen::Index(n) - 2);
  } else {
    // ||P(T + 1)P||_2 = 1 + second eigenvalue: the shift makes the signed top
    // of the mean-zero spectrum the magnitude top
    LinearMap map;
    map.dim = n;
    map.apply = [&graph, d](const std::vector<cplx>& v) {
      std::vector<cplx> w = remove_mean(v);
      std::vector<cplx> out(w.size(), cplx(0.0, 0.0));
      for (std::size_t x = 0; x < w.size(); ++x) {
        cplx acc = w[x];
        for (std::uint32_t y : graph.adj[x]) acc += w[y] / d;
        out[x] = acc;
      }
      return remove_mean(out);
    };
    map.apply_adjoint = map.apply;
    map.hermitian = true;
    map.norm2_upper_hint = 2.0;
    const NormEstimate est = pnorm_estimate(map, 2.0, budget);
    lambda_lo = 2.0 - est.upper;
    lambda_hi = 2.0 - est.lower;
  }

  CheegerBounds out;
  out.lambda = lambda_hi;
  out.lower = d * lambda_lo / 2.0;
  out.upper = d * std::sqrt(2.0 * lambda_hi);
  return out;
}

ExpanderReport is_expander_family(const BoxPtr& box, double tau, std::size_t exact_threshold) {
  ExpanderReport report;
  report.threshold = tau;
  report.expander = true;
  for (int level = 1; level <= box->levels(); ++level) {
    const CayleyGraph& graph = box->component(level);
    const SimpleGraph sg = SimpleGraph::from_cayley(graph);
    LevelExpansion le;
    le.level = level;
    le.modulus = graph.modulus();
    le.order = graph.order();
    le.bounds = cheeger_bounds(sg);
    if (graph.order() <= exact_threshold) {
      le.exact = true;
      le.h = cheeger_exact(sg, exact_threshold);
    }
    report.expander = report.expander && le.certified_lower() >= tau;
    report.levels.push_back(le);
  }
  return report;
}

}  // namespace roelab
