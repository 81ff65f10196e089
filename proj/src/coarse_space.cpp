#include "roelab/coarse_space.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>

namespace roelab {

namespace {

class GraphSpace final : public Space {
 public:
  explicit GraphSpace(GraphPtr g) : g_(std::move(g)) {}

  std::size_t size() const override { return g_->order(); }
  int distance(std::size_t x, std::size_t y) const override {
    return g_->dist(Vertex(x), Vertex(y));
  }
  int diameter() const override { return g_->diameter(); }
  std::vector<std::size_t> ball(std::size_t center, int radius) const override {
    auto b = g_->ball(Vertex(center), radius);
    std::vector<std::size_t> out(b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
  }
  std::size_t max_ball_size(int radius) const override {
    // vertex-transitive: every ball looks like the identity's
    return g_->ball(g_->identity(), radius).size();
  }
  std::vector<ComponentRange> components() const override {
    return {{g_->level(), 0, g_->order()}};
  }
  std::string id() const override {
    return "graph " + to_string(g_->family()) + " m=" + std::to_string(g_->modulus()) +
           " level=" + std::to_string(g_->level());
  }

 private:
  GraphPtr g_;
};

}  // namespace

SpacePtr as_space(const GraphPtr& graph) {
  static std::mutex mu;
  static std::unordered_map<const CayleyGraph*, std::weak_ptr<const Space>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[graph.get()];
  if (auto held = slot.lock()) return held;
  auto fresh = std::make_shared<GraphSpace>(graph);
  slot = fresh;
  return fresh;
}

BoxSpace::BoxSpace(std::vector<GraphPtr> components) : components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("box space needs at least one component");
  offsets_.reserve(components_.size() + 1);
  for (const auto& c : components_) {
    offsets_.push_back(total_);
    total_ += c->order();
  }
  offsets_.push_back(total_);
  for (int i = 1; i <= levels(); ++i) {
    diameter_ = std::max(diameter_, component(i).diameter());
    for (int j = i + 1; j <= levels(); ++j)
      diameter_ = std::max(diameter_, cross_distance(i, j));
  }
}

std::size_t BoxSpace::flat(PointId p) const {
  if (p.level < 1 || p.level > levels() || p.v >= component(p.level).order())
    throw ValidationError("point id outside the box space");
  return offsets_[std::size_t(p.level) - 1] + p.v;
}

PointId BoxSpace::unflat(std::size_t id) const {
  if (id >= total_) throw ValidationError("flat index outside the box space");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), id);
  int level = int(it - offsets_.begin());
  return PointId{level, Vertex(id - offsets_[std::size_t(level) - 1])};
}

int BoxSpace::cross_distance(int i, int j) const {
  return component(i).diameter() + component(j).diameter() + i + j;
}

int BoxSpace::distance_points(PointId p, PointId q) const {
  if (p.level == q.level) return component(p.level).dist(p.v, q.v);
  return cross_distance(p.level, q.level);
}

int BoxSpace::distance(std::size_t x, std::size_t y) const {
  return distance_points(unflat(x), unflat(y));
}

std::vector<std::size_t> BoxSpace::ball(std::size_t center, int radius) const {
  PointId c = unflat(center);
  std::vector<std::size_t> out;
  const std::size_t base = offsets_[std::size_t(c.level) - 1];
  for (Vertex v : component(c.level).ball(c.v, radius)) out.push_back(base + v);
  // cross distances are point-independent: other components are in or out whole
  for (int j = 1; j <= levels(); ++j) {
    if (j == c.level || cross_distance(c.level, j) > radius) continue;
    const std::size_t off = offsets_[std::size_t(j) - 1];
    for (std::size_t v = 0; v < component(j).order(); ++v) out.push_back(off + v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t BoxSpace::max_ball_size(int radius) const {
  std::size_t best = 0;
  for (int i = 1; i <= levels(); ++i) {
    std::size_t within = component(i).ball(component(i).identity(), radius).size();
    for (int j = 1; j <= levels(); ++j)
      if (j != i && cross_distance(i, j) <= radius) within += component(j).order();
    best = std::max(best, within);
  }
  return best;
}

std::vector<ComponentRange> BoxSpace::components() const {
  std::vector<ComponentRange> out;
  out.reserve(components_.size());
  for (int i = 1; i <= levels(); ++i)
    out.push_back({components_[std::size_t(i) - 1]->level(), offsets_[std::size_t(i) - 1],
                   offsets_[std::size_t(i)]});
  return out;
}

std::string BoxSpace::id() const {
  std::string s = "box";
  for (const auto& c : components_)
    s += " " + to_string(c->family()) + ":" + std::to_string(c->modulus());
  return s;
}

BoxPtr assemble_box_space(const QuotientChain& chain, int levels) {
  if (levels < 1) throw ValidationError("box space needs at least one level");
  if (levels > chain.levels()) throw ValidationError("box space exceeds the chain length");
  std::vector<GraphPtr> comps;
  comps.reserve(std::size_t(levels));
  for (int i = 1; i <= levels; ++i) comps.push_back(build_quotient(chain, i));
  return std::make_shared<BoxSpace>(std::move(comps));
}

std::size_t bounded_geometry_profile(const Space& space, int radius) {
  if (radius < 0) throw ValidationError("ball radius must be nonnegative");
  return space.max_ball_size(radius);
}

namespace {

void extend_clique(const std::vector<std::vector<std::uint32_t>>& nbr,
                   std::vector<std::uint32_t>& clique,
                   const std::vector<std::uint32_t>& candidates, int max_dim,
                   std::size_t budget, std::size_t& emitted, RipsComplex& out) {
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    std::uint32_t v = candidates[ci];
    clique.push_back(v);
    if (++emitted > budget) throw ValidationError("rips complex exceeded its simplex budget");
    out.simplices[clique.size() - 1].push_back(clique);
    if (int(clique.size()) <= max_dim) {
      std::vector<std::uint32_t> next;
      std::set_intersection(candidates.begin() + std::ptrdiff_t(ci) + 1, candidates.end(),
                            nbr[v].begin(), nbr[v].end(), std::back_inserter(next));
      if (!next.empty()) extend_clique(nbr, clique, next, max_dim, budget, emitted, out);
    }
    clique.pop_back();
  }
}

}  // namespace

RipsComplex rips_complex(const Space& space, int scale, int max_dim, std::size_t simplex_budget) {
  if (scale < 0) throw ValidationError("rips scale must be nonnegative");
  if (max_dim < 0) throw ValidationError("rips max dimension must be nonnegative");
  const std::size_t n = space.size();

  // upper-neighbor lists at the given scale
  std::vector<std::vector<std::uint32_t>> nbr(n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y : space.ball(x, scale))
      if (y > x) nbr[x].push_back(std::uint32_t(y));

  RipsComplex out;
  out.scale = scale;
  out.simplices.resize(std::size_t(max_dim) + 1);
  std::size_t emitted = 0;
  std::vector<std::uint32_t> clique;
  for (std::size_t x = 0; x < n; ++x) {
    clique.assign(1, std::uint32_t(x));
    if (++emitted > simplex_budget)
      throw ValidationError("rips complex exceeded its simplex budget");
    out.simplices[0].push_back(clique);
    if (max_dim >= 1 && !nbr[x].empty())
      extend_clique(nbr, clique, nbr[x], max_dim, simplex_budget, emitted, out);
  }
  return out;
}

std::string rips_to_text(const RipsComplex& rips) {
  std::string out;
  for (const auto& dim : rips.simplices)
    for (const auto& tuple : dim) {
      for (std::size_t i = 0; i < tuple.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(tuple[i]);
      }
      out += '\n';
    }
  return out;
}

bool verify_net(const Space& space, const std::vector<std::size_t>& subset, int r) {
  if (space.size() > 0 && subset.empty()) return false;
  for (std::size_t s : subset)
    if (s >= space.size()) throw ValidationError("net subset contains an invalid point");
  // r-separated
  for (std::size_t i = 0; i < subset.size(); ++i)
    for (std::size_t j = i + 1; j < subset.size(); ++j)
      if (space.distance(subset[i], subset[j]) < r) return false;
  // r-dense: every point strictly within r of the subset
  for (std::size_t x = 0; x < space.size(); ++x) {
    bool near = false;
    for (std::size_t s : subset)
      if (space.distance(x, s) < r) {
        near = true;
        break;
      }
    if (!near) return false;
  }
  return true;
}

}  // namespace roelab
