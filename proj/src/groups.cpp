#include "roelab/groups.hpp"

#include <algorithm>
#include <deque>
#include <unordered_set>

namespace roelab {

namespace {

constexpr std::uint64_t kMask16 = 0xffffULL;

std::uint64_t pack_sl2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return a | (b << 16) | (c << 32) | (d << 48);
}

struct Sl2 {
  std::uint64_t a, b, c, d;
  explicit Sl2(std::uint64_t p)
      : a(p & kMask16), b((p >> 16) & kMask16), c((p >> 32) & kMask16), d(p >> 48) {}
};

}  // namespace

Family family_from_string(const std::string& name) {
  if (name == "sl2") return Family::sl2;
  if (name == "cyclic") return Family::cyclic;
  if (name == "dihedral") return Family::dihedral;
  throw ValidationError("unknown family '" + name + "' (expected sl2, cyclic, or dihedral)");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::sl2: return "sl2";
    case Family::cyclic: return "cyclic";
    case Family::dihedral: return "dihedral";
  }
  return "?";
}

GroupOps::GroupOps(Family family, std::uint32_t modulus) : family_(family), modulus_(modulus) {
  if (modulus < 2) throw ValidationError("modulus must be at least 2");
  if (family == Family::sl2 && modulus > 0xffff)
    throw ValidationError("sl2 modulus exceeds the 16-bit packing limit");
}

std::uint64_t GroupOps::identity() const {
  switch (family_) {
    case Family::sl2: return pack_sl2(1, 0, 0, 1 % modulus_);
    case Family::cyclic: return 0;
    case Family::dihedral: return 0;
  }
  return 0;
}

std::uint64_t GroupOps::mul(std::uint64_t x, std::uint64_t y) const {
  const std::uint64_t m = modulus_;
  switch (family_) {
    case Family::sl2: {
      Sl2 u(x), v(y);
      return pack_sl2((u.a * v.a + u.b * v.c) % m, (u.a * v.b + u.b * v.d) % m,
                      (u.c * v.a + u.d * v.c) % m, (u.c * v.b + u.d * v.d) % m);
    }
    case Family::cyclic:
      return (x + y) % m;
    case Family::dihedral: {
      // (r^a f^e)(r^c f^g) = r^(a + c or a - c) f^(e xor g)
      std::uint64_t a = x & 0xffffffffULL, e = x >> 32;
      std::uint64_t c = y & 0xffffffffULL, g = y >> 32;
      std::uint64_t rot = e ? (a + m - c % m) % m : (a + c) % m;
      return rot | ((e ^ g) << 32);
    }
  }
  return 0;
}

std::uint64_t GroupOps::inv(std::uint64_t x) const {
  const std::uint64_t m = modulus_;
  switch (family_) {
    case Family::sl2: {
      Sl2 u(x);  // det = 1, so the inverse is the adjugate
      return pack_sl2(u.d, (m - u.b % m) % m, (m - u.c % m) % m, u.a);
    }
    case Family::cyclic:
      return (m - x % m) % m;
    case Family::dihedral: {
      std::uint64_t a = x & 0xffffffffULL, e = x >> 32;
      std::uint64_t rot = e ? a : (m - a % m) % m;
      return rot | (e << 32);
    }
  }
  return 0;
}

std::uint64_t GroupOps::reduce(std::uint64_t x, std::uint32_t smaller) const {
  switch (family_) {
    case Family::sl2: {
      Sl2 u(x);
      return pack_sl2(u.a % smaller, u.b % smaller, u.c % smaller, u.d % smaller);
    }
    case Family::cyclic:
      return x % smaller;
    case Family::dihedral:
      return (x & 0xffffffffULL) % smaller | (x & (1ULL << 32));
  }
  return 0;
}

std::vector<std::uint64_t> GroupOps::default_generators() const {
  const std::uint64_t m = modulus_;
  std::vector<std::uint64_t> gens;
  switch (family_) {
    case Family::sl2: {
      // [[1,2],[0,1]] and [[1,0],[2,1]] generate a free group of rank 2 in
      // SL2(Z) (Sanov); their reductions generate the odd-modulus quotients.
      gens = {pack_sl2(1, 2 % m, 0, 1), pack_sl2(1, 0, 2 % m, 1)};
      break;
    }
    case Family::cyclic:
      gens = {1 % m};
      break;
    case Family::dihedral:
      gens = {1 % m, 1ULL << 32};
      break;
  }
  // canonical order g_1, g_2, ..., g_1^-1, g_2^-1: reductions of this list
  // onto a smaller modulus land on the same positions, which keeps generator
  // indices aligned across the levels of a chain
  std::vector<std::uint64_t> closed;
  for (std::uint64_t g : gens) closed.push_back(g);
  for (std::uint64_t g : gens)
    if (std::find(closed.begin(), closed.end(), inv(g)) == closed.end())
      closed.push_back(inv(g));
  return closed;
}

void GeneratingSet::validate(const GroupOps& ops) const {
  if (elements.empty()) throw ValidationError("generating set is empty");
  std::unordered_set<std::uint64_t> seen(elements.begin(), elements.end());
  if (seen.size() != elements.size())
    throw ValidationError("generating set has duplicate elements");
  if (seen.count(ops.identity()))
    throw ValidationError("generating set contains the identity");
  for (std::uint64_t g : elements)
    if (!seen.count(ops.inv(g)))
      throw ValidationError("generating set is not symmetric: inverse missing");
  if (identity_weight < 0.0 || identity_weight >= 1.0)
    throw ValidationError("identity weight must lie in [0, 1)");
}

CayleyGraph::CayleyGraph(GroupOps ops, int level, GeneratingSet gens)
    : ops_(ops), level_(level), gens_(std::move(gens)) {}

GraphPtr CayleyGraph::build(Family family, std::uint32_t modulus, int level,
                            GeneratingSet gens, std::size_t closure_budget) {
  GroupOps ops(family, modulus);
  gens.validate(ops);
  auto graph = std::shared_ptr<CayleyGraph>(new CayleyGraph(ops, level, std::move(gens)));
  auto& g = *graph;

  const std::size_t ngen = g.gens_.elements.size();
  g.labels_.push_back(ops.identity());
  g.index_.emplace(ops.identity(), 0);
  g.word_len_.push_back(0);

  // BFS closure; discovery order fixes the vertex numbering
  for (std::size_t head = 0; head < g.labels_.size(); ++head) {
    if (g.labels_.size() > closure_budget)
      throw ValidationError("not generated: closure exceeded its budget");
    const std::uint64_t x = g.labels_[head];
    for (std::size_t j = 0; j < ngen; ++j) {
      std::uint64_t y = ops.mul(x, g.gens_.elements[j]);
      auto [it, fresh] = g.index_.emplace(y, Vertex(g.labels_.size()));
      if (fresh) {
        g.labels_.push_back(y);
        g.word_len_.push_back(std::uint16_t(g.word_len_[head] + 1));
      }
    }
  }

  const std::size_t n = g.labels_.size();
  g.action_.resize(n * ngen);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t j = 0; j < ngen; ++j)
      g.action_[x * ngen + j] = g.index_.at(ops.mul(g.labels_[x], g.gens_.elements[j]));
  g.gen_vertex_.resize(ngen);
  for (std::size_t j = 0; j < ngen; ++j) g.gen_vertex_[j] = g.index_.at(g.gens_.elements[j]);
  g.diameter_ = int(*std::max_element(g.word_len_.begin(), g.word_len_.end()));
  return graph;
}

Vertex CayleyGraph::mul(Vertex x, Vertex y) const {
  return index_.at(ops_.mul(labels_[x], labels_[y]));
}

Vertex CayleyGraph::inv(Vertex x) const { return index_.at(ops_.inv(labels_[x])); }

std::optional<Vertex> CayleyGraph::find(std::uint64_t label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Vertex> CayleyGraph::ball(Vertex center, int radius) const {
  std::vector<Vertex> out{center};
  if (radius <= 0) return out;
  std::vector<std::uint8_t> seen(order(), 0);
  seen[center] = 1;
  std::size_t frontier_begin = 0;
  for (int r = 0; r < radius; ++r) {
    const std::size_t frontier_end = out.size();
    if (frontier_begin == frontier_end) break;
    for (std::size_t i = frontier_begin; i < frontier_end; ++i)
      for (std::size_t j = 0; j < generator_count(); ++j) {
        Vertex y = act(out[i], j);
        if (!seen[y]) {
          seen[y] = 1;
          out.push_back(y);
        }
      }
    frontier_begin = frontier_end;
  }
  return out;
}

std::size_t CayleyGraph::degree(Vertex x) const {
  std::vector<Vertex> nb;
  nb.reserve(generator_count());
  for (std::size_t j = 0; j < generator_count(); ++j) nb.push_back(act(x, j));
  std::sort(nb.begin(), nb.end());
  nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  return nb.size();
}

std::vector<std::size_t> CayleyGraph::sphere_sizes() const {
  std::vector<std::size_t> s(std::size_t(diameter_) + 1, 0);
  for (auto w : word_len_) ++s[w];
  return s;
}

void QuotientChain::validate() const {
  if (moduli.empty()) throw ValidationError("quotient chain needs at least one modulus");
  for (std::uint32_t m : moduli) {
    switch (family) {
      case Family::sl2:
        if (m < 3) throw ValidationError("sl2 modulus must be at least 3");
        if (m % 2 == 0)
          throw ValidationError("sl2 modulus must be odd: the default generators degenerate mod 2");
        break;
      case Family::cyclic:
        if (m < 2) throw ValidationError("cyclic modulus must be at least 2");
        break;
      case Family::dihedral:
        if (m < 3) throw ValidationError("dihedral modulus must be at least 3");
        break;
    }
  }
}

void QuotientChain::validate_nested(int level_j, int level_i) const {
  const std::uint32_t mj = moduli.at(std::size_t(level_j) - 1);
  const std::uint32_t mi = moduli.at(std::size_t(level_i) - 1);
  if (mj % mi != 0)
    throw ValidationError("not nested: modulus " + std::to_string(mi) + " does not divide " +
                          std::to_string(mj));
}

GeneratingSet QuotientChain::generators_for(std::uint32_t modulus) const {
  GeneratingSet s;
  s.elements = GroupOps(family, modulus).default_generators();
  s.identity_weight = laziness_hint;
  return s;
}

GraphPtr build_quotient(const QuotientChain& chain, int level) {
  chain.validate();
  if (level < 1 || level > chain.levels())
    throw ValidationError("level out of range for the quotient chain");
  const std::uint32_t m = chain.moduli[std::size_t(level) - 1];
  return CayleyGraph::build(chain.family, m, level, chain.generators_for(m));
}

namespace {

// all-pairs open-ball isometry check at one center; the open ball of radius
// eps is the closed ball of radius eps - 1
bool ball_isometric(const CayleyGraph& src, const CayleyGraph& tgt,
                    const std::vector<Vertex>& pi, Vertex center, int eps) {
  auto bs = src.ball(center, eps - 1);
  auto bt = tgt.ball(pi[center], eps - 1);
  if (bs.size() != bt.size()) return false;
  for (std::size_t i = 0; i < bs.size(); ++i)
    for (std::size_t j = i + 1; j < bs.size(); ++j)
      if (tgt.dist(pi[bs[i]], pi[bs[j]]) != src.dist(bs[i], bs[j])) return false;
  return true;
}

// Full scans get expensive on big sources. Left translations carry ball
// failures between centers (the metric is left-invariant and pi intertwines
// them), so scanning the identity alone is exact; we keep the full scan on
// small sources anyway as a running cross-check.
constexpr std::size_t kFullScanLimit = 6000;

}  // namespace

int metric_cover_radius(const CayleyGraph& source, const CayleyGraph& target,
                        const std::vector<Vertex>& pi) {
  if (pi.size() != source.order())
    throw ValidationError("vertex map size does not match the source order");
  const bool full_scan = source.order() <= kFullScanLimit;
  const int cap = source.diameter() + 1;
  int radius = 1;  // open balls of radius 1 are singletons
  for (int eps = 2; eps <= cap; ++eps) {
    bool ok = ball_isometric(source, target, pi, source.identity(), eps);
    if (ok && full_scan)
      for (Vertex x = 0; x < source.order() && ok; ++x)
        ok = ball_isometric(source, target, pi, x, eps);
    if (!ok) break;
    radius = eps;
  }
  return radius;
}

CoverPtr quotient_cover(const QuotientChain& chain, int level_j, int level_i) {
  if (level_i > level_j) throw ValidationError("cover requires target level <= source level");
  chain.validate_nested(level_j, level_i);

  auto cover = std::make_shared<CoverMap>();
  cover->source = build_quotient(chain, level_j);
  cover->target = build_quotient(chain, level_i);
  const auto& src = *cover->source;
  const auto& tgt = *cover->target;

  if (src.generator_count() != tgt.generator_count())
    throw InvariantViolation("cover map: generator counts differ between the levels");
  for (std::size_t g = 0; g < src.generator_count(); ++g)
    if (src.ops().reduce(src.generating_set().elements[g], tgt.modulus()) !=
        tgt.generating_set().elements[g])
      throw InvariantViolation("cover map: generator lists are not aligned across the levels");

  cover->pi.resize(src.order());
  for (Vertex x = 0; x < src.order(); ++x) {
    auto t = tgt.find(src.ops().reduce(src.label(x), tgt.modulus()));
    if (!t) throw InvariantViolation("cover map: reduced element missing from the target closure");
    cover->pi[x] = *t;
  }

  std::vector<std::size_t> fiber_size(tgt.order(), 0);
  for (Vertex x = 0; x < src.order(); ++x) ++fiber_size[cover->pi[x]];
  for (std::size_t f : fiber_size)
    if (f != fiber_size[0]) throw InvariantViolation("cover map: fiber sizes unequal");

  cover->transversal.assign(tgt.order(), Vertex(src.order()));
  for (Vertex x = 0; x < src.order(); ++x) {
    Vertex& slot = cover->transversal[cover->pi[x]];
    if (x < slot) slot = x;  // least source vertex per fiber
  }

  for (Vertex x = 0; x < src.order(); ++x)
    if (cover->pi[x] == tgt.identity()) cover->kernel.push_back(x);
  std::sort(cover->kernel.begin(), cover->kernel.end());
  for (std::size_t d = 0; d < cover->kernel.size(); ++d)
    cover->kernel_pos.emplace(cover->kernel[d], std::uint32_t(d));
  if (cover->kernel.size() != fiber_size[0])
    throw InvariantViolation("cover map: kernel size differs from the fiber size");

  cover->deck_index.resize(src.order());
  for (Vertex x = 0; x < src.order(); ++x) {
    Vertex base = cover->transversal[cover->pi[x]];
    Vertex k = src.mul(x, src.inv(base));
    auto it = cover->kernel_pos.find(k);
    if (it == cover->kernel_pos.end())
      throw InvariantViolation("cover map: deck action not transitive on a fiber");
    cover->deck_index[x] = it->second;
  }

  cover->radius = metric_cover_radius(src, tgt, cover->pi);
  return cover;
}

std::size_t CoverMap::kernel_slot(Vertex v) const {
  auto it = kernel_pos.find(v);
  if (it == kernel_pos.end()) throw InvariantViolation("vertex is not a deck element");
  return it->second;
}

std::vector<Vertex> deck_orbit(const CoverMap& cover, Vertex v) {
  if (v >= cover.source->order()) throw ValidationError("vertex outside the cover source");
  std::vector<Vertex> orbit;
  orbit.reserve(cover.deck_order());
  for (std::size_t d = 0; d < cover.deck_order(); ++d) orbit.push_back(cover.deck_apply(d, v));
  std::sort(orbit.begin(), orbit.end());
  return orbit;
}

}  // namespace roelab
