#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "roelab/common.hpp"

namespace roelab {

enum class Family { sl2, cyclic, dihedral };

Family family_from_string(const std::string& name);
std::string to_string(Family f);

// Group elements are packed into 64-bit labels; arithmetic is family-specific.
//   sl2:      four residues mod m, 16 bits each, row-major [a b; c d]
//   cyclic:   one residue
//   dihedral: rotation residue in the low word, flip bit at 32
class GroupOps {
 public:
  GroupOps(Family family, std::uint32_t modulus);

  Family family() const { return family_; }
  std::uint32_t modulus() const { return modulus_; }

  std::uint64_t identity() const;
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const;
  std::uint64_t inv(std::uint64_t a) const;

  // entrywise reduction onto the quotient with the smaller modulus
  std::uint64_t reduce(std::uint64_t a, std::uint32_t smaller_modulus) const;

  std::vector<std::uint64_t> default_generators() const;

 private:
  Family family_;
  std::uint32_t modulus_;
};

// Symmetric, duplicate-free generating data. identity_weight is carried for
// measures built on top of the set; it plays no role in the graph itself.
struct GeneratingSet {
  std::vector<std::uint64_t> elements;
  double identity_weight = 0.0;

  void validate(const GroupOps& ops) const;
};

using Vertex = std::uint32_t;

class CayleyGraph;
using GraphPtr = std::shared_ptr<const CayleyGraph>;

// Finite group enumerated by BFS closure from its generators, together with
// the left-invariant word metric d(x,y) = |x^-1 y|. Vertex 0 is the identity
// and vertices are numbered in BFS discovery order, so indices are stable.
class CayleyGraph {
 public:
  static GraphPtr build(Family family, std::uint32_t modulus, int level,
                        GeneratingSet gens, std::size_t closure_budget = 4'000'000);

  std::size_t order() const { return labels_.size(); }
  Family family() const { return ops_.family(); }
  std::uint32_t modulus() const { return ops_.modulus(); }
  int level() const { return level_; }
  const GroupOps& ops() const { return ops_; }
  const GeneratingSet& generating_set() const { return gens_; }

  Vertex identity() const { return 0; }
  std::size_t generator_count() const { return gens_.elements.size(); }
  Vertex generator_vertex(std::size_t g) const { return gen_vertex_[g]; }

  // right action x -> x * s_g  (Cayley edges)
  Vertex act(Vertex x, std::size_t g) const { return action_[x * generator_count() + g]; }

  Vertex mul(Vertex x, Vertex y) const;
  Vertex inv(Vertex x) const;

  int word_length(Vertex x) const { return word_len_[x]; }
  int dist(Vertex x, Vertex y) const { return word_len_[mul(inv(x), y)]; }
  int diameter() const { return diameter_; }

  std::uint64_t label(Vertex x) const { return labels_[x]; }
  std::optional<Vertex> find(std::uint64_t label) const;

  // closed ball in BFS-from-center order
  std::vector<Vertex> ball(Vertex center, int radius) const;

  // number of distinct neighbors of x (loops excluded)
  std::size_t degree(Vertex x) const;

  // |{x : |x| = r}| for r = 0..diameter
  std::vector<std::size_t> sphere_sizes() const;

 private:
  CayleyGraph(GroupOps ops, int level, GeneratingSet gens);

  GroupOps ops_;
  int level_;
  GeneratingSet gens_;
  std::vector<std::uint64_t> labels_;
  std::unordered_map<std::uint64_t, Vertex> index_;
  std::vector<Vertex> gen_vertex_;
  std::vector<Vertex> action_;
  std::vector<std::uint16_t> word_len_;
  int diameter_ = 0;
};

// A nested family of quotients of one infinite parent group; level i holds
// modulus moduli[i-1].
struct QuotientChain {
  Family family = Family::sl2;
  std::vector<std::uint32_t> moduli;
  double laziness_hint = 0.0;  // carried for measure construction downstream

  int levels() const { return int(moduli.size()); }

  // family-specific modulus constraints (sl2: odd, >= 3; others: >= 2 / >= 3)
  void validate() const;

  // divisibility m_i | m_j for i <= j; only required when covers are built
  void validate_nested(int level_j, int level_i) const;

  GeneratingSet generators_for(std::uint32_t modulus) const;
};

GraphPtr build_quotient(const QuotientChain& chain, int level);

// Covering map between two quotient levels. Deck transformations act by left
// multiplication by kernel elements: these are isometries of the word metric
// because the metric is left-invariant, and they act freely and transitively
// on every fiber. The transversal picks the least source vertex per fiber.
struct CoverMap {
  GraphPtr source;  // level j (deeper)
  GraphPtr target;  // level i <= j
  std::vector<Vertex> pi;          // per source vertex
  std::vector<Vertex> kernel;      // deck group, sorted by source vertex id
  std::vector<Vertex> transversal; // per target vertex, least preimage
  std::vector<std::uint32_t> deck_index;  // x = kernel[deck_index[x]] * transversal[pi[x]]
  int radius = 0;                  // certified metric-cover radius

  std::size_t deck_order() const { return kernel.size(); }
  Vertex deck_apply(std::size_t d, Vertex x) const { return source->mul(kernel[d], x); }

  // position of a kernel vertex within kernel; throws if v is not in the kernel
  std::size_t kernel_slot(Vertex v) const;

  std::unordered_map<Vertex, std::uint32_t> kernel_pos;  // filled by quotient_cover
};

using CoverPtr = std::shared_ptr<const CoverMap>;

CoverPtr quotient_cover(const QuotientChain& chain, int level_j, int level_i);

// Largest eps such that pi restricted to every open ball B(x, eps) is an
// isometry onto B(pi(x), eps). An identity cover yields diameter + 1: no ball
// ever fails, so the scan runs out at the whole graph (the "infinite" sentinel).
int metric_cover_radius(const CayleyGraph& source, const CayleyGraph& target,
                        const std::vector<Vertex>& pi);

std::vector<Vertex> deck_orbit(const CoverMap& cover, Vertex v);

}  // namespace roelab
