#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "roelab/groups.hpp"

namespace roelab {

// One component of a space: its level tag and its flat index range.
struct ComponentRange {
  int level = 1;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Metric index set for operators: either one Cayley graph or a box space.
// Points are flat indices in [0, size).
class Space {
 public:
  virtual ~Space() = default;
  virtual std::size_t size() const = 0;
  virtual int distance(std::size_t x, std::size_t y) const = 0;
  virtual int diameter() const = 0;
  // closed ball as a sorted list of flat indices
  virtual std::vector<std::size_t> ball(std::size_t center, int radius) const = 0;
  // max over centers of |B(x, R)|
  virtual std::size_t max_ball_size(int radius) const = 0;
  virtual std::vector<ComponentRange> components() const = 0;
  // identifies the space in serialized operator headers
  virtual std::string id() const = 0;
};

using SpacePtr = std::shared_ptr<const Space>;

// Memoized per graph instance, so operators built independently over the same
// graph share one Space object and compose freely.
SpacePtr as_space(const GraphPtr& graph);

struct PointId {
  int level = 1;  // 1-based
  Vertex v = 0;
};

// Disjoint union of quotient Cayley graphs. Within a component the metric is
// the word metric; across components i != j it is the constant
// diam_i + diam_j + i + j, which dominates i + j and satisfies the triangle
// inequality (see docs/metric.md).
class BoxSpace final : public Space {
 public:
  explicit BoxSpace(std::vector<GraphPtr> components);

  std::size_t size() const override { return total_; }
  int distance(std::size_t x, std::size_t y) const override;
  int diameter() const override { return diameter_; }
  std::vector<std::size_t> ball(std::size_t center, int radius) const override;
  std::size_t max_ball_size(int radius) const override;
  std::vector<ComponentRange> components() const override;
  std::string id() const override;

  int levels() const { return int(components_.size()); }
  const CayleyGraph& component(int level) const { return *components_.at(std::size_t(level) - 1); }
  GraphPtr component_ptr(int level) const { return components_.at(std::size_t(level) - 1); }

  std::size_t flat(PointId p) const;
  PointId unflat(std::size_t id) const;
  int distance_points(PointId p, PointId q) const;
  int cross_distance(int level_i, int level_j) const;

 private:
  std::vector<GraphPtr> components_;
  std::vector<std::size_t> offsets_;  // per level, plus total at the end
  std::size_t total_ = 0;
  int diameter_ = 0;
};

using BoxPtr = std::shared_ptr<const BoxSpace>;

BoxPtr assemble_box_space(const QuotientChain& chain, int levels);

std::size_t bounded_geometry_profile(const Space& space, int radius);

struct RipsComplex {
  int scale = 0;
  // simplices[d] lists (d+1)-tuples of flat indices, each sorted, the list
  // itself in lexicographic order
  std::vector<std::vector<std::vector<std::uint32_t>>> simplices;

  std::size_t count(int dim) const {
    return dim < int(simplices.size()) ? simplices[std::size_t(dim)].size() : 0;
  }
};

RipsComplex rips_complex(const Space& space, int scale, int max_dim,
                         std::size_t simplex_budget = 5'000'000);

// one sorted tuple per line, entries space-separated
std::string rips_to_text(const RipsComplex& rips);

bool verify_net(const Space& space, const std::vector<std::size_t>& subset, int r);

}  // namespace roelab
