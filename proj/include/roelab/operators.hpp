#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "roelab/coarse_space.hpp"

namespace roelab {

using cplx = std::complex<double>;

// Sparse operator of k x k complex blocks indexed by the points of a Space.
// Entries are stored row-major by (x, y) key; exact-zero blocks are pruned at
// build time so the propagation always reflects genuine support.
class BlockOperator {
 public:
  class Builder {
   public:
    Builder(SpacePtr space, int block_dim);
    // accumulates into the (x, y) block
    void add(std::size_t x, std::size_t y, const cplx* block);
    void add(std::size_t x, std::size_t y, cplx scalar);  // k = 1 convenience
    void add_scaled_identity(std::size_t x, std::size_t y, cplx scale);
    BlockOperator finish();

   private:
    SpacePtr space_;
    int k_;
    std::vector<std::uint64_t> keys_;
    std::vector<cplx> data_;  // parallel to keys_, k*k apiece
  };

  BlockOperator(SpacePtr space, int block_dim);  // zero operator

  const SpacePtr& space() const { return space_; }
  std::size_t points() const { return space_->size(); }
  int block_dim() const { return k_; }
  std::size_t dim() const { return points() * std::size_t(k_); }
  std::size_t entry_count() const { return keys_.size(); }

  // nullptr when the block is absent
  const cplx* block(std::size_t x, std::size_t y) const;

  // f(x, y, const cplx* block) over stored entries in key order
  template <typename F>
  void for_each(F&& f) const {
    const std::size_t n = points();
    for (std::size_t i = 0; i < keys_.size(); ++i)
      f(keys_[i] / n, keys_[i] % n, data_.data() + i * std::size_t(k_) * std::size_t(k_));
  }

  int propagation() const;
  bool is_hermitian() const;
  bool is_real() const;

  BlockOperator adjoint() const;

  std::vector<cplx> apply(const std::vector<cplx>& xi) const;
  std::vector<cplx> apply_adjoint(const std::vector<cplx>& xi) const;

  friend BlockOperator operator+(const BlockOperator& a, const BlockOperator& b);
  friend BlockOperator operator-(const BlockOperator& a, const BlockOperator& b);
  friend BlockOperator operator*(const BlockOperator& a, const BlockOperator& b);
  friend BlockOperator operator*(cplx scale, const BlockOperator& a);

  Eigen::MatrixXcd to_dense() const;  // flattened over point x internal index

  static BlockOperator identity(SpacePtr space, int block_dim);

 private:
  void index_rows();
  static void require_compatible(const BlockOperator& a, const BlockOperator& b);

  SpacePtr space_;
  int k_;
  std::vector<std::uint64_t> keys_;  // x * points + y, sorted
  std::vector<cplx> data_;
  std::vector<std::size_t> row_begin_;  // points + 1 offsets into keys_
  mutable std::optional<int> prop_;
};

cplx trace(const BlockOperator& T);
int propagation(const BlockOperator& T);

struct NormBudget {
  int restarts = 8;
  int iterations = 200;
  std::uint64_t seed = 0x5eedULL;
  // extra start vectors (flattened, any nonzero length-dim vectors)
  std::vector<std::vector<cplx>> warm_starts;
};

struct NormEstimate {
  double p = 2.0;
  double lower = 0.0;
  double upper = 0.0;
  bool wide = false;  // budget ran out before the interval stabilized
  int iterations = 0;
  std::vector<std::string> methods;
};

// Interval-sound p -> p operator norm estimate on l^p(points x internal).
//   lower: achieved ratios ||T xi||_p / ||xi||_p (power iteration with the
//          signed-power duality map, basis candidates, warm starts)
//   upper: exact spectral value at p = 2; otherwise the smaller of the
//          Riesz-Thorin interpolation bounds through p = 2 and through 1/inf
// For p = 2 the interval is tight: upper - lower <= 1e-8 * upper.
NormEstimate pnorm_estimate(const BlockOperator& T, double p, const NormBudget& budget = {});

// Same estimator over a matrix-free map (used for operator powers, where
// materializing the matrix would waste both time and accuracy). The 1- and
// inf-norm hints, when finite, must be true upper bounds for the map.
struct LinearMap {
  std::size_t dim = 0;
  std::function<std::vector<cplx>(const std::vector<cplx>&)> apply;
  std::function<std::vector<cplx>(const std::vector<cplx>&)> apply_adjoint;
  bool hermitian = false;
  double norm1_hint = std::numeric_limits<double>::infinity();
  double norminf_hint = std::numeric_limits<double>::infinity();
  double norm2_upper_hint = std::numeric_limits<double>::infinity();
};

NormEstimate pnorm_estimate(const LinearMap& map, double p, const NormBudget& budget = {});

// Dense convenience used by tests and by the untwisting norm checks.
NormEstimate pnorm_estimate(const Eigen::MatrixXcd& dense, double p, const NormBudget& budget = {});

struct TruncationResult {
  BlockOperator truncated;
  BlockOperator removed;
  NormEstimate removed_mass;
};

TruncationResult truncate_propagation(const BlockOperator& T, int S, double p = 2.0,
                                      const NormBudget& budget = {});

struct GhostEntry {
  int R = 0;
  int level = 1;
  double eps = 0.0;        // certified lower endpoint of the restricted norm
  double eps_upper = 0.0;  // matching upper endpoint
};

struct GhostProfile {
  std::vector<GhostEntry> entries;
  double at(int R, int level) const;
};

// eps(R, i) = max over centers x in component i of the p -> p norm of T
// restricted to columns supported in the closed ball B(x, R). Single-point
// supports (R = 0, k = 1) are exact column norms. Larger R searches inherit
// the best vector found at the previous radius, so eps is monotone in R.
GhostProfile ghost_profile(const BlockOperator& T, const std::vector<int>& R_list, double p,
                           const NormBudget& budget = {});

// Sparse triple serialization; doubles are written as hex floats so the
// round-trip is bit-exact.
void write_operator(std::ostream& out, const BlockOperator& T);
BlockOperator read_operator(std::istream& in, SpacePtr space);

// deterministic sparse test operator: `entries` positions drawn without
// replacement from {(x, y) : d(x,y) <= prop}, standard complex gaussian values
BlockOperator random_operator(SpacePtr space, int prop, std::size_t entries, std::uint64_t seed,
                              int block_dim = 1);

}  // namespace roelab
