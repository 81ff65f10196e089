#include "roelab/operators.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace roelab {

namespace {

bool block_is_zero(const cplx* b, int k) {
  for (int i = 0; i < k * k; ++i)
    if (b[i] != cplx(0.0, 0.0)) return false;
  return true;
}

// c += a * b for row-major k x k blocks
void block_mac(cplx* c, const cplx* a, const cplx* b, int k) {
  for (int i = 0; i < k; ++i)
    for (int l = 0; l < k; ++l) {
      const cplx ail = a[i * k + l];
      if (ail == cplx(0.0, 0.0)) continue;
      for (int j = 0; j < k; ++j) c[i * k + j] += ail * b[l * k + j];
    }
}

}  // namespace

BlockOperator::Builder::Builder(SpacePtr space, int block_dim)
    : space_(std::move(space)), k_(block_dim) {
  if (!space_) throw ValidationError("operator needs a space");
  if (k_ < 1) throw ValidationError("block dimension must be positive");
}

void BlockOperator::Builder::add(std::size_t x, std::size_t y, const cplx* block) {
  const std::size_t n = space_->size();
  if (x >= n || y >= n) throw ValidationError("operator entry outside the space");
  keys_.push_back(std::uint64_t(x) * n + y);
  data_.insert(data_.end(), block, block + std::size_t(k_) * std::size_t(k_));
}

void BlockOperator::Builder::add(std::size_t x, std::size_t y, cplx scalar) {
  if (k_ != 1) throw ValidationError("scalar add requires block dimension 1");
  add(x, y, &scalar);
}

void BlockOperator::Builder::add_scaled_identity(std::size_t x, std::size_t y, cplx scale) {
  std::vector<cplx> blk(std::size_t(k_) * std::size_t(k_), cplx(0.0, 0.0));
  for (int i = 0; i < k_; ++i) blk[std::size_t(i) * std::size_t(k_) + std::size_t(i)] = scale;
  add(x, y, blk.data());
}

BlockOperator BlockOperator::Builder::finish() {
  BlockOperator op(space_, k_);
  const std::size_t kk = std::size_t(k_) * std::size_t(k_);
  std::vector<std::size_t> order(keys_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return keys_[a] < keys_[b]; });

  for (std::size_t i = 0; i < order.size();) {
    const std::uint64_t key = keys_[order[i]];
    std::vector<cplx> blk(kk, cplx(0.0, 0.0));
    for (; i < order.size() && keys_[order[i]] == key; ++i) {
      const cplx* src = data_.data() + order[i] * kk;
      for (std::size_t j = 0; j < kk; ++j) blk[j] += src[j];
    }
    if (!block_is_zero(blk.data(), k_)) {
      op.keys_.push_back(key);
      op.data_.insert(op.data_.end(), blk.begin(), blk.end());
    }
  }
  op.index_rows();
  return op;
}

BlockOperator::BlockOperator(SpacePtr space, int block_dim)
    : space_(std::move(space)), k_(block_dim) {
  if (!space_) throw ValidationError("operator needs a space");
  if (k_ < 1) throw ValidationError("block dimension must be positive");
  index_rows();
}

void BlockOperator::index_rows() {
  const std::size_t n = points();
  row_begin_.assign(n + 1, 0);
  for (std::uint64_t key : keys_) ++row_begin_[key / n + 1];
  for (std::size_t i = 0; i < n; ++i) row_begin_[i + 1] += row_begin_[i];
}

const cplx* BlockOperator::block(std::size_t x, std::size_t y) const {
  const std::uint64_t key = std::uint64_t(x) * points() + y;
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return nullptr;
  return data_.data() + std::size_t(it - keys_.begin()) * std::size_t(k_) * std::size_t(k_);
}

int BlockOperator::propagation() const {
  if (!prop_) {
    int p = 0;
    const std::size_t n = points();
    for (std::uint64_t key : keys_) p = std::max(p, space_->distance(key / n, key % n));
    prop_ = p;
  }
  return *prop_;
}

bool BlockOperator::is_hermitian() const {
  const std::size_t n = points();
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const std::size_t x = keys_[i] / n, y = keys_[i] % n;
    const cplx* a = data_.data() + i * std::size_t(k_) * std::size_t(k_);
    const cplx* b = block(y, x);
    if (!b) return false;
    for (int r = 0; r < k_; ++r)
      for (int c = 0; c < k_; ++c)
        if (a[r * k_ + c] != std::conj(b[c * k_ + r])) return false;
  }
  return true;
}

bool BlockOperator::is_real() const {
  for (const cplx& v : data_)
    if (v.imag() != 0.0) return false;
  return true;
}

BlockOperator BlockOperator::adjoint() const {
  Builder b(space_, k_);
  const std::size_t n = points();
  std::vector<cplx> blk(std::size_t(k_) * std::size_t(k_));
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const std::size_t x = keys_[i] / n, y = keys_[i] % n;
    const cplx* a = data_.data() + i * blk.size();
    for (int r = 0; r < k_; ++r)
      for (int c = 0; c < k_; ++c) blk[std::size_t(r) * std::size_t(k_) + std::size_t(c)] = std::conj(a[c * k_ + r]);
    b.add(y, x, blk.data());
  }
  return b.finish();
}

std::vector<cplx> BlockOperator::apply(const std::vector<cplx>& xi) const {
  if (xi.size() != dim()) throw ValidationError("vector length does not match the operator");
  const std::size_t n = points();
  const std::size_t kk = std::size_t(k_) * std::size_t(k_);
  std::vector<cplx> out(dim(), cplx(0.0, 0.0));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t e = row_begin_[x]; e < row_begin_[x + 1]; ++e) {
      const std::size_t y = keys_[e] % n;
      const cplx* blk = data_.data() + e * kk;
      if (k_ == 1) {
        out[x] += blk[0] * xi[y];
      } else {
        for (int r = 0; r < k_; ++r) {
          cplx acc(0.0, 0.0);
          for (int c = 0; c < k_; ++c) acc += blk[r * k_ + c] * xi[y * std::size_t(k_) + std::size_t(c)];
          out[x * std::size_t(k_) + std::size_t(r)] += acc;
        }
      }
    }
  return out;
}

std::vector<cplx> BlockOperator::apply_adjoint(const std::vector<cplx>& xi) const {
  if (xi.size() != dim()) throw ValidationError("vector length does not match the operator");
  const std::size_t n = points();
  const std::size_t kk = std::size_t(k_) * std::size_t(k_);
  std::vector<cplx> out(dim(), cplx(0.0, 0.0));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t e = row_begin_[x]; e < row_begin_[x + 1]; ++e) {
      const std::size_t y = keys_[e] % n;
      const cplx* blk = data_.data() + e * kk;
      if (k_ == 1) {
        out[y] += std::conj(blk[0]) * xi[x];
      } else {
        for (int c = 0; c < k_; ++c) {
          cplx acc(0.0, 0.0);
          for (int r = 0; r < k_; ++r) acc += std::conj(blk[r * k_ + c]) * xi[x * std::size_t(k_) + std::size_t(r)];
          out[y * std::size_t(k_) + std::size_t(c)] += acc;
        }
      }
    }
  return out;
}

void BlockOperator::require_compatible(const BlockOperator& a, const BlockOperator& b) {
  if (a.space_.get() != b.space_.get())
    throw InvariantViolation("operator space mismatch: operands live on different spaces");
  if (a.k_ != b.k_)
    throw InvariantViolation("operator block dimension mismatch");
}

BlockOperator operator+(const BlockOperator& a, const BlockOperator& b) {
  BlockOperator::require_compatible(a, b);
  BlockOperator::Builder out(a.space_, a.k_);
  a.for_each([&](std::size_t x, std::size_t y, const cplx* blk) { out.add(x, y, blk); });
  b.for_each([&](std::size_t x, std::size_t y, const cplx* blk) { out.add(x, y, blk); });
  return out.finish();
}

BlockOperator operator-(const BlockOperator& a, const BlockOperator& b) {
  return a + (cplx(-1.0, 0.0) * b);
}

BlockOperator operator*(cplx scale, const BlockOperator& a) {
  BlockOperator out = a;
  for (cplx& v : out.data_) v *= scale;
  out.prop_.reset();
  // scaling by zero empties the support
  if (scale == cplx(0.0, 0.0)) {
    out.keys_.clear();
    out.data_.clear();
    out.index_rows();
  }
  return out;
}

BlockOperator operator*(const BlockOperator& a, const BlockOperator& b) {
  BlockOperator::require_compatible(a, b);
  const std::size_t n = a.points();
  const std::size_t kk = std::size_t(a.k_) * std::size_t(a.k_);

  // sparse row-by-row product; falls back to a dense pass when the sparse
  // work estimate is worse than cubic-dense (e.g. averaging projections)
  double sparse_work = double(a.keys_.size()) * (double(b.keys_.size()) / double(n) + 1.0);
  if (a.dim() <= 2048 && sparse_work > 4e7) {
    Eigen::MatrixXcd d = a.to_dense() * b.to_dense();
    BlockOperator::Builder out(a.space_, a.k_);
    std::vector<cplx> blk(kk);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y) {
        bool nz = false;
        for (int r = 0; r < a.k_; ++r)
          for (int c = 0; c < a.k_; ++c) {
            blk[std::size_t(r) * std::size_t(a.k_) + std::size_t(c)] =
                d(Eigen::Index(x) * a.k_ + r, Eigen::Index(y) * a.k_ + c);
            nz |= blk[std::size_t(r) * std::size_t(a.k_) + std::size_t(c)] != cplx(0.0, 0.0);
          }
        if (nz) out.add(x, y, blk.data());
      }
    return out.finish();
  }

  std::unordered_map<std::uint64_t, std::vector<cplx>> acc;
  acc.reserve(a.keys_.size() * 2);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t e = a.row_begin_[x]; e < a.row_begin_[x + 1]; ++e) {
      const std::size_t z = a.keys_[e] % n;
      const cplx* ablk = a.data_.data() + e * kk;
      for (std::size_t f = b.row_begin_[z]; f < b.row_begin_[z + 1]; ++f) {
        const std::size_t y = b.keys_[f] % n;
        auto [it, fresh] = acc.try_emplace(std::uint64_t(x) * n + y);
        if (fresh) it->second.assign(kk, cplx(0.0, 0.0));
        block_mac(it->second.data(), ablk, b.data_.data() + f * kk, a.k_);
      }
    }

  BlockOperator::Builder out(a.space_, a.k_);
  for (const auto& [key, blk] : acc) out.add(key / n, key % n, blk.data());
  return out.finish();
}

Eigen::MatrixXcd BlockOperator::to_dense() const {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(Eigen::Index(dim()), Eigen::Index(dim()));
  for_each([&](std::size_t x, std::size_t y, const cplx* blk) {
    for (int r = 0; r < k_; ++r)
      for (int c = 0; c < k_; ++c)
        d(Eigen::Index(x) * k_ + r, Eigen::Index(y) * k_ + c) = blk[r * k_ + c];
  });
  return d;
}

BlockOperator BlockOperator::identity(SpacePtr space, int block_dim) {
  Builder b(space, block_dim);
  for (std::size_t x = 0; x < space->size(); ++x) b.add_scaled_identity(x, x, cplx(1.0, 0.0));
  return b.finish();
}

cplx trace(const BlockOperator& T) {
  cplx t(0.0, 0.0);
  const int k = T.block_dim();
  T.for_each([&](std::size_t x, std::size_t y, const cplx* blk) {
    if (x != y) return;
    for (int i = 0; i < k; ++i) t += blk[i * k + i];
  });
  return t;
}

int propagation(const BlockOperator& T) { return T.propagation(); }

TruncationResult truncate_propagation(const BlockOperator& T, int S, double p,
                                      const NormBudget& budget) {
  if (S < 0) throw ValidationError("truncation propagation must be nonnegative");
  const auto& space = *T.space();
  BlockOperator::Builder kept(T.space(), T.block_dim());
  BlockOperator::Builder dropped(T.space(), T.block_dim());
  T.for_each([&](std::size_t x, std::size_t y, const cplx* blk) {
    (space.distance(x, y) <= S ? kept : dropped).add(x, y, blk);
  });
  BlockOperator removed = dropped.finish();
  NormEstimate mass = pnorm_estimate(removed, p, budget);
  return TruncationResult{kept.finish(), std::move(removed), std::move(mass)};
}

void write_operator(std::ostream& out, const BlockOperator& T) {
  out << "roelab-op 1\n";
  out << "space " << T.space()->id() << "\n";
  out << "k " << T.block_dim() << "\n";
  out << "entries " << T.entry_count() << "\n";
  const int k = T.block_dim();
  char buf[48];
  T.for_each([&](std::size_t x, std::size_t y, const cplx* blk) {
    out << x << ' ' << y;
    for (int i = 0; i < k * k; ++i) {
      std::snprintf(buf, sizeof buf, " %a %a", blk[i].real(), blk[i].imag());
      out << buf;
    }
    out << '\n';
  });
}

BlockOperator read_operator(std::istream& in, SpacePtr space) {
  std::string tag, version;
  in >> tag >> version;
  if (tag != "roelab-op" || version != "1")
    throw ValidationError("operator stream: unrecognized header");
  in >> tag;
  if (tag != "space") throw ValidationError("operator stream: missing space line");
  std::string space_id;
  std::getline(in, space_id);
  if (!space_id.empty() && space_id.front() == ' ') space_id.erase(0, 1);
  if (space_id != space->id())
    throw ValidationError("operator stream: space id '" + space_id + "' does not match '" +
                          space->id() + "'");
  int k = 0;
  std::size_t entries = 0;
  in >> tag >> k;
  if (tag != "k" || k < 1) throw ValidationError("operator stream: bad block dimension");
  in >> tag >> entries;
  if (tag != "entries") throw ValidationError("operator stream: missing entry count");

  BlockOperator::Builder b(space, k);
  std::vector<cplx> blk(std::size_t(k) * std::size_t(k));
  for (std::size_t e = 0; e < entries; ++e) {
    std::size_t x = 0, y = 0;
    in >> x >> y;
    for (auto& v : blk) {
      std::string re, im;
      in >> re >> im;
      v = cplx(std::strtod(re.c_str(), nullptr), std::strtod(im.c_str(), nullptr));
    }
    if (!in) throw ValidationError("operator stream: truncated entry list");
    b.add(x, y, blk.data());
  }
  return b.finish();
}

BlockOperator random_operator(SpacePtr space, int prop, std::size_t entries, std::uint64_t seed,
                              int block_dim) {
  const std::size_t n = space->size();
  std::vector<std::uint64_t> candidates;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y : space->ball(x, prop)) candidates.push_back(std::uint64_t(x) * n + y);
  if (entries > candidates.size()) entries = candidates.size();

  // partial Fisher-Yates over the candidate list
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < entries; ++i) {
    std::size_t j = i + std::size_t(rng.next() % std::uint64_t(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }

  BlockOperator::Builder b(space, block_dim);
  std::vector<cplx> blk(std::size_t(block_dim) * std::size_t(block_dim));
  for (std::size_t i = 0; i < entries; ++i) {
    for (auto& v : blk) v = cplx(rng.gauss(), rng.gauss());
    b.add(candidates[i] / n, candidates[i] % n, blk.data());
  }
  return b.finish();
}

}  // namespace roelab
