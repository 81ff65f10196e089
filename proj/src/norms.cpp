#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "roelab/operators.hpp"

namespace roelab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr std::size_t kDenseLimit = 600;

using vec = std::vector<cplx>;

double vnorm2(const vec& v) {
  double s = 0.0;
  for (const cplx& z : v) s += std::norm(z);
  return std::sqrt(s);
}

double vnorm_p(const vec& v, double p) {
  if (p == 2.0) return vnorm2(v);
  if (p == 1.0) {
    double s = 0.0;
    for (const cplx& z : v) s += std::abs(z);
    return s;
  }
  double s = 0.0;
  for (const cplx& z : v) {
    const double a = std::abs(z);
    if (a > 0.0) s += std::pow(a, p);
  }
  return s > 0.0 ? std::pow(s, 1.0 / p) : 0.0;
}

cplx vdot(const vec& a, const vec& b) {
  cplx s(0.0, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

void vaxpy(vec& y, cplx c, const vec& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += c * x[i];
}

void vscale(vec& v, double s) {
  for (cplx& z : v) z *= s;
}

// duality map xi -> |xi|^{p-1} * phase(xi), the maximizer pairing for l^p
vec dual_power(const vec& y, double p) {
  vec out(y.size(), cplx(0.0, 0.0));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = std::abs(y[i]);
    if (a > 0.0) out[i] = std::pow(a, p - 1.0) * (y[i] / a);
  }
  return out;
}

vec ones_vec(std::size_t n) {
  return vec(n, cplx(1.0, 0.0));
}

vec gaussian_vec(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  vec v(n);
  for (cplx& z : v) z = cplx(rng.gauss(), rng.gauss());
  return v;
}

// ---------------------------------------------------------------------------
// matrix-free view shared by the three public overloads

struct MapView {
  std::size_t dim = 0;
  std::function<vec(const vec&)> apply;
  std::function<vec(const vec&)> adjoint;
  bool hermitian = false;
  double n1 = kInf;    // sound 1-norm upper bound (guarded) or +inf
  double ninf = kInf;  // sound inf-norm upper bound
  double n2u = kInf;   // sound 2-norm upper bound
  const BlockOperator* block = nullptr;
  const Eigen::MatrixXcd* dense = nullptr;
};

// guarded max column / row absolute sums of the flattened operator
void flat_extreme_norms(const BlockOperator& T, double& n1, double& ninf) {
  const int k = T.block_dim();
  const std::size_t d = T.dim();
  std::vector<double> colsum(d, 0.0), rowsum(d, 0.0);
  std::vector<std::uint32_t> colcnt(d, 0), rowcnt(d, 0);
  T.for_each([&](std::size_t x, std::size_t y, const cplx* blk) {
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) {
        const double a = std::abs(blk[r * k + c]);
        colsum[y * std::size_t(k) + std::size_t(c)] += a;
        rowsum[x * std::size_t(k) + std::size_t(r)] += a;
        ++colcnt[y * std::size_t(k) + std::size_t(c)];
        ++rowcnt[x * std::size_t(k) + std::size_t(r)];
      }
  });
  n1 = 0.0;
  ninf = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    n1 = std::max(n1, colsum[j] * (1.0 + 4.0 * kEps * double(colcnt[j] + 1)));
    ninf = std::max(ninf, rowsum[j] * (1.0 + 4.0 * kEps * double(rowcnt[j] + 1)));
  }
}

// flattened column p-norms, used both as achieved lower bounds and as starts
std::vector<double> flat_col_pnorms(const BlockOperator& T, double p) {
  const int k = T.block_dim();
  std::vector<double> acc(T.dim(), 0.0);
  T.for_each([&](std::size_t, std::size_t y, const cplx* blk) {
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) {
        const double a = std::abs(blk[r * k + c]);
        if (a > 0.0) acc[y * std::size_t(k) + std::size_t(c)] += std::pow(a, p);
      }
  });
  for (double& s : acc) s = s > 0.0 ? std::pow(s, 1.0 / p) : 0.0;
  return acc;
}

std::vector<std::size_t> top_indices(const std::vector<double>& vals, std::size_t count) {
  std::vector<std::size_t> idx(vals.size());
  std::iota(idx.begin(), idx.end(), 0);
  count = std::min(count, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + std::ptrdiff_t(count), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (vals[a] != vals[b]) return vals[a] > vals[b];
                      return a < b;
                    });
  idx.resize(count);
  return idx;
}

// ---------------------------------------------------------------------------
// lower bounds: signed-power iteration (alternating duality maps)

struct BoydOutcome {
  double best = 0.0;
  vec best_x;
  int applies = 0;
};

template <typename Ap, typename Aj>
void boyd_run(Ap&& apply, Aj&& adjoint, vec x, double p, int max_iters, BoydOutcome& out) {
  const double pd = p / (p - 1.0);
  double nx = vnorm_p(x, p);
  if (nx == 0.0) return;
  vscale(x, 1.0 / nx);
  double prev = -1.0;
  int stall = 0;
  for (int it = 0; it < max_iters; ++it) {
    vec y = apply(x);
    ++out.applies;
    const double r = vnorm_p(y, p);
    if (r > out.best) {
      out.best = r;
      out.best_x = x;
    }
    if (r == 0.0) break;
    if (r <= prev * (1.0 + 1e-13)) {
      if (++stall >= 2) break;
    } else {
      stall = 0;
    }
    prev = r;
    vec z = adjoint(dual_power(y, p));
    ++out.applies;
    x = dual_power(z, pd);
    const double n = vnorm_p(x, p);
    if (n == 0.0) break;
    vscale(x, 1.0 / n);
  }
}

// ---------------------------------------------------------------------------
// Lanczos with full reorthogonalization for hermitian maps

struct LanczosOut {
  double theta = 0.0;  // extremal |Ritz value|
  double resid = kInf;
  bool converged = false;
  vec ritz;
  int applies = 0;
};

template <typename Ap>
LanczosOut lanczos_sym(Ap&& apply, std::size_t n, vec v0, int max_iters) {
  LanczosOut out;
  double nv = vnorm2(v0);
  if (nv == 0.0) return out;
  vscale(v0, 1.0 / nv);

  // cap the stored basis so full reorthogonalization stays within memory
  const std::size_t mem_cap =
      std::max<std::size_t>(10, (std::size_t(512) << 20) / (16 * std::max<std::size_t>(n, 1)));
  int iters = std::min<int>(max_iters, int(std::min<std::size_t>(mem_cap, n)));
  if (n > 20000) iters = std::min(iters, 60);
  iters = std::max(iters, 1);

  std::vector<vec> V{v0};
  std::vector<double> alpha, beta;
  double scale = 0.0;
  double prev_theta = -1.0;
  int ritz_index = 0;
  bool breakdown = false;

  auto extremal = [&](Eigen::VectorXd& evec) -> double {
    const int m = int(alpha.size());
    Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      Tm(i, i) = alpha[std::size_t(i)];
      if (i + 1 < m) Tm(i, i + 1) = Tm(i + 1, i) = beta[std::size_t(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
    const int lo = 0, hi = m - 1;
    const int pick = std::abs(es.eigenvalues()(lo)) > std::abs(es.eigenvalues()(hi)) ? lo : hi;
    evec = es.eigenvectors().col(pick);
    return es.eigenvalues()(pick);
  };

  Eigen::VectorXd s;
  for (int j = 0; j < iters; ++j) {
    vec w = apply(V[std::size_t(j)]);
    ++out.applies;
    const double a = std::real(vdot(V[std::size_t(j)], w));
    alpha.push_back(a);
    vaxpy(w, cplx(-a, 0.0), V[std::size_t(j)]);
    if (j > 0) vaxpy(w, cplx(-beta[std::size_t(j) - 1], 0.0), V[std::size_t(j) - 1]);
    for (int pass = 0; pass < 2; ++pass)
      for (const vec& vi : V) {
        const cplx c = vdot(vi, w);
        if (c != cplx(0.0, 0.0)) vaxpy(w, -c, vi);
      }
    const double b = vnorm2(w);
    scale = std::max({scale, std::abs(a), b});

    const bool check = (j < 40) || (j % 4 == 3) || (j + 1 == iters) || b <= 1e-14 * scale;
    if (check) {
      const double th = extremal(s);
      const double resid = (b <= 1e-14 * scale) ? 0.0 : b * std::abs(s(s.size() - 1));
      out.theta = std::abs(th);
      out.resid = resid;
      if (resid <= 1e-11 * std::max(out.theta, 1e-300)) {
        if (prev_theta >= 0.0 && std::abs(out.theta - prev_theta) <= 1e-13 * std::max(out.theta, 1e-300)) {
          out.converged = true;
          ritz_index = int(alpha.size());
          break;
        }
      }
      prev_theta = out.theta;
      ritz_index = int(alpha.size());
    }
    if (b <= 1e-14 * std::max(scale, 1e-300)) {
      out.converged = true;
      breakdown = true;
      break;
    }
    beta.push_back(b);
    vscale(w, 1.0 / b);
    V.push_back(std::move(w));
  }

  (void)breakdown;
  if (!alpha.empty()) {
    const double th = extremal(s);
    out.theta = std::abs(th);
    out.ritz.assign(n, cplx(0.0, 0.0));
    const int m = int(s.size());
    for (int i = 0; i < m; ++i) vaxpy(out.ritz, cplx(s(i), 0.0), V[std::size_t(i)]);
    if (!out.converged) {
      const double b = beta.size() >= std::size_t(m) ? beta[std::size_t(m) - 1] : 0.0;
      out.resid = b * std::abs(s(m - 1));
      out.resid = std::max(out.resid, 0.0);
    }
  }
  (void)ritz_index;
  return out;
}

// ---------------------------------------------------------------------------
// dense estimator (rectangular allowed); returns the best vector found so the
// ghost search can inherit it at the next radius

struct DenseEstimate {
  NormEstimate est;
  vec best;
};

void dense_extreme_norms(const Eigen::MatrixXcd& M, double& n1, double& ninf) {
  n1 = 0.0;
  ninf = 0.0;
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) s += std::abs(M(i, j));
    n1 = std::max(n1, s * (1.0 + 4.0 * kEps * double(M.rows() + 1)));
  }
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < M.cols(); ++j) s += std::abs(M(i, j));
    ninf = std::max(ninf, s * (1.0 + 4.0 * kEps * double(M.cols() + 1)));
  }
}

bool dense_is_real(const Eigen::MatrixXcd& M) {
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      if (M(i, j).imag() != 0.0) return false;
  return true;
}

bool dense_is_hermitian(const Eigen::MatrixXcd& M) {
  if (M.rows() != M.cols()) return false;
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      if (M(i, j) != std::conj(M(j, i))) return false;
  return true;
}

DenseEstimate dense_two_norm(const Eigen::MatrixXcd& M) {
  DenseEstimate out;
  out.est.p = 2.0;
  const std::size_t cols = std::size_t(M.cols());
  Eigen::VectorXcd v;
  double value = 0.0;
  bool solved = false;
  if (dense_is_hermitian(M)) {
    // the QR sweep budget can run out on extremely graded spectra (high
    // powers of a contraction), so never trust the solver without info()
    if (dense_is_real(M)) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.real());
      if (es.info() == Eigen::Success) {
        const Eigen::Index lo = 0, hi = M.cols() - 1;
        const Eigen::Index pick =
            std::abs(es.eigenvalues()(lo)) > std::abs(es.eigenvalues()(hi)) ? lo : hi;
        value = std::abs(es.eigenvalues()(pick));
        v = es.eigenvectors().col(pick).cast<cplx>();
        solved = true;
      }
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
      if (es.info() == Eigen::Success) {
        const Eigen::Index lo = 0, hi = M.cols() - 1;
        const Eigen::Index pick =
            std::abs(es.eigenvalues()(lo)) > std::abs(es.eigenvalues()(hi)) ? lo : hi;
        value = std::abs(es.eigenvalues()(pick));
        v = es.eigenvectors().col(pick);
        solved = true;
      }
    }
    if (solved) out.est.methods.push_back("dense-eig");
  }
  if (!solved) {
    // singular values of M directly: squaring into a Gram matrix doubles the
    // grading and is exactly what starves the tridiagonal QR of sweeps
    if (dense_is_real(M)) {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(M.real(), Eigen::ComputeThinV);
      if (svd.info() == Eigen::Success) {
        value = svd.singularValues()(0);
        v = svd.matrixV().col(0).cast<cplx>();
        solved = true;
      }
    } else {
      Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinV);
      if (svd.info() == Eigen::Success) {
        value = svd.singularValues()(0);
        v = svd.matrixV().col(0);
        solved = true;
      }
    }
    if (!solved) {  // one-sided Jacobi converges unconditionally
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinV);
      value = svd.singularValues()(0);
      v = svd.matrixV().col(0);
    }
    out.est.methods.push_back("dense-svd");
  }
  double achieved = 0.0;
  const double vn = v.norm();
  if (vn > 0.0) achieved = (M * v).norm() / vn;
  out.est.lower = achieved;
  out.est.upper = std::max(value, achieved) * (1.0 + 1e-11);
  out.est.wide = false;
  out.best.assign(cols, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < cols; ++i) out.best[i] = v(Eigen::Index(i));
  return out;
}

DenseEstimate estimate_dense(const Eigen::MatrixXcd& M, double p, const NormBudget& budget,
                             const std::vector<vec>& warm) {
  if (p == 1.0) {
    DenseEstimate out;
    out.est.p = p;
    double best = 0.0;
    Eigen::Index jbest = 0;
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < M.rows(); ++i) s += std::abs(M(i, j));
      if (s > best) {
        best = s;
        jbest = j;
      }
    }
    out.est.lower = best;
    out.est.upper = best * (1.0 + 4.0 * kEps * double(M.rows() + 1));
    out.est.methods.push_back("exact-1norm");
    out.best.assign(std::size_t(M.cols()), cplx(0.0, 0.0));
    if (M.cols() > 0) out.best[std::size_t(jbest)] = cplx(1.0, 0.0);
    return out;
  }
  if (std::isinf(p)) {
    DenseEstimate out;
    out.est.p = p;
    double best = 0.0;
    Eigen::Index ibest = 0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < M.cols(); ++j) s += std::abs(M(i, j));
      if (s > best) {
        best = s;
        ibest = i;
      }
    }
    out.est.lower = best;
    out.est.upper = best * (1.0 + 4.0 * kEps * double(M.cols() + 1));
    out.est.methods.push_back("exact-infnorm");
    out.best.assign(std::size_t(M.cols()), cplx(0.0, 0.0));
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const cplx m = M(ibest, j);
      const double a = std::abs(m);
      out.best[std::size_t(j)] = a > 0.0 ? std::conj(m) / a : cplx(1.0, 0.0);
    }
    return out;
  }
  if (p == 2.0) {
    DenseEstimate out = dense_two_norm(M);
    // a warm start can only confirm; keep the max achieved ratio
    for (const vec& w : warm) {
      if (w.size() != std::size_t(M.cols())) continue;
      Eigen::Map<const Eigen::VectorXcd> wm(w.data(), M.cols());
      const double nw = wm.norm();
      if (nw > 0.0) out.est.lower = std::max(out.est.lower, (M * wm).norm() / nw);
    }
    out.est.upper = std::max(out.est.upper, out.est.lower);
    return out;
  }

  DenseEstimate out;
  out.est.p = p;
  const std::size_t cols = std::size_t(M.cols());
  auto apply = [&](const vec& x) {
    Eigen::Map<const Eigen::VectorXcd> xm(x.data(), M.cols());
    Eigen::VectorXcd y = M * xm;
    return vec(y.data(), y.data() + y.size());
  };
  auto adj = [&](const vec& x) {
    Eigen::Map<const Eigen::VectorXcd> xm(x.data(), M.rows());
    Eigen::VectorXcd y = M.adjoint() * xm;
    return vec(y.data(), y.data() + y.size());
  };

  // exact column candidates
  std::vector<double> colp(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      const double a = std::abs(M(i, Eigen::Index(j)));
      if (a > 0.0) s += std::pow(a, p);
    }
    colp[j] = s > 0.0 ? std::pow(s, 1.0 / p) : 0.0;
  }

  BoydOutcome bo;
  for (std::size_t j : top_indices(colp, 4)) {
    if (colp[j] > bo.best) {
      bo.best = colp[j];
      bo.best_x.assign(cols, cplx(0.0, 0.0));
      bo.best_x[j] = cplx(1.0, 0.0);
    }
  }
  out.est.methods.push_back("columns");

  std::vector<vec> starts;
  starts.push_back(ones_vec(cols));
  for (std::size_t j : top_indices(colp, 4)) {
    vec e(cols, cplx(0.0, 0.0));
    e[j] = cplx(1.0, 0.0);
    starts.push_back(std::move(e));
  }
  for (const vec& w : warm)
    if (w.size() == cols) starts.push_back(w);
  for (int r = 0; r < budget.restarts; ++r)
    starts.push_back(gaussian_vec(cols, split_stream(budget.seed, std::uint64_t(100 + r))));

  double before_last = bo.best;
  for (std::size_t si = 0; si < starts.size(); ++si) {
    if (si + 1 == starts.size()) before_last = bo.best;
    boyd_run(apply, adj, starts[si], p, budget.iterations, bo);
  }
  out.est.methods.push_back("power-p");
  out.est.iterations = bo.applies;
  out.est.lower = bo.best;
  out.best = bo.best_x;

  double n1 = 0.0, ninf = 0.0;
  dense_extreme_norms(M, n1, ninf);
  double upper = std::pow(n1, 1.0 / p) * std::pow(ninf, 1.0 - 1.0 / p);
  out.est.methods.push_back("interp-1inf");
  const double n2 = dense_two_norm(M).est.upper;
  if (p < 2.0) {
    const double th = 2.0 / p - 1.0;
    upper = std::min(upper, std::pow(n1, th) * std::pow(n2, 1.0 - th));
  } else {
    const double th = 1.0 - 2.0 / p;
    upper = std::min(upper, std::pow(n2, 1.0 - th) * std::pow(ninf, th));
  }
  out.est.methods.push_back("interp-2");
  out.est.upper = upper;
  out.est.wide = bo.best > before_last * (1.0 + 1e-9);
  out.est.lower = std::min(out.est.lower, out.est.upper);
  return out;
}

// ---------------------------------------------------------------------------

double two_norm_upper_for_interp(const MapView& mv, const NormBudget& budget,
                                 std::vector<std::string>& methods, int& applies) {
  if (mv.n2u < kInf) {
    methods.push_back("hint-2");
    return mv.n2u;
  }
  if (mv.hermitian || mv.adjoint) {
    auto op = [&](const vec& x) { return mv.hermitian ? mv.apply(x) : mv.adjoint(mv.apply(x)); };
    LanczosOut best;
    double theta_seen = 0.0;
    for (int s = 0; s < 2; ++s) {
      vec v0 = s == 0 ? ones_vec(mv.dim) : gaussian_vec(mv.dim, split_stream(budget.seed, 7));
      LanczosOut lo = lanczos_sym(op, mv.dim, std::move(v0), budget.iterations);
      applies += lo.applies;
      theta_seen = std::max(theta_seen, lo.theta);
      if (lo.theta > best.theta || (lo.converged && !best.converged)) best = std::move(lo);
    }
    // a run converged inside a degenerate subspace (below the largest Ritz
    // value any start reached) cannot certify a global upper bound
    if (best.converged && best.theta >= theta_seen * (1.0 - 1e-12)) {
      double val = mv.hermitian ? best.theta : std::sqrt(std::max(best.theta, 0.0));
      methods.push_back("lanczos-upper");
      double up = val * (1.0 + 1e-9) + best.resid;
      if (mv.n1 < kInf && mv.ninf < kInf) up = std::min(up, std::sqrt(mv.n1 * mv.ninf));
      return up;
    }
  }
  if (mv.n1 < kInf && mv.ninf < kInf) {
    methods.push_back("sqrt-1inf");
    return std::sqrt(mv.n1 * mv.ninf);
  }
  return kInf;
}

NormEstimate estimate_core(const MapView& mv, double p, const NormBudget& budget) {
  if (!(p >= 1.0)) throw ValidationError("p must be at least 1");
  NormEstimate est;
  est.p = p;
  if (mv.dim == 0) return est;

  // dense exact path (handles every p, including 1 and inf)
  if (mv.dense && std::size_t(mv.dense->rows()) <= kDenseLimit &&
      std::size_t(mv.dense->cols()) <= kDenseLimit) {
    DenseEstimate de = estimate_dense(*mv.dense, p, budget, budget.warm_starts);
    return de.est;
  }

  if (std::isinf(p)) {
    if (mv.adjoint) {
      MapView tr;
      tr.dim = mv.dim;
      tr.apply = mv.adjoint;
      tr.adjoint = mv.apply;
      tr.hermitian = mv.hermitian;
      tr.n1 = mv.ninf;
      tr.ninf = mv.n1;
      NormEstimate e = estimate_core(tr, 1.0, budget);
      e.p = p;
      return e;
    }
    est.upper = mv.ninf;
    est.lower = 0.0;
    est.wide = true;
    return est;
  }

  if (p == 1.0) {
    // exact column sums when the entries are available
    if (mv.block || mv.dense) {
      double lower = 0.0;
      if (mv.block) {
        const auto cols = flat_col_pnorms(*mv.block, 1.0);
        for (double c : cols) lower = std::max(lower, c);
      } else {
        for (Eigen::Index j = 0; j < mv.dense->cols(); ++j) {
          double s = 0.0;
          for (Eigen::Index i = 0; i < mv.dense->rows(); ++i) s += std::abs((*mv.dense)(i, j));
          lower = std::max(lower, s);
        }
      }
      est.lower = lower;
      est.upper = std::min(mv.n1, lower * (1.0 + 4.0 * kEps * double(mv.dim)));
      est.upper = std::max(est.upper, est.lower);
      est.methods.push_back("exact-1norm");
      return est;
    }
    // one-norm estimator: follow the sign pattern to a dominant column
    vec x = ones_vec(mv.dim);
    vscale(x, 1.0 / double(mv.dim));
    double lower = 0.0;
    std::size_t last = mv.dim;
    for (int it = 0; it < 8 && mv.adjoint; ++it) {
      vec y = mv.apply(x);
      ++est.iterations;
      lower = std::max(lower, vnorm_p(y, 1.0) / vnorm_p(x, 1.0));
      vec z = mv.adjoint(dual_power(y, 1.0));
      ++est.iterations;
      std::size_t jbest = 0;
      double zb = -1.0;
      for (std::size_t j = 0; j < mv.dim; ++j)
        if (std::abs(z[j]) > zb) {
          zb = std::abs(z[j]);
          jbest = j;
        }
      if (jbest == last) break;
      last = jbest;
      x.assign(mv.dim, cplx(0.0, 0.0));
      x[jbest] = cplx(1.0, 0.0);
    }
    if (!mv.adjoint) {
      vec y = mv.apply(x);
      ++est.iterations;
      lower = vnorm_p(y, 1.0) / vnorm_p(x, 1.0);
    }
    est.lower = lower;
    est.upper = mv.n1;
    est.wide = !(est.upper < kInf) || est.upper > est.lower * (1.0 + 1e-6);
    est.methods.push_back("power-1");
    est.lower = std::min(est.lower, est.upper);
    return est;
  }

  if (p == 2.0) {
    // every run contributes achieved-ratio evidence to the lower bound; a
    // converged run certifies an upper candidate only when its Ritz value
    // dominates that evidence (a degenerate start, e.g. the ones vector on a
    // mean-zero-deflated map, converges inside a trivial subspace and says
    // nothing about the rest of the spectrum)
    double lower = 0.0;
    struct ConvRun {
      double value;
      double resid;
    };
    std::vector<ConvRun> converged;
    if (mv.hermitian || mv.adjoint) {
      auto op = [&](const vec& x) { return mv.hermitian ? mv.apply(x) : mv.adjoint(mv.apply(x)); };
      std::vector<vec> starts;
      starts.push_back(ones_vec(mv.dim));
      starts.push_back(gaussian_vec(mv.dim, split_stream(budget.seed, 1)));
      for (const vec& w : budget.warm_starts)
        if (w.size() == mv.dim) starts.push_back(w);
      for (std::size_t si = 0; si < starts.size(); ++si) {
        LanczosOut lo = lanczos_sym(op, mv.dim, std::move(starts[si]), budget.iterations);
        est.iterations += lo.applies;
        if (!lo.ritz.empty()) {
          const double rn = vnorm2(lo.ritz);
          if (rn > 0.0) {
            vec img = mv.apply(lo.ritz);
            ++est.iterations;
            lower = std::max(lower, vnorm2(img) / rn);
          }
        }
        if (lo.converged) {
          const double conv = mv.hermitian ? lo.theta : std::sqrt(std::max(lo.theta, 0.0));
          converged.push_back({conv, lo.resid});
        }
        const bool certified =
            !converged.empty() && converged.back().value >= lower * (1.0 - 1e-12);
        if (certified && si >= 1) break;
      }
      est.methods.push_back(mv.hermitian ? "lanczos" : "lanczos-gram");
    }
    for (const vec& w : budget.warm_starts) {
      if (w.size() != mv.dim) continue;
      const double wn = vnorm2(w);
      if (wn == 0.0) continue;
      vec img = mv.apply(w);
      ++est.iterations;
      lower = std::max(lower, vnorm2(img) / wn);
    }
    est.lower = lower;
    double upper = std::min(mv.n2u, (mv.n1 < kInf && mv.ninf < kInf) ? std::sqrt(mv.n1 * mv.ninf) : kInf);
    est.wide = true;
    for (const ConvRun& run : converged)
      if (run.value >= lower * (1.0 - 1e-12)) {
        upper = std::min(upper, std::max(run.value, lower) * (1.0 + 1e-9) + run.resid);
        est.wide = false;
      }
    est.upper = std::max(upper, est.lower);
    est.lower = std::min(est.lower, est.upper);
    return est;
  }

  // generic p: signed-power iteration for the lower bound
  BoydOutcome bo;
  std::vector<double> colp;
  if (mv.block) {
    colp = flat_col_pnorms(*mv.block, p);
    for (std::size_t j : top_indices(colp, 4)) {
      if (colp[j] > bo.best) {
        bo.best = colp[j];
        bo.best_x.assign(mv.dim, cplx(0.0, 0.0));
        bo.best_x[j] = cplx(1.0, 0.0);
      }
    }
    est.methods.push_back("columns");
  }
  double before_last = bo.best;
  if (mv.adjoint) {
    std::vector<vec> starts;
    starts.push_back(ones_vec(mv.dim));
    if (!colp.empty())
      for (std::size_t j : top_indices(colp, 4)) {
        vec e(mv.dim, cplx(0.0, 0.0));
        e[j] = cplx(1.0, 0.0);
        starts.push_back(std::move(e));
      }
    for (const vec& w : budget.warm_starts)
      if (w.size() == mv.dim) starts.push_back(w);
    for (int r = 0; r < budget.restarts; ++r)
      starts.push_back(gaussian_vec(mv.dim, split_stream(budget.seed, std::uint64_t(100 + r))));
    for (std::size_t si = 0; si < starts.size(); ++si) {
      if (si + 1 == starts.size()) before_last = bo.best;
      boyd_run(mv.apply, mv.adjoint, starts[si], p, budget.iterations, bo);
    }
    est.methods.push_back("power-p");
  } else {
    for (const vec& w : budget.warm_starts) {
      if (w.size() != mv.dim) continue;
      const double wn = vnorm_p(w, p);
      if (wn == 0.0) continue;
      vec img = mv.apply(w);
      ++bo.applies;
      const double r = vnorm_p(img, p) / wn;
      if (r > bo.best) {
        bo.best = r;
        bo.best_x = w;
      }
    }
  }
  est.iterations = bo.applies;
  est.lower = bo.best;

  double upper = (mv.n1 < kInf && mv.ninf < kInf)
                     ? std::pow(mv.n1, 1.0 / p) * std::pow(mv.ninf, 1.0 - 1.0 / p)
                     : kInf;
  if (upper < kInf) est.methods.push_back("interp-1inf");
  const double n2 = two_norm_upper_for_interp(mv, budget, est.methods, est.iterations);
  if (n2 < kInf) {
    if (p < 2.0 && mv.n1 < kInf) {
      const double th = 2.0 / p - 1.0;
      upper = std::min(upper, std::pow(mv.n1, th) * std::pow(n2, 1.0 - th));
      est.methods.push_back("interp-2");
    } else if (p > 2.0 && mv.ninf < kInf) {
      const double th = 1.0 - 2.0 / p;
      upper = std::min(upper, std::pow(n2, 1.0 - th) * std::pow(mv.ninf, th));
      est.methods.push_back("interp-2");
    }
  }
  est.upper = std::max(upper, 0.0);
  est.wide = (est.upper == kInf) || bo.best > before_last * (1.0 + 1e-9);
  est.lower = std::min(est.lower, est.upper);
  return est;
}

}  // namespace

NormEstimate pnorm_estimate(const BlockOperator& T, double p, const NormBudget& budget) {
  MapView mv;
  mv.dim = T.dim();
  mv.apply = [&T](const vec& x) { return T.apply(x); };
  mv.adjoint = [&T](const vec& x) { return T.apply_adjoint(x); };
  mv.hermitian = T.is_hermitian();
  mv.block = &T;
  flat_extreme_norms(T, mv.n1, mv.ninf);
  Eigen::MatrixXcd dense;
  if (mv.dim <= kDenseLimit) {
    dense = T.to_dense();
    mv.dense = &dense;
  }
  return estimate_core(mv, p, budget);
}

NormEstimate pnorm_estimate(const LinearMap& map, double p, const NormBudget& budget) {
  if (!map.apply) throw ValidationError("linear map needs an apply function");
  MapView mv;
  mv.dim = map.dim;
  mv.apply = map.apply;
  mv.adjoint = map.apply_adjoint;
  mv.hermitian = map.hermitian;
  mv.n1 = map.norm1_hint;
  mv.ninf = map.norminf_hint;
  mv.n2u = map.norm2_upper_hint;
  return estimate_core(mv, p, budget);
}

NormEstimate pnorm_estimate(const Eigen::MatrixXcd& dense, double p, const NormBudget& budget) {
  MapView mv;
  mv.dim = std::size_t(dense.cols());
  mv.apply = [&dense](const vec& x) {
    Eigen::Map<const Eigen::VectorXcd> xm(x.data(), dense.cols());
    Eigen::VectorXcd y = dense * xm;
    return vec(y.data(), y.data() + y.size());
  };
  mv.adjoint = [&dense](const vec& x) {
    Eigen::Map<const Eigen::VectorXcd> xm(x.data(), dense.rows());
    Eigen::VectorXcd y = dense.adjoint() * xm;
    return vec(y.data(), y.data() + y.size());
  };
  mv.hermitian = dense_is_hermitian(dense);
  dense_extreme_norms(dense, mv.n1, mv.ninf);
  mv.dense = &dense;
  return estimate_core(mv, p, budget);
}

double GhostProfile::at(int R, int level) const {
  for (const GhostEntry& e : entries)
    if (e.R == R && e.level == level) return e.eps;
  throw ValidationError("ghost profile has no entry for the requested radius and level");
}

GhostProfile ghost_profile(const BlockOperator& T, const std::vector<int>& R_list, double p,
                           const NormBudget& budget) {
  if (R_list.empty()) throw ValidationError("ghost profile needs at least one radius");
  std::vector<int> radii = R_list;
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  if (radii.front() < 0) throw ValidationError("ghost profile radius must be nonnegative");

  const auto& space = *T.space();
  const int k = T.block_dim();
  const std::size_t n = T.points();

  // column adjacency at point granularity
  std::vector<std::vector<std::pair<std::size_t, const cplx*>>> cols(n);
  T.for_each([&](std::size_t x, std::size_t y, const cplx* blk) { cols[y].push_back({x, blk}); });

  const auto comps = space.components();

  struct CenterState {
    std::vector<std::size_t> support;  // point columns of the previous ball
    vec best;                          // best vector on that support (block coords)
    double lower = 0.0;
  };
  std::vector<CenterState> st(n);

  NormBudget sub_budget;
  sub_budget.restarts = std::min(budget.restarts, 1);
  sub_budget.iterations = std::min(budget.iterations, 25);
  sub_budget.seed = budget.seed;

  GhostProfile out;
  for (int R : radii) {
    for (const ComponentRange& comp : comps) {
      double lo = 0.0, up = 0.0;
      for (std::size_t x = comp.begin; x < comp.end; ++x) {
        const std::vector<std::size_t> ball = space.ball(x, R);
        // rows touched by the supported columns
        std::vector<std::size_t> rows;
        for (std::size_t y : ball)
          for (const auto& [r, blk] : cols[y]) rows.push_back(r);
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

        CenterState& cs = st[x];
        double lower_x = cs.lower;
        double upper_x = cs.lower;
        if (!rows.empty()) {
          Eigen::MatrixXcd sub =
              Eigen::MatrixXcd::Zero(Eigen::Index(rows.size()) * k, Eigen::Index(ball.size()) * k);
          for (std::size_t jc = 0; jc < ball.size(); ++jc)
            for (const auto& [r, blk] : cols[ball[jc]]) {
              const auto it = std::lower_bound(rows.begin(), rows.end(), r);
              const Eigen::Index ir = Eigen::Index(it - rows.begin());
              for (int br = 0; br < k; ++br)
                for (int bc = 0; bc < k; ++bc)
                  sub(ir * k + br, Eigen::Index(jc) * k + bc) = blk[br * k + bc];
            }

          std::vector<vec> warm;
          if (!cs.best.empty()) {
            vec w(ball.size() * std::size_t(k), cplx(0.0, 0.0));
            for (std::size_t j = 0; j < cs.support.size(); ++j) {
              const auto it = std::lower_bound(ball.begin(), ball.end(), cs.support[j]);
              if (it == ball.end() || *it != cs.support[j]) continue;
              const std::size_t pos = std::size_t(it - ball.begin());
              for (int b = 0; b < k; ++b)
                w[pos * std::size_t(k) + std::size_t(b)] = cs.best[j * std::size_t(k) + std::size_t(b)];
            }
            warm.push_back(std::move(w));
          }

          DenseEstimate de = estimate_dense(sub, p, sub_budget, warm);
          lower_x = std::max(lower_x, de.est.lower);
          upper_x = std::max(lower_x, de.est.upper);
          if (!de.best.empty()) {
            cs.best = std::move(de.best);
            cs.support = ball;
            cs.lower = lower_x;
          }
        }
        lo = std::max(lo, lower_x);
        up = std::max(up, upper_x);
      }
      out.entries.push_back(GhostEntry{R, comp.level, lo, up});
    }
  }
  return out;
}

}  // namespace roelab
