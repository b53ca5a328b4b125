#include "h2atlas/lp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>

#include "h2atlas/error.hpp"

namespace h2atlas::lp {

using Eigen::SparseMatrix;
using Eigen::VectorXd;

Index Problem::add_variable(double lb, double ub, double cost) {
  if (!std::isfinite(lb)) throw InvalidArgument("LP variables need a finite lower bound");
  if (std::isnan(ub) || ub < lb) throw InvalidArgument("LP variable upper bound below lower bound");
  if (!std::isfinite(cost)) throw InvalidArgument("LP cost must be finite");
  lb_.push_back(lb);
  ub_.push_back(ub);
  cost_.push_back(cost);
  return num_variables() - 1;
}

void Problem::set_bounds(Index j, double lb, double ub) {
  if (!std::isfinite(lb) || std::isnan(ub) || ub < lb) throw InvalidArgument("invalid LP bounds");
  lb_[static_cast<std::size_t>(j)] = lb;
  ub_[static_cast<std::size_t>(j)] = ub;
}

Index Problem::add_row(const std::vector<std::pair<Index, double>>& coeffs, Sense sense, double rhs) {
  if (!std::isfinite(rhs)) throw InvalidArgument("LP right-hand side must be finite");
  const Index r = num_rows();
  for (const auto& [j, a] : coeffs) {
    if (j < 0 || j >= num_variables()) throw InvalidArgument("LP row references unknown variable");
    if (!std::isfinite(a)) throw InvalidArgument("LP coefficient must be finite");
    if (a != 0.0) entries_.emplace_back(static_cast<int>(r), static_cast<int>(j), a);
  }
  sense_.push_back(sense);
  rhs_.push_back(rhs);
  return r;
}

SparseMatrix<double> Problem::matrix() const {
  SparseMatrix<double> a(num_rows(), num_variables());
  a.setFromTriplets(entries_.begin(), entries_.end());
  return a;
}

double Problem::objective(const VectorXd& x) const {
  return Eigen::Map<const VectorXd>(cost_.data(), num_variables()).dot(x);
}

double Problem::max_violation(const VectorXd& x) const {
  const VectorXd ax = matrix() * x;
  double worst = 0.0;
  for (Index i = 0; i < num_rows(); ++i) {
    const double r = rhs_[static_cast<std::size_t>(i)], scale = std::max(1.0, std::abs(r));
    double v = 0.0;
    switch (sense_[static_cast<std::size_t>(i)]) {
      case Sense::le: v = ax[i] - r; break;
      case Sense::ge: v = r - ax[i]; break;
      case Sense::eq: v = std::abs(ax[i] - r); break;
    }
    worst = std::max(worst, v / scale);
  }
  for (Index j = 0; j < num_variables(); ++j) {
    const double lo = lb_[static_cast<std::size_t>(j)], hi = ub_[static_cast<std::size_t>(j)];
    worst = std::max(worst, (lo - x[j]) / std::max(1.0, std::abs(lo)));
    if (std::isfinite(hi)) worst = std::max(worst, (x[j] - hi) / std::max(1.0, std::abs(hi)));
  }
  return worst;
}

namespace {

// min cᵀx, Ax = b, 0 ≤ x ≤ u
struct Standard {
  SparseMatrix<double> a;
  VectorXd b, c, u;
  // Weights mapping scaled residuals back to the caller's units, so that
  // termination is judged on the unscaled problem. Empty means identity.
  VectorXd row_w, col_pw, col_dw;
  double obj_w = 1.0, bnorm = -1.0, cnorm = -1.0;
};

// Regularized quasi-definite augmented system
//   [ -(H + ρI)  Aᵀ ] [dx]   [rx]
//   [    A       δI ] [dy] = [ry]
// with iterative refinement against the unregularized matrix.
class Kkt {
public:
  explicit Kkt(const SparseMatrix<double>& a) : a_(a), at_(a.transpose()), n_(a.cols()), m_(a.rows()) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(n_ + m_ + a.nonZeros()));
    for (Index j = 0; j < n_; ++j) t.emplace_back(static_cast<int>(j), static_cast<int>(j), -1.0);
    for (Index j = 0; j < n_; ++j)
      for (SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
        t.emplace_back(static_cast<int>(n_ + it.row()), static_cast<int>(j), it.value());
    for (Index i = 0; i < m_; ++i) t.emplace_back(static_cast<int>(n_ + i), static_cast<int>(n_ + i), 1.0);
    k_.resize(n_ + m_, n_ + m_);
    k_.setFromTriplets(t.begin(), t.end());
    k_.makeCompressed();
    ldlt_.analyzePattern(k_);
  }

  bool factor(const VectorXd& h, double rho, double delta) {
    h_ = h;
    // the diagonal is the first stored entry of every lower-triangular column
    double* v = k_.valuePtr();
    const auto* outer = k_.outerIndexPtr();
    for (Index j = 0; j < n_; ++j) v[outer[j]] = -(h[j] + rho);
    for (Index i = 0; i < m_; ++i) v[outer[n_ + i]] = delta;
    ldlt_.factorize(k_);
    return ldlt_.info() == Eigen::Success;
  }

  void solve(const VectorXd& rx, const VectorXd& ry, VectorXd& dx, VectorXd& dy) const {
    VectorXd rhs(n_ + m_);
    rhs << rx, ry;
    VectorXd sol = ldlt_.solve(rhs);
    for (int k = 0; k < 3; ++k) {
      const VectorXd sx = sol.head(n_), sy = sol.tail(m_);
      VectorXd res(n_ + m_);
      res.head(n_) = rx - (-(h_.array() * sx.array()).matrix() + at_ * sy);
      res.tail(m_) = ry - a_ * sx;
      if (res.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
      sol += ldlt_.solve(res);
    }
    dx = sol.head(n_);
    dy = sol.tail(m_);
  }

private:
  const SparseMatrix<double>& a_;
  SparseMatrix<double> at_;
  Index n_, m_;
  SparseMatrix<double> k_;
  VectorXd h_;
  Eigen::SimplicialLDLT<SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

double max_step(const VectorXd& x, const VectorXd& dx) {
  double a = 1.0;
  for (Index i = 0; i < x.size(); ++i)
    if (dx[i] < 0) a = std::min(a, -x[i] / dx[i]);
  return a;
}

struct IpmResult {
  bool converged = false;
  VectorXd x, y, z;
  int iterations = 0;
  double pinf = 0, dinf = 0, gap = 0;
};

IpmResult ipm(const Standard& s, double tol, int max_iter) {
  const Index n = s.a.cols(), m = s.a.rows();
  const auto& a = s.a;
  const SparseMatrix<double> at = a.transpose();
  // bounded columns
  std::vector<Index> bidx;
  for (Index j = 0; j < n; ++j)
    if (std::isfinite(s.u[j])) bidx.push_back(j);
  const auto nb = static_cast<Index>(bidx.size());
  VectorXd ub(nb);
  for (Index k = 0; k < nb; ++k) ub[k] = s.u[bidx[static_cast<std::size_t>(k)]];

  const double bnorm =
      s.bnorm >= 0 ? s.bnorm : std::max(s.b.lpNorm<Eigen::Infinity>(), nb ? ub.lpNorm<Eigen::Infinity>() : 0.0);
  const double cnorm = s.cnorm >= 0 ? s.cnorm : s.c.lpNorm<Eigen::Infinity>();
  const VectorXd row_w = s.row_w.size() ? s.row_w : VectorXd::Ones(m);
  const VectorXd col_pw = s.col_pw.size() ? s.col_pw : VectorXd::Ones(n);
  const VectorXd col_dw = s.col_dw.size() ? s.col_dw : VectorXd::Ones(n);
  constexpr double reg = 1e-9;

  Kkt kkt(a);
  IpmResult res;

  // starting point: least-norm solution of Ax = b pushed into the interior
  VectorXd x, y;
  if (!kkt.factor(VectorXd::Ones(n), 0.0, 1e-8)) throw Error("LP factorization failed");
  kkt.solve(VectorXd::Zero(n), s.b, x, y);
  VectorXd w(nb), v(nb), z(n);
  std::vector<char> bounded(static_cast<std::size_t>(n), 0);
  for (Index k = 0; k < nb; ++k) bounded[static_cast<std::size_t>(bidx[static_cast<std::size_t>(k)])] = 1;
  for (Index j = 0; j < n; ++j)
    if (!bounded[static_cast<std::size_t>(j)]) x[j] = std::max(x[j], 1.0);
  for (Index k = 0; k < nb; ++k) {
    const Index j = bidx[static_cast<std::size_t>(k)];
    const double lo = std::min(1.0, 0.5 * ub[k]);
    x[j] = std::clamp(x[j], lo, ub[k] - lo);
    w[k] = ub[k] - x[j];
  }
  y.setZero(m);
  for (Index j = 0; j < n; ++j) z[j] = std::max(1.0, s.c[j]);
  for (Index k = 0; k < nb; ++k) v[k] = std::max(1.0, -s.c[bidx[static_cast<std::size_t>(k)]]);

  auto gather = [&](const VectorXd& full) {
    VectorXd out(nb);
    for (Index k = 0; k < nb; ++k) out[k] = full[bidx[static_cast<std::size_t>(k)]];
    return out;
  };
  auto scatter = [&](const VectorXd& part) {
    VectorXd out = VectorXd::Zero(n);
    for (Index k = 0; k < nb; ++k) out[bidx[static_cast<std::size_t>(k)]] = part[k];
    return out;
  };

  const double total = static_cast<double>(n + nb);
  int stall = 0;
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    const VectorXd rp = s.b - a * x;
    const VectorXd ru = ub - gather(x) - w;
    const VectorXd rd = s.c - at * y - z + scatter(v);
    const double mu = (x.dot(z) + w.dot(v)) / total;
    const double pobj = s.c.dot(x), dobj = s.b.dot(y) - ub.dot(v);
    const double rpn = (rp.array() * row_w.array()).abs().maxCoeff();
    const double run = nb ? (ru.array() * gather(col_pw).array()).abs().maxCoeff() : 0.0;
    res.pinf = std::max(rpn, run) / (1.0 + bnorm);
    res.dinf = (rd.array() * col_dw.array()).abs().maxCoeff() / (1.0 + cnorm);
    // complementarity rather than pobj − dobj: the dual objective cancels
    // badly when large bounds meet tiny multipliers
    (void)dobj;
    res.gap = s.obj_w * (x.dot(z) + w.dot(v)) / (1.0 + s.obj_w * std::abs(pobj));
    if (res.pinf < tol && res.dinf < tol && res.gap < tol) {
      res.converged = true;
      break;
    }
    if (x.lpNorm<Eigen::Infinity>() > 1e13 || y.lpNorm<Eigen::Infinity>() > 1e13 || !std::isfinite(mu)) break;

    VectorXd h = (z.array() / x.array()).matrix();
    const VectorXd wb = (v.array() / w.array()).matrix();
    h += scatter(wb);
    // a zero pivot from cancellation late in the solve: retry with stronger
    // regularization (refinement still targets the exact system)
    bool factored = false;
    for (double r = reg; r <= 1e-5 && !factored; r *= 100) factored = kkt.factor(h, r, r);
    if (!factored) break;

    auto direction = [&](const VectorXd& rxz, const VectorXd& rwv, VectorXd& dx, VectorXd& dy, VectorXd& dz,
                         VectorXd& dw, VectorXd& dv) {
      VectorXd rx = rd - (rxz.array() / x.array()).matrix();
      rx += scatter(((rwv.array() - v.array() * ru.array()) / w.array()).matrix());
      kkt.solve(rx, rp, dx, dy);
      dz = ((rxz.array() - z.array() * dx.array()) / x.array()).matrix();
      dw = ru - gather(dx);
      dv = ((rwv.array() - v.array() * dw.array()) / w.array()).matrix();
    };

    // predictor
    VectorXd dx, dy, dz, dw, dv;
    direction(-(x.array() * z.array()).matrix(), -(w.array() * v.array()).matrix(), dx, dy, dz, dw, dv);
    const double ap = std::min(max_step(x, dx), max_step(w, dw));
    const double ad = std::min(max_step(z, dz), max_step(v, dv));
    const double mu_aff = ((x + ap * dx).dot(z + ad * dz) + (w + ap * dw).dot(v + ad * dv)) / total;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // corrector
    const VectorXd rxz = (sigma * mu - x.array() * z.array() - dx.array() * dz.array()).matrix();
    const VectorXd rwv = (sigma * mu - w.array() * v.array() - dw.array() * dv.array()).matrix();
    direction(rxz, rwv, dx, dy, dz, dw, dv);
    const double eta = std::max(0.9, 1.0 - 10.0 * mu);
    const double sp = std::min(1.0, eta * std::min(max_step(x, dx), max_step(w, dw)));
    const double sd = std::min(1.0, eta * std::min(max_step(z, dz), max_step(v, dv)));
    x += sp * dx;
    w += sp * dw;
    y += sd * dy;
    z += sd * dz;
    v += sd * dv;
    stall = (sp < 1e-8 && sd < 1e-8) ? stall + 1 : 0;
    if (stall > 5) break;
  }
  res.x = x;
  res.y = y;
  res.z = z - scatter(v);
  return res;
}

struct Transform {
  Standard s;
  std::vector<Index> col;  // per original variable, -1 if fixed
  VectorXd shift;          // value at x' = 0
  VectorXd rs, cs;         // row and column scale factors
  std::vector<Index> rows;  // original index of each standard row
  double bscale = 1.0, cscale = 1.0;
  bool trivially_infeasible = false;
};

Transform to_standard(const Problem& p, bool scale) {
  Transform t;
  const Index n0 = p.num_variables(), m0 = p.num_rows();
  const auto a0 = p.matrix();
  t.col.assign(static_cast<std::size_t>(n0), -1);
  t.shift.resize(n0);
  Index n = 0;
  for (Index j = 0; j < n0; ++j) {
    t.shift[j] = p.lower()[static_cast<std::size_t>(j)];
    if (p.upper()[static_cast<std::size_t>(j)] > p.lower()[static_cast<std::size_t>(j)]) t.col[static_cast<std::size_t>(j)] = n++;
  }
  VectorXd b = Eigen::Map<const VectorXd>(p.rhs().data(), m0) - a0 * t.shift;
  Index slacks = 0;
  for (auto s : p.senses())
    if (s != Sense::eq) ++slacks;
  std::vector<Eigen::Triplet<double>> trip;
  for (Index j = 0; j < n0; ++j) {
    const Index c = t.col[static_cast<std::size_t>(j)];
    if (c < 0) continue;
    for (SparseMatrix<double>::InnerIterator it(a0, j); it; ++it) trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(c), it.value());
  }
  Index sc = n;
  for (Index i = 0; i < m0; ++i) {
    const auto s = p.senses()[static_cast<std::size_t>(i)];
    if (s == Sense::le) trip.emplace_back(static_cast<int>(i), static_cast<int>(sc++), 1.0);
    if (s == Sense::ge) trip.emplace_back(static_cast<int>(i), static_cast<int>(sc++), -1.0);
  }
  const Index ntot = n + slacks;
  SparseMatrix<double> a(m0, ntot);
  a.setFromTriplets(trip.begin(), trip.end());

  // rows without entries must already hold
  VectorXd rowmax = VectorXd::Zero(m0);
  for (Index j = 0; j < ntot; ++j)
    for (SparseMatrix<double>::InnerIterator it(a, j); it; ++it) rowmax[it.row()] = std::max(rowmax[it.row()], std::abs(it.value()));
  std::vector<Index> keep;
  for (Index i = 0; i < m0; ++i) {
    if (rowmax[i] > 0) {
      keep.push_back(i);
    } else if (std::abs(b[i]) > 1e-9 * std::max(1.0, std::abs(p.rhs()[static_cast<std::size_t>(i)]))) {
      t.trivially_infeasible = true;
    }
  }
  t.rows = keep;
  if (static_cast<Index>(keep.size()) != m0) {
    std::vector<Index> newrow(static_cast<std::size_t>(m0), -1);
    for (std::size_t k = 0; k < keep.size(); ++k) newrow[static_cast<std::size_t>(keep[k])] = static_cast<Index>(k);
    std::vector<Eigen::Triplet<double>> t2;
    for (Index j = 0; j < ntot; ++j)
      for (SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
        if (newrow[static_cast<std::size_t>(it.row())] >= 0)
          t2.emplace_back(static_cast<int>(newrow[static_cast<std::size_t>(it.row())]), static_cast<int>(j), it.value());
    SparseMatrix<double> a2(static_cast<Index>(keep.size()), ntot);
    a2.setFromTriplets(t2.begin(), t2.end());
    a = std::move(a2);
    VectorXd b2(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) b2[static_cast<Index>(k)] = b[keep[k]];
    b = std::move(b2);
  }
  t.s.b = b;
  t.s.c = VectorXd::Zero(ntot);
  t.s.u = VectorXd::Constant(ntot, kInf);
  for (Index j = 0; j < n0; ++j) {
    const Index c = t.col[static_cast<std::size_t>(j)];
    if (c < 0) continue;
    t.s.c[c] = p.cost()[static_cast<std::size_t>(j)];
    t.s.u[c] = p.upper()[static_cast<std::size_t>(j)] - p.lower()[static_cast<std::size_t>(j)];
  }

  // Ruiz equilibration, then objective and right-hand-side normalization
  const Index m = a.rows();
  t.rs = VectorXd::Ones(m);
  t.cs = VectorXd::Ones(ntot);
  if (scale) {
    for (int pass = 0; pass < 20; ++pass) {
      VectorXd rmax = VectorXd::Zero(m), cmax = VectorXd::Zero(ntot);
      for (Index j = 0; j < ntot; ++j)
        for (SparseMatrix<double>::InnerIterator it(a, j); it; ++it) {
          const double v = std::abs(it.value());
          rmax[it.row()] = std::max(rmax[it.row()], v);
          cmax[j] = std::max(cmax[j], v);
        }
      double spread = 0;
      for (Index i = 0; i < m; ++i) spread = std::max(spread, std::abs(1 - rmax[i]));
      for (Index j = 0; j < ntot; ++j)
        if (cmax[j] > 0) spread = std::max(spread, std::abs(1 - cmax[j]));
      if (spread < 1e-3) break;
      for (Index i = 0; i < m; ++i) rmax[i] = rmax[i] > 0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
      for (Index j = 0; j < ntot; ++j) cmax[j] = cmax[j] > 0 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
      a = rmax.asDiagonal() * a * cmax.asDiagonal();
      t.rs.array() *= rmax.array();
      t.cs.array() *= cmax.array();
    }
    t.s.b.array() *= t.rs.array();
    t.s.c.array() *= t.cs.array();
    t.s.u.array() /= t.cs.array();
    // bounds are left out: loose capacity limits would shrink the scaled
    // objective by orders of magnitude
    t.bscale = std::max(1.0, t.s.b.size() ? t.s.b.lpNorm<Eigen::Infinity>() : 0.0);
    t.cscale = std::max(1.0, t.s.c.lpNorm<Eigen::Infinity>());
    t.s.b /= t.bscale;
    t.s.u /= t.bscale;
    t.s.c /= t.cscale;
    t.s.row_w = t.bscale * t.rs.cwiseInverse();
    t.s.col_pw = t.bscale * t.cs;
    t.s.col_dw = t.cscale * t.cs.cwiseInverse();
    t.s.obj_w = t.bscale * t.cscale;
    t.s.bnorm = b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0;
    t.s.cnorm = 0.0;
    for (Index j = 0; j < ntot; ++j) {
      if (std::isfinite(t.s.u[j])) t.s.bnorm = std::max(t.s.bnorm, t.s.u[j] * t.s.col_pw[j]);
      t.s.cnorm = std::max(t.s.cnorm, std::abs(t.s.c[j] * t.s.col_dw[j]));
    }
  }
  t.s.a = std::move(a);
  return t;
}

// min Σ e⁺ + e⁻  s.t.  Ax + e⁺ − e⁻ = b, 0 ≤ x ≤ u
double phase_one(const Standard& s, double tol, int max_iter, bool& ok) {
  const Index n = s.a.cols(), m = s.a.rows();
  Standard e;
  std::vector<Eigen::Triplet<double>> trip;
  for (Index j = 0; j < n; ++j)
    for (SparseMatrix<double>::InnerIterator it(s.a, j); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(j), it.value());
  for (Index i = 0; i < m; ++i) {
    trip.emplace_back(static_cast<int>(i), static_cast<int>(n + i), 1.0);
    trip.emplace_back(static_cast<int>(i), static_cast<int>(n + m + i), -1.0);
  }
  e.a.resize(m, n + 2 * m);
  e.a.setFromTriplets(trip.begin(), trip.end());
  e.b = s.b;
  e.c = VectorXd::Zero(n + 2 * m);
  e.c.tail(2 * m).setOnes();
  e.u = VectorXd::Constant(n + 2 * m, kInf);
  e.u.head(n) = s.u;
  const auto r = ipm(e, tol, max_iter);
  ok = r.converged;
  return e.c.dot(r.x);
}

Solution attempt(const Problem& p, const Options& o, bool scale, bool& failed) {
  failed = false;
  Solution sol;
  auto t = to_standard(p, scale);
  if (t.trivially_infeasible) {
    sol.status = Status::infeasible;
    return sol;
  }
  const auto r = ipm(t.s, o.tolerance, o.max_iterations);
  sol.iterations = r.iterations;
  sol.primal_residual = r.pinf;
  sol.dual_residual = r.dinf;
  sol.gap = r.gap;
  if (!r.converged) {
    bool ok = false;
    const double infeas = phase_one(t.s, o.tolerance, o.max_iterations, ok);
    sol.infeasibility = infeas;
    if (ok && infeas > 1e-6 * (1.0 + t.s.b.lpNorm<Eigen::Infinity>())) {
      sol.status = Status::infeasible;
      return sol;
    }
    failed = true;
    return sol;
  }
  sol.status = Status::optimal;
  const Index n0 = p.num_variables();
  sol.x = t.shift;
  for (Index j = 0; j < n0; ++j) {
    const Index c = t.col[static_cast<std::size_t>(j)];
    if (c >= 0) sol.x[j] += std::max(0.0, r.x[c]) * t.cs[c] * t.bscale;
  }
  // rows that were dropped have zero multipliers
  const auto a0 = p.matrix();
  sol.duals = VectorXd::Zero(p.num_rows());
  for (std::size_t k = 0; k < t.rows.size(); ++k)
    sol.duals[t.rows[k]] = r.y[static_cast<Index>(k)] * t.rs[static_cast<Index>(k)] * t.cscale;
  sol.reduced_costs = Eigen::Map<const VectorXd>(p.cost().data(), n0) - a0.transpose() * sol.duals;
  sol.objective = p.objective(sol.x);
  return sol;
}

}  // namespace

Solution solve(const Problem& p, const Options& o) {
  if (p.num_variables() == 0) {
    Solution s;
    s.status = Status::optimal;
    for (Index i = 0; i < p.num_rows(); ++i) {
      const double r = p.rhs()[static_cast<std::size_t>(i)];
      const auto sense = p.senses()[static_cast<std::size_t>(i)];
      if ((sense == Sense::eq && r != 0) || (sense == Sense::le && r < 0) || (sense == Sense::ge && r > 0))
        s.status = Status::infeasible;
    }
    s.duals = VectorXd::Zero(p.num_rows());
    return s;
  }
  bool failed = false;
  auto s = attempt(p, o, o.scaling, failed);
  if (!failed) return s;
  s = attempt(p, o, !o.scaling, failed);
  if (!failed) return s;
  throw Error("LP solver failed to converge (numerical difficulty)");
}

}  // namespace h2atlas::lp
