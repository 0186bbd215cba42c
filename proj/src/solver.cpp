#include "bps/solver.hpp"

#include "bps/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace bps {

void SolverOptions::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be a positive number");
    }
  };
  positive(feasibility_tol, "feasibility_tol");
  positive(optimality_tol, "optimality_tol");
  positive(complementarity_tol, "complementarity_tol");
  positive(initial_penalty, "initial_penalty");
  positive(initial_barrier, "initial_barrier");
  if (!(penalty_growth > 1.0)) throw Error(ErrorCode::InvalidArgument, "penalty_growth must exceed 1");
  if (max_outer_iters < 1 || max_inner_iters < 1) {
    throw Error(ErrorCode::InvalidArgument, "iteration caps must be at least 1");
  }
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::Diverged: return "Diverged";
  }
  return "MaxIter";
}

SolveStatus parse_status(const std::string& s) {
  if (s == "Optimal") return SolveStatus::Optimal;
  if (s == "Feasible") return SolveStatus::Feasible;
  if (s == "MaxIter") return SolveStatus::MaxIter;
  if (s == "Diverged") return SolveStatus::Diverged;
  throw Error(ErrorCode::Parse, "unknown solver status '" + s + "'");
}

namespace {

constexpr double kTau = 0.99;          // minimum fraction-to-boundary factor
constexpr double kKappaEps = 10.0;     // barrier subproblem tolerance factor
constexpr double kKappaMu = 0.2;
constexpr double kThetaMu = 1.5;
constexpr double kKappaSigma = 1e10;   // bound-multiplier safeguard
constexpr double kArmijo = 1e-4;
constexpr double kPenaltyFraction = 0.1;
constexpr double kBoundPush = 1e-2;
constexpr double kDivergence = 1e12;
constexpr int kMaxSoc = 8;

SparseMatrix selection(const std::vector<int>& rows, int m) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) t.emplace_back(static_cast<int>(i), rows[i], 1.0);
  SparseMatrix p(static_cast<Eigen::Index>(rows.size()), m);
  p.setFromTriplets(t.begin(), t.end());
  return p;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  return out;
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct Step {
  Eigen::VectorXd dz, ds, y;  // y: full multiplier estimate after the step
  Eigen::VectorXd dzl, dzu, dvl, dvu;
  Eigen::VectorXd grad_phi_z, grad_phi_s;
  double curvature = 0.0;  // d^T H d without regularization
};

class InteriorPoint {
 public:
  InteriorPoint(const NlpProblem& problem, const SolverOptions& opts)
      : p_(problem), opts_(opts), n_(problem.num_variables()), m_(problem.num_constraints()) {
    opts_.validate();
    const NlpBounds b = p_.bounds();
    zl_ = b.z_lower;
    zu_ = b.z_upper;
    if (zl_.size() != n_ || zu_.size() != n_ || b.c_lower.size() != m_ || b.c_upper.size() != m_) {
      throw Error(ErrorCode::Shape, "NLP bounds do not match problem dimensions");
    }
    for (int i = 0; i < n_; ++i) {
      if (zl_[i] > zu_[i]) throw Error(ErrorCode::InvalidArgument, "variable bounds cross at index " + std::to_string(i));
      if (zl_[i] == zu_[i]) {
        throw Error(ErrorCode::InvalidArgument,
                    "variable " + std::to_string(i) + " is fixed by its bounds; use an equality row");
      }
    }
    std::vector<char> is_eq(m_, 0);
    for (int r = 0; r < m_; ++r) {
      const double lo = b.c_lower[r], hi = b.c_upper[r];
      if (lo > hi) throw Error(ErrorCode::InvalidArgument, "constraint bounds cross at row " + std::to_string(r));
      if (lo == hi) {
        is_eq[r] = 1;
        eq_rows_.push_back(r);
      } else if (std::isfinite(lo) || std::isfinite(hi)) {
        ineq_rows_.push_back(r);
      }
    }
    target_ = b.c_lower;
    sl_ = gather(b.c_lower, ineq_rows_);
    su_ = gather(b.c_upper, ineq_rows_);

    const BasisPartition part = p_.basis_partition();
    if (part.rows.size() != part.variables.size()) {
      throw Error(ErrorCode::Shape, "basis partition is not square");
    }
    std::vector<char> in_basis(m_, 0), basic(n_, 0);
    for (int r : part.rows) {
      if (r < 0 || r >= m_ || !is_eq[r]) {
        throw Error(ErrorCode::InvalidArgument, "basis rows must be equality constraints");
      }
      in_basis[r] = 1;
    }
    for (int v : part.variables) basic[v] = 1;
    basis_rows_ = part.rows;
    basic_ = part.variables;
    for (int r : eq_rows_) {
      if (!in_basis[r]) other_eq_.push_back(r);
    }
    for (int j = 0; j < n_; ++j) {
      if (!basic[j]) nonbasic_.push_back(j);
    }
    sel_v_ = selection(other_eq_, m_);
    sel_i_ = selection(ineq_rows_, m_);
    sel_s_ = selection(basis_rows_, m_);
    nonbasic_pos_.assign(n_, -1);
    for (size_t j = 0; j < nonbasic_.size(); ++j) nonbasic_pos_[nonbasic_[j]] = static_cast<int>(j);
    basis_pos_.assign(m_, -1);
    for (size_t i = 0; i < basis_rows_.size(); ++i) basis_pos_[basis_rows_[i]] = static_cast<int>(i);
  }

  NlpResult run();

 private:
  void initialize();
  bool evaluate_point();
  KktResiduals residuals(double mu, double* barrier_error) const;
  Step compute_step(const SparseMatrix& w);
  double barrier_sum(const Eigen::VectorXd& z, const Eigen::VectorXd& s) const;
  double infeasibility(const Eigen::VectorXd& c, const Eigen::VectorXd& s) const;
  double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, const Eigen::VectorXd& lo,
                  const Eigen::VectorXd& hi, double tau) const;
  Eigen::VectorXd equality_correction(const Eigen::VectorXd& z, const Eigen::VectorXd& c) const;
  double max_dual_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, const std::vector<char>& active,
                       double tau) const;
  void safeguard_duals();

  const NlpProblem& p_;
  SolverOptions opts_;
  int n_, m_;
  Eigen::VectorXd zl_, zu_, sl_, su_, target_;
  std::vector<int> eq_rows_, ineq_rows_, basis_rows_, other_eq_, basic_, nonbasic_;
  std::vector<int> nonbasic_pos_, basis_pos_;
  SparseMatrix sel_v_, sel_i_, sel_s_;

  // iterate
  Eigen::VectorXd z_, s_, y_, dzl_, dzu_, dvl_, dvu_;
  std::vector<char> has_zl_, has_zu_, has_sl_, has_su_;
  double mu_ = 0.1;
  double rho_ = 10.0;
  double last_delta_ = 0.0;

  // evaluations at the iterate
  double f_ = 0.0;
  Eigen::VectorXd g_, c_;
  SparseMatrix j_, jv_, ji_;
  std::unique_ptr<BasisFactorization> basis_;

  // Null-space data of the last step, reused by the second-order correction.
  Eigen::MatrixXd null_basis_, q1_, tri_;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm_;
  Eigen::Index rank_ = 0;
};

void InteriorPoint::initialize() {
  z_ = opts_.initial_guess ? *opts_.initial_guess : p_.initial_point();
  if (z_.size() != n_) {
    throw Error(ErrorCode::Shape, "initial guess has " + std::to_string(z_.size()) + " entries, problem has " +
                                      std::to_string(n_));
  }
  if (!z_.allFinite()) throw Error(ErrorCode::NonFinite, "initial guess is not finite");
  auto push = [](double v, double lo, double hi) {
    const bool has_lo = std::isfinite(lo), has_hi = std::isfinite(hi);
    double plo = 0.0, phi = 0.0;
    if (has_lo) plo = kBoundPush * std::max(1.0, std::abs(lo));
    if (has_hi) phi = kBoundPush * std::max(1.0, std::abs(hi));
    if (has_lo && has_hi) {
      plo = std::min(plo, kBoundPush * (hi - lo));
      phi = std::min(phi, kBoundPush * (hi - lo));
    }
    if (has_lo) v = std::max(v, lo + plo);
    if (has_hi) v = std::min(v, hi - phi);
    return v;
  };
  has_zl_.assign(n_, 0);
  has_zu_.assign(n_, 0);
  for (int i = 0; i < n_; ++i) {
    has_zl_[i] = std::isfinite(zl_[i]);
    has_zu_[i] = std::isfinite(zu_[i]);
    z_[i] = push(z_[i], zl_[i], zu_[i]);
  }
  const Eigen::Index mi = static_cast<Eigen::Index>(ineq_rows_.size());
  has_sl_.assign(mi, 0);
  has_su_.assign(mi, 0);
  const Eigen::VectorXd c0 = p_.constraints(z_);
  s_.resize(mi);
  for (Eigen::Index i = 0; i < mi; ++i) {
    has_sl_[i] = std::isfinite(sl_[i]);
    has_su_[i] = std::isfinite(su_[i]);
    const double v = std::isfinite(c0[ineq_rows_[i]]) ? c0[ineq_rows_[i]] : 0.0;
    s_[i] = push(v, sl_[i], su_[i]);
  }
  auto ones_where = [](const std::vector<char>& mask) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(mask.size()));
    for (size_t i = 0; i < mask.size(); ++i) v[static_cast<Eigen::Index>(i)] = mask[i] ? 1.0 : 0.0;
    return v;
  };
  dzl_ = ones_where(has_zl_);
  dzu_ = ones_where(has_zu_);
  dvl_ = ones_where(has_sl_);
  dvu_ = ones_where(has_su_);
  y_ = Eigen::VectorXd::Zero(m_);
  mu_ = opts_.initial_barrier;
  rho_ = opts_.initial_penalty;
}

bool InteriorPoint::evaluate_point() {
  f_ = p_.objective(z_);
  g_ = p_.gradient(z_);
  c_ = p_.constraints(z_);
  if (!std::isfinite(f_) || !g_.allFinite() || !c_.allFinite()) return false;
  j_ = p_.jacobian(z_);
  jv_ = sel_v_ * j_;
  ji_ = sel_i_ * j_;
  return true;
}

double InteriorPoint::barrier_sum(const Eigen::VectorXd& z, const Eigen::VectorXd& s) const {
  double sum = 0.0;
  for (int i = 0; i < n_; ++i) {
    if (has_zl_[i]) sum += std::log(z[i] - zl_[i]);
    if (has_zu_[i]) sum += std::log(zu_[i] - z[i]);
  }
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (has_sl_[i]) sum += std::log(s[i] - sl_[i]);
    if (has_su_[i]) sum += std::log(su_[i] - s[i]);
  }
  return sum;
}

double InteriorPoint::infeasibility(const Eigen::VectorXd& c, const Eigen::VectorXd& s) const {
  double t = 0.0;
  for (int r : eq_rows_) t += std::abs(c[r] - target_[r]);
  for (size_t i = 0; i < ineq_rows_.size(); ++i) t += std::abs(c[ineq_rows_[i]] - s[static_cast<Eigen::Index>(i)]);
  return t;
}

KktResiduals InteriorPoint::residuals(double mu, double* barrier_error) const {
  Eigen::VectorXd stat = g_ - dzl_ + dzu_;
  if (m_ > 0) stat += j_.transpose() * y_;
  double stat_inf = inf_norm(stat);
  double ymax = std::max({inf_norm(y_), inf_norm(dzl_), inf_norm(dzu_)});
  for (size_t i = 0; i < ineq_rows_.size(); ++i) {
    const Eigen::Index k = static_cast<Eigen::Index>(i);
    stat_inf = std::max(stat_inf, std::abs(-y_[ineq_rows_[i]] - dvl_[k] + dvu_[k]));
  }
  double feas = 0.0;
  for (int r : eq_rows_) feas = std::max(feas, std::abs(c_[r] - target_[r]));
  for (size_t i = 0; i < ineq_rows_.size(); ++i) {
    feas = std::max(feas, std::abs(c_[ineq_rows_[i]] - s_[static_cast<Eigen::Index>(i)]));
  }
  double comp0 = 0.0, compmu = 0.0;
  auto acc = [&](double slack, double dual) {
    comp0 = std::max(comp0, std::abs(slack * dual));
    compmu = std::max(compmu, std::abs(slack * dual - mu));
  };
  for (int i = 0; i < n_; ++i) {
    if (has_zl_[i]) acc(z_[i] - zl_[i], dzl_[i]);
    if (has_zu_[i]) acc(zu_[i] - z_[i], dzu_[i]);
  }
  for (Eigen::Index i = 0; i < s_.size(); ++i) {
    if (has_sl_[i]) acc(s_[i] - sl_[i], dvl_[i]);
    if (has_su_[i]) acc(su_[i] - s_[i], dvu_[i]);
  }
  KktResiduals k;
  k.stationarity = stat_inf / (1.0 + ymax);
  k.feasibility = feas;
  k.complementarity = comp0;
  if (barrier_error) *barrier_error = std::max({k.stationarity, feas, compmu});
  return k;
}

Step InteriorPoint::compute_step(const SparseMatrix& w) {
  const Eigen::Index nb = static_cast<Eigen::Index>(basic_.size());
  const Eigen::Index nn = static_cast<Eigen::Index>(nonbasic_.size());
  const Eigen::Index mv = static_cast<Eigen::Index>(other_eq_.size());
  const Eigen::Index mi = static_cast<Eigen::Index>(ineq_rows_.size());

  Step st;
  Eigen::VectorXd sig_z = Eigen::VectorXd::Zero(n_);
  st.grad_phi_z = g_;
  for (int i = 0; i < n_; ++i) {
    if (has_zl_[i]) {
      const double d = z_[i] - zl_[i];
      sig_z[i] += dzl_[i] / d;
      st.grad_phi_z[i] -= mu_ / d;
    }
    if (has_zu_[i]) {
      const double d = zu_[i] - z_[i];
      sig_z[i] += dzu_[i] / d;
      st.grad_phi_z[i] += mu_ / d;
    }
  }
  Eigen::VectorXd sig_s = Eigen::VectorXd::Zero(mi);
  st.grad_phi_s = Eigen::VectorXd::Zero(mi);
  for (Eigen::Index i = 0; i < mi; ++i) {
    if (has_sl_[i]) {
      const double d = s_[i] - sl_[i];
      sig_s[i] += dvl_[i] / d;
      st.grad_phi_s[i] -= mu_ / d;
    }
    if (has_su_[i]) {
      const double d = su_[i] - s_[i];
      sig_s[i] += dvu_[i] / d;
      st.grad_phi_s[i] += mu_ / d;
    }
  }
  const Eigen::VectorXd ci = gather(c_, ineq_rows_);
  Eigen::VectorXd r = st.grad_phi_z;
  if (mi > 0) r += ji_.transpose() * (sig_s.cwiseProduct(ci - s_) + st.grad_phi_s);

  auto apply_h = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out = w * x;
    out += sig_z.asDiagonal() * x;
    if (mi > 0) {
      const Eigen::MatrixXd jx = ji_ * x;
      out += ji_.transpose() * (sig_s.asDiagonal() * jx);
    }
    return out;
  };

  // Particular step satisfying the basis rows, and the null-space basis Z.
  Eigen::VectorXd ypart = Eigen::VectorXd::Zero(n_);
  Eigen::MatrixXd zf = Eigen::MatrixXd::Zero(n_, nn);
  for (Eigen::Index j = 0; j < nn; ++j) zf(nonbasic_[j], j) = 1.0;
  if (nb > 0) {
    basis_ = p_.factor_basis(z_, j_);
    Eigen::VectorXd rs(nb);
    for (Eigen::Index i = 0; i < nb; ++i) rs[i] = -(c_[basis_rows_[i]] - target_[basis_rows_[i]]);
    const Eigen::VectorXd yb = basis_->solve(rs);
    for (Eigen::Index i = 0; i < nb; ++i) ypart[basic_[i]] = yb[i];

    Eigen::MatrixXd jsn = Eigen::MatrixXd::Zero(nb, nn);
    for (Eigen::Index jn = 0; jn < nn; ++jn) {
      for (SparseMatrix::InnerIterator it(j_, nonbasic_[jn]); it; ++it) {
        const int pos = basis_pos_[it.row()];
        if (pos >= 0) jsn(pos, jn) = it.value();
      }
    }
    const Eigen::MatrixXd zb = basis_->solve(jsn);
    for (Eigen::Index i = 0; i < nb; ++i) zf.row(basic_[i]) = -zb.row(i);
  }

  const Eigen::MatrixXd hz = apply_h(zf);
  Eigen::MatrixXd hr = zf.transpose() * hz;
  hr = 0.5 * (hr + hr.transpose()).eval();
  const Eigen::VectorXd hy = apply_h(ypart);
  const Eigen::VectorXd gr = zf.transpose() * (r + hy);

  // Remaining equality rows, handled by a rank-revealing QR of their reduced Jacobian.
  Eigen::MatrixXd q1, q2;
  Eigen::VectorXd a;
  Eigen::MatrixXd tri;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm;
  Eigen::Index rank = 0;
  if (mv > 0) {
    const Eigen::MatrixXd ar = jv_ * zf;  // mv x nn
    Eigen::VectorXd br(mv);
    const Eigen::VectorXd jvy = jv_ * ypart;
    for (Eigen::Index i = 0; i < mv; ++i) br[i] = -(c_[other_eq_[i]] - target_[other_eq_[i]]) - jvy[i];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ar.transpose());
    qr.setThreshold(1e-12);
    rank = qr.rank();
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(nn, nn);
    q1 = q.leftCols(rank);
    q2 = q.rightCols(nn - rank);
    tri = qr.matrixR().topLeftCorner(rank, rank).triangularView<Eigen::Upper>();
    perm = qr.colsPermutation();
    const Eigen::VectorXd pb = perm.transpose() * br;
    a = tri.transpose().triangularView<Eigen::Lower>().solve(pb.head(rank));
  } else {
    q2 = Eigen::MatrixXd::Identity(nn, nn);
    a = Eigen::VectorXd(0);
  }

  Eigen::MatrixXd kmat;
  Eigen::VectorXd krhs;
  if (mv > 0) {
    kmat = q2.transpose() * hr * q2;
    krhs = -(q2.transpose() * (gr + hr * (q1 * a)));
  } else {
    kmat = hr;
    krhs = -gr;
  }
  const Eigen::Index nk = kmat.rows();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nk);
  if (nk > 0) {
    double delta = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(kmat + delta * Eigen::MatrixXd::Identity(nk, nk));
      if (llt.info() == Eigen::Success) {
        b = llt.solve(krhs);
        if (b.allFinite()) break;
      }
      if (delta == 0.0) {
        delta = last_delta_ == 0.0 ? 1e-4 : std::max(1e-20, last_delta_ / 3.0);
      } else {
        delta *= last_delta_ == 0.0 ? 100.0 : 8.0;
      }
      if (delta > 1e40) throw Error(ErrorCode::Numeric, "reduced Hessian could not be regularized");
    }
    last_delta_ = delta;
  }
  Eigen::VectorXd dq = q2 * b;
  if (mv > 0 && rank > 0) dq += q1 * a;
  st.dz = ypart + zf * dq;

  // Multipliers at the new point.
  const Eigen::VectorXd hdz = apply_h(st.dz);
  st.curvature = st.dz.dot(hdz - sig_z.cwiseProduct(st.dz));
  const Eigen::VectorXd t = hdz + r;
  st.y = Eigen::VectorXd::Zero(m_);
  Eigen::VectorXd yv = Eigen::VectorXd::Zero(mv);
  if (mv > 0 && rank > 0) {
    const Eigen::VectorXd rhs = -(q1.transpose() * (zf.transpose() * t));
    Eigen::VectorXd wv = Eigen::VectorXd::Zero(mv);
    wv.head(rank) = tri.triangularView<Eigen::Upper>().solve(rhs);
    yv = perm * wv;
  }
  for (Eigen::Index i = 0; i < mv; ++i) st.y[other_eq_[i]] = yv[i];
  st.ds = Eigen::VectorXd::Zero(mi);
  if (mi > 0) {
    st.ds = ji_ * st.dz + ci - s_;
    const Eigen::VectorXd yi = sig_s.cwiseProduct(st.ds) + st.grad_phi_s;
    for (Eigen::Index i = 0; i < mi; ++i) st.y[ineq_rows_[i]] = yi[i];
  }
  if (nb > 0) {
    Eigen::VectorXd full = t;
    if (mv > 0) full += jv_.transpose() * yv;
    const Eigen::VectorXd ys = basis_->solve_transpose(-gather(full, basic_));
    for (Eigen::Index i = 0; i < nb; ++i) st.y[basis_rows_[i]] = ys[i];
  }

  st.dzl = Eigen::VectorXd::Zero(n_);
  st.dzu = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    if (has_zl_[i]) {
      const double d = z_[i] - zl_[i];
      st.dzl[i] = mu_ / d - dzl_[i] - dzl_[i] / d * st.dz[i];
    }
    if (has_zu_[i]) {
      const double d = zu_[i] - z_[i];
      st.dzu[i] = mu_ / d - dzu_[i] + dzu_[i] / d * st.dz[i];
    }
  }
  st.dvl = Eigen::VectorXd::Zero(mi);
  st.dvu = Eigen::VectorXd::Zero(mi);
  for (Eigen::Index i = 0; i < mi; ++i) {
    if (has_sl_[i]) {
      const double d = s_[i] - sl_[i];
      st.dvl[i] = mu_ / d - dvl_[i] - dvl_[i] / d * st.ds[i];
    }
    if (has_su_[i]) {
      const double d = su_[i] - s_[i];
      st.dvu[i] = mu_ / d - dvu_[i] + dvu_[i] / d * st.ds[i];
    }
  }
  st.curvature += st.ds.dot(sig_s.cwiseProduct(st.ds));
  null_basis_ = std::move(zf);
  q1_ = std::move(q1);
  tri_ = std::move(tri);
  perm_ = perm;
  rank_ = rank;
  return st;
}

// Smallest correction (in the reduced metric) that zeroes the linearized
// equality residuals c - target at the current Jacobian.
Eigen::VectorXd InteriorPoint::equality_correction(const Eigen::VectorXd& z, const Eigen::VectorXd& c) const {
  const Eigen::Index nb = static_cast<Eigen::Index>(basic_.size());
  const Eigen::Index mv = static_cast<Eigen::Index>(other_eq_.size());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n_);
  if (nb > 0) {
    // The basis is refactored at the trial point: with the old one the correction
    // is only a chord iteration, which stalls on strongly bilinear dynamics.
    const auto basis = p_.factor_basis(z, p_.jacobian(z));
    Eigen::VectorXd rs(nb);
    for (Eigen::Index i = 0; i < nb; ++i) rs[i] = -(c[basis_rows_[i]] - target_[basis_rows_[i]]);
    const Eigen::VectorXd db = basis->solve(rs);
    for (Eigen::Index i = 0; i < nb; ++i) d[basic_[i]] = db[i];
  }
  if (mv > 0 && rank_ > 0) {
    const Eigen::VectorXd jvd = jv_ * d;
    Eigen::VectorXd br(mv);
    for (Eigen::Index i = 0; i < mv; ++i) br[i] = -(c[other_eq_[i]] - target_[other_eq_[i]]) - jvd[i];
    const Eigen::VectorXd pb = perm_.transpose() * br;
    const Eigen::VectorXd a = tri_.transpose().triangularView<Eigen::Lower>().solve(pb.head(rank_));
    d += null_basis_ * (q1_ * a);
  }
  return d;
}

double InteriorPoint::max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi, double tau) const {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0 && std::isfinite(lo[i])) alpha = std::min(alpha, -tau * (v[i] - lo[i]) / dv[i]);
    if (dv[i] > 0.0 && std::isfinite(hi[i])) alpha = std::min(alpha, tau * (hi[i] - v[i]) / dv[i]);
  }
  return alpha;
}

double InteriorPoint::max_dual_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                                    const std::vector<char>& active, double tau) const {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (active[i] && dv[i] < 0.0) alpha = std::min(alpha, -tau * v[i] / dv[i]);
  }
  return alpha;
}

void InteriorPoint::safeguard_duals() {
  auto clamp = [&](double dual, double slack) {
    const double lo = mu_ / (kKappaSigma * slack);
    const double hi = kKappaSigma * mu_ / slack;
    return std::min(std::max(dual, lo), hi);
  };
  for (int i = 0; i < n_; ++i) {
    if (has_zl_[i]) dzl_[i] = clamp(dzl_[i], z_[i] - zl_[i]);
    if (has_zu_[i]) dzu_[i] = clamp(dzu_[i], zu_[i] - z_[i]);
  }
  for (Eigen::Index i = 0; i < s_.size(); ++i) {
    if (has_sl_[i]) dvl_[i] = clamp(dvl_[i], s_[i] - sl_[i]);
    if (has_su_[i]) dvu_[i] = clamp(dvu_[i], su_[i] - s_[i]);
  }
}

NlpResult InteriorPoint::run() {
  initialize();
  NlpResult res;
  if (!evaluate_point()) throw Error(ErrorCode::NonFinite, "problem functions are not finite at the initial point");

  // Multiplier estimate for the basis rows from the objective gradient.
  if (!basic_.empty()) {
    basis_ = p_.factor_basis(z_, j_);
    const Eigen::VectorXd ys = basis_->solve_transpose(-gather(g_, basic_));
    if (ys.allFinite() && inf_norm(ys) <= 1e3) {
      for (size_t i = 0; i < basis_rows_.size(); ++i) y_[basis_rows_[i]] = ys[static_cast<Eigen::Index>(i)];
    }
  }

  const double mu_min = std::min(opts_.complementarity_tol, opts_.optimality_tol) / 10.0;
  int consecutive_failures = 0;
  bool stop = false;
  int iter = 0;
  KktResiduals kkt;
  for (;; ++iter) {
    double err_mu = 0.0;
    kkt = residuals(0.0, nullptr);
    if (kkt.stationarity <= opts_.optimality_tol && kkt.feasibility <= opts_.feasibility_tol &&
        kkt.complementarity <= opts_.complementarity_tol) {
      res.status = SolveStatus::Optimal;
      res.message = "converged";
      break;
    }
    if (std::abs(f_) > kDivergence || inf_norm(z_) > kDivergence || rho_ > kDivergence) {
      res.status = SolveStatus::Diverged;
      res.message = "objective, iterate or penalty exceeded 1e12";
      break;
    }
    if (iter >= opts_.max_inner_iters) {
      res.message = "iteration cap reached";
      stop = true;
    }
    residuals(mu_, &err_mu);
    while (!stop && mu_ > mu_min && err_mu <= kKappaEps * mu_) {
      mu_ = std::max(mu_min, std::min(kKappaMu * mu_, std::pow(mu_, kThetaMu)));
      ++res.barrier_updates;
      if (res.barrier_updates > opts_.max_outer_iters) {
        res.message = "barrier update cap reached";
        stop = true;
      }
      residuals(mu_, &err_mu);
    }
    if (stop) {
      res.status = kkt.feasibility <= opts_.feasibility_tol ? SolveStatus::Feasible : SolveStatus::MaxIter;
      break;
    }

    const SparseMatrix w = p_.hessian(z_, 1.0, y_);
    Step st = compute_step(w);
    if (!st.dz.allFinite() || !st.y.allFinite()) {
      res.status = SolveStatus::Diverged;
      res.message = "non-finite Newton step";
      break;
    }

    const double tau = std::max(kTau, 1.0 - mu_);
    const double alpha_max = std::min(max_step(z_, st.dz, zl_, zu_, tau), max_step(s_, st.ds, sl_, su_, tau));
    double alpha_dual = std::min({max_dual_step(dzl_, st.dzl, has_zl_, tau), max_dual_step(dzu_, st.dzu, has_zu_, tau),
                                  max_dual_step(dvl_, st.dvl, has_sl_, tau), max_dual_step(dvu_, st.dvu, has_su_, tau)});

    // l1 merit function phi_mu + rho * ||c||_1.
    const double theta0 = infeasibility(c_, s_);
    const double dphi = st.grad_phi_z.dot(st.dz) + st.grad_phi_s.dot(st.ds);
    if (theta0 > 0.0) {
      const double need = (dphi + 0.5 * std::max(0.0, st.curvature)) / ((1.0 - kPenaltyFraction) * theta0);
      if (rho_ < need) rho_ = std::max(need, std::min(rho_ * opts_.penalty_growth, 2.0 * need));
    }
    const double merit0 = f_ - mu_ * barrier_sum(z_, s_) + rho_ * theta0;
    const double slope = dphi - rho_ * theta0;

    auto merit_at = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& s, Eigen::VectorXd* cout) {
      for (int i = 0; i < n_; ++i) {
        if ((has_zl_[i] && !(z[i] > zl_[i])) || (has_zu_[i] && !(z[i] < zu_[i]))) return std::numeric_limits<double>::infinity();
      }
      const double f = p_.objective(z);
      Eigen::VectorXd c = p_.constraints(z);
      if (!std::isfinite(f) || !c.allFinite()) return std::numeric_limits<double>::infinity();
      const double val = f - mu_ * barrier_sum(z, s) + rho_ * infeasibility(c, s);
      if (cout) *cout = std::move(c);
      return std::isfinite(val) ? val : std::numeric_limits<double>::infinity();
    };

    double alpha = alpha_max;
    bool accepted = false;
    Eigen::VectorXd z_new, s_new;
    for (int ls = 0; ls < 40 && !accepted; ++ls) {
      z_new = z_ + alpha * st.dz;
      s_new = s_ + alpha * st.ds;
      Eigen::VectorXd c_trial;
      const double mt = merit_at(z_new, s_new, &c_trial);
      if (mt <= merit0 + kArmijo * alpha * slope) {
        accepted = true;
        break;
      }
      if (ls == 0 && std::isfinite(mt) && !basic_.empty()) {
        // Second-order correction: Newton-project the trial point back onto the
        // equality rows through the basic variables, relinearizing each pass.
        Eigen::VectorXd z_soc = z_new;
        Eigen::VectorXd s_soc = s_new;
        Eigen::VectorXd c_soc = c_trial;
        for (int k = 0; k < kMaxSoc; ++k) {
          Eigen::VectorXd d;
          try {
            d = equality_correction(z_soc, c_soc);
          } catch (const Error&) {
            break;  // basis singular at the trial point
          }
          z_soc += d;
          if (!ineq_rows_.empty()) s_soc += ji_ * d;  // keep the slack rows' linearization
          const double ms = merit_at(z_soc, s_soc, &c_soc);
          if (!std::isfinite(ms)) break;
          if (ms <= merit0 + kArmijo * alpha * slope) {
            z_new = z_soc;
            s_new = s_soc;
            accepted = true;
            break;
          }
        }
        if (accepted) break;
      }
      alpha *= 0.5;
      if (alpha * inf_norm(st.dz) < 1e-14 * (1.0 + inf_norm(z_))) break;
    }
    if (!accepted) {
      const bool tiny = inf_norm(st.dz) < 1e-13 * (1.0 + inf_norm(z_));
      if (tiny || consecutive_failures < 3) {
        // Accept the full step anyway; a short run of non-monotone steps often escapes
        // a merit-function stall near a kink.
        ++consecutive_failures;
        alpha = alpha_max;
        z_new = z_ + alpha * st.dz;
        s_new = s_ + alpha * st.ds;
        if (!std::isfinite(merit_at(z_new, s_new, nullptr))) {
          res.status = kkt.feasibility <= opts_.feasibility_tol ? SolveStatus::Feasible : SolveStatus::MaxIter;
          res.message = "line search failed";
          break;
        }
      } else {
        res.status = kkt.feasibility <= opts_.feasibility_tol ? SolveStatus::Feasible : SolveStatus::MaxIter;
        res.message = "line search failed";
        break;
      }
    } else {
      consecutive_failures = 0;
    }

    z_ = z_new;
    s_ = s_new;
    y_ += alpha * (st.y - y_);
    dzl_ += alpha_dual * st.dzl;
    dzu_ += alpha_dual * st.dzu;
    dvl_ += alpha_dual * st.dvl;
    dvu_ += alpha_dual * st.dvu;
    safeguard_duals();
    if (!evaluate_point()) {
      res.status = SolveStatus::Diverged;
      res.message = "problem functions became non-finite";
      break;
    }
    if (opts_.print_level > 0) {
      std::fprintf(stderr, "%4d f=% .10e stat=%.2e feas=%.2e comp=%.2e mu=%.1e alpha=%.3f rho=%.1e delta=%.1e\n",
                   iter, f_, kkt.stationarity, kkt.feasibility, kkt.complementarity, mu_, alpha, rho_,
                   last_delta_);
    }
  }

  res.z = z_;
  res.y = y_;
  res.bound_multipliers = dzu_ - dzl_;
  res.objective = f_;
  res.kkt = residuals(0.0, nullptr);
  res.iterations = iter;
  return res;
}

}  // namespace

NlpResult solve_nlp(const NlpProblem& problem, const SolverOptions& opts) {
  InteriorPoint ip(problem, opts);
  return ip.run();
}

}  // namespace bps
