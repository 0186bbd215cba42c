#include "bps/transcription.hpp"

#include "bps/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace bps {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double hessian_step(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

using StridedMap = Eigen::Map<Eigen::MatrixXd, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
using ConstStridedMap =
    Eigen::Map<const Eigen::MatrixXd, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

// Component i of every node of a node-major block with `dim` entries per node.
ConstStridedMap component(const Eigen::MatrixXd& m, Eigen::Index row0, int dim, int i, Eigen::Index nodes) {
  return ConstStridedMap(m.data() + row0 + i, nodes, m.cols(),
                         Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(m.rows(), dim));
}
StridedMap component(Eigen::MatrixXd& m, Eigen::Index row0, int dim, int i, Eigen::Index nodes) {
  return StridedMap(m.data() + row0 + i, nodes, m.cols(),
                    Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(m.rows(), dim));
}

// Basis block of the transcribed NLP:
//   [ I    -Ba (x) I   0 ] [dX ]   [r1]
//   [ 0     w^T (x) I -I ] [dV ] = [r2]
//   [ G     I          0 ] [dxb]   [r3]
// with G = blockdiag(-gamma f_x(k)). Eliminating dX leaves M dV = r3 - G r1,
// M = I + G (Ba (x) I), a dense nx(N+1) square system.
class StructuredBasis : public BasisFactorization {
 public:
  StructuredBasis(const Eigen::MatrixXd& ba, const Eigen::VectorXd& w, int nx,
                  std::vector<Eigen::MatrixXd> g)
      : ba_(ba), w_(w), nx_(nx), nodes_(w.size()), g_(std::move(g)) {
    const Eigen::Index n = nx_ * nodes_;
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = 0; k < nodes_; ++k) {
      for (Eigen::Index j = 0; j < nodes_; ++j) {
        m.block(k * nx_, j * nx_, nx_, nx_) += ba_(k, j) * g_[k];
      }
    }
    lu_.compute(m);
    const double rc = lu_.rcond();
    if (!std::isfinite(rc) || rc < 1e-15) {
      throw Error(ErrorCode::Numeric, "collocation basis is numerically singular");
    }
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const override {
    const Eigen::Index nn = nx_ * nodes_;
    const Eigen::Index cols = rhs.cols();
    const Eigen::MatrixXd r1 = rhs.topRows(nn);
    const Eigen::MatrixXd r2 = rhs.middleRows(nn, nx_);
    Eigen::MatrixXd r3 = rhs.bottomRows(nn);
    for (Eigen::Index k = 0; k < nodes_; ++k) {
      r3.middleRows(k * nx_, nx_).noalias() -= g_[k] * r1.middleRows(k * nx_, nx_);
    }
    const Eigen::MatrixXd dv = lu_.solve(r3);

    Eigen::MatrixXd out(2 * nn + nx_, cols);
    out.middleRows(nn, nn) = dv;
    Eigen::MatrixXd dx = r1;
    for (int i = 0; i < nx_; ++i) {
      component(dx, 0, nx_, i, nodes_).noalias() += ba_ * component(dv, 0, nx_, i, nodes_);
      out.row(2 * nn + i) = w_.transpose() * component(dv, 0, nx_, i, nodes_) - r2.row(i);
    }
    out.topRows(nn) = dx;
    return out;
  }

  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& g) const override {
    const Eigen::Index nn = nx_ * nodes_;
    const Eigen::VectorXd gx = g.head(nn);
    const Eigen::VectorXd gv = g.segment(nn, nn);
    const Eigen::VectorXd y2 = -g.tail(nx_);
    Eigen::VectorXd rhs = gv;
    for (int i = 0; i < nx_; ++i) {
      Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<>> gxi(gx.data() + i, nodes_,
                                                                     Eigen::InnerStride<>(nx_));
      Eigen::Map<Eigen::VectorXd, 0, Eigen::InnerStride<>> ri(rhs.data() + i, nodes_,
                                                            Eigen::InnerStride<>(nx_));
      ri.noalias() += ba_.transpose() * gxi;
      ri -= w_ * y2[i];
    }
    const Eigen::VectorXd y3 = lu_.transpose().solve(rhs);
    Eigen::VectorXd y(2 * nn + nx_);
    Eigen::VectorXd y1 = gx;
    for (Eigen::Index k = 0; k < nodes_; ++k) {
      y1.segment(k * nx_, nx_).noalias() -= g_[k].transpose() * y3.segment(k * nx_, nx_);
    }
    y << y1, y2, y3;
    return y;
  }

 private:
  const Eigen::MatrixXd& ba_;
  Eigen::VectorXd w_;
  int nx_;
  Eigen::Index nodes_;
  std::vector<Eigen::MatrixXd> g_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

DomainMap affine_domain_map(double ta, double tb) {
  if (!(tb > ta)) {
    throw Error(ErrorCode::InvalidInterval, "domain map needs tb > ta, got [" + std::to_string(ta) +
                                                ", " + std::to_string(tb) + "]");
  }
  return {ta, tb};
}

struct TranscribedNlp::NodeView {
  Eigen::VectorXd x, u, p;
  double t = 0.0;
  double dt_dtb = 0.0;  // d t_k / d tb
};

TranscribedNlp::TranscribedNlp(OcpDefinition ocp, std::shared_ptr<const BirkhoffSystem> sys)
    : ocp_(std::move(ocp)), sys_(std::move(sys)) {
  ocp_.validate();
  if (!sys_) throw Error(ErrorCode::InvalidArgument, "transcription needs a Birkhoff system");
  const int nodes = static_cast<int>(sys_->wB.size());
  layout_ = {ocp_.nx, ocp_.nu, ocp_.np, nodes, ocp_.free_final_time()};
  rows_ = {ocp_.nx, ocp_.num_events(), ocp_.num_path(), nodes};
  start_ = default_guess();
}

double TranscribedNlp::final_time(const Eigen::VectorXd& z) const {
  return layout_.free_tb ? z[layout_.tb()] : ocp_.tb;
}

DomainMap TranscribedNlp::domain(const Eigen::VectorXd& z) const {
  return {ocp_.ta, final_time(z)};
}

Eigen::VectorXd TranscribedNlp::node_times(const Eigen::VectorXd& z) const {
  const DomainMap map = domain(z);
  Eigen::VectorXd t(layout_.nodes);
  for (int k = 0; k < layout_.nodes; ++k) t[k] = map(grid().nodes[k]);
  return t;
}

TranscribedNlp::NodeView TranscribedNlp::node(const Eigen::VectorXd& z, int k) const {
  NodeView v;
  v.x = z.segment(layout_.x(k, 0), layout_.nx);
  v.u = z.segment(layout_.u0() + k * layout_.nu, layout_.nu);
  v.p = z.segment(layout_.p0(), layout_.np);
  const double tau = grid().nodes[k];
  v.t = domain(z)(tau);
  v.dt_dtb = 0.5 * (tau + 1.0);
  return v;
}

Eigen::VectorXd TranscribedNlp::guess_from(
    double tb, const std::function<void(double, Eigen::VectorXd&, Eigen::VectorXd&)>& traj,
    const Eigen::VectorXd& p) const {
  const DecisionLayout& L = layout_;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(L.size());
  if (L.free_tb) z[L.tb()] = tb;
  if (L.np > 0) z.segment(L.p0(), L.np) = p.size() == L.np ? p : Eigen::VectorXd::Zero(L.np);
  const DomainMap map = affine_domain_map(ocp_.ta, tb);
  const double gamma = map.gamma();
  Eigen::VectorXd x(L.nx), u(L.nu), f(L.nx);
  for (int k = 0; k < L.nodes; ++k) {
    const double t = map(grid().nodes[k]);
    x.setZero();
    u.setZero();
    traj(t, x, u);
    z.segment(L.x(k, 0), L.nx) = x;
    if (L.nu > 0) z.segment(L.u(k, 0), L.nu) = u;
    ocp_.dynamics.evaluate(x, u, t, z.segment(L.p0(), L.np), f);
    z.segment(L.v(k, 0), L.nx) = gamma * f;
  }
  traj(ocp_.ta, x, u);
  z.segment(L.xa0(), L.nx) = x;
  traj(tb, x, u);
  z.segment(L.xb0(), L.nx) = x;
  return z;
}

Eigen::VectorXd TranscribedNlp::default_guess() const {
  const OcpGuess& g = ocp_.guess;
  double tb = ocp_.tb;
  if (layout_.free_tb) tb = g.tb > 0.0 ? g.tb : 0.5 * (ocp_.tb_lower + ocp_.tb_upper);
  if (g.trajectory) return guess_from(tb, g.trajectory, g.p);

  const int nx = ocp_.nx, nu = ocp_.nu;
  const Eigen::VectorXd xa = g.xa.size() == nx ? g.xa : Eigen::VectorXd::Zero(nx);
  const Eigen::VectorXd xb = g.xb.size() == nx ? g.xb : xa;
  const Eigen::VectorXd u0 = g.u.size() == nu ? g.u : Eigen::VectorXd::Zero(nu);
  const double ta = ocp_.ta;
  auto line = [&](double t, Eigen::VectorXd& x, Eigen::VectorXd& u) {
    const double s = (t - ta) / (tb - ta);
    x = xa + s * (xb - xa);
    u = u0;
  };
  return guess_from(tb, line, g.p);
}

NlpBounds TranscribedNlp::bounds() const {
  const DecisionLayout& L = layout_;
  NlpBounds b;
  b.z_lower = Eigen::VectorXd::Constant(L.size(), -kInf);
  b.z_upper = Eigen::VectorXd::Constant(L.size(), kInf);
  if (L.free_tb) {
    b.z_lower[L.tb()] = ocp_.tb_lower;
    b.z_upper[L.tb()] = ocp_.tb_upper;
  }
  if (ocp_.p_lower.size() == L.np && L.np > 0) b.z_lower.segment(L.p0(), L.np) = ocp_.p_lower;
  if (ocp_.p_upper.size() == L.np && L.np > 0) b.z_upper.segment(L.p0(), L.np) = ocp_.p_upper;

  const ConstraintLayout& R = rows_;
  b.c_lower = Eigen::VectorXd::Zero(R.size());
  b.c_upper = Eigen::VectorXd::Zero(R.size());
  if (R.ne > 0) {
    b.c_lower.segment(R.event0(), R.ne) = ocp_.events_lower;
    b.c_upper.segment(R.event0(), R.ne) = ocp_.events_upper;
  }
  for (int k = 0; k < R.nodes && R.nh > 0; ++k) {
    b.c_lower.segment(R.path(k, 0), R.nh) = ocp_.path_lower;
    b.c_upper.segment(R.path(k, 0), R.nh) = ocp_.path_upper;
  }
  return b;
}

Eigen::VectorXd TranscribedNlp::initial_point() const { return start_; }

void TranscribedNlp::set_initial_point(Eigen::VectorXd z) {
  if (z.size() != layout_.size()) {
    throw Error(ErrorCode::Shape, "initial point has " + std::to_string(z.size()) +
                                      " entries, layout needs " + std::to_string(layout_.size()));
  }
  start_ = std::move(z);
}

double TranscribedNlp::objective(const Eigen::VectorXd& z) const {
  const DecisionLayout& L = layout_;
  const DomainMap map = domain(z);
  const Eigen::VectorXd p = z.segment(L.p0(), L.np);
  double total = 0.0;
  Eigen::VectorXd val(1);
  if (!ocp_.endpoint_cost.empty()) {
    ocp_.endpoint_cost.evaluate(z.segment(L.xa0(), L.nx), z.segment(L.xb0(), L.nx), map.ta, map.tb,
                                p, val);
    total += val[0];
  }
  if (!ocp_.running_cost.empty()) {
    double q = 0.0;
    for (int k = 0; k < L.nodes; ++k) {
      const NodeView n = node(z, k);
      ocp_.running_cost.evaluate(n.x, n.u, n.t, n.p, val);
      q += sys_->wB[k] * val[0];
    }
    total += map.gamma() * q;
  }
  return ocp_.cost_scale * total;
}

Eigen::VectorXd TranscribedNlp::gradient(const Eigen::VectorXd& z) const {
  const DecisionLayout& L = layout_;
  const int nx = L.nx, nu = L.nu, np = L.np;
  const DomainMap map = domain(z);
  const double gamma = map.gamma();
  const double s = ocp_.cost_scale;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(L.size());
  const Eigen::VectorXd p = z.segment(L.p0(), np);

  if (!ocp_.endpoint_cost.empty()) {
    Eigen::MatrixXd je(1, 2 * nx + 2 + np);
    ocp_.endpoint_cost.differentiate(z.segment(L.xa0(), nx), z.segment(L.xb0(), nx), map.ta, map.tb,
                                     p, je);
    g.segment(L.xa0(), nx) += s * je.block(0, 0, 1, nx).transpose();
    g.segment(L.xb0(), nx) += s * je.block(0, nx, 1, nx).transpose();
    if (L.free_tb) g[L.tb()] += s * je(0, 2 * nx + 1);
    if (np > 0) g.segment(L.p0(), np) += s * je.block(0, 2 * nx + 2, 1, np).transpose();
  }
  if (!ocp_.running_cost.empty()) {
    Eigen::MatrixXd jf(1, nx + nu + 1 + np);
    Eigen::VectorXd val(1);
    for (int k = 0; k < L.nodes; ++k) {
      const NodeView n = node(z, k);
      const double w = sys_->wB[k];
      ocp_.running_cost.differentiate(n.x, n.u, n.t, n.p, jf);
      g.segment(L.x(k, 0), nx) += s * gamma * w * jf.block(0, 0, 1, nx).transpose();
      if (nu > 0) g.segment(L.u(k, 0), nu) += s * gamma * w * jf.block(0, nx, 1, nu).transpose();
      if (np > 0) g.segment(L.p0(), np) += s * gamma * w * jf.block(0, nx + nu + 1, 1, np).transpose();
      if (L.free_tb) {
        ocp_.running_cost.evaluate(n.x, n.u, n.t, n.p, val);
        g[L.tb()] += s * w * (0.5 * val[0] + gamma * jf(0, nx + nu) * n.dt_dtb);
      }
    }
  }
  return g;
}

Eigen::VectorXd TranscribedNlp::constraints(const Eigen::VectorXd& z) const {
  const DecisionLayout& L = layout_;
  const ConstraintLayout& R = rows_;
  const int nx = L.nx, nodes = L.nodes;
  const DomainMap map = domain(z);
  const double gamma = map.gamma();
  Eigen::VectorXd c(R.size());

  const Eigen::Map<const Eigen::MatrixXd> X(z.data(), nx, nodes);
  const Eigen::Map<const Eigen::MatrixXd> V(z.data() + L.v0(), nx, nodes);
  const Eigen::VectorXd xa = z.segment(L.xa0(), nx);
  const Eigen::VectorXd xb = z.segment(L.xb0(), nx);
  Eigen::Map<Eigen::MatrixXd> lin(c.data(), nx, nodes);
  lin = X - xa * Eigen::RowVectorXd::Ones(nodes) - V * sys_->Ba.transpose();
  c.segment(R.linear(nodes, 0), nx) = V * sys_->wB + xa - xb;

  Eigen::VectorXd f(nx), h(R.nh);
  for (int k = 0; k < nodes; ++k) {
    const NodeView n = node(z, k);
    ocp_.dynamics.evaluate(n.x, n.u, n.t, n.p, f);
    c.segment(R.collocation(k, 0), nx) = V.col(k) - gamma * f;
    if (R.nh > 0) {
      ocp_.path.evaluate(n.x, n.u, n.t, n.p, h);
      c.segment(R.path(k, 0), R.nh) = h;
    }
  }
  if (R.ne > 0) {
    Eigen::VectorXd e(R.ne);
    ocp_.events.evaluate(xa, xb, map.ta, map.tb, z.segment(L.p0(), L.np), e);
    c.segment(R.event0(), R.ne) = e;
  }
  return c;
}

SparseMatrix TranscribedNlp::jacobian(const Eigen::VectorXd& z) const {
  const DecisionLayout& L = layout_;
  const ConstraintLayout& R = rows_;
  const int nx = L.nx, nu = L.nu, np = L.np, nodes = L.nodes;
  const DomainMap map = domain(z);
  const double gamma = map.gamma();

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<size_t>(nx) * nodes * (nodes + 2 * nx + nu + 4) + 64);

  for (int k = 0; k < nodes; ++k) {
    for (int i = 0; i < nx; ++i) {
      const int row = R.linear(k, i);
      t.emplace_back(row, L.x(k, i), 1.0);
      t.emplace_back(row, L.xa(i), -1.0);
      for (int j = 0; j < nodes; ++j) {
        const double b = sys_->Ba(k, j);
        if (b != 0.0) t.emplace_back(row, L.v(j, i), -b);
      }
    }
  }
  for (int i = 0; i < nx; ++i) {
    const int row = R.linear(nodes, i);
    for (int j = 0; j < nodes; ++j) t.emplace_back(row, L.v(j, i), sys_->wB[j]);
    t.emplace_back(row, L.xa(i), 1.0);
    t.emplace_back(row, L.xb(i), -1.0);
  }

  const int cols = nx + nu + 1 + np;
  Eigen::MatrixXd jf(nx, cols), jh(R.nh, cols);
  Eigen::VectorXd f(nx);
  for (int k = 0; k < nodes; ++k) {
    const NodeView n = node(z, k);
    ocp_.dynamics.differentiate(n.x, n.u, n.t, n.p, jf);
    if (L.free_tb) ocp_.dynamics.evaluate(n.x, n.u, n.t, n.p, f);
    for (int i = 0; i < nx; ++i) {
      const int row = R.collocation(k, i);
      t.emplace_back(row, L.v(k, i), 1.0);
      for (int m = 0; m < nx; ++m) t.emplace_back(row, L.x(k, m), -gamma * jf(i, m));
      for (int m = 0; m < nu; ++m) t.emplace_back(row, L.u(k, m), -gamma * jf(i, nx + m));
      if (L.free_tb) t.emplace_back(row, L.tb(), -(0.5 * f[i] + gamma * jf(i, nx + nu) * n.dt_dtb));
      for (int m = 0; m < np; ++m) t.emplace_back(row, L.p(m), -gamma * jf(i, nx + nu + 1 + m));
    }
    if (R.nh > 0) {
      ocp_.path.differentiate(n.x, n.u, n.t, n.p, jh);
      for (int i = 0; i < R.nh; ++i) {
        const int row = R.path(k, i);
        for (int m = 0; m < nx; ++m) t.emplace_back(row, L.x(k, m), jh(i, m));
        for (int m = 0; m < nu; ++m) t.emplace_back(row, L.u(k, m), jh(i, nx + m));
        if (L.free_tb) t.emplace_back(row, L.tb(), jh(i, nx + nu) * n.dt_dtb);
        for (int m = 0; m < np; ++m) t.emplace_back(row, L.p(m), jh(i, nx + nu + 1 + m));
      }
    }
  }
  if (R.ne > 0) {
    Eigen::MatrixXd je(R.ne, 2 * nx + 2 + np);
    ocp_.events.differentiate(z.segment(L.xa0(), nx), z.segment(L.xb0(), nx), map.ta, map.tb,
                              z.segment(L.p0(), np), je);
    for (int i = 0; i < R.ne; ++i) {
      const int row = R.event(i);
      for (int m = 0; m < nx; ++m) {
        t.emplace_back(row, L.xa(m), je(i, m));
        t.emplace_back(row, L.xb(m), je(i, nx + m));
      }
      if (L.free_tb) t.emplace_back(row, L.tb(), je(i, 2 * nx + 1));
      for (int m = 0; m < np; ++m) t.emplace_back(row, L.p(m), je(i, 2 * nx + 2 + m));
    }
  }
  SparseMatrix j(R.size(), L.size());
  j.setFromTriplets(t.begin(), t.end());
  return j;
}

SparseMatrix TranscribedNlp::hessian(const Eigen::VectorXd& z, double obj_factor,
                                     const Eigen::VectorXd& y) const {
  const DecisionLayout& L = layout_;
  const ConstraintLayout& R = rows_;
  const int nx = L.nx, nu = L.nu, np = L.np, nh = R.nh;
  const double s = obj_factor * ocp_.cost_scale;
  const int ntb = L.free_tb ? 1 : 0;
  const int cols = nx + nu + 1 + np;
  std::vector<Eigen::Triplet<double>> trip;

  // Node k: local variables q = [x_k, u_k, tb?, p]. Lagrangian piece
  //   s * gamma * w_k * F - gamma * y_coll_k^T f + y_path_k^T h.
  const int nq = nx + nu + ntb + np;
  std::vector<int> global(nq);
  Eigen::MatrixXd jF(1, cols), jf(nx, cols), jh(nh, cols);
  Eigen::VectorXd F(1), f(nx), hv(nh);
  for (int k = 0; k < L.nodes; ++k) {
    const double w = sys_->wB[k];
    const double tau = grid().nodes[k];
    const double dt = 0.5 * (tau + 1.0);
    const Eigen::VectorXd ycol = y.segment(R.collocation(k, 0), nx);
    const Eigen::VectorXd ypath = nh > 0 ? Eigen::VectorXd(y.segment(R.path(k, 0), nh)) : Eigen::VectorXd();
    const bool has_cost = !ocp_.running_cost.empty() && s != 0.0;
    const bool has_path = nh > 0 && ypath.cwiseAbs().maxCoeff() > 0.0;

    Eigen::VectorXd q(nq);
    q.head(nx) = z.segment(L.x(k, 0), nx);
    q.segment(nx, nu) = z.segment(L.u0() + k * nu, nu);
    if (ntb) q[nx + nu] = final_time(z);
    if (np > 0) q.tail(np) = z.segment(L.p0(), np);
    for (int i = 0; i < nx; ++i) global[i] = L.x(k, i);
    for (int i = 0; i < nu; ++i) global[nx + i] = L.u(k, i);
    if (ntb) global[nx + nu] = L.tb();
    for (int i = 0; i < np; ++i) global[nx + nu + ntb + i] = L.p(i);

    auto local_gradient = [&](const Eigen::VectorXd& qq) {
      const Eigen::VectorXd x = qq.head(nx);
      const Eigen::VectorXd u = qq.segment(nx, nu);
      const double tb = ntb ? qq[nx + nu] : ocp_.tb;
      const Eigen::VectorXd p = qq.tail(np);
      const double gamma = 0.5 * (tb - ocp_.ta);
      const double t = ocp_.ta + (tb - ocp_.ta) * dt;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(nq);
      // Row vector of the piece's derivative with respect to [x, u, t, p] at fixed gamma.
      Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(cols);
      double dgamma = 0.0;  // derivative with respect to gamma at fixed t
      if (has_cost) {
        ocp_.running_cost.differentiate(x, u, t, p, jF);
        d += s * gamma * w * jF.row(0);
        if (ntb) {
          ocp_.running_cost.evaluate(x, u, t, p, F);
          dgamma += s * w * F[0];
        }
      }
      ocp_.dynamics.differentiate(x, u, t, p, jf);
      d -= gamma * ycol.transpose() * jf;
      if (ntb) {
        ocp_.dynamics.evaluate(x, u, t, p, f);
        dgamma -= ycol.dot(f);
      }
      if (has_path) {
        ocp_.path.differentiate(x, u, t, p, jh);
        d += ypath.transpose() * jh;
      }
      g.head(nx + nu) = d.head(nx + nu).transpose();
      if (ntb) g[nx + nu] = 0.5 * dgamma + d[nx + nu] * dt;
      if (np > 0) g.tail(np) = d.tail(np).transpose();
      return g;
    };

    Eigen::MatrixXd hk(nq, nq);
    Eigen::VectorXd qq = q;
    for (int j = 0; j < nq; ++j) {
      const double step = hessian_step(q[j]);
      qq[j] = q[j] + step;
      const Eigen::VectorXd gp = local_gradient(qq);
      qq[j] = q[j] - step;
      const Eigen::VectorXd gm = local_gradient(qq);
      qq[j] = q[j];
      hk.col(j) = (gp - gm) / (2.0 * step);
    }
    for (int a = 0; a < nq; ++a) {
      for (int b = 0; b < nq; ++b) {
        const double v = 0.5 * (hk(a, b) + hk(b, a));
        if (v != 0.0) trip.emplace_back(global[a], global[b], v);
      }
    }
  }

  // Endpoint piece s * E + y_e^T e over q = [xa, xb, tb?, p].
  const bool has_e = R.ne > 0 || (!ocp_.endpoint_cost.empty() && s != 0.0);
  if (has_e) {
    const int ne = R.ne;
    const int nqe = 2 * nx + ntb + np;
    const int ecols = 2 * nx + 2 + np;
    const Eigen::VectorXd ye = ne > 0 ? Eigen::VectorXd(y.segment(R.event0(), ne)) : Eigen::VectorXd();
    std::vector<int> eglobal(nqe);
    for (int i = 0; i < nx; ++i) {
      eglobal[i] = L.xa(i);
      eglobal[nx + i] = L.xb(i);
    }
    if (ntb) eglobal[2 * nx] = L.tb();
    for (int i = 0; i < np; ++i) eglobal[2 * nx + ntb + i] = L.p(i);
    Eigen::VectorXd q(nqe);
    q.head(nx) = z.segment(L.xa0(), nx);
    q.segment(nx, nx) = z.segment(L.xb0(), nx);
    if (ntb) q[2 * nx] = final_time(z);
    if (np > 0) q.tail(np) = z.segment(L.p0(), np);

    Eigen::MatrixXd jE(1, ecols), je(ne, ecols);
    auto local_gradient = [&](const Eigen::VectorXd& qq) {
      const Eigen::VectorXd xa = qq.head(nx), xb = qq.segment(nx, nx), p = qq.tail(np);
      const double tb = ntb ? qq[2 * nx] : ocp_.tb;
      Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(ecols);
      if (!ocp_.endpoint_cost.empty() && s != 0.0) {
        ocp_.endpoint_cost.differentiate(xa, xb, ocp_.ta, tb, p, jE);
        d += s * jE.row(0);
      }
      if (ne > 0) {
        ocp_.events.differentiate(xa, xb, ocp_.ta, tb, p, je);
        d += ye.transpose() * je;
      }
      Eigen::VectorXd g(nqe);
      g.head(2 * nx) = d.head(2 * nx).transpose();
      if (ntb) g[2 * nx] = d[2 * nx + 1];
      if (np > 0) g.tail(np) = d.tail(np).transpose();
      return g;
    };
    Eigen::MatrixXd he(nqe, nqe);
    Eigen::VectorXd qq = q;
    for (int j = 0; j < nqe; ++j) {
      const double step = hessian_step(q[j]);
      qq[j] = q[j] + step;
      const Eigen::VectorXd gp = local_gradient(qq);
      qq[j] = q[j] - step;
      const Eigen::VectorXd gm = local_gradient(qq);
      qq[j] = q[j];
      he.col(j) = (gp - gm) / (2.0 * step);
    }
    for (int a = 0; a < nqe; ++a) {
      for (int b = 0; b < nqe; ++b) {
        const double v = 0.5 * (he(a, b) + he(b, a));
        if (v != 0.0) trip.emplace_back(eglobal[a], eglobal[b], v);
      }
    }
  }

  SparseMatrix h(L.size(), L.size());
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

BasisPartition TranscribedNlp::basis_partition() const {
  const DecisionLayout& L = layout_;
  const ConstraintLayout& R = rows_;
  BasisPartition part;
  const int nrows = R.event0();  // linear rows followed by collocation rows
  part.rows.resize(nrows);
  for (int r = 0; r < nrows; ++r) part.rows[r] = r;
  part.variables.reserve(nrows);
  for (int j = 0; j < L.u0(); ++j) part.variables.push_back(j);  // X then V
  for (int i = 0; i < L.nx; ++i) part.variables.push_back(L.xb(i));
  return part;
}

std::unique_ptr<BasisFactorization> TranscribedNlp::factor_basis(const Eigen::VectorXd& z,
                                                                 const SparseMatrix&) const {
  const int nx = layout_.nx;
  const double gamma = domain(z).gamma();
  std::vector<Eigen::MatrixXd> g(layout_.nodes);
  Eigen::MatrixXd jf(nx, nx + layout_.nu + 1 + layout_.np);
  for (int k = 0; k < layout_.nodes; ++k) {
    const NodeView n = node(z, k);
    ocp_.dynamics.differentiate(n.x, n.u, n.t, n.p, jf);
    g[k] = -gamma * jf.leftCols(nx);
  }
  return std::make_unique<StructuredBasis>(sys_->Ba, sys_->wB, nx, std::move(g));
}

void TranscribedNlp::check_finite(const Eigen::VectorXd& z) const {
  const DecisionLayout& L = layout_;
  const ConstraintLayout& R = rows_;
  // V is checked after the evaluators: the default guess sets it from f, so a bad
  // evaluator would otherwise surface as a bad decision vector.
  const bool primary_finite = z.head(L.v0()).allFinite() && z.segment(L.u0(), L.size() - L.u0()).allFinite();
  if (!primary_finite) throw Error(ErrorCode::NonFinite, "decision vector contains non-finite entries");
  Eigen::VectorXd v1(1), f(L.nx), h(R.nh);
  for (int k = 0; k < L.nodes; ++k) {
    const NodeView n = node(z, k);
    ocp_.dynamics.evaluate(n.x, n.u, n.t, n.p, f);
    if (!f.allFinite()) {
      throw Error(ErrorCode::NonFinite, "dynamics evaluator is not finite at node " + std::to_string(k));
    }
    if (!ocp_.running_cost.empty()) {
      ocp_.running_cost.evaluate(n.x, n.u, n.t, n.p, v1);
      if (!v1.allFinite()) {
        throw Error(ErrorCode::NonFinite, "running cost evaluator is not finite at node " + std::to_string(k));
      }
    }
    if (R.nh > 0) {
      ocp_.path.evaluate(n.x, n.u, n.t, n.p, h);
      if (!h.allFinite()) {
        throw Error(ErrorCode::NonFinite, "path evaluator is not finite at node " + std::to_string(k));
      }
    }
  }
  const DomainMap map = domain(z);
  const Eigen::VectorXd p = z.segment(L.p0(), L.np);
  if (!ocp_.endpoint_cost.empty()) {
    ocp_.endpoint_cost.evaluate(z.segment(L.xa0(), L.nx), z.segment(L.xb0(), L.nx), map.ta, map.tb, p, v1);
    if (!v1.allFinite()) throw Error(ErrorCode::NonFinite, "endpoint cost evaluator is not finite");
  }
  if (R.ne > 0) {
    Eigen::VectorXd e(R.ne);
    ocp_.events.evaluate(z.segment(L.xa0(), L.nx), z.segment(L.xb0(), L.nx), map.ta, map.tb, p, e);
    if (!e.allFinite()) throw Error(ErrorCode::NonFinite, "events evaluator is not finite");
  }
  if (!z.segment(L.v0(), L.u0() - L.v0()).allFinite()) {
    throw Error(ErrorCode::NonFinite, "decision vector contains non-finite entries");
  }
  const Eigen::VectorXd c = constraints(z);
  for (Eigen::Index r = 0; r < c.size(); ++r) {
    if (!std::isfinite(c[r])) {
      throw Error(ErrorCode::NonFinite, "constraint row " + std::to_string(r) + " is not finite");
    }
  }
}

NlpEvaluation evaluate_nlp(const TranscribedNlp& nlp, const Eigen::VectorXd& z) {
  if (z.size() != nlp.num_variables()) {
    throw Error(ErrorCode::Shape, "decision vector has " + std::to_string(z.size()) +
                                      " entries, layout needs " + std::to_string(nlp.num_variables()));
  }
  NlpEvaluation ev;
  ev.objective = nlp.objective(z);
  if (!std::isfinite(ev.objective)) throw Error(ErrorCode::NonFinite, "objective is not finite");
  ev.constraints = nlp.constraints(z);
  for (Eigen::Index r = 0; r < ev.constraints.size(); ++r) {
    if (!std::isfinite(ev.constraints[r])) {
      throw Error(ErrorCode::NonFinite, "constraint row " + std::to_string(r) + " is not finite");
    }
  }
  ev.jacobian = nlp.jacobian(z);
  for (Eigen::Index c = 0; c < ev.jacobian.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(ev.jacobian, c); it; ++it) {
      if (!std::isfinite(it.value())) {
        throw Error(ErrorCode::NonFinite, "Jacobian entry (" + std::to_string(it.row()) + ", " +
                                              std::to_string(it.col()) + ") is not finite");
      }
    }
  }
  return ev;
}

std::shared_ptr<TranscribedNlp> transcribe(const OcpDefinition& ocp,
                                           std::shared_ptr<const BirkhoffSystem> sys) {
  auto nlp = std::make_shared<TranscribedNlp>(ocp, std::move(sys));
  nlp->check_finite(nlp->initial_point());
  return nlp;
}

}  // namespace bps
