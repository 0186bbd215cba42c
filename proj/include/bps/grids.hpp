#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace bps {

enum class GridFamily { Legendre, Chebyshev };
enum class GridKind { Lobatto, Radau, Gauss };

/// Family, kind and order N of a grid on [-1, 1]. The grid has N+1 nodes.
struct GridSpec {
  GridFamily family = GridFamily::Chebyshev;
  GridKind kind = GridKind::Lobatto;
  int order = 1;
};

/// Nodes tau_0 < ... < tau_N on [-1, 1] with their quadrature weights.
struct Grid {
  GridSpec spec;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  int order() const { return spec.order; }
  Eigen::Index size() const { return nodes.size(); }
  bool includes_left() const { return spec.kind != GridKind::Gauss; }
  bool includes_right() const { return spec.kind == GridKind::Lobatto; }
};

inline constexpr int kMaxGridOrder = 4096;

/// tau_j = -cos(xi_j pi) with xi_j = j/N (Lobatto), 2j/(2N+1) (Radau) or
/// (2j+1)/(2N+2) (Gauss).
Eigen::VectorXd chebyshev_nodes(GridKind kind, int order);

/// Zeros of (1-tau^2) P_N' (Lobatto), P_N + P_{N+1} (Radau) or P_{N+1} (Gauss),
/// found by Newton iteration seeded with the Chebyshev nodes of the same kind.
Eigen::VectorXd legendre_nodes(GridKind kind, int order);

/// Clenshaw-Curtis (CGL), Fejer-type interpolatory (CGR, CG) or classical
/// Legendre (LGL, LGR, LG) weights for nodes produced by the matching node
/// function.
Eigen::VectorXd quadrature_weights(const GridSpec& spec, const Eigen::VectorXd& nodes);

Grid make_grid(const GridSpec& spec);

/// sum_i y(tau_i) w_i - exact_integral.
double quadrature_defect(const Eigen::VectorXd& y_values, const Grid& grid, double exact_integral);

/// Highest polynomial degree the grid's quadrature integrates exactly.
int exactness_degree(const GridSpec& spec);

/// Accepts the short names lgl, lgr, lg, cgl, cgr, cg (case-insensitive).
GridSpec parse_grid_name(std::string_view name, int order);
std::string grid_name(const GridSpec& spec);

struct LegendreValue {
  double value;
  double derivative;
};

/// P_n(x) and P_n'(x) by the three-term recurrence.
LegendreValue legendre(int n, double x);

}  // namespace bps
