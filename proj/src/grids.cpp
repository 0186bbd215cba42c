#include "bps/grids.hpp"

#include "bps/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

namespace bps {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kNewtonCap = 100;

void check_order(int order) {
  if (order < 1 || order > kMaxGridOrder) {
    throw Error(ErrorCode::InvalidOrder,
                "grid order must lie in [1, " + std::to_string(kMaxGridOrder) + "], got " +
                    std::to_string(order));
  }
}

// cos(pi * num / den) with the argument reduced exactly in integers.
double cos_pi_ratio(long long num, long long den) {
  long long r = num % (2 * den);
  if (r < 0) r += 2 * den;
  return std::cos(kPi * static_cast<double>(r) / static_cast<double>(den));
}

// Value of the kind's zero-function z and its derivative.
struct ZeroFunction {
  double value;
  double derivative;
};

ZeroFunction zero_function(GridKind kind, int order, double x) {
  switch (kind) {
    case GridKind::Lobatto: {
      // z = (1 - x^2) P_N'(x); z' = -N(N+1) P_N(x) by Legendre's equation.
      const LegendreValue pn = legendre(order, x);
      return {(1.0 - x * x) * pn.derivative,
              -static_cast<double>(order) * (order + 1) * pn.value};
    }
    case GridKind::Radau: {
      const LegendreValue pn = legendre(order, x);
      const LegendreValue pn1 = legendre(order + 1, x);
      return {pn.value + pn1.value, pn.derivative + pn1.derivative};
    }
    case GridKind::Gauss: {
      const LegendreValue pn1 = legendre(order + 1, x);
      return {pn1.value, pn1.derivative};
    }
  }
  return {0.0, 1.0};
}

// Newton step quantities. Lobatto interior roots are the zeros of P_N'.
double newton_step(GridKind kind, int order, double x) {
  if (kind == GridKind::Lobatto) {
    const LegendreValue pn = legendre(order, x);
    const double second = (2.0 * x * pn.derivative - order * (order + 1.0) * pn.value) / (1.0 - x * x);
    return pn.derivative / second;
  }
  const ZeroFunction z = zero_function(kind, order, x);
  return z.value / z.derivative;
}

double refine_root(GridKind kind, int order, double seed, int index) {
  double x = seed;
  for (int it = 0; it < kNewtonCap; ++it) {
    const double dx = newton_step(kind, order, x);
    if (!std::isfinite(dx)) break;
    x -= dx;
    if (std::abs(dx) <= 4.0 * std::numeric_limits<double>::epsilon()) {
      const ZeroFunction z = zero_function(kind, order, x);
      if (std::abs(z.value) <= 1e-14 * std::max(1.0, std::abs(z.derivative))) return x;
    }
  }
  const ZeroFunction z = zero_function(kind, order, x);
  if (std::isfinite(x) && std::abs(z.value) <= 1e-14 * std::max(1.0, std::abs(z.derivative))) {
    return x;
  }
  throw Error(ErrorCode::RootFailure, "Newton iteration failed to converge for node index " +
                                          std::to_string(index) + " (order " +
                                          std::to_string(order) + ")");
}

void require_strictly_increasing(const Eigen::VectorXd& nodes, const char* what) {
  for (Eigen::Index j = 1; j < nodes.size(); ++j) {
    if (!(nodes[j] > nodes[j - 1])) {
      throw Error(ErrorCode::RootFailure, std::string(what) + ": nodes " + std::to_string(j - 1) +
                                              " and " + std::to_string(j) + " are not distinct");
    }
  }
}

Eigen::VectorXd clenshaw_curtis_weights(int order) {
  const int n = order;
  Eigen::VectorXd w(n + 1);
  for (int k = 0; k <= n; ++k) {
    double sum = 0.0;
    for (int j = 1; 2 * j <= n; ++j) {
      const double b = (2 * j == n) ? 1.0 : 2.0;
      sum += b * cos_pi_ratio(2LL * j * k, n) / (4.0 * j * j - 1.0);
    }
    const double c = (k == 0 || k == n) ? 1.0 : 2.0;
    w[k] = c / n * (1.0 - sum);
  }
  return w;
}

// Fejer's first rule on the n = N+1 Chebyshev-Gauss points.
Eigen::VectorXd fejer_gauss_weights(int order) {
  const int n = order + 1;
  Eigen::VectorXd w(n);
  for (int k = 0; k < n; ++k) {
    double sum = 0.0;
    for (int j = 1; 2 * j <= n; ++j) {
      // cos(2 j theta_k), theta_k = (2k+1) pi / (2n)
      sum += cos_pi_ratio(static_cast<long long>(j) * (2 * k + 1), n) / (4.0 * j * j - 1.0);
    }
    w[k] = 2.0 / n * (1.0 - 2.0 * sum);
  }
  return w;
}

// Interpolatory rule on the Chebyshev-Gauss-Radau points, theta_k = 2 k pi / (2N+1).
// Built from discrete orthogonality of cos(m theta) over the 2N+1 roots of unity.
Eigen::VectorXd fejer_radau_weights(int order) {
  const int n = order;
  const long long den = 2LL * n + 1;
  Eigen::VectorXd w(n + 1);
  for (int k = 0; k <= n; ++k) {
    double sum = 2.0;
    for (int m = 2; m <= n; m += 2) {
      sum += 4.0 * cos_pi_ratio(2LL * m * k, den) / (1.0 - static_cast<double>(m) * m);
    }
    const double c = (k == 0) ? 1.0 : 2.0;
    w[k] = c / static_cast<double>(den) * sum;
  }
  return w;
}

}  // namespace

LegendreValue legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0, p = x;
  double d_prev = 0.0, d = 1.0;
  for (int k = 1; k < n; ++k) {
    const double p_next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
    const double d_next = d_prev + (2.0 * k + 1.0) * p;
    p_prev = p;
    p = p_next;
    d_prev = d;
    d = d_next;
  }
  return {p, d};
}

Eigen::VectorXd chebyshev_nodes(GridKind kind, int order) {
  check_order(order);
  const int n = order;
  Eigen::VectorXd tau(n + 1);
  for (int j = 0; j <= n; ++j) {
    switch (kind) {
      case GridKind::Lobatto:
        // -cos(j pi / N) written as an odd function of (2j - N) for exact symmetry.
        tau[j] = std::sin(kPi * (2.0 * j - n) / (2.0 * n));
        break;
      case GridKind::Radau:
        tau[j] = -cos_pi_ratio(2LL * j, 2LL * n + 1);
        break;
      case GridKind::Gauss:
        tau[j] = std::sin(kPi * (2.0 * j - n) / (2.0 * n + 2.0));
        break;
    }
  }
  return tau;
}

Eigen::VectorXd legendre_nodes(GridKind kind, int order) {
  check_order(order);
  const int n = order;
  const Eigen::VectorXd seeds = chebyshev_nodes(kind, order);
  Eigen::VectorXd tau(n + 1);

  if (kind == GridKind::Radau) {
    tau[0] = -1.0;
    for (int j = 1; j <= n; ++j) tau[j] = refine_root(kind, order, seeds[j], j);
    require_strictly_increasing(tau, "LGR");
    return tau;
  }

  // Lobatto and Gauss sets are symmetric: solve the left half and mirror it.
  const int first = (kind == GridKind::Lobatto) ? 1 : 0;
  if (kind == GridKind::Lobatto) {
    tau[0] = -1.0;
    tau[n] = 1.0;
  }
  for (int j = first; 2 * j < n; ++j) {
    tau[j] = refine_root(kind, order, seeds[j], j);
    tau[n - j] = -tau[j];
  }
  if (n % 2 == 0) tau[n / 2] = 0.0;
  require_strictly_increasing(tau, kind == GridKind::Lobatto ? "LGL" : "LG");
  return tau;
}

Eigen::VectorXd quadrature_weights(const GridSpec& spec, const Eigen::VectorXd& nodes) {
  check_order(spec.order);
  const int n = spec.order;
  if (nodes.size() != n + 1) {
    throw Error(ErrorCode::Shape, "expected " + std::to_string(n + 1) + " nodes, got " +
                                      std::to_string(nodes.size()));
  }
  if (spec.family == GridFamily::Chebyshev) {
    switch (spec.kind) {
      case GridKind::Lobatto: return clenshaw_curtis_weights(n);
      case GridKind::Radau: return fejer_radau_weights(n);
      case GridKind::Gauss: return fejer_gauss_weights(n);
    }
  }

  Eigen::VectorXd w(n + 1);
  const double np1 = n + 1.0;
  for (int j = 0; j <= n; ++j) {
    const double x = nodes[j];
    switch (spec.kind) {
      case GridKind::Lobatto: {
        const double p = legendre(n, x).value;
        w[j] = 2.0 / (n * (n + 1.0) * p * p);
        break;
      }
      case GridKind::Radau: {
        if (j == 0) {
          w[j] = 2.0 / (np1 * np1);
        } else {
          const double p = legendre(n, x).value;
          w[j] = (1.0 - x) / (np1 * np1 * p * p);
        }
        break;
      }
      case GridKind::Gauss: {
        const double dp = legendre(n + 1, x).derivative;
        w[j] = 2.0 / ((1.0 - x * x) * dp * dp);
        break;
      }
    }
  }
  return w;
}

Grid make_grid(const GridSpec& spec) {
  Grid grid;
  grid.spec = spec;
  grid.nodes = spec.family == GridFamily::Chebyshev ? chebyshev_nodes(spec.kind, spec.order)
                                                    : legendre_nodes(spec.kind, spec.order);
  grid.weights = quadrature_weights(spec, grid.nodes);
  return grid;
}

double quadrature_defect(const Eigen::VectorXd& y_values, const Grid& grid, double exact_integral) {
  if (y_values.size() != grid.weights.size()) {
    throw Error(ErrorCode::Shape, "quadrature_defect: " + std::to_string(y_values.size()) +
                                      " samples for a grid of " +
                                      std::to_string(grid.weights.size()) + " nodes");
  }
  return y_values.dot(grid.weights) - exact_integral;
}

int exactness_degree(const GridSpec& spec) {
  const int n = spec.order;
  if (spec.family == GridFamily::Chebyshev) return n;
  switch (spec.kind) {
    case GridKind::Lobatto: return 2 * n - 1;
    case GridKind::Radau: return 2 * n;
    case GridKind::Gauss: return 2 * n + 1;
  }
  return n;
}

GridSpec parse_grid_name(std::string_view name, int order) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  GridSpec spec;
  spec.order = order;
  if (lower == "lgl") {
    spec = {GridFamily::Legendre, GridKind::Lobatto, order};
  } else if (lower == "lgr") {
    spec = {GridFamily::Legendre, GridKind::Radau, order};
  } else if (lower == "lg") {
    spec = {GridFamily::Legendre, GridKind::Gauss, order};
  } else if (lower == "cgl") {
    spec = {GridFamily::Chebyshev, GridKind::Lobatto, order};
  } else if (lower == "cgr") {
    spec = {GridFamily::Chebyshev, GridKind::Radau, order};
  } else if (lower == "cg") {
    spec = {GridFamily::Chebyshev, GridKind::Gauss, order};
  } else {
    throw Error(ErrorCode::UnknownName,
                "unknown grid '" + std::string(name) + "'; valid grids: lgl, lgr, lg, cgl, cgr, cg");
  }
  return spec;
}

std::string grid_name(const GridSpec& spec) {
  std::string name = spec.family == GridFamily::Legendre ? "l" : "c";
  switch (spec.kind) {
    case GridKind::Lobatto: return name + "gl";
    case GridKind::Radau: return name + "gr";
    case GridKind::Gauss: return name + "g";
  }
  return name;
}

}  // namespace bps
