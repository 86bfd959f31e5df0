#include "varlab/prox_lab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace varlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double primitive_value(const ProxPrimitive& p, double x) {
  switch (p.kind) {
    case ProxPrimitive::Kind::Abs: return p.param * std::abs(x);
    case ProxPrimitive::Kind::Quadratic: return 0.5 * p.param * x * x;
    case ProxPrimitive::Kind::Zero: return 0.0;
    case ProxPrimitive::Kind::NonnegIndicator: return x >= 0.0 ? 0.0 : kInf;
    case ProxPrimitive::Kind::Step: return x > 0.0 ? p.param : 0.0;
  }
  return 0.0;
}

double primitive_prox(const ProxPrimitive& p, double lambda, double u) {
  switch (p.kind) {
    case ProxPrimitive::Kind::Abs: {
      const double t = lambda * p.param;
      return u > t ? u - t : (u < -t ? u + t : 0.0);
    }
    case ProxPrimitive::Kind::Quadratic: return u / (1.0 + lambda * p.param);
    case ProxPrimitive::Kind::Zero: return u;
    case ProxPrimitive::Kind::NonnegIndicator: return std::max(u, 0.0);
    case ProxPrimitive::Kind::Step: return (u > 0.0 && u < std::sqrt(2.0 * lambda * p.param)) ? 0.0 : u;
  }
  return u;
}

// One coordinate's subgradient graph piece in (x, s): rows over (x, s).
struct Piece2 {
  std::vector<std::array<double, 3>> ineq;  // a x + b s <= c
  std::vector<std::array<double, 3>> eq;    // a x + b s = c
};

std::vector<Piece2> primitive_pieces(const ProxPrimitive& p) {
  const double w = p.param;
  switch (p.kind) {
    case ProxPrimitive::Kind::Abs:
      return {{{{1, 0, 0}}, {{0, 1, -w}}}, {{{0, 1, w}, {0, -1, w}}, {{1, 0, 0}}}, {{{-1, 0, 0}}, {{0, 1, w}}}};
    case ProxPrimitive::Kind::Quadratic: return {{{}, {{-w, 1, 0}}}};
    case ProxPrimitive::Kind::Zero: return {{{}, {{0, 1, 0}}}};
    case ProxPrimitive::Kind::NonnegIndicator: return {{{{-1, 0, 0}}, {{0, 1, 0}}}, {{{0, 1, 0}}, {{1, 0, 0}}}};
    case ProxPrimitive::Kind::Step:
      return {{{{1, 0, 0}}, {{0, 1, 0}}}, {{{-1, 0, 0}}, {{0, 1, 0}}}, {{{0, -1, 0}}, {{1, 0, 0}}}};
  }
  return {};
}

// P_lambda on one coordinate as intervals [lo, hi] with slope and offset.
struct Interval {
  double lo, hi, slope, offset;
};

std::vector<Interval> primitive_prox_pieces(const ProxPrimitive& p, double lambda) {
  switch (p.kind) {
    case ProxPrimitive::Kind::Abs: {
      const double t = lambda * p.param;
      return {{-kInf, -t, 1.0, t}, {-t, t, 0.0, 0.0}, {t, kInf, 1.0, -t}};
    }
    case ProxPrimitive::Kind::Quadratic: return {{-kInf, kInf, 1.0 / (1.0 + lambda * p.param), 0.0}};
    case ProxPrimitive::Kind::Zero: return {{-kInf, kInf, 1.0, 0.0}};
    case ProxPrimitive::Kind::NonnegIndicator: return {{-kInf, 0.0, 0.0, 0.0}, {0.0, kInf, 1.0, 0.0}};
    case ProxPrimitive::Kind::Step: return {{-kInf, 0.0, 1.0, 0.0}, {0.0, std::sqrt(2.0 * lambda * p.param), 0.0, 0.0}};
  }
  return {};
}

template <class T, class F>
void for_each_product(const std::vector<std::vector<T>>& lists, F&& fn) {
  std::vector<std::size_t> idx(lists.size(), 0);
  if (std::any_of(lists.begin(), lists.end(), [](const auto& l) { return l.empty(); })) return;
  for (;;) {
    fn(idx);
    std::size_t i = 0;
    while (i < lists.size() && ++idx[i] == lists[i].size()) idx[i++] = 0;
    if (i == lists.size()) return;
  }
}

std::vector<ConvexPolyhedron> subgradient_pieces(const std::vector<ProxPrimitive>& coords) {
  const int n = static_cast<int>(coords.size());
  std::vector<std::vector<Piece2>> lists;
  for (const ProxPrimitive& p : coords) lists.push_back(primitive_pieces(p));
  std::vector<ConvexPolyhedron> out;
  for_each_product(lists, [&](const std::vector<std::size_t>& idx) {
    Mat c(0, 2 * n), e(0, 2 * n);
    std::vector<double> d, f;
    for (int i = 0; i < n; ++i) {
      const Piece2& pc = lists[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
      for (const auto& r : pc.ineq) {
        Mat row = Mat::Zero(1, 2 * n);
        row(0, i) = r[0];
        row(0, n + i) = r[1];
        c = vstack(c, row);
        d.push_back(r[2]);
      }
      for (const auto& r : pc.eq) {
        Mat row = Mat::Zero(1, 2 * n);
        row(0, i) = r[0];
        row(0, n + i) = r[1];
        e = vstack(e, row);
        f.push_back(r[2]);
      }
    }
    out.emplace_back(2 * n, c, Eigen::Map<Vec>(d.data(), static_cast<Eigen::Index>(d.size())), e,
                     Eigen::Map<Vec>(f.data(), static_cast<Eigen::Index>(f.size())));
  });
  return out;
}

MapPtr prox_inner_map(const ProxRegularFunction& phi, double lambda) {
  const int n = phi.n;
  std::vector<std::vector<Interval>> lists;
  for (const ProxPrimitive& p : phi.coordinates) lists.push_back(primitive_prox_pieces(p, lambda));
  PLSingle pl;
  for_each_product(lists, [&](const std::vector<std::size_t>& idx) {
    Mat c(0, n);
    std::vector<double> d;
    Mat a = Mat::Zero(n, n);
    Vec b = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
      const Interval& iv = lists[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
      if (std::isfinite(iv.hi)) {
        Mat row = Mat::Zero(1, n);
        row(0, i) = 1.0;
        c = vstack(c, row);
        d.push_back(iv.hi);
      }
      if (std::isfinite(iv.lo)) {
        Mat row = Mat::Zero(1, n);
        row(0, i) = -1.0;
        c = vstack(c, row);
        d.push_back(-iv.lo);
      }
      a(i, i) = iv.slope;
      b(i) = iv.offset;
    }
    pl.cells.push_back({ConvexPolyhedron(n, c, Eigen::Map<Vec>(d.data(), static_cast<Eigen::Index>(d.size())), Mat(0, n),
                                         Vec(0)),
                        a, b});
  });
  return make_map({n, n}, std::move(pl));
}

Vec graph_point(const Vec& x, const Vec& xs) {
  Vec z(x.size() + xs.size());
  z << x, xs;
  return z;
}

double objective(const ProxRegularFunction& phi, double lambda, const Vec& u, const Vec& x) {
  return phi.evaluate(x) + (x - u).squaredNorm() / (2.0 * lambda);
}

Vec random_ball(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec g(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) g(i) = normal(rng);
  } while (g.norm() == 0.0);
  const double dn = static_cast<double>(n);
  const double r = std::pow(std::pow(lo, dn) + unif(rng) * (std::pow(hi, dn) - std::pow(lo, dn)), 1.0 / dn);
  return g * (r / g.norm());
}

}  // namespace

ProxRegularFunction separable_function(std::string name, std::vector<ProxPrimitive> coords, const Vec& xbar,
                                       const Vec& xbar_star, double eps, bool with_closed_form) {
  ProxRegularFunction phi;
  phi.name = std::move(name);
  phi.n = static_cast<int>(coords.size());
  if (xbar.size() != phi.n || xbar_star.size() != phi.n) throw DimensionError("separable_function: reference dimension");
  if (!(eps > 0.0)) throw std::invalid_argument("separable_function: eps must be positive");
  phi.coordinates = coords;
  phi.evaluate = [coords](const Vec& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) s += primitive_value(coords[i], x(static_cast<Eigen::Index>(i)));
    return s;
  };
  phi.subgrad_graph = make_map({phi.n, phi.n}, PolyUnion{subgradient_pieces(coords)});
  for (const ProxPrimitive& p : coords)
    if (p.kind == ProxPrimitive::Kind::Quadratic && p.param < 0.0) phi.r = std::max(phi.r, -p.param);
    else if (p.kind == ProxPrimitive::Kind::Step && p.param <= 0.0)
      throw std::invalid_argument("separable_function: step height must be positive");
  phi.eps = eps;
  phi.xbar = xbar;
  phi.xbar_star = xbar_star;
  if (!contains(*phi.subgrad_graph, {xbar, xbar_star}))
    throw std::invalid_argument("separable_function: reference pair is not on the subgradient graph");
  if (with_closed_form)
    phi.closed_form_prox = [coords](double lambda, const Vec& u) {
      Vec x(u.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) x(i) = primitive_prox(coords[static_cast<std::size_t>(i)], lambda, u(i));
      return x;
    };
  return phi;
}

double default_lambda(double r) { return std::min(0.5, 0.9 / std::max(r, 1.0)); }

Vec reference_u(const ProxRegularFunction& phi, double lambda) { return phi.xbar + lambda * phi.xbar_star; }

double certified_u_window(const ProxRegularFunction& phi, double lambda) {
  if (phi.u_window > 0.0) return phi.u_window;
  const double lip = 1.0 / (1.0 - lambda * phi.r);
  return 0.9 * phi.eps / (lip + (1.0 + lip) / lambda);
}

AttentiveLocalization attentive_localization(const FunctionPtr& phi, double lambda) {
  if (!(lambda > 0.0) || lambda > 0.9 / std::max(phi->r, 1e-12))
    throw std::invalid_argument("attentive_localization: lambda outside (0, 0.9/r]");
  AttentiveLocalization loc;
  loc.base = phi;
  loc.lambda = lambda;
  loc.center = graph_point(phi->xbar, phi->xbar_star);
  loc.radius = phi->eps;
  const double level = phi->evaluate(phi->xbar) + phi->eps;
  std::mt19937_64 rng(mix_seed(0, 4242));
  for (const ConvexPolyhedron& piece : phi->subgrad_graph->as<PolyUnion>()->pieces) {
    for (const PolyFace& face : faces_meeting_ball(piece, loc.center, loc.radius)) {
      if (!face.active.empty()) continue;
      const auto pts = sample_face_ball(face, loc.center, loc.radius, 1, rng);
      const Vec probe = pts.empty() ? face.anchor : pts.front();
      if (phi->evaluate(probe.head(phi->n)) < level) loc.pieces.push_back(piece);
    }
  }
  const int n = phi->n;
  Mat m = Mat::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = Mat::Identity(n, n);
  m.topRightCorner(n, n) = lambda * Mat::Identity(n, n);
  m.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  Charted ch{Chart::linear_map(m, Vec::Zero(2 * n), n), prox_inner_map(*phi, lambda), loc.center, loc.radius};
  loc.as_map = make_map({n, n}, std::move(ch));
  return loc;
}

MapPtr make_prox_subgrad(const FunctionPtr& phi, double lambda) {
  const AttentiveLocalization loc = attentive_localization(phi, lambda);
  return make_map({phi->n, phi->n}, ProxSubgrad{phi, lambda, loc.as_map});
}

Vec prox_map(const ProxRegularFunction& phi, double lambda, const Vec& u) {
  const Vec ubar = reference_u(phi, lambda);
  if ((u - ubar).norm() > certified_u_window(phi, lambda) * (1.0 + 1e-12))
    throw DomainError("prox_map: u outside the certified window");
  if (phi.closed_form_prox) return phi.closed_form_prox(lambda, u);
  // Stationary points x + lambda x* = u on every subgradient piece; the best one wins.
  const int n = phi.n;
  Mat e(n, 2 * n);
  e << Mat::Identity(n, n), lambda * Mat::Identity(n, n);
  std::optional<Vec> best;
  double best_val = kInf;
  for (const ConvexPolyhedron& piece : phi.subgrad_graph->as<PolyUnion>()->pieces) {
    const auto s = project_onto(piece.with_equalities(e, u), graph_point(phi.xbar, phi.xbar_star));
    if (!s) continue;
    const Vec x = s->head(n);
    const double val = objective(phi, lambda, u, x);
    if (val < best_val - 1e-15 || (best && std::abs(val - best_val) <= 1e-15 && (x - phi.xbar).norm() < (*best - phi.xbar).norm())) {
      best = x;
      best_val = val;
    }
  }
  if (!best) throw DomainError("prox_map: no stationary point found");
  return *best;
}

Vec prox_map_graph(const AttentiveLocalization& loc, const Vec& u) {
  const int n = loc.base->n;
  Mat e(n, 2 * n);
  e << Mat::Identity(n, n), loc.lambda * Mat::Identity(n, n);
  std::optional<Vec> best;
  for (const ConvexPolyhedron& piece : loc.pieces) {
    const auto s = project_onto(piece.with_equalities(e, u), loc.center);
    if (!s || (*s - loc.center).norm() >= loc.radius) continue;
    if (!best || (*s - loc.center).norm() < (*best - loc.center).norm()) best = s;
  }
  if (!best) throw DomainError("prox_map_graph: u is not reached by the localization");
  return best->head(n);
}

double moreau_envelope(const ProxRegularFunction& phi, double lambda, const Vec& u) {
  return objective(phi, lambda, u, prox_map(phi, lambda, u));
}

Vec envelope_gradient(const ProxRegularFunction& phi, double lambda, const Vec& u) {
  return (u - prox_map(phi, lambda, u)) / lambda;
}

AttentiveDerivatives attentive_derivatives(const AttentiveLocalization& loc, const GraphPoint& p) {
  return {cones_at(*loc.as_map, p), derivative_bundle(*loc.as_map, p)};
}

DiagnosticVerdict check_strict_proto_subgrad(const FunctionPtr& phi, double lambda, std::uint64_t seed) {
  const AttentiveLocalization loc = attentive_localization(phi, lambda);
  const GraphPoint pbar{phi->xbar, phi->xbar_star};
  const MapAnalysis a = analyze(*loc.as_map, pbar);
  const DiagnosticVerdict sp = check_strict_proto(a);
  const MapPtr inner = loc.as_map->as<Charted>()->inner;
  const Vec ubar = reference_u(*phi, lambda);
  const DiagnosticVerdict sd = check_strict_diff_single(*inner, ubar);
  const auto cod = is_subspace(a.derivatives.coderivative);
  const auto gd = is_subspace(a.derivatives.graphical);

  DiagnosticVerdict v;
  v.criteria.push_back({"localization_strict_proto", sp.consensus == Consensus::Inconsistent ? std::nullopt : std::optional<bool>(sp.is_true()),
                        {{"battery", sp.to_json()}}, false});
  const auto jac = prox_jacobians_sampled(*phi, lambda, ubar, seed);
  v.criteria.push_back({"prox_strictly_differentiable",
                        sd.consensus == Consensus::Inconsistent ? std::nullopt : std::optional<bool>(sd.is_true()),
                        {{"battery", sd.to_json()}, {"sampled_jacobians", jac.size()}}, false});
  v.criteria.push_back({"coderivative_subspace", cod.has_value(), {{"dim", dim(a.derivatives.coderivative)}}, false});
  v.criteria.push_back({"normal_regularity", same_set(ConeUnion::single(a.cones.regular_normal), a.cones.limiting_normal),
                        {{"dim_regular_normal", a.cones.regular_normal.dim()}, {"dim_limiting_normal", dim(a.cones.limiting_normal)}},
                        false});
  v.criteria.push_back({"sc_singleton", a.derivatives.sc.size() == 1, {{"count", a.derivatives.sc.size()}}, false});
  const bool closing = a.derivatives.sc.size() == 1 && gd && cod && is_equal(a.derivatives.sc.front(), *gd) &&
                       is_equal(a.derivatives.sc.front(), *cod);
  v.criteria.push_back({"closing_identity", closing, Json::object(), false});
  v.dims = {{"n", phi->n}, {"dim_strict", dim(a.derivatives.strict)}, {"dim_coderivative", dim(a.derivatives.coderivative)}};
  settle(v);
  return v;
}

std::vector<Mat> prox_jacobians_sampled(const ProxRegularFunction& phi, double lambda, const Vec& u, std::uint64_t seed) {
  const MapPtr inner = prox_inner_map(phi, lambda);
  const double r0 = 0.25 * (certified_u_window(phi, lambda) - (u - reference_u(phi, lambda)).norm());
  if (r0 <= 0.0) throw DomainError("prox_jacobians_sampled: u outside the window");
  return b_jacobian_sampled(*inner, u, r0, 8, seed);
}

double trapezoid_ratio(const ProxRegularFunction& phi, const Vec& x, const Vec& xs, const Vec& y, const Vec& ys) {
  const double den = (graph_point(y, ys) - graph_point(x, xs)).squaredNorm();
  if (den == 0.0) return 0.0;
  return (phi.evaluate(y) - phi.evaluate(x) - 0.5 * (ys + xs).dot(y - x)) / den;
}

namespace {

void summarize(DecayReport& r) {
  r.exact_zero = std::all_of(r.shell_max.begin(), r.shell_max.end(), [](double v) { return v <= 1e-12; });
  r.low_confidence = std::any_of(r.shell_count.begin(), r.shell_count.end(), [](int c) { return c < 32; });
  if (r.exact_zero) {
    r.slope = kInf;
    r.decaying = true;
    return;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t i = 0; i < r.shell_max.size(); ++i) {
    if (r.shell_max[i] <= 0.0) continue;
    const double lx = std::log(r.shell_radius[i]), ly = std::log(r.shell_max[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++k;
  }
  r.slope = k >= 2 ? (k * sxy - sx * sy) / (k * sxx - sx * sx) : 0.0;
  r.decaying = r.slope > 0.5 && r.shell_max.back() < 0.02 * r.shell_max.front();
}

struct ProxSample {
  Vec x, xs;
};

ProxSample sample_at(const ProxRegularFunction& phi, double lambda, const Vec& u) {
  const Vec x = prox_map(phi, lambda, u);
  return {x, (u - x) / lambda};
}

}  // namespace

DecayReport trapezoid_one_point(const FunctionPtr& phi, double lambda, std::uint64_t seed, int shells, int per_shell) {
  const AttentiveLocalization loc = attentive_localization(phi, lambda);
  const GraphPoint pbar{phi->xbar, phi->xbar_star};
  DecayReport rep;
  rep.hypothesis_verified = check_semismooth_star(*loc.as_map, pbar, seed).is_true();
  const Vec ubar = reference_u(*phi, lambda);
  const double w = certified_u_window(*phi, lambda);
  std::mt19937_64 rng(mix_seed(seed, 31));
  for (int k = 0; k < shells; ++k) {
    const double r = w * std::ldexp(1.0, -k);
    double worst = 0.0;
    int used = 0;
    for (int i = 0; i < per_shell; ++i) {
      const ProxSample s = sample_at(*phi, lambda, ubar + random_ball(rng, phi->n, 0.5 * r, r));
      if ((graph_point(s.x, s.xs) - loc.center).norm() == 0.0) continue;
      worst = std::max(worst, std::abs(trapezoid_ratio(*phi, phi->xbar, phi->xbar_star, s.x, s.xs)));
      ++used;
    }
    rep.shell_radius.push_back(r);
    rep.shell_max.push_back(worst);
    rep.shell_count.push_back(used);
  }
  summarize(rep);
  return rep;
}

DecayReport trapezoid_two_point(const FunctionPtr& phi, double lambda, std::uint64_t seed, int shells, int per_shell,
                                const std::vector<std::pair<Vec, Vec>>& witness_directions) {
  DecayReport rep;
  rep.hypothesis_verified = check_strict_proto_subgrad(phi, lambda, seed).is_true();
  const Vec ubar = reference_u(*phi, lambda);
  const double w = certified_u_window(*phi, lambda);
  const int n = phi->n;
  std::mt19937_64 rng(mix_seed(seed, 57));
  for (int k = 0; k < shells; ++k) {
    const double r = w * std::ldexp(1.0, -k);
    double worst = 0.0;
    int used = 0;
    for (int i = 0; i < per_shell; ++i) {
      const Vec u1 = ubar + random_ball(rng, n, 0.0, r);
      const Vec u2 = ubar + random_ball(rng, n, 0.0, r);
      if ((u1 - u2).norm() < 0.25 * r) continue;
      const ProxSample a = sample_at(*phi, lambda, u1), b = sample_at(*phi, lambda, u2);
      worst = std::max(worst, std::abs(trapezoid_ratio(*phi, a.x, a.xs, b.x, b.xs)));
      ++used;
    }
    for (const auto& [d1, d2] : witness_directions) {
      // Graph directions (dx, dx*) move u by dx + lambda dx*.
      const double t = 0.5 * r / std::max({1.0, (d1.head(n) + lambda * d1.tail(n)).norm(), (d2.head(n) + lambda * d2.tail(n)).norm()});
      const ProxSample a = sample_at(*phi, lambda, ubar + t * (d1.head(n) + lambda * d1.tail(n)));
      const ProxSample b = sample_at(*phi, lambda, ubar + t * (d2.head(n) + lambda * d2.tail(n)));
      const double rho = trapezoid_ratio(*phi, a.x, a.xs, b.x, b.xs);
      rep.witness_values.push_back(rho);
      worst = std::max(worst, std::abs(rho));
    }
    rep.shell_radius.push_back(r);
    rep.shell_max.push_back(worst);
    rep.shell_count.push_back(used);
  }
  summarize(rep);
  return rep;
}

double prox_regularity_violation(const ProxRegularFunction& phi, double lambda, std::uint64_t seed, int samples) {
  std::mt19937_64 rng(mix_seed(seed, 313));
  const Vec ubar = reference_u(phi, lambda);
  const double w = certified_u_window(phi, lambda);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const ProxSample s = sample_at(phi, lambda, ubar + random_ball(rng, phi.n, 0.0, w));
    const Vec xp = phi.xbar + random_ball(rng, phi.n, 0.0, phi.eps);
    const double fxp = phi.evaluate(xp);
    if (!std::isfinite(fxp)) continue;
    const double lower = phi.evaluate(s.x) + s.xs.dot(xp - s.x) - 0.5 * phi.r * (xp - s.x).squaredNorm();
    worst = std::max(worst, lower - fxp);
  }
  return worst;
}

}  // namespace varlab
