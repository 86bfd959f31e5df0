#include "varlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace varlab {

std::string to_string(Consensus c) {
  switch (c) {
    case Consensus::True: return "true";
    case Consensus::False: return "false";
    case Consensus::Inconsistent: return "inconsistent";
    case Consensus::Undetermined: return "undetermined";
  }
  return "undetermined";
}

std::optional<bool> DiagnosticVerdict::value(const std::string& label) const {
  for (const CriterionResult& c : criteria)
    if (c.label == label) return c.value;
  return std::nullopt;
}

Json DiagnosticVerdict::to_json() const {
  Json crit = Json::array();
  for (const CriterionResult& c : criteria) {
    Json j;
    j["label"] = c.label;
    j["value"] = c.value ? Json(*c.value) : Json("n/a");
    j["evidence"] = c.evidence.is_null() ? Json::object() : c.evidence;
    if (c.informational) j["informational"] = true;
    crit.push_back(std::move(j));
  }
  return {{"consensus", to_string(consensus)}, {"criteria", std::move(crit)}, {"dims", dims}};
}

void settle(DiagnosticVerdict& v) {
  bool any_true = false, any_false = false;
  for (const CriterionResult& c : v.criteria) {
    if (c.informational || !c.value) continue;
    (*c.value ? any_true : any_false) = true;
  }
  if (any_true && any_false) v.consensus = Consensus::Inconsistent;
  else if (any_true) v.consensus = Consensus::True;
  else if (any_false) v.consensus = Consensus::False;
  else v.consensus = Consensus::Undetermined;
}

namespace {

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json mat_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

CriterionResult criterion(std::string label, std::optional<bool> value, Json evidence = Json::object()) {
  return {std::move(label), value, std::move(evidence), false};
}

Json subspace_evidence(const std::optional<Subspace>& s, const ConeUnion& c) {
  return {{"is_subspace", s.has_value()}, {"dim", dim(c)}, {"pieces", c.pieces().size()}};
}

Mat selector(int k, int from, int count) {
  Mat p = Mat::Zero(count, k);
  for (int i = 0; i < count; ++i) p(i, from + i) = 1.0;
  return p;
}

Mat block_diag(const Mat& a, const Mat& b) {
  Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

std::optional<ChartCertificate> compose(std::optional<ChartCertificate> inner, const Mat& linear, const std::string& kind) {
  if (!inner) return std::nullopt;
  inner->linear = inner->linear * linear;
  inner->kind = kind + "(" + inner->kind + ")";
  return inner;
}

}  // namespace

bool certifies_cone(const ConeUnion& k, const Mat& chart, int d) {
  const int amb = k.ambient_dim();
  const int rest = amb - d;
  const ConeUnion img = linear_image(chart, k);
  const Mat top = selector(amb, 0, d);
  const Mat bottom = selector(amb, d, rest);
  const ConvexCone vertical = ConvexCone::from_halfspaces(Mat(0, amb), top, amb);
  for (const ConvexCone& c : img.pieces())
    if (!intersect(c, vertical).is_zero()) return false;
  for (const ConvexCone& a : img.pieces())
    for (const ConvexCone& b : img.pieces()) {
      const Mat ineq = block_diag(a.ineq(), b.ineq());
      const Mat eq = vstack(block_diag(a.eq(), b.eq()), hstack(top, -top));
      const ConvexCone fibre = ConvexCone::from_halfspaces(ineq, eq, 2 * amb);
      const Mat g = fibre.generator_matrix();
      for (Eigen::Index j = 0; j < g.cols(); ++j) {
        const Vec col = g.col(j);
        if ((bottom * (col.head(amb) - col.tail(amb))).norm() > 1e-9 * (1.0 + col.norm())) return false;
      }
    }
  std::vector<ConvexCone> shadows;
  for (const ConvexCone& c : img.pieces()) shadows.push_back(linear_image(top, c));
  return covers(ConeUnion(shadows), ConvexCone::whole(d));
}

std::optional<ChartCertificate> certify_chart(const SetValuedMap& f, const GraphPoint& p) {
  const SplitDims dims = f.dims();
  const int k = dims.total();
  if (f.as<PLSingle>()) return ChartCertificate{dims.n, Mat::Identity(k, k), "identity"};
  if (const auto* s = f.as<Smooth>()) {
    if (branches_through(*s, p, kGraphTolSmooth).size() == 1) return ChartCertificate{dims.n, Mat::Identity(k, k), "identity"};
    return std::nullopt;
  }
  if (const auto* c = f.as<Charted>()) {
    const Vec z = p.stacked();
    auto inner = certify_chart(*c->inner, GraphPoint::split(c->chart.forward(z), c->inner->dims()));
    return compose(inner, c->chart.jacobian(z), "chart");
  }
  if (const auto* s = f.as<SumGE>()) {
    auto inner = certify_chart(*s->inner, {p.x, p.y - s->g.value(p.x)});
    const Mat j = sum_linearization(*s, p.x).tangent_map;
    return compose(inner, j.inverse(), "sum");
  }
  if (const auto* ps = f.as<ProxSubgrad>()) return certify_chart(*ps->localized, p);
  if (f.as<PolyUnion>()) {
    const ConeUnion cone = local_model_at(f, p).cone;
    struct Candidate {
      Mat m;
      int d;
      const char* kind;
    };
    std::vector<Candidate> cands;
    cands.push_back({Mat::Identity(k, k), dims.n, "identity"});
    Mat swap = Mat::Zero(k, k);
    swap.topRightCorner(dims.m, dims.m) = Mat::Identity(dims.m, dims.m);
    swap.bottomLeftCorner(dims.n, dims.n) = Mat::Identity(dims.n, dims.n);
    cands.push_back({swap, dims.m, "inverse"});
    if (dims.n == dims.m) {
      // (x, y) -> (x + y, x)
      Mat minty = Mat::Zero(k, k);
      minty.topLeftCorner(dims.n, dims.n) = Mat::Identity(dims.n, dims.n);
      minty.topRightCorner(dims.n, dims.n) = Mat::Identity(dims.n, dims.n);
      minty.bottomLeftCorner(dims.n, dims.n) = Mat::Identity(dims.n, dims.n);
      cands.push_back({minty, dims.n, "minty"});
    }
    for (const Candidate& c : cands)
      if (certifies_cone(cone, c.m, c.d)) return ChartCertificate{c.d, c.m, c.kind};
    return std::nullopt;
  }
  return std::nullopt;
}

DiagnosticVerdict check_strictly_smooth(const SetAnalysis& a) {
  DiagnosticVerdict v;
  const ConeBundle& b = a.cones;
  const auto tp = is_subspace(b.paratingent);
  const auto nl = is_subspace(b.limiting_normal);
  const bool clarke_eq = same_set(ConeUnion::single(b.clarke_tangent), b.paratingent);
  v.criteria.push_back(criterion("clarke_equals_paratingent", clarke_eq,
                                 {{"paratingent", subspace_evidence(tp, b.paratingent)},
                                  {"clarke_dim", b.clarke_tangent.dim()},
                                  {"clarke_is_subspace", b.clarke_tangent.is_subspace()}}));
  bool polarity = false;
  double gap = 1.0;
  if (tp && nl) {
    gap = distance(orthogonal_complement(*tp), *nl);
    polarity = gap <= kEqTol;
  }
  v.criteria.push_back(criterion("subspace_polarity", polarity,
                                 {{"paratingent", subspace_evidence(tp, b.paratingent)},
                                  {"limiting_normal", subspace_evidence(nl, b.limiting_normal)},
                                  {"complement_distance", gap}}));
  if (a.chart_dim) {
    const bool regular = same_set(ConeUnion::single(b.regular_normal), b.limiting_normal);
    v.criteria.push_back(criterion("normal_regularity", regular,
                                   {{"regular_normal_dim", b.regular_normal.dim()},
                                    {"limiting_normal_dim", dim(b.limiting_normal)}}));
    const int d = *a.chart_dim;
    const bool law = tp && nl && tp->dim() == d && nl->dim() == a.ambient - d;
    v.criteria.push_back(criterion("dimension_law", law,
                                   {{"d", d},
                                    {"dim_paratingent", dim(b.paratingent)},
                                    {"dim_limiting_normal", dim(b.limiting_normal)}}));
  } else {
    v.criteria.push_back(criterion("normal_regularity", std::nullopt, {{"reason", "no chart"}}));
    v.criteria.push_back(criterion("dimension_law", std::nullopt, {{"reason", "no chart"}}));
  }
  v.dims = {{"ambient", a.ambient},
            {"dim_paratingent", dim(b.paratingent)},
            {"dim_clarke", b.clarke_tangent.dim()},
            {"dim_limiting_normal", dim(b.limiting_normal)}};
  if (a.chart_dim) v.dims["d"] = *a.chart_dim;
  settle(v);
  return v;
}

DiagnosticVerdict check_strictly_smooth(const SetValuedMap& omega, const GraphPoint& zbar) {
  SetAnalysis a;
  a.cones = cones_at(omega, zbar);
  const auto chart = certify_chart(omega, zbar);
  if (chart) a.chart_dim = chart->d;
  a.ambient = omega.dims().total();
  return check_strictly_smooth(a);
}

MapAnalysis analyze(const SetValuedMap& f, const GraphPoint& p) {
  MapAnalysis a;
  a.dims = f.dims();
  a.cones = cones_at(f, p);
  a.derivatives = derivative_bundle(f, p);
  if (auto c = certify_chart(f, p)) a.chart_dim = c->d;
  return a;
}

DiagnosticVerdict check_strict_proto(const MapAnalysis& a) {
  DiagnosticVerdict v;
  const ConeBundle& b = a.cones;
  const DerivativeBundle& d = a.derivatives;
  const auto ds = is_subspace(d.strict);
  const auto dc = is_subspace(d.coderivative);

  v.criteria.push_back(criterion("graph_strictly_smooth", same_set(ConeUnion::single(b.clarke_tangent), b.paratingent),
                                 {{"dim_clarke", b.clarke_tangent.dim()}, {"dim_paratingent", dim(b.paratingent)}}));
  bool adj = false;
  double adj_dist = 1.0;
  if (ds && dc) {
    adj_dist = distance(*dc, adjoint(a.dims, *ds));
    adj = adj_dist <= kEqTol;
  }
  v.criteria.push_back(criterion("adjoint_relation", adj,
                                 {{"strict", subspace_evidence(ds, d.strict)},
                                  {"coderivative", subspace_evidence(dc, d.coderivative)},
                                  {"adjoint_distance", adj_dist}}));
  if (a.chart_dim) {
    const int cd = *a.chart_dim;
    v.criteria.push_back(criterion("clarke_subspace_dim_d", b.clarke_tangent.is_subspace() && b.clarke_tangent.dim() == cd,
                                   {{"d", cd}, {"dim_clarke", b.clarke_tangent.dim()}}));
    v.criteria.push_back(criterion("strict_derivative_subspace", ds.has_value(), subspace_evidence(ds, d.strict)));
    v.criteria.push_back(criterion("coderivative_subspace", dc.has_value(), subspace_evidence(dc, d.coderivative)));
    v.criteria.push_back(criterion("graphical_regularity", same_set(ConeUnion::single(b.regular_normal), b.limiting_normal),
                                   {{"dim_regular_normal", b.regular_normal.dim()},
                                    {"dim_limiting_normal", dim(b.limiting_normal)}}));
    v.criteria.push_back(criterion("sc_singleton", d.generalized_sc.size() == 1, {{"count", d.generalized_sc.size()}}));
    v.criteria.push_back(
        criterion("sc_adjoint_singleton", d.generalized_sc_adjoint.size() == 1, {{"count", d.generalized_sc_adjoint.size()}}));
  } else {
    for (const char* l : {"clarke_subspace_dim_d", "strict_derivative_subspace", "coderivative_subspace",
                          "graphical_regularity", "sc_singleton", "sc_adjoint_singleton"})
      v.criteria.push_back(criterion(l, std::nullopt, {{"reason", "no chart"}}));
  }
  CriterionResult info = criterion("tangent_equals_clarke", same_set(b.tangent, ConeUnion::single(b.clarke_tangent)),
                                   {{"dim_tangent", dim(b.tangent)}});
  info.informational = true;
  v.criteria.push_back(std::move(info));

  v.dims = {{"dim_strict", dim(d.strict)}, {"dim_coderivative", dim(d.coderivative)}, {"dim_clarke", b.clarke_tangent.dim()},
            {"n", a.dims.n}, {"m", a.dims.m}};
  if (a.chart_dim) v.dims["d"] = *a.chart_dim;
  settle(v);
  return v;
}

DiagnosticVerdict check_strict_proto(const SetValuedMap& f, const GraphPoint& p) { return check_strict_proto(analyze(f, p)); }

DiagnosticVerdict check_strict_diff_single(const SetValuedMap& f, const Vec& xbar) {
  if (!is_single_valued(f)) throw UnsupportedError("check_strict_diff_single: map is not single-valued");
  const GraphPoint p{xbar, evaluate_single(f, xbar)};
  const MapAnalysis a = analyze(f, p);
  const DerivativeBundle& d = a.derivatives;
  const auto bj = b_jacobian(f, xbar);
  const auto ds = is_subspace(d.strict);
  const auto dc = is_subspace(d.coderivative);
  DiagnosticVerdict v;
  Json mats = Json::array();
  for (const Mat& m : bj) mats.push_back(mat_json(m));
  v.criteria.push_back(criterion("b_jacobian_singleton", bj.size() == 1, {{"b_jacobian", mats}}));
  v.criteria.push_back(criterion("sc_singleton", d.generalized_sc.size() == 1, {{"count", d.generalized_sc.size()}}));
  v.criteria.push_back(
      criterion("sc_adjoint_singleton", d.generalized_sc_adjoint.size() == 1, {{"count", d.generalized_sc_adjoint.size()}}));
  v.criteria.push_back(criterion("strict_derivative_subspace", ds.has_value(), subspace_evidence(ds, d.strict)));
  v.criteria.push_back(criterion("coderivative_subspace", dc.has_value(), subspace_evidence(dc, d.coderivative)));
  v.criteria.push_back(criterion("dim_strict_is_n", ds && ds->dim() == a.dims.n, {{"dim_strict", dim(d.strict)}}));
  v.criteria.push_back(criterion("dim_coderivative_is_m", dc && dc->dim() == a.dims.m, {{"dim_coderivative", dim(d.coderivative)}}));
  v.dims = {{"n", a.dims.n}, {"m", a.dims.m}, {"dim_strict", dim(d.strict)}, {"dim_coderivative", dim(d.coderivative)}};
  settle(v);
  return v;
}

DiagnosticVerdict check_frechet(const SetValuedMap& f, const Vec& xbar) {
  if (!is_single_valued(f)) throw UnsupportedError("check_frechet: map is not single-valued");
  const Vec ybar = evaluate_single(f, xbar);
  const Eigen::Index n = xbar.size();
  std::mt19937_64 rng(mix_seed(0, 77));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> ratios;
  for (int k = 0; k <= 12; ++k) {
    const double r = 0.1 * std::ldexp(1.0, -k);
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
      Vec g(n);
      for (Eigen::Index j = 0; j < n; ++j) g(j) = normal(rng);
      if (i < 2 * n) g = Vec::Unit(n, i / 2) * (i % 2 ? -1.0 : 1.0);
      const Vec x = xbar + g * (r / g.norm());
      worst = std::max(worst, (evaluate_single(f, x) - ybar).norm() / r);
    }
    ratios.push_back(worst);
  }
  // Bounded ratios: the small-radius maxima must not outgrow the large-radius ones.
  const double head_max = *std::max_element(ratios.begin(), ratios.begin() + 4);
  const double tail_max = *std::max_element(ratios.end() - 4, ratios.end());
  const bool calm = std::isfinite(tail_max) && tail_max <= 2.0 * head_max + 1e-12;
  const auto tangent = is_subspace(cones_at(f, {xbar, ybar}).tangent);
  DiagnosticVerdict v;
  v.criteria.push_back(criterion("calm", calm, {{"ratio_max", ratios}}));
  v.criteria.push_back(criterion("graphical_derivative_subspace", tangent.has_value(),
                                 {{"dim", tangent ? tangent->dim() : -1}}));
  v.consensus = (calm && tangent) ? Consensus::True : Consensus::False;
  v.dims = {{"n", n}};
  if (tangent) v.dims["dim_graphical"] = tangent->dim();
  return v;
}

namespace {

struct ShellStats {
  std::vector<double> radius, max;
  std::vector<int> count;
};

double normal_ratio(const ConvexCone& c, const Vec& d) {
  const double dn = d.norm();
  if (dn == 0.0) return 0.0;
  return std::max(c.project(d).norm(), c.project(-d).norm()) / dn;
}

std::vector<Mat> jacobians_at(const SetValuedMap& f, const Vec& x) {
  if (const auto* pl = f.as<PLSingle>()) {
    std::vector<Mat> out;
    for (const PLCell& c : pl->cells)
      if (c.cell.contains(x, 1e-12)) out.push_back(c.a);
    return out;
  }
  return {f.as<Smooth>()->branches.front().jacobian(x)};
}

Json shells_json(const ShellStats& s) { return {{"radius", s.radius}, {"max", s.max}, {"count", s.count}}; }

}  // namespace

DiagnosticVerdict check_semismooth_star(const SetValuedMap& f, const GraphPoint& p, std::uint64_t seed,
                                        const SemismoothConfig& cfg) {
  const Vec zbar = p.stacked();
  ShellStats normal_shells;
  bool low = false;
  for (int k = 0; k < cfg.shells; ++k) {
    const double r = cfg.delta0 * std::ldexp(1.0, -k);
    const auto pts = sample_graph_near(f, p, r, 3 * cfg.per_shell, mix_seed(seed, static_cast<std::uint64_t>(k)));
    double worst = 0.0;
    int used = 0;
    for (const GraphPoint& q : pts) {
      const Vec d = q.stacked() - zbar;
      if (d.norm() < 0.5 * r) continue;
      if (used >= cfg.per_shell) break;
      worst = std::max(worst, normal_ratio(regular_normal_at(f, q), d));
      ++used;
    }
    normal_shells.radius.push_back(r);
    normal_shells.max.push_back(worst);
    normal_shells.count.push_back(used);
    if (used < 32) low = true;
  }
  DiagnosticVerdict v;
  const bool normal_ok = normal_shells.max.back() < cfg.threshold;
  v.criteria.push_back(criterion("normal_decay", normal_ok,
                                 {{"shells", shells_json(normal_shells)}, {"threshold", cfg.threshold}, {"low_confidence", low}}));

  if (is_single_valued(f)) {
    ShellStats res;
    std::mt19937_64 rng(mix_seed(seed, 991));
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index n = p.x.size();
    for (int k = 0; k < cfg.shells; ++k) {
      const double r = cfg.delta0 * std::ldexp(1.0, -k);
      double worst = 0.0;
      for (int i = 0; i < cfg.per_shell; ++i) {
        Vec g(n);
        for (Eigen::Index j = 0; j < n; ++j) g(j) = normal(rng);
        std::uniform_real_distribution<double> rad(0.5 * r, r);
        const Vec x = p.x + g * (rad(rng) / g.norm());
        const Vec fx = evaluate_single(f, x);
        for (const Mat& c : jacobians_at(f, x))
          worst = std::max(worst, (fx - p.y - c * (x - p.x)).norm() / (x - p.x).norm());
      }
      res.radius.push_back(r);
      res.max.push_back(worst);
      res.count.push_back(cfg.per_shell);
    }
    v.criteria.push_back(criterion("jacobian_residual_decay", res.max.back() < cfg.threshold,
                                   {{"shells", shells_json(res)}, {"threshold", cfg.threshold}}));
  } else {
    v.criteria.push_back(criterion("jacobian_residual_decay", std::nullopt, {{"reason", "not single-valued"}}));
  }
  settle(v);
  return v;
}

Vec ExtractedChart::free_part(const Vec& z) const { return (q * z).tail(d); }

Vec ExtractedChart::lift(const Vec& v) const {
  const Eigen::Index k = q.rows();
  Vec w(k);
  w << evaluate(v), v;
  return q.transpose() * w;
}

Vec ExtractedChart::evaluate(const Vec& v) const {
  const Eigen::Index k = q.rows();
  const Vec wbar = q * zbar;
  Vec pred(k);
  pred << wbar.head(k - d) + gradient * (v - wbar.tail(d)), v;
  const Vec z0 = q.transpose() * pred;
  const Mat qb = q.bottomRows(d);

  std::vector<ConvexPolyhedron> pieces;
  if (const auto* u = omega->as<PolyUnion>()) pieces = u->pieces;
  if (const auto* pl = omega->as<PLSingle>()) pieces = pl_graph_pieces(*pl, omega->dims());
  if (!pieces.empty()) {
    std::optional<Vec> best;
    for (const ConvexPolyhedron& piece : pieces)
      if (auto s = project_onto(piece.with_equalities(qb, v), z0); s && (!best || (*s - z0).norm() < (*best - z0).norm()))
        best = s;
    if (!best) throw DomainError("extract_chart: slice misses the graph");
    return (q * *best).head(k - d);
  }

  Vec z = z0;
  for (int it = 0; it < 100; ++it) {
    const auto g = project_to_graph(*omega, z);
    if (!g) throw DomainError("extract_chart: projection failed");
    const Vec r = v - qb * *g;
    if (r.norm() <= 1e-13 * (1.0 + v.norm())) return (q * *g).head(k - d);
    Vec step(k);
    step << gradient * r, r;
    z = *g + q.transpose() * step;
  }
  throw DomainError("extract_chart: slice iteration did not converge");
}

ExtractedChart extract_chart(const std::shared_ptr<const SetValuedMap>& omega, const GraphPoint& zbar, const Mat& z_basis) {
  const int k = static_cast<int>(z_basis.rows());
  const int d = static_cast<int>(z_basis.cols());
  if (k != omega->dims().total()) throw DimensionError("extract_chart: basis has the wrong number of rows");
  if (numerical_rank(z_basis) != d) throw DomainError("extract_chart: tangent basis is rank deficient");
  Eigen::ColPivHouseholderQR<Mat> qr(z_basis.transpose());
  std::vector<int> chosen;
  for (int i = 0; i < d; ++i) chosen.push_back(qr.colsPermutation().indices()(i));
  std::sort(chosen.begin(), chosen.end());
  std::vector<int> order;
  for (int i = 0; i < k; ++i)
    if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) order.push_back(i);
  order.insert(order.end(), chosen.begin(), chosen.end());

  ExtractedChart c;
  c.permutation = order;
  c.q = Mat::Zero(k, k);
  for (int i = 0; i < k; ++i) c.q(i, order[static_cast<std::size_t>(i)]) = 1.0;
  const Mat qz = c.q * z_basis;
  const Mat a = qz.topRows(k - d);
  const Mat b = qz.bottomRows(d);
  if (!nonsingular(b, z_basis.norm())) throw DomainError("extract_chart: selected block is singular");
  c.gradient = a * b.inverse();
  c.d = d;
  c.zbar = zbar.stacked();
  c.omega = omega;
  return c;
}

SurveyResult ae_strict_proto_survey(const SetValuedMap& f, const GraphPoint& center, double radius, int count,
                                    std::uint64_t seed) {
  SurveyResult out;
  for (const GraphPoint& q : sample_graph_near(f, center, radius, count, seed, SampleMode::TopDimensional)) {
    const bool ok = check_strict_proto(f, q).is_true();
    out.points.emplace_back(q.stacked(), ok);
    ++out.count;
    if (ok) ++out.strict_proto_true;
  }
  out.fraction = out.count ? static_cast<double>(out.strict_proto_true) / out.count : 0.0;
  return out;
}

}  // namespace varlab
