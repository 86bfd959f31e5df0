#include "varlab/harness.hpp"

#include "varlab/regularity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace varlab {

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

Json consensus_value(const DiagnosticVerdict& v) {
  switch (v.consensus) {
    case Consensus::True: return true;
    case Consensus::False: return false;
    default: return to_string(v.consensus);
  }
}

Vec random_in_ball(std::mt19937_64& rng, Eigen::Index n, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = normal(rng);
  return g * (radius * std::pow(unit(rng), 1.0 / static_cast<double>(n)) / g.norm());
}

bool numbers_match(double expected, double computed, double tol) {
  if (std::isinf(expected)) return expected == computed;
  return std::abs(expected - computed) <= tol * std::max(1.0, std::abs(expected));
}

// Expected values may use rational strings; structure must agree otherwise.
bool json_match(const Json& expected, const Json& computed, double tol) {
  if (expected.is_boolean() || computed.is_boolean()) return expected == computed;
  if (expected.is_null() || computed.is_null()) return expected.is_null() && computed.is_null();
  if (expected.is_array()) {
    if (!computed.is_array() || computed.size() != expected.size()) return false;
    for (std::size_t i = 0; i < expected.size(); ++i)
      if (!json_match(expected[i], computed[i], tol)) return false;
    return true;
  }
  if (computed.is_number() && (expected.is_number() || expected.is_string())) {
    try {
      return numbers_match(parse_number(expected), computed.get<double>(), tol);
    } catch (const CorpusError&) {
      return false;
    }
  }
  return expected == computed;
}

// Order-insensitive comparison of matrix lists.
bool matrix_set_match(const Json& expected, const Json& computed, double tol) {
  if (!expected.is_array() || !computed.is_array() || expected.size() != computed.size()) return false;
  std::vector<bool> used(computed.size(), false);
  for (const Json& e : expected) {
    bool found = false;
    for (std::size_t i = 0; i < computed.size() && !found; ++i)
      if (!used[i] && json_match(e, computed[i], tol)) used[i] = found = true;
    if (!found) return false;
  }
  return true;
}

struct PointContext {
  Json checks = Json::object();
  Json computed = Json::object();
  std::map<std::string, ConeUnion> cones;
  std::vector<std::string> inconsistencies;
  std::vector<std::string> errors;
};

struct Totals {
  int points = 0;
  int comparisons = 0;
  Json mismatches = Json::array();
  Json inconsistencies = Json::array();
  Json errors = Json::array();
};

template <class F>
void guarded(PointContext& ctx, const std::string& check, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    ctx.checks[check] = {{"error", e.what()}};
    ctx.errors.push_back(check + ": " + e.what());
  }
}

Json cone_invariants(const ConeBundle& b, PointContext& ctx) {
  const ConeUnion clarke = ConeUnion::single(b.clarke_tangent);
  const ConeUnion regular = ConeUnion::single(b.regular_normal);
  Json j = {{"clarke_in_tangent", includes(b.tangent, clarke)},
            {"tangent_in_paratingent", includes(b.paratingent, b.tangent)},
            {"regular_in_limiting", includes(b.limiting_normal, regular)},
            {"regular_normal_is_polar_of_tangent", same_cone(b.regular_normal, polar(b.tangent))},
            {"clarke_is_polar_of_limiting_normal", same_cone(b.clarke_tangent, polar(b.limiting_normal))},
            {"paratingent_symmetric", same_set(b.paratingent, negated(b.paratingent))}};
  for (const auto& [k, v] : j.items())
    if (!v.get<bool>()) ctx.inconsistencies.push_back("cone invariant " + k + " fails");
  return j;
}

MapAnalysis analysis_for(const CorpusInstance& inst, const CorpusPoint& cp) {
  if (!cp.analytic) return analyze(*inst.map, cp.p);
  MapAnalysis a;
  a.dims = inst.map->dims();
  a.cones = cp.analytic->cones;
  a.derivatives = package_derivatives(a.dims, a.cones, cp.analytic->sc);
  return a;
}

void diagnose_point(const CorpusInstance& inst, const CorpusPoint& cp, std::uint64_t seed, PointContext& ctx) {
  const SetValuedMap& f = *inst.map;
  const SplitDims dims = f.dims();
  std::optional<MapAnalysis> a;
  guarded(ctx, "analysis", [&] { a = analysis_for(inst, cp); });
  if (!a) return;

  const DiagnosticVerdict sp = check_strict_proto(*a);
  ctx.checks["strict_proto"] = sp.to_json();
  ctx.computed["strict_proto"] = consensus_value(sp);
  if (sp.consensus == Consensus::Inconsistent) ctx.inconsistencies.push_back("strict_proto battery inconsistent");
  ctx.computed["chart_dim"] = a->chart_dim ? Json(*a->chart_dim) : Json(nullptr);
  ctx.computed["dim_strict"] = dim(a->derivatives.strict);
  ctx.computed["dim_coderivative"] = dim(a->derivatives.coderivative);
  ctx.computed["sc_count"] = a->derivatives.sc.size();
  ctx.cones["tangent"] = a->cones.tangent;
  ctx.cones["limiting_normal"] = a->cones.limiting_normal;
  if (sp.is_true() && a->chart_dim) {
    const int d = *a->chart_dim;
    const bool ok = dim(a->derivatives.strict) == d && dim(a->derivatives.coderivative) == dims.total() - d;
    ctx.checks["dimension_identities"] = {{"d", d},
                                          {"dim_strict", dim(a->derivatives.strict)},
                                          {"dim_coderivative", dim(a->derivatives.coderivative)},
                                          {"holds", ok}};
    if (!ok) ctx.inconsistencies.push_back("dimension identities fail at a strictly proto-differentiable point");
  }

  SetAnalysis sa{a->cones, a->chart_dim, dims.total()};
  const DiagnosticVerdict ss = check_strictly_smooth(sa);
  ctx.checks["strictly_smooth"] = ss.to_json();
  ctx.computed["strictly_smooth"] = consensus_value(ss);
  if (ss.consensus == Consensus::Inconsistent) ctx.inconsistencies.push_back("strictly_smooth battery inconsistent");
  if (ss.consensus != Consensus::Inconsistent && sp.consensus != Consensus::Inconsistent && ss.is_true() != sp.is_true())
    ctx.inconsistencies.push_back("graph strict smoothness and strict proto-differentiability disagree");

  ctx.checks["cone_invariants"] = cone_invariants(a->cones, ctx);

  guarded(ctx, "semismooth_star", [&] {
    const DiagnosticVerdict sss = check_semismooth_star(f, cp.p, seed);
    ctx.checks["semismooth_star"] = sss.to_json();
    ctx.computed["semismooth_star"] = consensus_value(sss);
    if (ss.is_true() && !sss.is_true()) ctx.inconsistencies.push_back("strictly smooth but not semismooth*");
  });

  if (cp.analytic && dims.total() == 2) {
    guarded(ctx, "paratingent_estimate", [&] {
      const auto dirs = estimate_paratingent(f, cp.p, 1e-2, 8, 256, seed);
      double outside = 0.0;
      for (const Vec& d : dirs) outside = std::max(outside, angle_to(cp.analytic->cones.paratingent, d));
      ctx.checks["paratingent_estimate"] = {{"directions", dirs.size()},
                                            {"max_gap_deg", max_angular_gap_deg(dirs)},
                                            {"max_angle_outside_analytic_rad", outside}};
    });
  }

  if (!cp.analytic && is_single_valued(f)) {
    guarded(ctx, "strict_diff", [&] {
      const DiagnosticVerdict sd = check_strict_diff_single(f, cp.p.x);
      ctx.checks["strict_diff"] = sd.to_json();
      ctx.computed["strict_diff"] = consensus_value(sd);
      if (sd.consensus == Consensus::Inconsistent) ctx.inconsistencies.push_back("strict_diff battery inconsistent");
      else if (sp.consensus != Consensus::Inconsistent && sd.is_true() != sp.is_true())
        ctx.inconsistencies.push_back("strict differentiability and strict proto-differentiability disagree");
      Json mats = Json::array();
      for (const Mat& m : b_jacobian(f, cp.p.x)) mats.push_back(mat_json(m));
      ctx.computed["b_jacobian"] = mats;
    });
    guarded(ctx, "frechet", [&] {
      const DiagnosticVerdict fr = check_frechet(f, cp.p.x);
      ctx.checks["frechet"] = fr.to_json();
      ctx.computed["frechet"] = consensus_value(fr);
    });
  }

  if (sp.is_true() && !cp.analytic) {
    guarded(ctx, "chart_extraction", [&] {
      const Mat basis = cp.tangent_basis ? *cp.tangent_basis : is_subspace(a->derivatives.strict)->basis();
      const ChartExtractionCheck c = verify_chart_extraction(inst.map, cp.p, basis, seed);
      ctx.checks["chart_extraction"] = {{"max_residual", c.max_residual},
                                        {"fd_error", c.fd_error},
                                        {"queries", c.queries},
                                        {"basis_supplied", cp.tangent_basis.has_value()},
                                        {"ok", c.ok}};
      if (!c.ok) ctx.inconsistencies.push_back("extracted chart fails its residual or gradient check");
    });
  }
}

void regularity_point(const CorpusInstance& inst, const CorpusPoint& cp, PointContext& ctx) {
  std::optional<MapAnalysis> a;
  guarded(ctx, "regularity", [&] { a = analysis_for(inst, cp); });
  if (!a) return;
  const RegularityVerdict v = cp.analytic ? independent_tests(a->derivatives) : classify_under_strict_proto(*a);
  ctx.checks["regularity"] = v.to_json();
  ctx.computed["smsr"] = v.smsr;
  ctx.computed["mr"] = v.mr;
  ctx.computed["smr"] = v.smr;
  ctx.computed["C"] = v.representation ? mat_json(*v.representation) : Json(nullptr);
  if (!v.consistent) ctx.inconsistencies.push_back("regularity cross-checks disagree: " + v.note);
  if (v.equivalence_applicable && !(v.smsr == v.mr && v.mr == v.smr))
    ctx.inconsistencies.push_back("regularity properties differ under strict proto-differentiability");

  if (const auto* s = inst.map->as<SumGE>()) {
    guarded(ctx, "sum_rule", [&] {
      try {
        const SumClassification sc = classify_sum(s->g, s->inner, cp.p);
        ctx.checks["sum_rule"] = sc.to_json();
        ctx.computed["sum_regular"] = sc.verdict.smr;
        if (!sc.agrees) ctx.inconsistencies.push_back("sum rule disagrees with the direct classification");
      } catch (const DomainError& e) {
        ctx.checks["sum_rule"] = {{"applicable", false}, {"reason", e.what()}};
        ctx.computed["sum_regular"] = nullptr;
      }
    });
  }
}

Json decay_json(const DecayReport& r) {
  return {{"shell_radius", r.shell_radius},
          {"shell_max", r.shell_max},
          {"shell_count", r.shell_count},
          {"slope", std::isinf(r.slope) ? Json("inf") : Json(r.slope)},
          {"exact_zero", r.exact_zero},
          {"decaying", r.decaying},
          {"hypothesis_verified", r.hypothesis_verified},
          {"low_confidence", r.low_confidence},
          {"witness_values", r.witness_values}};
}

void diagnose_prox(const CorpusInstance& inst, std::uint64_t seed, PointContext& ctx) {
  const FunctionPtr& phi = inst.function;
  const GraphPoint p{phi->xbar, phi->xbar_star};
  guarded(ctx, "strict_proto", [&] {
    const MapPtr t = make_prox_subgrad(phi, inst.lambda);
    const MapAnalysis a = analyze(*t, p);
    const DiagnosticVerdict sp = check_strict_proto(a);
    ctx.checks["strict_proto"] = sp.to_json();
    ctx.computed["strict_proto"] = consensus_value(sp);
    if (sp.consensus == Consensus::Inconsistent) ctx.inconsistencies.push_back("strict_proto battery inconsistent");
    if (sp.is_true() && a.chart_dim &&
        (dim(a.derivatives.strict) != *a.chart_dim || dim(a.derivatives.coderivative) != 2 * phi->n - *a.chart_dim))
      ctx.inconsistencies.push_back("dimension identities fail at a strictly proto-differentiable point");
    const DiagnosticVerdict ss = check_strictly_smooth(SetAnalysis{a.cones, a.chart_dim, 2 * phi->n});
    ctx.checks["strictly_smooth"] = ss.to_json();
    ctx.checks["cone_invariants"] = cone_invariants(a.cones, ctx);
    const DiagnosticVerdict sss = check_semismooth_star(*t, p, seed);
    ctx.checks["semismooth_star"] = sss.to_json();
    ctx.computed["semismooth_star"] = consensus_value(sss);
    if (ss.is_true() && !sss.is_true()) ctx.inconsistencies.push_back("strictly smooth but not semismooth*");
  });
}

void prox_suite(const CorpusInstance& inst, std::uint64_t seed, PointContext& ctx) {
  const FunctionPtr& phi = inst.function;
  const double lambda = inst.lambda;
  std::optional<bool> battery;
  guarded(ctx, "strict_proto_subgrad", [&] {
    const DiagnosticVerdict v = check_strict_proto_subgrad(phi, lambda, seed);
    ctx.checks["strict_proto_subgrad"] = v.to_json();
    ctx.computed["strict_proto_subgrad"] = consensus_value(v);
    if (v.consensus == Consensus::Inconsistent) ctx.inconsistencies.push_back("subgradient battery inconsistent");
    else battery = v.is_true();
    const AttentiveLocalization loc = attentive_localization(phi, lambda);
    ctx.computed["localization_pieces"] = loc.pieces.size();
    const DiagnosticVerdict sd = check_strict_diff_single(*loc.as_map->as<Charted>()->inner, reference_u(*phi, lambda));
    ctx.checks["prox_strict_diff"] = sd.to_json();
    if (battery && sd.consensus != Consensus::Inconsistent && sd.is_true() != *battery)
      ctx.inconsistencies.push_back("subgradient battery differs from strict differentiability of the prox");
  });
  guarded(ctx, "trapezoid_one_point", [&] {
    const DecayReport r = trapezoid_one_point(phi, lambda, seed);
    ctx.checks["trapezoid_one_point"] = decay_json(r);
    ctx.computed["one_point_decaying"] = r.decaying;
    ctx.computed["one_point_exact_zero"] = r.exact_zero;
  });
  guarded(ctx, "trapezoid_two_point", [&] {
    const DecayReport r = trapezoid_two_point(phi, lambda, seed, 8, 48, inst.witness_pairs);
    ctx.checks["trapezoid_two_point"] = decay_json(r);
    ctx.computed["two_point_decaying"] = r.decaying;
    ctx.computed["two_point_exact_zero"] = r.exact_zero;
    if (!r.witness_values.empty()) {
      const auto [lo, hi] = std::minmax_element(r.witness_values.begin(), r.witness_values.end());
      ctx.computed["two_point_witness"] = (*hi - *lo <= 1e-9) ? Json(r.witness_values.front()) : Json(r.witness_values);
    }
    if (battery && !*battery && !inst.witness_pairs.empty() && r.decaying)
      ctx.inconsistencies.push_back("two-point rule decays at a point without strict proto-differentiability");
  });
  guarded(ctx, "prox_identities", [&] {
    const ProxIdentityCheck c = verify_prox_identities(inst, seed);
    const bool ok = c.round_trip < 1e-9 && c.membership < 1e-9 && c.envelope_fd <= 1e-5;
    ctx.checks["prox_identities"] = {{"round_trip", c.round_trip},
                                     {"membership", c.membership},
                                     {"envelope_fd", c.envelope_fd},
                                     {"samples", c.samples},
                                     {"ok", ok}};
    if (!ok) ctx.inconsistencies.push_back("prox identities fail");
  });
}

Json compare_point(const Expectations& expect, const PointContext& ctx, double tol, const std::string& where,
                   Totals& totals) {
  Json out = Json::array();
  for (const auto& [key, e] : expect) {
    bool computed_here = ctx.computed.contains(key) || ctx.cones.count(key) > 0;
    if (!computed_here) continue;
    bool match = false;
    Json shown;
    if (ctx.cones.count(key)) {
      const ConeUnion& c = ctx.cones.at(key);
      try {
        match = same_set(parse_cone_union(e.value, c.ambient_dim()), c);
      } catch (const std::exception&) {
        match = false;
      }
      shown = {{"pieces", c.pieces().size()}, {"dim", dim(c)}};
    } else if (key == "b_jacobian") {
      shown = ctx.computed[key];
      match = matrix_set_match(e.value, shown, tol);
    } else {
      shown = ctx.computed[key];
      match = json_match(e.value, shown, tol);
    }
    ++totals.comparisons;
    if (!match) totals.mismatches.push_back(where + " " + key + ": expected " + e.value.dump() + ", computed " + shown.dump());
    out.push_back({{"key", key}, {"expected", e.value}, {"origin", e.origin}, {"computed", shown}, {"match", match}});
  }
  return out;
}

Json finish_point(PointContext& ctx, const Expectations& expect, double tol, const std::string& where, Totals& totals) {
  Json j;
  j["checks"] = ctx.checks;
  j["computed"] = ctx.computed;
  j["comparisons"] = compare_point(expect, ctx, tol, where, totals);
  j["inconsistencies"] = ctx.inconsistencies;
  for (const std::string& s : ctx.inconsistencies) totals.inconsistencies.push_back(where + ": " + s);
  for (const std::string& s : ctx.errors) totals.errors.push_back(where + ": " + s);
  ++totals.points;
  return j;
}

bool wants(const std::string& command, const char* suite) { return command == "all" || command == suite; }

}  // namespace

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c = {"diagnose", "regularity", "prox", "survey", "all"};
  return c;
}

std::uint64_t instance_seed(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return mix_seed(seed, h);
}

double graph_residual(const SetValuedMap& f, const Vec& z) {
  const SplitDims dims = f.dims();
  auto best_of = [&](const std::vector<ConvexPolyhedron>& pieces) {
    double best = std::numeric_limits<double>::infinity();
    for (const ConvexPolyhedron& p : pieces) best = std::min(best, p.violation(z));
    return best;
  };
  if (const auto* u = f.as<PolyUnion>()) return best_of(u->pieces);
  if (const auto* pl = f.as<PLSingle>()) return best_of(pl_graph_pieces(*pl, dims));
  if (const auto* s = f.as<Smooth>()) {
    double best = std::numeric_limits<double>::infinity();
    for (const SmoothBranch& b : s->branches) best = std::min(best, (b.value(z.head(dims.n)) - z.tail(dims.m)).norm());
    return best;
  }
  if (const auto* c = f.as<Charted>()) return graph_residual(*c->inner, c->chart.forward(z));
  if (const auto* s = f.as<SumGE>()) {
    Vec w = z;
    w.tail(dims.m) -= s->g.value(z.head(dims.n));
    return graph_residual(*s->inner, w);
  }
  if (const auto* ps = f.as<ProxSubgrad>()) return graph_residual(*ps->localized, z);
  return std::numeric_limits<double>::infinity();
}

ChartExtractionCheck verify_chart_extraction(const MapPtr& f, const GraphPoint& p, const Mat& basis, std::uint64_t seed,
                                             int queries) {
  const ExtractedChart chart = extract_chart(f, p, basis);
  const Vec vbar = chart.free_part(p.stacked());
  std::mt19937_64 rng(mix_seed(seed, 6161));
  ChartExtractionCheck out;
  for (int i = 0; i < queries; ++i) {
    const Vec v = vbar + random_in_ball(rng, chart.d, 1e-2);
    out.max_residual = std::max(out.max_residual, graph_residual(*f, chart.lift(v)));
    ++out.queries;
  }
  const double h = 1e-6 * std::max(1.0, vbar.norm());
  Mat fd(chart.gradient.rows(), chart.d);
  for (int j = 0; j < chart.d; ++j) {
    const Vec e = Vec::Unit(chart.d, j) * h;
    fd.col(j) = (chart.evaluate(vbar + e) - chart.evaluate(vbar - e)) / (2.0 * h);
  }
  out.fd_error = (fd - chart.gradient).norm() / std::max(1.0, chart.gradient.norm());
  out.ok = out.max_residual < 1e-9 && out.fd_error <= 1e-5;
  return out;
}

ProxIdentityCheck verify_prox_identities(const CorpusInstance& inst, std::uint64_t seed, int samples) {
  const ProxRegularFunction& phi = *inst.function;
  const double lambda = inst.lambda;
  const AttentiveLocalization loc = attentive_localization(inst.function, lambda);
  const Vec ubar = reference_u(phi, lambda);
  const double w = certified_u_window(phi, lambda);
  const int n = phi.n;
  ProxIdentityCheck out;

  // Graph points taken straight from the localization pieces.
  const MapPtr pieces = make_map({n, n}, PolyUnion{loc.pieces});
  const GraphPoint center = GraphPoint::split(loc.center, {n, n});
  int taken = 0;
  for (const GraphPoint& q : sample_graph_near(*pieces, center, loc.radius, 8 * samples, mix_seed(seed, 71))) {
    const Vec u = q.x + lambda * q.y;
    if ((u - ubar).norm() >= w) continue;
    out.round_trip = std::max(out.round_trip, (prox_map(phi, lambda, u) - q.x).norm());
    if (++taken == samples) break;
  }

  std::mt19937_64 rng(mix_seed(seed, 72));
  for (int i = 0; i < samples; ++i) {
    const Vec u = ubar + random_in_ball(rng, n, 0.9 * w);
    const Vec x = prox_map(phi, lambda, u);
    const Vec g = envelope_gradient(phi, lambda, u);
    Vec z(2 * n);
    z << x, g;
    out.membership = std::max(out.membership, graph_residual(*phi.subgrad_graph, z));
    const double h = 1e-5 * (1.0 + u.norm());
    Vec fd(n);
    for (int j = 0; j < n; ++j) {
      const Vec e = Vec::Unit(n, j) * h;
      fd(j) = (moreau_envelope(phi, lambda, u + e) - moreau_envelope(phi, lambda, u - e)) / (2.0 * h);
    }
    out.envelope_fd = std::max(out.envelope_fd, (fd - g).norm() / std::max(1.0, g.norm()));
    ++out.samples;
  }
  return out;
}

Report run(const std::string& command, const std::vector<CorpusInstance>& corpus, const RunConfig& cfg) {
  const auto& cmds = known_commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) throw UsageError("unknown command '" + command + "'");
  if (!(cfg.tol_eq > 0.0) || cfg.tol_eq > 1e-2) throw UsageError("--tol-eq must lie in (0, 1e-2]");

  std::vector<const CorpusInstance*> order;
  for (const CorpusInstance& c : corpus) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  Totals totals;
  Json instances = Json::array();
  for (const CorpusInstance* inst : order) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = instance_seed(cfg.seed, inst->id);
    Json ij;
    ij["id"] = inst->id;
    ij["kind"] = inst->is_prox ? "prox" : inst->map->variant_name();
    Json points = Json::array();
    if (inst->is_prox) {
      PointContext ctx;
      if (wants(command, "diagnose")) diagnose_prox(*inst, seed, ctx);
      if (wants(command, "prox")) prox_suite(*inst, seed, ctx);
      if (command != "survey") {
        Json pj = finish_point(ctx, inst->expect, cfg.tol_eq, inst->id + "#0", totals);
        pj["x"] = vec_json(inst->function->xbar);
        pj["y"] = vec_json(inst->function->xbar_star);
        pj["lambda"] = inst->lambda;
        points.push_back(std::move(pj));
      }
    } else {
      if (wants(command, "diagnose") || wants(command, "regularity")) {
        for (std::size_t i = 0; i < inst->points.size(); ++i) {
          const CorpusPoint& cp = inst->points[i];
          PointContext ctx;
          const std::uint64_t ps = mix_seed(seed, i);
          if (wants(command, "diagnose")) diagnose_point(*inst, cp, ps, ctx);
          if (wants(command, "regularity")) regularity_point(*inst, cp, ctx);
          Json pj = finish_point(ctx, cp.expect, cfg.tol_eq, inst->id + "#" + std::to_string(i), totals);
          pj["x"] = vec_json(cp.p.x);
          pj["y"] = vec_json(cp.p.y);
          points.push_back(std::move(pj));
        }
      }
      if (wants(command, "survey") && inst->survey) {
        const SurveySpec& s = *inst->survey;
        PointContext ctx;
        guarded(ctx, "survey", [&] {
          const SurveyResult r = ae_strict_proto_survey(*inst->map, inst->points[s.point].p, s.radius, s.count, seed);
          Json failing = Json::array();
          for (const auto& [z, ok] : r.points)
            if (!ok) failing.push_back(vec_json(z));
          ctx.checks["survey"] = {{"count", r.count}, {"strict_proto_true", r.strict_proto_true},
                                  {"fraction", r.fraction}, {"failing_points", failing}};
          ctx.computed["fraction"] = r.fraction;
        });
        Json sj;
        sj["checks"] = ctx.checks;
        sj["computed"] = ctx.computed;
        sj["comparisons"] = compare_point(s.expect, ctx, cfg.tol_eq, inst->id + "#survey", totals);
        for (const std::string& e : ctx.errors) totals.errors.push_back(inst->id + "#survey: " + e);
        ij["survey"] = std::move(sj);
      }
    }
    ij["points"] = std::move(points);
    if (cfg.timings)
      ij["timing_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    instances.push_back(std::move(ij));
  }

  Report r;
  r.mismatches = static_cast<int>(totals.mismatches.size());
  r.inconsistencies = static_cast<int>(totals.inconsistencies.size());
  r.errors = static_cast<int>(totals.errors.size());
  r.body["schema"] = "varlab-report/1";
  r.body["command"] = command;
  r.body["seed"] = cfg.seed;
  r.body["tol_eq"] = cfg.tol_eq;
  r.body["instances"] = std::move(instances);
  r.body["summary"] = {{"instances", corpus.size()},
                       {"points", totals.points},
                       {"comparisons", totals.comparisons},
                       {"matched", totals.comparisons - r.mismatches},
                       {"mismatches", totals.mismatches},
                       {"inconsistencies", totals.inconsistencies},
                       {"errors", totals.errors},
                       {"status", r.exit_code() == 0 ? "pass" : "fail"}};
  return r;
}

namespace {

std::string cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  std::string s = v.dump();
  return s.size() > 40 ? s.substr(0, 37) + "..." : s;
}

}  // namespace

std::string render(const Report& r, const std::string& format) {
  if (format == "json") return r.body.dump(2) + "\n";
  if (format != "text") throw UsageError("unknown format '" + format + "'");
  std::ostringstream os;
  const Json& b = r.body;
  os << "varlab report  command=" << b["command"].get<std::string>() << "  seed=" << b["seed"].get<std::uint64_t>() << "\n\n";
  os << std::left << std::setw(28) << "instance" << std::setw(7) << "point" << std::setw(24) << "check" << std::setw(16)
     << "computed" << std::setw(16) << "expected" << "status\n";
  for (const Json& inst : b["instances"]) {
    const std::string id = inst["id"].get<std::string>();
    auto emit = [&](const std::string& pt, const Json& p) {
      for (const auto& [key, val] : p["computed"].items()) {
        std::string expected = "-", status = "";
        for (const Json& c : p["comparisons"])
          if (c["key"] == key) {
            expected = cell(c["expected"]);
            status = c["match"].get<bool>() ? "ok" : "MISMATCH";
          }
        os << std::setw(28) << id << std::setw(7) << pt << std::setw(24) << key << std::setw(16) << cell(val)
           << std::setw(16) << expected << status << "\n";
      }
      if (p.contains("inconsistencies"))
        for (const Json& s : p["inconsistencies"]) os << std::setw(35) << id << "INCONSISTENT " << s.get<std::string>() << "\n";
    };
    for (std::size_t i = 0; i < inst["points"].size(); ++i) emit("#" + std::to_string(i), inst["points"][i]);
    if (inst.contains("survey")) emit("survey", inst["survey"]);
    if (inst.contains("timing_ms")) os << std::setw(35) << id << "time " << inst["timing_ms"].get<double>() << " ms\n";
  }
  const Json& s = b["summary"];
  os << "\ninstances " << s["instances"] << "  points " << s["points"] << "  comparisons " << s["comparisons"]
     << "  matched " << s["matched"] << "\n";
  for (const Json& m : s["mismatches"]) os << "mismatch: " << m.get<std::string>() << "\n";
  for (const Json& m : s["inconsistencies"]) os << "inconsistency: " << m.get<std::string>() << "\n";
  for (const Json& m : s["errors"]) os << "error: " << m.get<std::string>() << "\n";
  os << "status: " << s["status"].get<std::string>() << "\n";
  return os.str();
}

}  // namespace varlab
