#include "varlab/regularity.hpp"

#include <algorithm>

namespace varlab {

namespace {

// Nonzero element of the cone union with the trailing `tail` coordinates zero.
std::optional<Vec> slice_witness(const ConeUnion& c, int head, int tail) {
  const int k = head + tail;
  Mat eq = Mat::Zero(tail, k);
  eq.rightCols(tail) = Mat::Identity(tail, tail);
  const ConvexCone slice = ConvexCone::from_halfspaces(Mat(0, k), eq, k);
  for (const ConvexCone& piece : c.pieces()) {
    const ConvexCone s = intersect(piece, slice);
    if (s.is_zero()) continue;
    const Mat g = s.generator_matrix();
    Vec w = g.col(0).head(head);
    return Vec(w / w.norm());
  }
  return std::nullopt;
}

Json opt_vec(const std::optional<Vec>& v) {
  if (!v) return nullptr;
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v->size(); ++i) a.push_back((*v)(i));
  return a;
}

Vec null_vector(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  return svd.matrixV().col(a.cols() - 1);
}

}  // namespace

KernelTest levy_rockafellar(const DerivativeBundle& d) {
  auto w = slice_witness(d.graphical, d.dims.n, d.dims.m);
  return {!w.has_value(), w, w ? "graphical" : ""};
}

KernelTest mordukhovich(const DerivativeBundle& d) {
  auto w = slice_witness(d.coderivative, d.dims.m, d.dims.n);
  return {!w.has_value(), w, w ? "coderivative" : ""};
}

KernelTest strong_metric_regular(const DerivativeBundle& d) {
  if (auto w = slice_witness(d.strict, d.dims.n, d.dims.m)) return {false, w, "strict"};
  return mordukhovich(d);
}

KernelTest levy_rockafellar(const SetValuedMap& f, const GraphPoint& p) { return levy_rockafellar(derivative_bundle(f, p)); }
KernelTest mordukhovich(const SetValuedMap& f, const GraphPoint& p) { return mordukhovich(derivative_bundle(f, p)); }
KernelTest strong_metric_regular(const SetValuedMap& f, const GraphPoint& p) {
  return strong_metric_regular(derivative_bundle(f, p));
}

Json RegularityVerdict::to_json() const {
  Json j = {{"smsr", smsr},
            {"mr", mr},
            {"smr", smr},
            {"equivalence_applicable", equivalence_applicable},
            {"consistent", consistent},
            {"smsr_witness", opt_vec(smsr_witness)},
            {"mr_witness", opt_vec(mr_witness)},
            {"smr_witness", opt_vec(smr_witness)},
            {"singular_witness", opt_vec(singular_witness)}};
  if (!smr_via.empty()) j["smr_via"] = smr_via;
  if (representation) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < representation->rows(); ++i) {
      Json r = Json::array();
      for (Eigen::Index c = 0; c < representation->cols(); ++c) r.push_back((*representation)(i, c));
      rows.push_back(r);
    }
    j["C"] = rows;
  } else {
    j["C"] = nullptr;
  }
  if (!note.empty()) j["note"] = note;
  return j;
}

RegularityVerdict independent_tests(const DerivativeBundle& d) {
  RegularityVerdict v;
  const KernelTest lr = levy_rockafellar(d);
  const KernelTest mo = mordukhovich(d);
  const KernelTest sm = strong_metric_regular(d);
  v.smsr = lr.holds;
  v.smsr_witness = lr.witness;
  v.mr = mo.holds;
  v.mr_witness = mo.witness;
  v.smr = sm.holds;
  v.smr_witness = sm.witness;
  v.smr_via = sm.via;
  // Definition hierarchy: strong metric regularity implies the other two.
  v.consistent = !v.smr || (v.mr && v.smsr);
  return v;
}

RegularityVerdict classify_under_strict_proto(const MapAnalysis& a) {
  const DiagnosticVerdict sp = check_strict_proto(a);
  RegularityVerdict ind = independent_tests(a.derivatives);
  const bool applicable = sp.is_true() && a.chart_dim && *a.chart_dim == a.dims.m;
  if (!applicable) {
    ind.note = sp.is_true() ? "chart dimension differs from m" : "strict proto-differentiability fails";
    return ind;
  }
  const auto cod = is_subspace(a.derivatives.coderivative);
  const auto gd = is_subspace(a.derivatives.graphical);
  RegularityVerdict v;
  v.equivalence_applicable = true;
  const Mat w = cod->basis();
  const Mat am = w.topRows(a.dims.m);
  const Mat bm = w.bottomRows(a.dims.n);
  if (bm.cols() == a.dims.n && nonsingular(bm, 1.0)) {
    const Mat c = (am * bm.inverse()).transpose();
    v.representation = c;
    v.smsr = v.mr = v.smr = true;
    const Subspace rep_graph = from_range(c, Mat::Identity(a.dims.m, a.dims.m));
    const Subspace rep_cod = from_range(c.transpose(), Mat::Identity(a.dims.n, a.dims.n));
    const bool graph_ok = gd && is_equal(rep_graph, *gd);
    const bool cod_ok = is_equal(rep_cod, *cod);
    if (!graph_ok || !cod_ok) v.note = "representation check failed";
    v.consistent = graph_ok && cod_ok;
  } else {
    const Vec p = null_vector(bm);
    const Vec ystar = am * p;
    v.singular_witness = Vec(ystar / ystar.norm());
    v.smsr = v.mr = v.smr = false;
    v.mr_witness = v.singular_witness;
    v.smsr_witness = ind.smsr_witness;
    v.smr_witness = ind.smr_witness;
    v.smr_via = ind.smr_via;
  }
  v.consistent = v.consistent && ind.smsr == v.smsr && ind.mr == v.mr && ind.smr == v.smr;
  if (!v.consistent && v.note.empty()) v.note = "independent kernel tests disagree";
  return v;
}

RegularityVerdict classify_under_strict_proto(const SetValuedMap& f, const GraphPoint& p) {
  return classify_under_strict_proto(analyze(f, p));
}

Json SumClassification::to_json() const {
  return {{"verdict", verdict.to_json()},
          {"criterion_graph", criterion_graph},
          {"criterion_coderivative", criterion_coderivative},
          {"direct", direct.to_json()},
          {"agrees", agrees}};
}

SumClassification classify_sum(const SmoothBranch& g, const MapPtr& big_g, const GraphPoint& p) {
  const SplitDims dims = big_g->dims();
  const GraphPoint pg{p.x, p.y - g.value(p.x)};
  const MapAnalysis ag = analyze(*big_g, pg);
  const auto ds = is_subspace(ag.derivatives.strict);
  const auto dc = is_subspace(ag.derivatives.coderivative);
  if (!check_strict_proto(ag).is_true() || !ds || ds->dim() != dims.m || !dc)
    throw DomainError("classify_sum: G is not strictly proto-differentiable with a graph of dimension m");
  const Mat jg = g.jacobian(p.x);

  SumClassification out;
  const Mat a = ds->basis().topRows(dims.n);
  const Mat b = ds->basis().bottomRows(dims.m);
  const Mat mg = jg * a + b;
  const double scale = std::max(1.0, jg.norm());
  out.criterion_graph = nonsingular(mg, scale);
  const Mat at = dc->basis().topRows(dims.m);
  const Mat bt = dc->basis().bottomRows(dims.n);
  const Mat mc = jg.transpose() * at + bt;
  out.criterion_coderivative = nonsingular(mc, scale);

  RegularityVerdict& v = out.verdict;
  v.equivalence_applicable = true;
  v.smsr = v.mr = v.smr = out.criterion_graph;
  if (!out.criterion_graph) {
    const Vec q = null_vector(mg);
    const Vec u = a * q;
    if (u.norm() > 0.0) v.smsr_witness = Vec(u / u.norm());
    v.singular_witness = q;
  }
  v.consistent = out.criterion_graph == out.criterion_coderivative;

  const MapPtr f = make_map(dims, SumGE{g, big_g});
  out.direct = classify_under_strict_proto(*f, p);
  out.agrees = v.consistent && out.direct.equivalence_applicable && out.direct.consistent &&
               out.direct.smsr == v.smsr && out.direct.mr == v.mr && out.direct.smr == v.smr;
  return out;
}

}  // namespace varlab
