#include "varlab/corpus.hpp"

#include "varlab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace varlab {

namespace {

[[noreturn]] void invalid(const std::string& id, const std::string& what) {
  throw CorpusError(CorpusError::Kind::Validation, "instance '" + id + "': " + what);
}

Vec parse_vec(const Json& j, const std::string& id, const char* what) {
  if (!j.is_array()) invalid(id, std::string(what) + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_number(j[i]);
  return v;
}

// Row-major nested arrays; an empty list gives a 0 x cols matrix.
Mat parse_mat(const Json& j, Eigen::Index cols, const std::string& id, const char* what) {
  if (j.is_null()) return Mat(0, cols);
  if (!j.is_array()) invalid(id, std::string(what) + " must be an array of rows");
  Mat m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols)
      invalid(id, std::string(what) + " row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < j[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_number(j[r][c]);
  }
  return m;
}

Vec parse_rhs(const Json& j, Eigen::Index rows, const std::string& id, const char* what) {
  if (j.is_null() && rows == 0) return Vec(0);
  if (j.is_null()) return Vec::Zero(rows);
  Vec v = parse_vec(j, id, what);
  if (v.size() != rows) invalid(id, std::string(what) + " length does not match its matrix");
  return v;
}

ConvexPolyhedron parse_polyhedron(const Json& j, int ambient, const std::string& id) {
  const Mat c = parse_mat(j.value("ineq", Json()), ambient, id, "ineq");
  const Vec d = parse_rhs(j.value("ineq_rhs", Json()), c.rows(), id, "ineq_rhs");
  const Mat e = parse_mat(j.value("eq", Json()), ambient, id, "eq");
  const Vec f = parse_rhs(j.value("eq_rhs", Json()), e.rows(), id, "eq_rhs");
  return ConvexPolyhedron(ambient, c, d, e, f);
}

int parse_dim(const Json& j, const char* key, const std::string& id) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<int>() < 1)
    invalid(id, std::string("map needs a positive integer '") + key + "'");
  return j[key].get<int>();
}

std::vector<std::string> string_list(const Json& j, const std::string& id) {
  if (!j.is_array()) invalid(id, "expected a list of expressions");
  std::vector<std::string> out;
  for (const Json& s : j) {
    if (!s.is_string()) invalid(id, "expressions must be strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

SmoothBranch parse_branch(const Json& j, int n, int m, const std::string& id) {
  const auto comps = string_list(j, id);
  if (static_cast<int>(comps.size()) != m) invalid(id, "a branch needs one expression per output coordinate");
  try {
    return smooth_from_expressions(comps, n);
  } catch (const ParseError& e) {
    invalid(id, std::string("expression: ") + e.what());
  }
}

MapPtr parse_map(const Json& j, const std::string& id) {
  if (!j.is_object()) invalid(id, "map must be an object");
  const std::string variant = j.value("variant", "");
  const int n = parse_dim(j, "n", id);
  const int m = parse_dim(j, "m", id);
  const SplitDims dims{n, m};
  if (variant == "poly_union") {
    PolyUnion u;
    for (const Json& p : j.at("pieces")) u.pieces.push_back(parse_polyhedron(p, n + m, id));
    if (u.pieces.empty()) invalid(id, "poly_union needs at least one piece");
    return make_map(dims, std::move(u));
  }
  if (variant == "pl_single") {
    PLSingle pl;
    for (const Json& c : j.at("cells")) {
      PLCell cell{parse_polyhedron(c, n, id), parse_mat(c.at("A"), n, id, "A"), parse_vec(c.at("b"), id, "b")};
      if (cell.a.rows() != m || cell.b.size() != m) invalid(id, "cell affine part must map R^n to R^m");
      pl.cells.push_back(std::move(cell));
    }
    if (pl.cells.empty()) invalid(id, "pl_single needs at least one cell");
    if (auto bad = pl_continuity_violation(pl, n)) invalid(id, "discontinuous: " + *bad);
    return make_map(dims, std::move(pl));
  }
  if (variant == "smooth") {
    Smooth s;
    for (const Json& b : j.at("branches")) s.branches.push_back(parse_branch(b, n, m, id));
    if (s.branches.empty()) invalid(id, "smooth needs at least one branch");
    return make_map(dims, std::move(s));
  }
  if (variant == "charted") {
    const Json& c = j.at("chart");
    const int k = n + m;
    const Mat lin = parse_mat(c.at("matrix"), k, id, "chart matrix");
    if (lin.rows() != k) invalid(id, "chart matrix must be square of size n+m");
    const Vec off = c.contains("offset") ? parse_vec(c["offset"], id, "chart offset") : Vec::Zero(k);
    const MapPtr inner = parse_map(j.at("inner"), id);
    if (inner->dims().total() != k) invalid(id, "inner map of a chart must live in R^(n+m)");
    if (!nonsingular(lin)) invalid(id, "chart matrix is singular");
    Charted ch{Chart::linear_map(lin, off, inner->dims().n), inner, parse_vec(j.at("center"), id, "center"),
               parse_number(j.at("radius"))};
    if (ch.center.size() != k) invalid(id, "chart center has the wrong length");
    return make_map(dims, std::move(ch));
  }
  if (variant == "sum") {
    const MapPtr inner = parse_map(j.at("inner"), id);
    if (!(inner->dims() == dims)) invalid(id, "sum: inner map must have the same n and m");
    return make_map(dims, SumGE{parse_branch(j.at("g"), n, m, id), inner});
  }
  invalid(id, "unknown map variant '" + variant + "'");
}

ProxPrimitive parse_primitive(const Json& j, const std::string& id) {
  static const std::map<std::string, ProxPrimitive::Kind> kinds = {{"abs", ProxPrimitive::Kind::Abs},
                                                                   {"quadratic", ProxPrimitive::Kind::Quadratic},
                                                                   {"zero", ProxPrimitive::Kind::Zero},
                                                                   {"nonneg_indicator", ProxPrimitive::Kind::NonnegIndicator},
                                                                   {"step", ProxPrimitive::Kind::Step}};
  const auto it = kinds.find(j.value("kind", ""));
  if (it == kinds.end()) invalid(id, "unknown coordinate kind '" + j.value("kind", "") + "'");
  ProxPrimitive p;
  p.kind = it->second;
  if (j.contains("param")) p.param = parse_number(j["param"]);
  return p;
}

Expectations parse_expectations(const Json& j, const std::vector<std::string>& allowed, const std::string& id) {
  Expectations out;
  if (j.is_null()) return out;
  if (!j.is_object()) invalid(id, "expect must be an object");
  static const std::vector<std::string> origins = {"trivial", "derived", "published"};
  for (const auto& [key, e] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) invalid(id, "unknown expectation '" + key + "'");
    if (!e.is_object() || !e.contains("value") || !e.contains("origin"))
      invalid(id, "expectation '" + key + "' needs value and origin");
    const std::string origin = e["origin"].is_string() ? e["origin"].get<std::string>() : "";
    if (std::find(origins.begin(), origins.end(), origin) == origins.end())
      invalid(id, "expectation '" + key + "' has unknown origin '" + origin + "'");
    out[key] = {e["value"], origin};
  }
  return out;
}

std::vector<Subspace> parse_family(const Json& j, int ambient, const std::string& id) {
  std::vector<Subspace> out;
  if (j.is_null()) return out;
  for (const Json& basis : j) {
    const Mat cols = parse_mat(basis, ambient, id, "subspace basis").transpose();
    out.push_back(Subspace::span(cols));
  }
  return out;
}

AnalyticData parse_analytic(const Json& j, int ambient, const std::string& id) {
  AnalyticData a;
  try {
    a.cones.tangent = parse_cone_union(j.at("tangent"), ambient);
    a.cones.clarke_tangent = parse_cone(j.at("clarke"), ambient);
    a.cones.paratingent = parse_cone_union(j.at("paratingent"), ambient);
    a.cones.regular_normal = parse_cone(j.at("regular_normal"), ambient);
    a.cones.limiting_normal = parse_cone_union(j.at("limiting_normal"), ambient);
  } catch (const Json::exception& e) {
    invalid(id, std::string("analytic bundle: ") + e.what());
  }
  a.sc = parse_family(j.value("sc", Json()), ambient, id);
  return a;
}

CorpusPoint parse_point(const Json& j, const SetValuedMap& f, const std::string& id, std::size_t index) {
  const SplitDims dims = f.dims();
  CorpusPoint cp;
  cp.p.x = parse_vec(j.at("x"), id, "x");
  cp.p.y = parse_vec(j.at("y"), id, "y");
  const std::string where = "point " + std::to_string(index);
  if (cp.p.x.size() != dims.n || cp.p.y.size() != dims.m) invalid(id, where + " has the wrong dimensions");
  if (!contains(f, cp.p)) invalid(id, where + " is not on the graph");
  cp.expect = parse_expectations(j.value("expect", Json()), point_expectation_keys(), id);
  if (j.contains("analytic")) cp.analytic = parse_analytic(j["analytic"], dims.total(), id);
  if (j.contains("tangent_basis")) {
    cp.tangent_basis = parse_mat(j["tangent_basis"], dims.total(), id, "tangent_basis").transpose();
  }
  return cp;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

CorpusInstance parse_instance(const Json& j, std::size_t index) {
  CorpusInstance inst;
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
    throw CorpusError(CorpusError::Kind::Validation, "instance #" + std::to_string(index) + ": missing string 'id'");
  inst.id = j["id"].get<std::string>();
  const std::string& id = inst.id;
  inst.description = j.value("description", "");
  try {
    if (j.contains("function")) {
      inst.is_prox = true;
      const Json& fj = j["function"];
      std::vector<ProxPrimitive> coords;
      for (const Json& c : fj.at("coordinates")) coords.push_back(parse_primitive(c, id));
      const Vec xbar = parse_vec(fj.at("xbar"), id, "xbar");
      const Vec xbar_star = parse_vec(fj.at("xbar_star"), id, "xbar_star");
      ProxRegularFunction phi;
      try {
        phi = separable_function(id, coords, xbar, xbar_star, parse_number(fj.at("eps")), fj.value("closed_form", true));
      } catch (const std::invalid_argument& e) {
        invalid(id, e.what());
      }
      inst.lambda = j.contains("lambda") ? parse_number(j["lambda"]) : default_lambda(phi.r);
      if (!(inst.lambda > 0.0) || inst.lambda * phi.r >= 1.0) invalid(id, "lambda must lie in (0, 1/r)");
      const double worst = prox_regularity_violation(phi, inst.lambda, 0);
      if (worst > 1e-9) invalid(id, "prox-regularity inequality violated by " + std::to_string(worst));
      inst.function = std::make_shared<const ProxRegularFunction>(std::move(phi));
      for (const Json& w : j.value("witness_pairs", Json::array())) {
        Vec a = parse_vec(w.at(0), id, "witness"), b = parse_vec(w.at(1), id, "witness");
        if (a.size() != 2 * inst.function->n || b.size() != 2 * inst.function->n)
          invalid(id, "witness directions live in R^(2n)");
        inst.witness_pairs.emplace_back(std::move(a), std::move(b));
      }
      inst.expect = parse_expectations(j.value("expect", Json()), prox_expectation_keys(), id);
      return inst;
    }
    inst.map = parse_map(j.at("map"), id);
    const Json& pts = j.at("points");
    for (std::size_t i = 0; i < pts.size(); ++i) inst.points.push_back(parse_point(pts[i], *inst.map, id, i));
    if (inst.points.empty()) invalid(id, "needs at least one reference point");
    if (j.contains("survey")) {
      const Json& s = j["survey"];
      SurveySpec sv;
      sv.point = s.value("point", 0u);
      sv.radius = parse_number(s.at("radius"));
      sv.count = s.value("count", 64);
      if (sv.point >= inst.points.size()) invalid(id, "survey point index out of range");
      if (!(sv.radius > 0.0) || sv.count < 1) invalid(id, "survey needs a positive radius and count");
      sv.expect = parse_expectations(s.value("expect", Json()), survey_expectation_keys(), id);
      inst.survey = std::move(sv);
    }
  } catch (const Json::exception& e) {
    invalid(id, e.what());
  } catch (const DimensionError& e) {
    invalid(id, e.what());
  } catch (const CorpusError& e) {
    if (std::string_view(e.what()).starts_with("instance '")) throw;
    invalid(id, e.what());
  }
  return inst;
}

}  // namespace

const std::vector<std::string>& point_expectation_keys() {
  static const std::vector<std::string> keys = {
      "strict_proto", "strictly_smooth", "semismooth_star", "strict_diff", "frechet",     "chart_dim",
      "dim_strict",   "dim_coderivative", "sc_count",       "b_jacobian",  "smsr",        "mr",
      "smr",          "C",                "sum_regular",    "tangent",     "limiting_normal"};
  return keys;
}

const std::vector<std::string>& prox_expectation_keys() {
  static const std::vector<std::string> keys = {"strict_proto",         "semismooth_star",     "strict_proto_subgrad",
                                                "one_point_decaying",   "two_point_decaying",  "one_point_exact_zero",
                                                "two_point_exact_zero", "two_point_witness",   "localization_pieces"};
  return keys;
}

const std::vector<std::string>& survey_expectation_keys() {
  static const std::vector<std::string> keys = {"fraction"};
  return keys;
}

double parse_number(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw CorpusError(CorpusError::Kind::Validation, "expected a number, got " + j.dump());
  const std::string s = j.get<std::string>();
  const auto slash = s.find('/');
  auto to_double = [&](std::string_view t) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
      throw CorpusError(CorpusError::Kind::Validation, "malformed number '" + s + "'");
    return v;
  };
  if (slash == std::string::npos) return to_double(s);
  const double den = to_double(std::string_view(s).substr(slash + 1));
  if (den == 0.0) throw CorpusError(CorpusError::Kind::Validation, "zero denominator in '" + s + "'");
  return to_double(std::string_view(s).substr(0, slash)) / den;
}

ConvexCone parse_cone(const Json& j, int ambient) {
  auto cols = [&](const char* key) {
    const Json v = j.value(key, Json::array());
    Mat m(ambient, static_cast<Eigen::Index>(v.size()));
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (static_cast<int>(v[c].size()) != ambient)
        throw CorpusError(CorpusError::Kind::Validation, "cone generator has the wrong length");
      for (int r = 0; r < ambient; ++r) m(r, static_cast<Eigen::Index>(c)) = parse_number(v[c][static_cast<std::size_t>(r)]);
    }
    return m;
  };
  return ConvexCone::from_generators(cols("rays"), cols("lineality"));
}

ConeUnion parse_cone_union(const Json& j, int ambient) {
  std::vector<ConvexCone> pieces;
  if (j.is_object()) return ConeUnion::single(parse_cone(j, ambient));
  for (const Json& p : j) pieces.push_back(parse_cone(p, ambient));
  if (pieces.empty()) pieces.push_back(ConvexCone::zero(ambient));
  return ConeUnion(std::move(pieces));
}

std::vector<CorpusInstance> parse_corpus(std::string_view text, const std::string& source) {
  if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; })) return {};
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::ostringstream msg;
    msg << source << ":" << line << ":" << col << ": parse error: " << e.what();
    throw CorpusError(CorpusError::Kind::Parse, msg.str());
  }
  if (!doc.is_object() || !doc.contains("instances") || !doc["instances"].is_array())
    throw CorpusError(CorpusError::Kind::Validation, source + ": top level must be an object with an 'instances' array");
  std::vector<CorpusInstance> out;
  for (std::size_t i = 0; i < doc["instances"].size(); ++i) {
    out.push_back(parse_instance(doc["instances"][i], i));
    for (std::size_t k = 0; k + 1 < out.size(); ++k)
      if (out[k].id == out.back().id) invalid(out.back().id, "duplicate id");
  }
  return out;
}

std::vector<CorpusInstance> load_corpus(const std::string& path) {
  if (path == "builtin") return parse_corpus(kBuiltinCorpus, "builtin");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusError::Kind::Io, "cannot open corpus file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), path);
}

}  // namespace varlab
