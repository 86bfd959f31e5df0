// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "varlab/corpus.hpp"
#include "varlab/harness.hpp"
#include "varlab/regularity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace varlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

int failures = 0;

void report(int id, const char* label, Outcome& o) {
  std::printf("criterion %2d %-34s %s  %s\n", id, label, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

Subspace random_subspace(std::mt19937_64& rng, int k) {
  std::uniform_int_distribution<int> dd(0, k);
  std::normal_distribution<double> g;
  const int d = dd(rng);
  Mat m(k, d);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = g(rng);
  return d == 0 ? Subspace::zero(k) : Subspace::span(m);
}

// Map points of the corpus, with prox instances entering through their localization.
struct Site {
  const CorpusInstance* inst;
  MapPtr map;
  GraphPoint p;
  const CorpusPoint* cp;  // null for prox instances
};

std::vector<Site> sites(const std::vector<CorpusInstance>& corpus) {
  std::vector<Site> out;
  for (const auto& inst : corpus) {
    if (inst.is_prox) {
      out.push_back({&inst, make_prox_subgrad(inst.function, inst.lambda),
                     {inst.function->xbar, inst.function->xbar_star}, nullptr});
    } else {
      for (const auto& cp : inst.points) out.push_back({&inst, inst.map, cp.p, &cp});
    }
  }
  return out;
}

MapAnalysis analysis_of(const Site& s) {
  if (s.cp && s.cp->analytic) {
    MapAnalysis a;
    a.dims = s.map->dims();
    a.cones = s.cp->analytic->cones;
    a.derivatives = package_derivatives(a.dims, a.cones, s.cp->analytic->sc);
    return a;
  }
  return analyze(*s.map, s.p);
}

std::string where(const Site& s) {
  std::ostringstream os;
  os << s.inst->id << " at (" << format_vec(s.p.x) << "; " << format_vec(s.p.y) << ")";
  return os.str();
}

double rad_to_deg(double r) { return r * 57.29577951308232; }

}  // namespace

int main() {
  const auto corpus = load_corpus("builtin");
  const auto all = sites(corpus);

  {  // 1
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> nm(1, 4);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const SplitDims dims{nm(rng), nm(rng)};
      const Subspace a = random_subspace(rng, dims.total()), b = random_subspace(rng, dims.total());
      const Subspace aa = adjoint(dims, a), bb = adjoint(dims, b);
      const double inv = distance(adjoint(dims.swapped(), aa), a);
      const double iso = a.dim() == b.dim() ? std::abs(distance(aa, bb) - distance(a, b)) : 0.0;
      worst = std::max({worst, inv, iso});
      o.require(inv <= 1e-8, "adjoint involution");
      o.require(iso <= 1e-8, "adjoint isometry");
      o.require(aa.dim() == dims.total() - a.dim(), "dimension law");
    }
    const double secs = seconds_since(t0);
    o.require(secs < 5.0, "runtime");
    o.detail << "worst deviation " << worst << ", " << secs << " s";
    report(1, "subspace laws", o);
  }

  {  // 2
    Outcome o;
    const auto t0 = Clock::now();
    int exact = 0, sampled = 0;
    double worst_deg = 0.0;
    for (const Site& s : all) {
      const MapAnalysis a = analysis_of(s);
      const ConeBundle& b = a.cones;
      const std::string w = where(s);
      o.require(includes(b.tangent, ConeUnion::single(b.clarke_tangent)), w + ": clarke in tangent");
      o.require(includes(b.paratingent, b.tangent), w + ": tangent in paratingent");
      o.require(same_cone(b.regular_normal, polar(b.tangent)), w + ": regular normal is polar of tangent");
      o.require(includes(b.limiting_normal, ConeUnion::single(b.regular_normal)), w + ": regular in limiting normal");
      o.require(same_set(b.paratingent, negated(b.paratingent)), w + ": paratingent symmetric");
      o.require(same_cone(b.clarke_tangent, polar(b.limiting_normal)), w + ": clarke is polar of limiting normal");
      ++exact;
      // sampled secants against the exact paratingent on planar graphs
      if (s.map->dims().total() == 2 && !(s.cp && s.cp->analytic)) {
        for (const Vec& d : estimate_paratingent(*s.map, s.p, 1e-2, 6, 32, instance_seed(0, s.inst->id)))
          worst_deg = std::max(worst_deg, rad_to_deg(angle_to(b.paratingent, d)));
        ++sampled;
      }
    }
    o.require(worst_deg < 2.0, "sampled paratingent within 2 degrees");
    const double secs = seconds_since(t0);
    o.require(secs < 30.0, "runtime");
    o.detail << exact << " bundles exact, " << sampled << " sampled (worst " << worst_deg << " deg), " << secs << " s";
    report(2, "cone invariants", o);
  }

  {  // 3
    Outcome o;
    const CorpusInstance* pm = nullptr;
    for (const auto& inst : corpus)
      if (inst.id == "pm_square") pm = &inst;
    o.require(pm != nullptr, "fixture present");
    if (pm) {
      const CorpusPoint& cp = pm->points.front();
      const auto dirs = estimate_paratingent(*pm->map, cp.p, 1e-2, 8, 256, instance_seed(0, pm->id));
      const double gap = max_angular_gap_deg(dirs);
      o.require(gap < 10.0, "angular gap");
      const ConeUnion horiz = ConeUnion::single(ConvexCone::from_subspace(Subspace::span(Mat::Identity(2, 1))));
      const ConeBundle& b = cp.analytic->cones;
      o.require(same_set(b.tangent, horiz), "T = R x {0}");
      o.require(same_set(ConeUnion::single(b.clarke_tangent), horiz), "clarke = R x {0}");
      const auto tp = is_subspace(b.paratingent);
      o.require(tp && tp->dim() == 2, "T^P = R^2");
      const DiagnosticVerdict v = check_strictly_smooth(SetAnalysis{b, std::nullopt, 2});
      o.require(v.consensus == Consensus::False, "strictly smooth false");
      o.require(v.value("subspace_polarity") == false, "polarity fails");
      o.detail << "gap " << gap << " deg over " << dirs.size() << " directions; consensus " << to_string(v.consensus);
    }
    report(3, "paratingent counterexample", o);
  }

  {  // 4
    Outcome o;
    int points = 0, positive = 0;
    std::set<std::string> ids;
    for (const Site& s : all) {
      const MapAnalysis a = analysis_of(s);
      const DiagnosticVerdict v = check_strict_proto(a);
      ++points;
      ids.insert(s.inst->id);
      o.require(v.consensus != Consensus::Inconsistent, where(s) + ": inconsistent battery");
      if (v.is_true() && a.chart_dim) {
        ++positive;
        const int d = *a.chart_dim;
        const auto ds = is_subspace(a.derivatives.strict), dc = is_subspace(a.derivatives.coderivative);
        o.require(ds && ds->dim() == d, where(s) + ": dim gph D_*F = d");
        o.require(dc && dc->dim() == a.dims.total() - d, where(s) + ": dim gph D*F = n + m - d");
      }
    }
    o.require(ids.size() >= 12, "at least 12 instances");
    o.require(points >= 30, "at least 30 points");
    o.detail << ids.size() << " instances, " << points << " points, " << positive << " consensus-true";
    report(4, "battery consistency", o);
  }

  {  // 5
    Outcome o;
    int smooth = 0, violations = 0;
    for (const Site& s : all) {
      if (s.cp && s.cp->analytic) continue;
      if (!check_strictly_smooth(*s.map, s.p).is_true()) continue;
      ++smooth;
      if (!check_semismooth_star(*s.map, s.p, instance_seed(0, s.inst->id)).is_true()) {
        ++violations;
        o.require(false, where(s));
      }
    }
    o.detail << smooth << " strictly smooth points, " << violations << " violations";
    report(5, "strictly smooth => semismooth*", o);
  }

  {  // 6
    Outcome o;
    int charts = 0;
    double res = 0.0, fd = 0.0;
    for (const Site& s : all) {
      if (!s.cp || s.cp->analytic) continue;
      const MapAnalysis a = analyze(*s.map, s.p);
      if (!check_strict_proto(a).is_true()) continue;
      const Mat basis = s.cp->tangent_basis ? *s.cp->tangent_basis : is_subspace(a.derivatives.strict)->basis();
      try {
        const ChartExtractionCheck c = verify_chart_extraction(s.map, s.p, basis, instance_seed(0, s.inst->id), 100);
        res = std::max(res, c.max_residual);
        fd = std::max(fd, c.fd_error);
        o.require(c.ok && c.queries == 100, where(s));
      } catch (const std::exception& e) {
        o.require(false, where(s) + ": " + e.what());
      }
      ++charts;
    }
    o.detail << charts << " charts, max residual " << res << ", max relative FD error " << fd;
    report(6, "chart extraction", o);
  }

  {  // 7
    Outcome o;
    int applicable = 0;
    for (const Site& s : all) {
      if (!s.cp) continue;
      RegularityVerdict v;
      if (s.cp->analytic) {
        v = independent_tests(analysis_of(s).derivatives);
      } else {
        v = classify_under_strict_proto(*s.map, s.p);
      }
      o.require(v.consistent, where(s) + ": " + v.note);
      if (v.equivalence_applicable) {
        ++applicable;
        o.require(v.smsr == v.mr && v.mr == v.smr, where(s) + ": equivalence");
      }
      if (s.inst->id == "abs_subdifferential" && s.p.x(0) == 0.0 && s.p.y(0) == 0.0) {
        o.require(v.smsr && v.mr && v.smr, "subdifferential at origin regular");
        o.require(v.representation && v.representation->norm() < 1e-12, "C = 0");
      }
      if (s.inst->id == "pm_square" && s.cp->analytic) {
        o.require(!v.smr && v.smr_via == "strict", "pm square fails via strict slice");
      }
    }
    o.detail << applicable << " points under the equivalence";
    report(7, "regularity equivalence", o);
  }

  {  // 8
    Outcome o;
    int pairs = 0, singular = 0;
    for (const auto& inst : corpus) {
      const auto* sum = inst.map ? inst.map->as<SumGE>() : nullptr;
      if (!sum) continue;
      for (const auto& cp : inst.points) {
        try {
          const SumClassification c = classify_sum(sum->g, sum->inner, cp.p);
          o.require(c.agrees, inst.id + ": disagreement");
          if (!c.criterion_graph) {
            ++singular;
            o.require(!c.verdict.smsr && !c.verdict.mr && !c.verdict.smr, inst.id + ": singular pair not all false");
            o.require(!c.direct.smsr && !c.direct.mr && !c.direct.smr, inst.id + ": direct classification");
          }
          ++pairs;
        } catch (const DomainError&) {
          // inner map not strictly proto-differentiable at this point
        }
      }
    }
    o.require(pairs > 0 && singular > 0, "regular and singular pairs present");
    o.detail << pairs << " classified points, " << singular << " singular";
    report(8, "sum rule", o);
  }

  {  // 9
    Outcome o;
    double rt = 0.0, mem = 0.0, fd = 0.0;
    int fixtures = 0;
    for (const auto& inst : corpus) {
      if (!inst.is_prox) continue;
      const ProxIdentityCheck c = verify_prox_identities(inst, instance_seed(0, inst.id), 200);
      rt = std::max(rt, c.round_trip);
      mem = std::max(mem, c.membership);
      fd = std::max(fd, c.envelope_fd);
      o.require(c.samples == 200, inst.id + ": sample count");
      o.require(c.round_trip < 1e-9, inst.id + ": round trip");
      o.require(c.membership < 1e-9, inst.id + ": membership");
      o.require(c.envelope_fd <= 1e-5, inst.id + ": envelope gradient");
      ++fixtures;
    }
    o.detail << fixtures << " fixtures, round trip " << rt << ", membership " << mem << ", envelope FD " << fd;
    report(9, "prox identities", o);
  }

  {  // 10
    Outcome o;
    const auto t0 = Clock::now();
    int quadratic = 0;
    for (const auto& inst : corpus) {
      if (!inst.is_prox) continue;
      const auto& coords = inst.function->coordinates;
      const bool quad = std::all_of(coords.begin(), coords.end(), [](const ProxPrimitive& c) {
        return c.kind == ProxPrimitive::Kind::Quadratic || c.kind == ProxPrimitive::Kind::Zero;
      });
      const std::uint64_t seed = instance_seed(0, inst.id);
      if (quad) {
        ++quadratic;
        for (const DecayReport& r : {trapezoid_one_point(inst.function, inst.lambda, seed),
                                     trapezoid_two_point(inst.function, inst.lambda, seed)})
          for (double m : r.shell_max) o.require(m <= 1e-12, inst.id + ": quadratic shell maximum");
      }
      if (inst.id == "prox_abs_corner") {
        const DecayReport one = trapezoid_one_point(inst.function, inst.lambda, seed);
        const DecayReport two = trapezoid_two_point(inst.function, inst.lambda, seed, 8, 48, inst.witness_pairs);
        o.require(one.decaying && one.slope > 0.5, "corner one-point decay");
        o.require(!two.decaying, "corner two-point non-decay");
        o.require(!two.witness_values.empty(), "witness values");
        for (double w : two.witness_values) o.require(std::abs(w + 0.25) <= 1e-9, "witness value -1/4");
        o.require(!check_strict_proto_subgrad(inst.function, inst.lambda, seed).is_true(), "corner not strictly proto");
        o.detail << "corner slope " << one.slope << ", two-point last shell " << two.shell_max.back() << "; ";
      }
    }
    o.require(quadratic >= 1, "quadratic fixture present");
    const double secs = seconds_since(t0);
    o.require(secs < 60.0, "runtime");
    o.detail << quadratic << " quadratic fixtures, " << secs << " s";
    report(10, "trapezoidal rule", o);
  }

  {  // 11
    Outcome o;
    const std::string a = render(run("all", corpus, {0}), "json");
    const std::string b = render(run("all", corpus, {0}), "json");
    o.require(a == b, "byte-identical");
    o.detail << a.size() << " bytes";
    report(11, "determinism", o);
  }

  return failures == 0 ? 0 : 1;
}
