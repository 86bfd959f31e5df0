#pragma once

#include "varlab/derivative_calc.hpp"
#include "varlab/diagnostics.hpp"
#include "varlab/graph_models.hpp"

#include <optional>
#include <string>

namespace varlab {

struct KernelTest {
  bool holds = false;      // the kernel is trivial
  std::optional<Vec> witness;
  std::string via;  // which slice produced the witness
};

// (u, 0) in gph DF forces u = 0.
KernelTest levy_rockafellar(const DerivativeBundle& d);
// (y*, 0) in gph D*F forces y* = 0.
KernelTest mordukhovich(const DerivativeBundle& d);
// (u, 0) in gph D_*F forcing u = 0, plus Mordukhovich.
KernelTest strong_metric_regular(const DerivativeBundle& d);

KernelTest levy_rockafellar(const SetValuedMap& f, const GraphPoint& p);
KernelTest mordukhovich(const SetValuedMap& f, const GraphPoint& p);
KernelTest strong_metric_regular(const SetValuedMap& f, const GraphPoint& p);

struct RegularityVerdict {
  bool smsr = false;
  std::optional<Vec> smsr_witness;
  bool mr = false;
  std::optional<Vec> mr_witness;
  bool smr = false;
  std::optional<Vec> smr_witness;
  std::string smr_via;
  bool equivalence_applicable = false;
  std::optional<Mat> representation;  // C with gph DF = rge(C, I_m)
  std::optional<Vec> singular_witness;
  bool consistent = true;  // cross-checks agree
  std::string note;
  Json to_json() const;
};

RegularityVerdict independent_tests(const DerivativeBundle& d);
RegularityVerdict classify_under_strict_proto(const MapAnalysis& a);
RegularityVerdict classify_under_strict_proto(const SetValuedMap& f, const GraphPoint& p);

struct SumClassification {
  RegularityVerdict verdict;
  bool criterion_graph = false;        // nonsingular Jg A + B
  bool criterion_coderivative = false; // nonsingular Jg^T A~ + B~
  RegularityVerdict direct;            // classification of the assembled sum graph
  bool agrees = false;
  Json to_json() const;
};
SumClassification classify_sum(const SmoothBranch& g, const MapPtr& big_g, const GraphPoint& p);

}  // namespace varlab
