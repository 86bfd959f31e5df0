#pragma once

#include "varlab/cone_engine.hpp"
#include "varlab/derivative_calc.hpp"
#include "varlab/graph_models.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace varlab {

using Json = nlohmann::json;

struct CriterionResult {
  std::string label;
  std::optional<bool> value;  // nullopt: not applicable
  Json evidence;
  bool informational = false;  // reported, excluded from consensus
};

enum class Consensus { True, False, Inconsistent, Undetermined };
std::string to_string(Consensus c);

struct DiagnosticVerdict {
  std::vector<CriterionResult> criteria;
  Consensus consensus = Consensus::Undetermined;
  Json dims = Json::object();

  std::optional<bool> value(const std::string& label) const;
  bool is_true() const { return consensus == Consensus::True; }
  Json to_json() const;
};

// Fills `consensus` from the applicable, non-informational criteria.
void settle(DiagnosticVerdict& v);

// A linear coordinate change M on the local cone such that M K is the graph of a
// Lipschitz map over the first d coordinates.
struct ChartCertificate {
  int d = 0;
  Mat linear;
  std::string kind;
};
std::optional<ChartCertificate> certify_chart(const SetValuedMap& f, const GraphPoint& p);
// Exact test on a cone union (the local graph cone).
bool certifies_cone(const ConeUnion& k, const Mat& chart, int d);

struct SetAnalysis {
  ConeBundle cones;
  std::optional<int> chart_dim;
  int ambient = 0;
};

DiagnosticVerdict check_strictly_smooth(const SetAnalysis& a);
DiagnosticVerdict check_strictly_smooth(const SetValuedMap& omega, const GraphPoint& zbar);

struct MapAnalysis {
  SplitDims dims;
  ConeBundle cones;
  DerivativeBundle derivatives;
  std::optional<int> chart_dim;
};
MapAnalysis analyze(const SetValuedMap& f, const GraphPoint& p);

DiagnosticVerdict check_strict_proto(const MapAnalysis& a);
DiagnosticVerdict check_strict_proto(const SetValuedMap& f, const GraphPoint& p);

DiagnosticVerdict check_strict_diff_single(const SetValuedMap& f, const Vec& xbar);
DiagnosticVerdict check_frechet(const SetValuedMap& f, const Vec& xbar);

struct SemismoothConfig {
  double delta0 = 0.1;
  int shells = 8;
  int per_shell = 48;
  double threshold = 0.05;
};
DiagnosticVerdict check_semismooth_star(const SetValuedMap& f, const GraphPoint& p, std::uint64_t seed,
                                        const SemismoothConfig& cfg = {});

struct ExtractedChart {
  std::vector<int> permutation;  // row order of Q: free coordinates last
  Mat q;                         // permutation matrix
  Mat gradient;                  // A B^{-1}
  int d = 0;
  Vec zbar;
  std::shared_ptr<const SetValuedMap> omega;
  // f(v) for v in R^d near the reference free coordinates.
  Vec evaluate(const Vec& v) const;
  // The graph point Q^T (f(v), v).
  Vec lift(const Vec& v) const;
  Vec free_part(const Vec& z) const;
};
ExtractedChart extract_chart(const std::shared_ptr<const SetValuedMap>& omega, const GraphPoint& zbar, const Mat& z_basis);

struct SurveyResult {
  int count = 0;
  int strict_proto_true = 0;
  double fraction = 0.0;
  std::vector<std::pair<Vec, bool>> points;
};
SurveyResult ae_strict_proto_survey(const SetValuedMap& f, const GraphPoint& center, double radius, int count,
                                    std::uint64_t seed);

}  // namespace varlab
