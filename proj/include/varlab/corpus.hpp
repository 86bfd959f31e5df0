#pragma once

#include "varlab/cone_engine.hpp"
#include "varlab/diagnostics.hpp"
#include "varlab/graph_models.hpp"
#include "varlab/prox_lab.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace varlab {

extern const std::string_view kBuiltinCorpus;

struct CorpusError : std::runtime_error {
  enum class Kind { Io, Parse, Validation };
  CorpusError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  Kind kind;
};

// Expected value of one check, with where the number came from
// (trivial, derived, published).
struct Expectation {
  Json value;
  std::string origin;
};
using Expectations = std::map<std::string, Expectation>;

// Hand-computed cones and SC family for points the exact engine cannot handle.
struct AnalyticData {
  ConeBundle cones;
  std::vector<Subspace> sc;
};

struct CorpusPoint {
  GraphPoint p;
  Expectations expect;
  std::optional<AnalyticData> analytic;
  std::optional<Mat> tangent_basis;
};

struct SurveySpec {
  std::size_t point = 0;
  double radius = 0.0;
  int count = 0;
  Expectations expect;
};

struct CorpusInstance {
  std::string id;
  std::string description;
  bool is_prox = false;

  MapPtr map;
  std::vector<CorpusPoint> points;
  std::optional<SurveySpec> survey;

  FunctionPtr function;
  double lambda = 0.0;
  std::vector<std::pair<Vec, Vec>> witness_pairs;  // (d1, d2) in R^{2n}
  Expectations expect;
};

// Known expectation keys for map points, prox instances and surveys.
const std::vector<std::string>& point_expectation_keys();
const std::vector<std::string>& prox_expectation_keys();
const std::vector<std::string>& survey_expectation_keys();

// "builtin" selects the embedded corpus.
std::vector<CorpusInstance> load_corpus(const std::string& path);
std::vector<CorpusInstance> parse_corpus(std::string_view text, const std::string& source = "<memory>");

// "3", "-1/2", "0.25" or a JSON number.
double parse_number(const Json& j);
// Cone union given as [{"rays": [[...]], "lineality": [[...]]}, ...]; vectors are listed one per entry.
ConeUnion parse_cone_union(const Json& j, int ambient);
ConvexCone parse_cone(const Json& j, int ambient);

}  // namespace varlab
