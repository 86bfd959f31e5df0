#pragma once

#include "varlab/corpus.hpp"
#include "varlab/diagnostics.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace varlab {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::uint64_t seed = 0;
  double tol_eq = kEqTol;  // numeric expectation tolerance
  bool timings = false;
};

struct Report {
  Json body;
  int mismatches = 0;
  int inconsistencies = 0;
  int errors = 0;
  int exit_code() const { return (mismatches + inconsistencies + errors) == 0 ? 0 : 1; }
};

const std::vector<std::string>& known_commands();

Report run(const std::string& command, const std::vector<CorpusInstance>& corpus, const RunConfig& cfg = {});

// "json" or "text".
std::string render(const Report& r, const std::string& format);

// Distance-like residual of z from the graph (0 on the graph).
double graph_residual(const SetValuedMap& f, const Vec& z);

std::uint64_t instance_seed(std::uint64_t seed, const std::string& id);

struct ChartExtractionCheck {
  double max_residual = 0.0;
  double fd_error = 0.0;
  int queries = 0;
  bool ok = false;
};
ChartExtractionCheck verify_chart_extraction(const MapPtr& f, const GraphPoint& p, const Mat& basis, std::uint64_t seed,
                                             int queries = 100);

struct ProxIdentityCheck {
  double round_trip = 0.0;   // max |P(x + lambda x*) - x| over graph samples
  double membership = 0.0;   // max graph residual of (P(u), grad e(u))
  double envelope_fd = 0.0;  // max relative finite-difference error of grad e
  int samples = 0;
};
ProxIdentityCheck verify_prox_identities(const CorpusInstance& inst, std::uint64_t seed, int samples = 200);

}  // namespace varlab
