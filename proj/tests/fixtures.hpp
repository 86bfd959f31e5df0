#pragma once

// Small maps built directly in code, so module tests do not go through the corpus loader.

#include "varlab/corpus.hpp"
#include "varlab/graph_models.hpp"
#include "varlab/prox_lab.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace fx {

using namespace varlab;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Mat mat(int r, int c, std::initializer_list<double> xs) {
  Mat m(r, c);
  auto it = xs.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

// Columns spanning rge(I, J).
inline Mat vstack_identity(const Mat& j) {
  Mat z(j.cols() + j.rows(), j.cols());
  z << Mat::Identity(j.cols(), j.cols()), j;
  return z;
}

inline GraphPoint pt(std::initializer_list<double> x, std::initializer_list<double> y) { return {vec(x), vec(y)}; }

inline Mat none(int cols) { return Mat(0, cols); }

inline ConvexPolyhedron poly(int k, const Mat& c, const Vec& d, const Mat& e, const Vec& f) {
  return ConvexPolyhedron(k, c, d, e, f);
}

// |x| as two PL cells.
inline MapPtr abs_pl() {
  PLSingle f;
  f.cells.push_back({poly(1, mat(1, 1, {-1}), vec({0}), none(1), Vec(0)), mat(1, 1, {1}), vec({0})});
  f.cells.push_back({poly(1, mat(1, 1, {1}), vec({0}), none(1), Vec(0)), mat(1, 1, {-1}), vec({0})});
  return make_map({1, 1}, f);
}

// max(x, 2x).
inline MapPtr max_pl() {
  PLSingle f;
  f.cells.push_back({poly(1, mat(1, 1, {1}), vec({0}), none(1), Vec(0)), mat(1, 1, {1}), vec({0})});
  f.cells.push_back({poly(1, mat(1, 1, {-1}), vec({0}), none(1), Vec(0)), mat(1, 1, {2}), vec({0})});
  return make_map({1, 1}, f);
}

// x -> A x on all of R^n.
inline MapPtr linear_pl(const Mat& a) {
  const int n = static_cast<int>(a.cols());
  PLSingle f;
  f.cells.push_back({ConvexPolyhedron::whole(n), a, Vec::Zero(a.rows())});
  return make_map({n, static_cast<int>(a.rows())}, f);
}

// gph of the subdifferential of |x|: (-inf,0]x{-1}, {0}x[-1,1], [0,inf)x{1}.
inline std::vector<ConvexPolyhedron> abs_subdiff_pieces() {
  return {poly(2, mat(1, 2, {1, 0}), vec({0}), mat(1, 2, {0, 1}), vec({-1})),
          poly(2, mat(2, 2, {0, 1, 0, -1}), vec({1, 1}), mat(1, 2, {1, 0}), vec({0})),
          poly(2, mat(1, 2, {-1, 0}), vec({0}), mat(1, 2, {0, 1}), vec({1}))};
}
inline MapPtr abs_subdiff() { return make_map({1, 1}, PolyUnion{abs_subdiff_pieces()}); }

// Normal cone map of [0, inf): ({0} x (-inf,0]) u ((0,inf) x {0}).
inline MapPtr normal_cone_halfline() {
  return make_map({1, 1}, PolyUnion{{poly(2, mat(1, 2, {0, 1}), vec({0}), mat(1, 2, {1, 0}), vec({0})),
                                     poly(2, mat(1, 2, {-1, 0}), vec({0}), mat(1, 2, {0, 1}), vec({0}))}});
}

// The line span{(a, b)} as a map R -> R (b/a slope) given as a polyhedral graph.
inline MapPtr line_graph(double a, double b) {
  return make_map({1, 1}, PolyUnion{{poly(2, none(2), Vec(0), mat(1, 2, {b, -a}), vec({0}))}});
}

inline MapPtr smooth(const std::vector<std::vector<std::string>>& branches, int n, int m) {
  Smooth s;
  for (const auto& b : branches) s.branches.push_back(smooth_from_expressions(b, n));
  return make_map({n, m}, s);
}

inline FunctionPtr prox_fn(std::vector<ProxPrimitive> coords, const Vec& xbar, const Vec& xstar, double eps = 0.5,
                          bool closed = true) {
  return std::make_shared<ProxRegularFunction>(
      separable_function("fixture", std::move(coords), xbar, xstar, eps, closed));
}

inline const CorpusInstance& builtin(const std::string& id) {
  static const std::vector<CorpusInstance> corpus = load_corpus("builtin");
  for (const auto& inst : corpus)
    if (inst.id == id) return inst;
  throw std::out_of_range("no builtin instance " + id);
}

inline const std::vector<CorpusInstance>& builtin_all() {
  static const std::vector<CorpusInstance> corpus = load_corpus("builtin");
  return corpus;
}

}  // namespace fx
