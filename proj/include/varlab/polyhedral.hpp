#pragma once

#include "varlab/linalg.hpp"
#include "varlab/subspace.hpp"

#include <optional>
#include <random>
#include <vector>

namespace varlab {

// { z : C z <= d, E z = f }. Rows are stored normalized.
class ConvexPolyhedron {
 public:
  ConvexPolyhedron() = default;
  ConvexPolyhedron(int ambient, const Mat& c, const Vec& d, const Mat& e, const Vec& f);
  static ConvexPolyhedron whole(int ambient);

  int ambient_dim() const { return ambient_; }
  const Mat& ineq_lhs() const { return c_; }
  const Vec& ineq_rhs() const { return d_; }
  const Mat& eq_lhs() const { return e_; }
  const Vec& eq_rhs() const { return f_; }

  double violation(const Vec& z) const;
  bool contains(const Vec& z, double tol = kGraphTolExact) const;
  std::vector<int> active_rows(const Vec& z, double tol = 1e-9) const;

  // Image under z -> M z + t with M invertible.
  ConvexPolyhedron affine_image(const Mat& m, const Vec& t) const;
  // Extra constraints appended.
  ConvexPolyhedron with_equalities(const Mat& e, const Vec& f) const;
  ConvexPolyhedron with_inequalities(const Mat& c, const Vec& d) const;
  // Face obtained by turning the listed inequality rows into equalities.
  ConvexPolyhedron face(const std::vector<int>& rows) const;

 private:
  int ambient_ = 0;
  Mat c_, e_;
  Vec d_, f_;
};

// Nearest point of P to z (exact active-set enumeration); nothing if P is empty.
std::optional<Vec> project_onto(const ConvexPolyhedron& p, const Vec& z);

// Conic hull of rays plus a lineality space; kept in canonical form
// (orthonormal true lineality, unit extreme rays of the pointed part) together
// with an inequality description { A w <= 0, E w = 0 }.
class ConvexCone {
 public:
  ConvexCone() = default;
  static ConvexCone zero(int ambient);
  static ConvexCone whole(int ambient);
  static ConvexCone from_generators(const Mat& rays, const Mat& lineality);
  static ConvexCone from_rays(const Mat& rays) { return from_generators(rays, Mat(rays.rows(), 0)); }
  static ConvexCone from_halfspaces(const Mat& ineq, const Mat& eq, int ambient);
  static ConvexCone from_subspace(const Subspace& l);

  int ambient_dim() const { return ambient_; }
  const Mat& rays() const { return rays_; }
  const Mat& lineality() const { return lin_; }
  const Mat& ineq() const { return ineq_; }
  const Mat& eq() const { return eq_; }

  int dim() const;
  Subspace span() const;
  bool is_subspace() const { return rays_.cols() == 0; }
  bool is_zero() const { return rays_.cols() == 0 && lin_.cols() == 0; }

  // Generator route: distance to the cone via NNLS.
  double distance_to(const Vec& v) const;
  bool contains(const Vec& v, double tol = kConeTol) const;
  // Inequality route.
  bool satisfies(const Vec& v, double tol = kConeTol) const;
  Vec project(const Vec& v) const;
  Vec interior_point() const;
  ConvexCone negated() const;
  Mat generator_matrix() const;  // [rays, lin, -lin]

 private:
  int ambient_ = 0;
  Mat rays_, lin_, ineq_, eq_;
  friend ConvexCone make_cone(int, Mat, Mat, Mat, Mat);
};

ConvexCone linear_image(const Mat& m, const ConvexCone& c);
ConvexCone intersect(const ConvexCone& a, const ConvexCone& b);
ConvexCone polar(const ConvexCone& c);
ConvexCone minkowski_sum(const ConvexCone& a, const ConvexCone& b);
bool includes(const ConvexCone& outer, const ConvexCone& inner, double tol = kConeTol);
bool same_cone(const ConvexCone& a, const ConvexCone& b, double tol = kConeTol);

class ConeUnion {
 public:
  ConeUnion() = default;
  explicit ConeUnion(std::vector<ConvexCone> pieces);
  static ConeUnion single(const ConvexCone& c) { return ConeUnion({c}); }

  int ambient_dim() const { return ambient_; }
  const std::vector<ConvexCone>& pieces() const { return pieces_; }

 private:
  int ambient_ = 0;
  std::vector<ConvexCone> pieces_;
};

bool member(const ConeUnion& c, const Vec& v, double tol = kConeTol);
double distance_to(const ConeUnion& c, const Vec& v);
ConvexCone polar(const ConeUnion& c);
// Exact: returns the span V when the union equals V.
std::optional<Subspace> is_subspace(const ConeUnion& c);
// Exact test K subset of the union.
bool covers(const ConeUnion& u, const ConvexCone& k);
bool includes(const ConeUnion& outer, const ConeUnion& inner);
bool same_set(const ConeUnion& a, const ConeUnion& b);
ConeUnion intersect(const ConeUnion& a, const ConeUnion& b);
ConeUnion linear_image(const Mat& m, const ConeUnion& c);
ConeUnion negated(const ConeUnion& c);
// Drops pieces contained in another piece.
ConeUnion simplified(const ConeUnion& c);
// Union of all K_i - K_j.
ConeUnion difference_set(const ConeUnion& c);
ConvexCone convex_hull(const ConeUnion& c);
// The union as a single convex cone when it is convex.
std::optional<ConvexCone> as_convex(const ConeUnion& c);
Subspace span(const ConeUnion& c);
int dim(const ConeUnion& c);
// Angle in radians between a direction and the nearest point of the union.
double angle_to(const ConeUnion& c, const Vec& d);
// Largest angle from a generator of `a` to the union `b` (0 if a's generators all lie in b).
double max_generator_angle(const ConeUnion& a, const ConeUnion& b);

ConvexCone tangent_cone_convex(const ConvexPolyhedron& p, const Vec& zbar, double tol = 1e-9);

struct FaceSample {
  Vec point;
  ConvexCone tangent;
  std::vector<int> active;
  int dim = 0;
};
// Faces of P through zbar, each with a relative-interior point within radius of zbar.
std::vector<FaceSample> piece_faces_through(const ConvexPolyhedron& p, const Vec& zbar, double radius);

// Faces (closed, by active row set) of P that meet the ball B_radius(center).
struct PolyFace {
  ConvexPolyhedron face;
  std::vector<int> active;
  int dim = 0;
  Mat directions;  // orthonormal basis of the face's affine hull directions
  Vec anchor;      // a point of the face inside the ball
};
std::vector<PolyFace> faces_meeting_ball(const ConvexPolyhedron& p, const Vec& center, double radius);

// Uniform sample of the relative interior of a face intersected with a ball (rejection).
std::vector<Vec> sample_face_ball(const PolyFace& f, const Vec& center, double radius, int count,
                                  std::mt19937_64& rng);

// Open polyhedral cells { strict w < 0, eq w = 0 } with a witness point.
struct OpenCell {
  Mat strict;
  Mat eq;
  Vec point;
  ConvexCone closure;
};
enum CellSign : unsigned { kBelow = 1, kOn = 2, kAbove = 4 };
std::optional<OpenCell> realize_cell(int ambient, const Mat& strict, const Mat& eq);
std::vector<OpenCell> refine_cells(const std::vector<OpenCell>& cells, const Vec& h, unsigned allowed);

// All nonempty cells of the arrangement of `rows` inside { base_eq w = 0 },
// with per-row allowed sign sets; signs are -1, 0, +1.
struct SignedCell {
  OpenCell cell;
  std::vector<int> signs;
};
std::vector<SignedCell> enumerate_cells(int ambient, const Mat& base_eq, const Mat& rows,
                                        const std::vector<unsigned>& allowed);

}  // namespace varlab
