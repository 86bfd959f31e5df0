#include "fixtures.hpp"
#include "varlab/regularity.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace varlab;
using fx::mat;
using fx::pt;
using fx::vec;

TEST(LevyRockafellar, Examples) {
  EXPECT_TRUE(levy_rockafellar(*fx::linear_pl(mat(1, 1, {2})), pt({0}, {0})).holds);
  const auto cubic = levy_rockafellar(*fx::smooth({{"x^3"}}, 1, 1), pt({0}, {0}));
  EXPECT_FALSE(cubic.holds);
  ASSERT_TRUE(cubic.witness.has_value());
  EXPECT_NEAR(std::abs((*cubic.witness)(0)), 1.0, 1e-12);
  EXPECT_TRUE(levy_rockafellar(*fx::abs_subdiff(), pt({0}, {0})).holds);
}

TEST(Mordukhovich, Examples) {
  const auto zero = mordukhovich(*fx::linear_pl(mat(1, 1, {0})), pt({0}, {0}));
  EXPECT_FALSE(zero.holds);
  ASSERT_TRUE(zero.witness.has_value());
  EXPECT_NEAR(std::abs((*zero.witness)(0)), 1.0, 1e-12);
  EXPECT_TRUE(mordukhovich(*fx::linear_pl(mat(1, 1, {2})), pt({0}, {0})).holds);
  EXPECT_TRUE(mordukhovich(*fx::abs_subdiff(), pt({0}, {0})).holds);
}

TEST(StrongMetricRegular, Examples) {
  EXPECT_TRUE(strong_metric_regular(*fx::abs_subdiff(), pt({0}, {0})).holds);
  EXPECT_TRUE(strong_metric_regular(*fx::linear_pl(mat(1, 1, {2})), pt({0}, {0})).holds);

  const auto& cp = fx::builtin("pm_square").points.front();
  const DerivativeBundle d = package_derivatives({1, 1}, cp.analytic->cones, cp.analytic->sc);
  const auto k = strong_metric_regular(d);
  EXPECT_FALSE(k.holds);
  EXPECT_EQ(k.via, "strict");
  ASSERT_TRUE(k.witness.has_value());
  EXPECT_TRUE(member(d.strict, fx::vec({(*k.witness)(0), 0.0})));
}

TEST(Classify, SubdifferentialAtOrigin) {
  const auto v = classify_under_strict_proto(*fx::abs_subdiff(), pt({0}, {0}));
  EXPECT_TRUE(v.equivalence_applicable);
  EXPECT_TRUE(v.smsr && v.mr && v.smr);
  ASSERT_TRUE(v.representation.has_value());
  EXPECT_LT(v.representation->norm(), 1e-12);
  EXPECT_TRUE(v.consistent);
}

TEST(Classify, LinearMapHasInverseSlope) {
  const auto v = classify_under_strict_proto(*fx::linear_pl(mat(1, 1, {2})), pt({0}, {0}));
  EXPECT_TRUE(v.equivalence_applicable);
  EXPECT_TRUE(v.smsr && v.mr && v.smr);
  ASSERT_TRUE(v.representation.has_value());
  EXPECT_NEAR((*v.representation)(0, 0), 0.5, 1e-12);
}

// C is the inverse Jacobian for a smooth map with invertible derivative; oracle is a hand 2x2 inverse.
TEST(Classify, SmoothMapRepresentationIsInverseJacobian) {
  const auto f = fx::smooth({{"x1^2 - x2", "x1*x2"}}, 2, 2);
  const auto v = classify_under_strict_proto(*f, pt({1, 1}, {0, 1}));
  ASSERT_TRUE(v.representation.has_value());
  // J = [[2, -1], [1, 1]], det 3
  const Mat expected = fx::mat(2, 2, {1.0 / 3, 1.0 / 3, -1.0 / 3, 2.0 / 3});
  EXPECT_LT((*v.representation - expected).norm(), 1e-10);
  EXPECT_TRUE(v.smr);

  const auto sing = classify_under_strict_proto(*f, pt({0, 0}, {0, 0}));
  EXPECT_TRUE(sing.equivalence_applicable);
  EXPECT_FALSE(sing.smsr || sing.mr || sing.smr);
  EXPECT_TRUE(sing.singular_witness.has_value());
}

TEST(Classify, CornerGraphIsNotApplicable) {
  const auto v = classify_under_strict_proto(*fx::normal_cone_halfline(), pt({0}, {0}));
  EXPECT_FALSE(v.equivalence_applicable);
  EXPECT_TRUE(v.consistent);
}

TEST(Classify, HierarchyAndEquivalenceOnCorpus) {
  for (const auto& inst : fx::builtin_all()) {
    if (inst.is_prox) continue;
    for (const auto& cp : inst.points) {
      SCOPED_TRACE(inst.id);
      const RegularityVerdict v =
          cp.analytic ? independent_tests(package_derivatives(inst.map->dims(), cp.analytic->cones, cp.analytic->sc))
                      : classify_under_strict_proto(*inst.map, cp.p);
      if (v.smr) {
        EXPECT_TRUE(v.mr);
        EXPECT_TRUE(v.smsr);
      }
      if (v.equivalence_applicable) {
        EXPECT_EQ(v.smsr, v.mr);
        EXPECT_EQ(v.mr, v.smr);
      }
      EXPECT_TRUE(v.consistent) << v.note;
      if (v.representation) {
        const DerivativeBundle d = derivative_bundle(*inst.map, cp.p);
        const int m = inst.map->dims().m, n = inst.map->dims().n;
        const Mat& c = *v.representation;
        EXPECT_TRUE(same_set(d.graphical, ConeUnion::single(ConvexCone::from_subspace(from_range(c, Mat::Identity(m, m))))));
        EXPECT_TRUE(same_set(d.coderivative,
                             ConeUnion::single(ConvexCone::from_subspace(from_range(c.transpose(), Mat::Identity(n, n))))));
      }
    }
  }
}

TEST(ClassifySum, RegularPair) {
  const auto s = classify_sum(smooth_from_expressions({"x"}, 1), fx::abs_subdiff(), pt({0}, {0}));
  EXPECT_TRUE(s.criterion_graph);
  EXPECT_TRUE(s.criterion_coderivative);
  EXPECT_TRUE(s.verdict.smr);
  EXPECT_TRUE(s.agrees);
}

TEST(ClassifySum, SingularPair) {
  const auto s = classify_sum(smooth_from_expressions({"-x"}, 1), fx::linear_pl(mat(1, 1, {1})), pt({0}, {0}));
  EXPECT_FALSE(s.criterion_graph);
  EXPECT_FALSE(s.criterion_coderivative);
  EXPECT_FALSE(s.verdict.smsr || s.verdict.mr || s.verdict.smr);
  EXPECT_FALSE(s.direct.smsr || s.direct.mr || s.direct.smr);
  EXPECT_TRUE(s.agrees);
}

TEST(ClassifySum, ZeroGReducesToInnerClassification) {
  for (const auto& p : {pt({0}, {0}), pt({1}, {1})}) {
    const auto s = classify_sum(smooth_from_expressions({"0"}, 1), fx::abs_subdiff(), p);
    const auto inner = classify_under_strict_proto(*fx::abs_subdiff(), p);
    EXPECT_EQ(s.verdict.smr, inner.smr);
    EXPECT_TRUE(s.agrees);
  }
}

TEST(ClassifySum, RequiresStrictProtoInner) {
  EXPECT_THROW(classify_sum(smooth_from_expressions({"x"}, 1), fx::abs_subdiff(), pt({0}, {1})), DomainError);
}
