#include "possdiag/scale.hpp"

#include <gtest/gtest.h>

using namespace possdiag;

TEST(Degree, RejectsValuesOutsideUnitInterval) {
  EXPECT_THROW(Degree(Rational(-1, 5)), ScaleError);
  EXPECT_THROW(Degree(Rational(6, 5)), ScaleError);
  EXPECT_NO_THROW(Degree(Rational(0)));
  EXPECT_NO_THROW(Degree(Rational(1)));
}

TEST(Degree, PrintsReducedFractions) {
  EXPECT_EQ(Degree(6, 10).to_string(), "3/5");
  EXPECT_EQ(Degree::one().to_string(), "1");
  EXPECT_EQ(Degree::zero().to_string(), "0");
  EXPECT_EQ(Degree(2, 4).numerator(), 1);
  EXPECT_EQ(Degree(2, 4).denominator(), 2);
}

TEST(Degree, Predicates) {
  EXPECT_TRUE(Degree::zero().is_zero());
  EXPECT_FALSE(Degree::zero().positive());
  EXPECT_TRUE(Degree::one().is_one());
  EXPECT_TRUE(Degree(1, 5).positive());
  EXPECT_FALSE(Degree(4, 5).is_one());
}

TEST(Degree, MinMaxComplement) {
  const Degree a(1, 5), b(3, 5);
  EXPECT_EQ(min_combine(a, b), a);
  EXPECT_EQ(max_combine(a, b), b);
  EXPECT_EQ(complement(a), Degree(4, 5));
  EXPECT_EQ(complement(Degree::zero()), Degree::one());
}

TEST(Degree, GodelImplication) {
  EXPECT_EQ(godel_implies(Degree(3, 5), Degree(4, 5)), Degree::one());
  EXPECT_EQ(godel_implies(Degree(3, 5), Degree(3, 5)), Degree::one());
  EXPECT_EQ(godel_implies(Degree::one(), Degree(3, 5)), Degree(3, 5));
  EXPECT_EQ(godel_implies(Degree(4, 5), Degree::zero()), Degree::zero());
  EXPECT_EQ(godel_implies(Degree::zero(), Degree::zero()), Degree::one());
}

TEST(Scale, DefaultScaleIsSymmetricAndOrdered) {
  const auto s = Scale::default_scale();
  ASSERT_EQ(s.levels().size(), 6u);
  EXPECT_EQ(s.levels().front().name, "certain");
  EXPECT_EQ(s.levels().back().name, "possible");
  for (std::size_t i = 1; i < s.levels().size(); ++i) EXPECT_LT(s.levels()[i].value, s.levels()[i - 1].value);
  for (const auto &l : s.levels()) EXPECT_TRUE(s.contains(complement(l.value)));
}

TEST(Scale, SortsLevelsGivenInAnyOrder) {
  const auto s = Scale::make({{"no", Degree::zero()}, {"yes", Degree::one()}, {"half", Degree(1, 2)}});
  EXPECT_EQ(s.levels()[0].name, "yes");
  EXPECT_EQ(s.levels()[1].name, "half");
  EXPECT_EQ(s.levels()[2].name, "no");
}

TEST(Scale, RejectsBrokenScales) {
  EXPECT_THROW(Scale::make({{"certain", Degree::one()}}), ScaleError);
  EXPECT_THROW(Scale::make({{"a", Degree(4, 5)}, {"b", Degree::zero()}}), ScaleError);
  EXPECT_THROW(Scale::make({{"a", Degree::one()}, {"b", Degree(1, 5)}}), ScaleError);
  EXPECT_THROW(Scale::make({{"a", Degree::one()}, {"b", Degree(1, 2)}, {"c", Degree(1, 2)}, {"d", Degree::zero()}}),
               ScaleError);
  EXPECT_THROW(Scale::make({{"a", Degree::one()}, {"A", Degree::zero()}}), ScaleError);
}

TEST(Scale, RejectsAsymmetricScale) {
  try {
    Scale::make({{"certain", Degree::one()}, {"almost_certain", Degree(4, 5)}, {"likely", Degree(3, 5)},
                 {"possible", Degree::zero()}});
    FAIL() << "expected ScaleError";
  } catch (const ScaleError &e) {
    EXPECT_NE(std::string(e.what()).find("not symmetric"), std::string::npos);
  }
}

TEST(Scale, LevelLookupNormalizesNames) {
  const auto s = Scale::default_scale();
  EXPECT_EQ(s.level_of("Almost certain"), Degree(4, 5));
  EXPECT_EQ(s.level_of("almost-certain"), Degree(4, 5));
  EXPECT_EQ(s.find("LIKELY"), Degree(3, 5));
  EXPECT_FALSE(s.find("probable").has_value());
  EXPECT_THROW(s.level_of("probable"), ScaleError);
}

TEST(Scale, AbsenceAliases) {
  const auto s = Scale::default_scale();
  EXPECT_EQ(s.find_absence("impossible"), Degree::one());
  EXPECT_EQ(s.find_absence("almost impossible"), Degree(4, 5));
  EXPECT_EQ(s.find_absence("unlikely"), Degree(3, 5));
  EXPECT_EQ(s.find_absence("certain"), Degree::one());
  EXPECT_FALSE(s.find("impossible").has_value());
}

TEST(Scale, NameOfValue) {
  const auto s = Scale::default_scale();
  EXPECT_EQ(s.name_of(Degree(2, 5)), "doubtful");
  EXPECT_THROW(s.name_of(Degree(1, 3)), ScaleError);
  EXPECT_TRUE(s.contains(Degree(1, 5)));
  EXPECT_FALSE(s.contains(Degree(1, 2)));
}
