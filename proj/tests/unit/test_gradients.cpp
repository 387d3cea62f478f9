#include <gtest/gtest.h>

#include "gradient_suite.hpp"

namespace {

class GradientCheck : public ::testing::TestWithParam<jdsr::testing::GradientCase> {};

TEST_P(GradientCheck, AnalyticMatchesFiniteDifference) {
  const auto& c = GetParam();
  const double err = c.run();
  EXPECT_LT(err, c.tolerance()) << c.name;
}

std::string case_name(const ::testing::TestParamInfo<jdsr::testing::GradientCase>& info) {
  std::string s;
  for (char ch : info.param.name) s += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return s;
}

INSTANTIATE_TEST_SUITE_P(All, GradientCheck, ::testing::ValuesIn(jdsr::testing::gradient_cases()),
                         case_name);

}  // namespace
