#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cornerpml/config.hpp"
#include "cornerpml/error.hpp"

namespace {

using namespace cpml;
constexpr double kPi = std::numbers::pi;

TEST(Config, PresetFillsTriangleAndKeysOverride) {
  const RunConfig c = parse_config(
      "[geometry]\npreset = paper-triangle\n"
      "[material]\nomega = 11\n"
      "[discretization]\nh = 0.02\n"
      "[run]\nalpha_inc = -pi/12\n");
  EXPECT_EQ(c.geometry.preset, "paper-triangle");
  EXPECT_EQ(c.geometry.polygon.size(), 3u);
  EXPECT_EQ(c.geometry.corner_labels, (std::vector<std::string>{"top", "left", "right"}));
  EXPECT_DOUBLE_EQ(c.material.omega, 11.0);
  ASSERT_TRUE(c.material.drude);
  EXPECT_DOUBLE_EQ(c.material.drude->omega_p, 13.3);
  EXPECT_DOUBLE_EQ(c.discretization.h, 0.02);
  ASSERT_EQ(c.alpha_inc.size(), 1u);
  EXPECT_DOUBLE_EQ(c.alpha_inc[0], -kPi / 12.0);
}

TEST(Config, ExplicitGeometryAndLists) {
  const RunConfig c = parse_config(
      "; comment\n[geometry]\nR = 1\npolygon = -0.1 -0.1, 0.1 -0.1, 0 0.2\ncorners = 2\nlabels = apex\nrho = 0.03\n"
      "[material]\nk0 = 5\neps_m = -3 0.1\n"
      "[pml]\ntheta = -2*pi/25\ntau1 = 1e-6\n"
      "[discretization]\nmirror = false\n"
      "[run]\nalpha_inc = 0, 90, 180\nalpha_unit = deg\nboundary = abc\nrefine = 2\ndual = yes\n");
  EXPECT_EQ(c.geometry.polygon.size(), 3u);
  EXPECT_DOUBLE_EQ(c.geometry.polygon[2].y, 0.2);
  EXPECT_EQ(c.geometry.corner_vertices, std::vector<int>{2});
  EXPECT_EQ(*c.material.k0_override, 5.0);
  EXPECT_EQ(*c.material.eps_m, cplx(-3.0, 0.1));
  ASSERT_EQ(c.pml.theta.size(), 1u);
  EXPECT_DOUBLE_EQ(*c.pml.theta[0], -2.0 * kPi / 25.0);
  EXPECT_DOUBLE_EQ(c.pml.tol.tau1, 1e-6);
  EXPECT_EQ(c.discretization.mirror, std::optional<bool>(false));
  ASSERT_EQ(c.alpha_inc.size(), 3u);
  EXPECT_DOUBLE_EQ(c.alpha_inc[1], kPi / 2.0);
  EXPECT_EQ(c.boundary, BoundaryMode::abc);
  EXPECT_EQ(c.refine, 2);
  EXPECT_TRUE(c.dual);
}

TEST(Config, SweepListIsUniform) {
  const RunConfig c = parse_config("[run]\nalpha_sweep = 24\n");
  ASSERT_EQ(c.alpha_inc.size(), 24u);
  for (int j = 0; j < 24; ++j) EXPECT_DOUBLE_EQ(c.alpha_inc[j], 2.0 * kPi * j / 24.0);
}

TEST(Config, PerCornerAutoTheta) {
  const RunConfig c = parse_config("[pml]\ntheta = auto -pi/20 auto\n");
  ASSERT_EQ(c.pml.theta.size(), 3u);
  EXPECT_FALSE(c.pml.theta[0]);
  EXPECT_DOUBLE_EQ(*c.pml.theta[1], -kPi / 20.0);
  EXPECT_FALSE(c.pml.theta[2]);
}

TEST(Config, RejectsUnknownSectionsKeysAndBadValues) {
  EXPECT_THROW(parse_config("[mesh]\nh = 1\n"), ParseError);
  EXPECT_THROW(parse_config("[material]\nomegaa = 9\n"), ParseError);
  EXPECT_THROW(parse_config("h = 1\n"), ParseError);
  EXPECT_THROW(parse_config("[discretization]\nh = fine\n"), ParseError);
  EXPECT_THROW(parse_config("[run]\nrefine = 1.5\n"), ParseError);
  EXPECT_THROW(parse_config("[run]\nboundary = pml\n"), ParseError);
  EXPECT_THROW(parse_config("[run]\nalpha_inc = 0\nalpha_sweep = 4\n"), ParseError);
  EXPECT_THROW(parse_config("[geometry]\npreset = square\n"), ParseError);
  EXPECT_THROW(parse_config("[geometry]\npolygon = 0 0, 1\n"), ParseError);
  EXPECT_THROW(parse_config("[material]\ngamma = 0.1\n"), ParseError);
}

TEST(Config, SyntaxErrorsCarryLineNumbers) {
  try {
    parse_config("[run]\nrefine = 1\nthis line has no equals sign\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(parse_config("[run]\nrefine = 1\nrefine = 2\n"), ParseError);
}

TEST(Config, FormatRoundTripsAndIsDeterministic) {
  RunConfig c = parse_config(
      "[geometry]\npreset = paper-triangle\n[material]\nomega = 9\n[pml]\ntheta = auto -0.2 auto\n"
      "[run]\nalpha_sweep = 5\ndual = true\n");
  const std::string text = format_config(c);
  EXPECT_EQ(text, format_config(c));
  const RunConfig d = parse_config(text);
  EXPECT_EQ(format_config(d), text);
  ASSERT_EQ(d.alpha_inc.size(), 5u);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(d.alpha_inc[j], c.alpha_inc[j]);
  EXPECT_EQ(d.geometry.polygon[0].x, c.geometry.polygon[0].x);
  EXPECT_EQ(*d.pml.theta[1], -0.2);
}

}  // namespace
