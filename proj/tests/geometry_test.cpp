#include "detfuse/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "detfuse/error.hpp"

namespace detfuse {
namespace {

TEST(BoxTest, RejectsInvertedAndNonFinite) {
  EXPECT_THROW(Box(2, 0, 1, 1), ContractError);
  EXPECT_THROW(Box(0, 2, 1, 1), ContractError);
  EXPECT_THROW(Box(0, 0, std::numeric_limits<double>::infinity(), 1), ContractError);
  EXPECT_THROW(Box(std::nan(""), 0, 1, 1), ContractError);
  EXPECT_NO_THROW(Box(5, 5, 5, 9));
}

TEST(BoxTest, Area) {
  EXPECT_EQ(area(Box(0, 0, 2, 2)), 4.0);
  EXPECT_EQ(area(Box(5, 5, 5, 9)), 0.0);
  EXPECT_EQ(area(Box(1.5, 0, 4.0, 2.0)), 5.0);
}

TEST(IouTest, Examples) {
  EXPECT_EQ(iou(Box(0, 0, 10, 10), Box(0, 0, 10, 10)), 1.0);
  EXPECT_EQ(iou(Box(0, 0, 1, 1), Box(5, 5, 6, 6)), 0.0);
  // inter 1, union 4 + 4 - 1
  EXPECT_DOUBLE_EQ(iou(Box(0, 0, 2, 2), Box(1, 1, 3, 3)), 1.0 / 7.0);
}

TEST(IouTest, EdgeContactIsZero) {
  EXPECT_EQ(iou(Box(0, 0, 1, 1), Box(1, 0, 2, 1)), 0.0);
  EXPECT_EQ(iou(Box(0, 0, 1, 1), Box(1, 1, 2, 2)), 0.0);
}

TEST(IouTest, DegenerateBoxesGiveZero) {
  EXPECT_EQ(iou(Box(1, 1, 1, 1), Box(1, 1, 1, 1)), 0.0);
  EXPECT_EQ(iou(Box(0, 0, 0, 5), Box(0, 0, 0, 5)), 0.0);
  EXPECT_EQ(iou(Box(0, 0, 0, 5), Box(0, 0, 4, 4)), 0.0);
}

class IouPropertyTest : public ::testing::Test {
 protected:
  Box random_box(double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    double a = u(rng_), b = u(rng_), c = u(rng_), d = u(rng_);
    return Box(std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d));
  }
  Box random_int_box(int lo, int hi) {
    std::uniform_int_distribution<int> u(lo, hi);
    int a = u(rng_), b = u(rng_), c = u(rng_), d = u(rng_);
    return Box(std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d));
  }
  std::mt19937_64 rng_{12345};
};

TEST_F(IouPropertyTest, SymmetricAndBounded) {
  for (int i = 0; i < 2000; ++i) {
    const Box a = random_box(-50, 50);
    const Box b = random_box(-50, 50);
    const double v = iou(a, b);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    if (area(a) > 0) EXPECT_EQ(iou(a, a), 1.0);
  }
}

TEST_F(IouPropertyTest, TranslationInvariantExactlyOnIntegerGrid) {
  // Integer coordinates and offsets keep every intermediate exact.
  std::uniform_int_distribution<int> off(-1000, 1000);
  for (int i = 0; i < 2000; ++i) {
    const Box a = random_int_box(0, 100);
    const Box b = random_int_box(0, 100);
    const double dx = off(rng_), dy = off(rng_);
    EXPECT_EQ(iou(a, b), iou(a.translated(dx, dy), b.translated(dx, dy)));
  }
}

TEST_F(IouPropertyTest, TranslationInvariantOnReals) {
  std::uniform_real_distribution<double> off(-100, 100);
  for (int i = 0; i < 2000; ++i) {
    const Box a = random_box(0, 100);
    const Box b = random_box(0, 100);
    const double dx = off(rng_), dy = off(rng_);
    EXPECT_NEAR(iou(a, b), iou(a.translated(dx, dy), b.translated(dx, dy)), 1e-12);
  }
}

TEST_F(IouPropertyTest, ScaleInvariant) {
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int i = 0; i < 2000; ++i) {
    const Box a = random_box(0, 100);
    const Box b = random_box(0, 100);
    const double s = scale(rng_);
    EXPECT_NEAR(iou(a, b), iou(a.scaled(s), b.scaled(s)), 1e-12);
  }
}

}  // namespace
}  // namespace detfuse
