#include <gtest/gtest.h>

#include "elcap/capacity.hpp"

namespace {

// Every potential solved by any test in this process must satisfy
// 0 <= v <= 1 up to 1e-8.
class MaximumPrinciple : public ::testing::Environment {
 public:
  void SetUp() override { elcap::reset_potential_statistics(); }
  void TearDown() override {
    const auto s = elcap::potential_statistics();
    if (s.solves == 0) return;
    EXPECT_GE(s.min_value, -1e-8) << "over " << s.solves << " solves";
    EXPECT_LE(s.max_value, 1.0 + 1e-8) << "over " << s.solves << " solves";
  }
};

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  ::testing::AddGlobalTestEnvironment(new MaximumPrinciple);
  return RUN_ALL_TESTS();
}
