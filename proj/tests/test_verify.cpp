#include <gtest/gtest.h>

#include <sstream>

#include "qatlab/verify.hpp"

using namespace qatlab;

TEST(VerifyFourier, AllChecksPass) {
  const auto checks = verify_fourier();
  EXPECT_TRUE(all_passed(checks));
  for (const auto& c : checks) EXPECT_TRUE(c.passed) << c.name << " measured " << c.measured;
}

TEST(VerifyFourier, CorruptedAmplitudeFails) {
  FourierVerifyOptions opt;
  opt.vanilla_amplitude = 0.3;
  opt.competitors = 10;
  const auto checks = verify_fourier(opt);
  EXPECT_FALSE(all_passed(checks));
  EXPECT_FALSE(checks.front().passed);
  EXPECT_EQ(checks.front().name, "zigzag.b1");
}

TEST(VerifyStats, AllChecksPass) {
  const auto checks = verify_stats({200'000, 3, 0});
  for (const auto& c : checks) EXPECT_TRUE(c.passed) << c.name << " measured " << c.measured;
}

TEST(VerifyStats, GridHasFiveAlphasAndFiveAmplitudes) {
  int dsq = 0, rdfs = 0;
  for (const auto& c : stats_mc_grid()) (c.spec.kind() == SurrogateKind::dsq ? dsq : rdfs)++;
  EXPECT_EQ(dsq, 5);
  EXPECT_EQ(rdfs, 5);
}

TEST(PrintChecks, FixedColumns) {
  std::ostringstream os;
  print_checks(os, {{"a.b", 1.0, 1.0, 0.1, true, "note"}, {"c", 2.0, 1.0, 0.1, false, ""}});
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "status,check,measured,expected,delta,tolerance,note");
  EXPECT_NE(s.find("PASS,a.b,1,1,0.000e+00,1.000e-01,note\n"), std::string::npos);
  EXPECT_NE(s.find("FAIL,c,2,1,1.000e+00,1.000e-01,\n"), std::string::npos);
}
