#include <sstream>

#include <gtest/gtest.h>

#include "whipple/io.hpp"

using namespace whipple;

TEST(Io, SeventeenDigits) {
  EXPECT_EQ(io::fmt(0.1), "0.10000000000000001");
  EXPECT_EQ(io::fmt(2.0), "2");
  EXPECT_EQ(std::stod(io::fmt(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Io, TrajectoryCsv) {
  Trajectory tr;
  tr.t = {0.0, 0.5};
  tr.state = {{0.0, 0.2}, {0.01, 0.1}};
  tr.torque = {{0.0, 0.0}, {0.3, -0.25}};
  std::ostringstream os;
  io::write_trajectory_csv(os, tr);
  EXPECT_EQ(os.str(),
            "t,theta,thetadot,tau_delta,tau_phir\n"
            "0,0,0.20000000000000001,0,0\n"
            "0.5,0.01,0.10000000000000001,0.29999999999999999,-0.25\n");
}

TEST(Io, BifurcationCsvHeader) {
  BifurcationDiagram d;
  d.omega_grid = {1.0};
  d.equilibria = {{EquilibriumPoint{0.0, Stability::Unstable, {}, 0.0}}};
  std::ostringstream os;
  io::write_bifurcation_csv(os, d);
  EXPECT_EQ(os.str(), "omega0,theta0,stability\n1,0,unstable\n");
}

TEST(Io, CriticalSpeedsJsonNulls) {
  CriticalSpeeds s;
  s.omega_c = 6.0;
  s.omega_c_prime = 3.5;
  const auto j = io::to_json(s);
  EXPECT_EQ(j["omega_c"], 6.0);
  EXPECT_EQ(j["omega_c_prime"], 3.5);
  EXPECT_TRUE(j["omega_c_double_prime"].is_null());
}

TEST(Io, ErrorJson) {
  const auto j = io::error_json(Error(ErrorKind::SingularMass, "boom"));
  EXPECT_EQ(j.dump(), R"({"error":"SingularMass","message":"boom"})");
}
