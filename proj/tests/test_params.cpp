#include <string>

#include <gtest/gtest.h>

#include "whipple/error.hpp"
#include "whipple/params.hpp"

using namespace whipple;

namespace {

const std::string kDir = WHIPPLE_PARAMS_DIR;

std::string table1_text() { return to_toml(BicycleParams::paper_table1()); }

ErrorKind kind_of(const std::string& text) {
  try {
    parse_params(text, "test.toml");
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::DomainError;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

TEST(Params, BundledDefaultFile) {
  const BicycleParams p = load_params(kDir + "/paper_table1.toml");
  const BicycleParams ref = BicycleParams::paper_table1();
  EXPECT_EQ(p.w, 0.935);
  EXPECT_EQ(p.c, 0.046);
  EXPECT_EQ(p.lambda, 0.175);
  EXPECT_EQ(p.g, 9.81);
  EXPECT_EQ(p.rear_wheel.m, 1.0865);
  EXPECT_EQ(p.rear_wheel.R, 0.260);
  EXPECT_EQ(p.rear_frame.m, 13.2490);
  EXPECT_EQ(p.rear_frame.x, 0.424);
  EXPECT_EQ(p.rear_frame.z, 0.402);
  EXPECT_EQ(p.rear_frame.Ixz, 0.1215);
  EXPECT_EQ(p.front_frame.m, 2.8315);
  EXPECT_EQ(p.front_frame.x, 0.865);
  EXPECT_EQ(p.front_frame.z, 0.554);
  EXPECT_EQ(p.front_frame.Ixz, -0.0157);
  EXPECT_EQ(p.front_wheel.Iyy, 0.0584);
  EXPECT_EQ(to_toml(p), to_toml(ref));
}

TEST(Params, BundledBenchmark) {
  const BicycleParams p = load_params(kDir + "/benchmark.toml");
  EXPECT_EQ(to_toml(p), to_toml(BicycleParams::benchmark()));
}

TEST(Params, RoundTrip) {
  const BicycleParams p = parse_params(table1_text());
  EXPECT_EQ(to_toml(p), table1_text());
}

TEST(Params, GravityDefaults) {
  const std::string text = replace(table1_text(), "g = 9.81", "");
  EXPECT_EQ(parse_params(text).g, 9.81);
}

TEST(Params, NegativeMassRejected) {
  const std::string text = replace(table1_text(), "m = 13.249", "m = -1");
  EXPECT_EQ(kind_of(text), ErrorKind::ValidationError);
  try {
    parse_params(text);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("rear_frame.m"), std::string::npos) << e.what();
  }
}

TEST(Params, MissingKeyNamed) {
  const std::string text = replace(table1_text(), "Ixz = 0.1215", "");
  EXPECT_EQ(kind_of(text), ErrorKind::ParseError);
  try {
    parse_params(text);
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("Ixz"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("rear_frame"), std::string::npos) << e.what();
  }
}

TEST(Params, SyntaxErrorHasLine) {
  try {
    parse_params("w = 0.9\nc = = 1\n", "broken.toml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("broken.toml"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos) << e.what();
  }
}

TEST(Params, UnknownKeyRejected) {
  const std::string text = replace(table1_text(), "w = 0.935", "w = 0.935\nwheelbase = 1.0");
  EXPECT_EQ(kind_of(text), ErrorKind::ParseError);
}

TEST(Params, TiltRange) {
  const std::string text = replace(table1_text(), "lambda = 0.175", "lambda = 1.6");
  EXPECT_EQ(kind_of(text), ErrorKind::ValidationError);
}

TEST(Params, IndefiniteInertiaRejected) {
  // Ixz^2 > Ixx * Izz breaks positive definiteness.
  const std::string text = replace(table1_text(), "Ixz = 0.1215", "Ixz = 0.5");
  EXPECT_EQ(kind_of(text), ErrorKind::ValidationError);
}

TEST(Params, MissingFile) {
  try {
    load_params("/nonexistent/params.toml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  }
}
