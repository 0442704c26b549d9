#include <chrono>
#include <cmath>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include <nestad/bench/runner.hpp>
#include <nestad/nestad.hpp>

#include "support.hpp"

using nestad::D64;
using nestad::DV64;
using nestad::bench::BenchResult;
using nestad::bench::Composition;
using nestad::bench::Size;
namespace ts = testing_support;

TEST(Composition, SameSeedSameFunctionAndInput) {
  for (std::uint64_t seed : {0ull, 42ull, 123456789ull}) {
    const Composition a = Composition::generate(seed, 5, 3);
    const Composition b = Composition::generate(seed, 5, 3);
    EXPECT_EQ(a.point(), b.point());
    EXPECT_EQ(a.nodes(), b.nodes());
    EXPECT_EQ(a(a.point()), b(b.point()));
    const ts::Vec probe{0.1, -0.2, 0.3, 0.4, -0.5};
    EXPECT_EQ(a(probe), b(probe));
  }
  const Composition c = Composition::generate(1, 5, 3), d = Composition::generate(2, 5, 3);
  EXPECT_NE(c(c.point()), d(c.point()));
}

TEST(Composition, DepthAndShapes) {
  for (std::size_t depth : {1u, 3u, 6u}) {
    const Composition c = Composition::generate(7, 8, 5, depth);
    EXPECT_EQ(c.inputs(), 8u);
    EXPECT_EQ(c.outputs(), 5u);
    EXPECT_EQ(c.point().size(), 8u);
    EXPECT_EQ(c(c.point()).size(), 5u);
  }
  EXPECT_THROW((void)Composition::generate(1, 0, 3), nestad::shape_error);
}

TEST(Composition, GenericEvaluationAgreesAcrossTypes) {
  const Composition c = Composition::generate(9, 4, 2);
  const ts::Vec plain = c(c.point());
  const ts::Vec viad = ts::vals(c(c.point_as<double>()));
  EXPECT_EQ(plain, viad);
  const double s = c.scalar(c.point());
  EXPECT_EQ(c.scalar(c.point_as<double>()).value(), s);
  EXPECT_EQ(c.univariate(D64(0.3)).value(), c.univariate(0.3));
}

TEST(Composition, OutputsAreFiniteAtTheirPoint) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Composition c = Composition::generate(seed, 1 + seed % 8, 1 + (seed / 8) % 8, 6);
    for (double y : c(c.point())) EXPECT_TRUE(std::isfinite(y)) << "seed " << seed;
  }
}

TEST(RunBench, SingleDiffRun) {
  const auto rs = nestad::bench::run_bench({"diff"}, {{1, 1}}, 1, 42);
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0].op, "diff");
  EXPECT_EQ(rs[0].reps, 1u);
  EXPECT_GE(rs[0].ratio, 0.0);
  EXPECT_GT(rs[0].primal_ns, 0.0);
}

TEST(RunBench, SizesMapToWhatEachOperationTakes) {
  const auto rs = nestad::bench::run_bench({"grad", "curl", "div", "jacobian"}, {{4, 2}, {6, 2}}, 1, 1);
  std::vector<std::string> seen;
  for (const auto& r : rs) seen.push_back(r.op + ":" + std::to_string(r.n) + "x" + std::to_string(r.m));
  EXPECT_EQ(seen, (std::vector<std::string>{"grad:4x1", "grad:6x1", "curl:3x3", "div:4x4", "div:6x6",
                                            "jacobian:4x2", "jacobian:6x2"}));
}

TEST(RunBench, UnknownOperationListsValidNames) {
  try {
    (void)nestad::bench::run_bench({"gradd"}, {{2, 2}}, 1, 1);
    FAIL() << "expected usage_error";
  } catch (const nestad::bench::usage_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("gradd"), std::string::npos);
    for (const auto& op : nestad::bench::operations()) EXPECT_NE(msg.find(op.name), std::string::npos) << op.name;
  }
  EXPECT_THROW((void)nestad::bench::run_bench({"grad"}, {}, 1, 1), nestad::bench::usage_error);
  EXPECT_THROW((void)nestad::bench::run_bench({"grad"}, {{2, 2}}, 0, 1), nestad::bench::usage_error);
}

TEST(RunBench, WarmUpIsNotCounted) {
  // the first call is slow; it must not show up in the mean
  int calls = 0;
  const double ns = nestad::bench::detail::mean_ns(5, [&] {
    if (calls++ == 0) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  });
  EXPECT_EQ(calls, 6);
  EXPECT_LT(ns, 1e6);
}

TEST(RunBench, HooksBracketEachMeasurement) {
  int before = 0, after = 0;
  nestad::bench::BenchHooks hooks;
  hooks.before = [&](const std::string&, Size) { ++before; };
  hooks.after = [&](const BenchResult& r) {
    ++after;
    EXPECT_EQ(r.reps, 7u);
  };
  (void)nestad::bench::run_bench({"grad", "hessian"}, {{3, 1}}, 7, 5, hooks);
  EXPECT_EQ(before, 2);
  EXPECT_EQ(after, 2);
}

TEST(RunBench, ReverseGradientOverheadGrowsSublinearly) {
  const auto rs = nestad::bench::run_bench({"grad"}, {{10, 1}, {100, 1}}, 200, 42);
  ASSERT_EQ(rs.size(), 2u);
  ASSERT_GT(rs[0].ratio, 0.0);
  EXPECT_LT(rs[1].ratio / rs[0].ratio, 10.0) << "ratio(10) = " << rs[0].ratio << ", ratio(100) = " << rs[1].ratio;
}

TEST(Csv, RoundTripIsLossless) {
  std::vector<BenchResult> rs{{"grad", 10, 1, 100, 1234.5678901234567, 98765.4321, 80.0000000000001},
                              {"curl", 3, 3, 1, 0.1, 1e-300, 1e300},
                              {"jacobianTv", 100, 100, 7, 3.0 / 7.0, 22.0 / 7.0, 22.0 / 3.0}};
  std::stringstream ss;
  nestad::bench::write_csv(ss, rs);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "op,n,m,reps,primal_ns,op_ns,ratio");
  EXPECT_EQ(nestad::bench::parse_csv(ss), rs);

  const auto measured = nestad::bench::run_bench({"diff", "gradv"}, {{4, 1}}, 3, 8);
  std::stringstream s2;
  nestad::bench::write_csv(s2, measured);
  EXPECT_EQ(nestad::bench::parse_csv(s2), measured);
}

TEST(Csv, RejectsMalformedInput) {
  std::stringstream bad_header("op,n,m\n");
  EXPECT_THROW((void)nestad::bench::parse_csv(bad_header), nestad::bench::csv_error);
  std::stringstream short_row("op,n,m,reps,primal_ns,op_ns,ratio\ngrad,1,1\n");
  EXPECT_THROW((void)nestad::bench::parse_csv(short_row), nestad::bench::csv_error);
  std::stringstream bad_num("op,n,m,reps,primal_ns,op_ns,ratio\ngrad,x,1,1,1,1,1\n");
  EXPECT_THROW((void)nestad::bench::parse_csv(bad_num), nestad::bench::csv_error);
}

TEST(Serialize, VectorsAndMatricesRoundTrip) {
  ts::Rng rng(3);
  const ts::Vec v = rng.vec(17);
  const ts::Mat m = rng.mat(4, 6);
  std::stringstream ss;
  nestad::write(ss, ts::dv(v));
  nestad::write(ss, ts::dm(m));
  EXPECT_EQ(ss.str().size(), 16 + 17 * 8 + 16 + 24 * 8);
  EXPECT_EQ(ss.str().substr(0, 4), "NDA8");
  EXPECT_EQ(ts::vals(nestad::read_vector<double>(ss)), v);
  EXPECT_EQ(ts::vals(nestad::read_matrix<double>(ss)).a, m.a);
}

TEST(Serialize, HeaderIsLittleEndian) {
  std::stringstream ss;
  nestad::write(ss, nestad::DM64{{1, 2, 3}, {4, 5, 6}});
  const std::string s = ss.str();
  const unsigned char want[16] = {'N', 'D', 'A', '8', 2, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0};
  for (int i = 0; i < 16; ++i) EXPECT_EQ(static_cast<unsigned char>(s[i]), want[i]) << "byte " << i;
  // 1.0 = 0x3FF0000000000000
  EXPECT_EQ(static_cast<unsigned char>(s[16 + 7]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(s[16 + 6]), 0xF0);
}

TEST(Serialize, RejectsBadFiles) {
  std::stringstream truncated("ND");
  EXPECT_THROW((void)nestad::read_vector<double>(truncated), nestad::format_error);
  std::stringstream f32;
  nestad::write(f32, nestad::DV32{1, 2});
  EXPECT_THROW((void)nestad::read_vector<double>(f32), nestad::format_error);
  std::stringstream mat;
  nestad::write(mat, nestad::DM64::identity(2));
  EXPECT_THROW((void)nestad::read_vector<double>(mat), nestad::format_error);
  std::stringstream shortdata;
  nestad::write(shortdata, DV64{1, 2, 3});
  const std::string cut = shortdata.str().substr(0, 16 + 8);
  std::stringstream in(cut);
  EXPECT_THROW((void)nestad::read_vector<double>(in), nestad::format_error);
}
