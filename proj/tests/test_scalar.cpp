#include <cmath>
#include <limits>
#include <set>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include <nestad/bench/composition.hpp>
#include <nestad/nestad.hpp>

#include "support.hpp"

using nestad::D32;
using nestad::D64;
using nestad::Mode;
using nestad::Tag;
namespace ts = testing_support;

TEST(Tag, FreshTagsIncrease) {
  const Tag a = nestad::fresh_tag();
  const Tag b = nestad::fresh_tag();
  EXPECT_LT(a, b);
}

TEST(Tag, ConcurrentTagsAreDistinct) {
  std::vector<Tag> got(8 * 1000);
  std::vector<std::thread> ts;
  for (int k = 0; k < 8; ++k)
    ts.emplace_back([&got, k] {
      for (int i = 0; i < 1000; ++i) got[k * 1000 + i] = nestad::fresh_tag();
    });
  for (auto& t : ts) t.join();
  std::set<std::uint64_t> ids;
  for (Tag t : got) ids.insert(t.id);
  EXPECT_EQ(ids.size(), got.size());
}

TEST(Tag, InnerInvocationGetsLargerTag) {
  Tag outer{}, inner{};
  nestad::diff(
      [&](const D64& x) {
        outer = x.tag();
        return x * nestad::diff(
                       [&](const D64& y) {
                         inner = y.tag();
                         return x * y;
                       },
                       D64(2.0));
      },
      1.0);
  EXPECT_GT(inner, outer);
}

TEST(Scalar, ConstantBasics) {
  const D64 c(5.0);
  EXPECT_TRUE(c.is_const());
  EXPECT_EQ(c.mode(), Mode::constant);
  EXPECT_EQ(nestad::primal(c).value(), 5.0);
  EXPECT_EQ(nestad::tangent(c, nestad::fresh_tag()).value(), 0.0);
  EXPECT_THROW((void)c.tag(), nestad::tag_error);
}

TEST(Scalar, MulDualByConstant) {
  const Tag t = nestad::fresh_tag();
  const D64 y = nestad::make_dual(D64(2.0), D64(1.0), t) * D64(3.0);
  EXPECT_EQ(y.mode(), Mode::forward);
  EXPECT_EQ(y.tag(), t);
  EXPECT_EQ(y.value(), 6.0);
  EXPECT_EQ(nestad::tangent(y, t).value(), 3.0);
}

TEST(Scalar, SinAtZero) {
  const Tag t = nestad::fresh_tag();
  const D64 y = sin(nestad::make_dual(D64(0.0), D64(1.0), t));
  EXPECT_EQ(y.value(), 0.0);
  EXPECT_EQ(nestad::tangent(y, t).value(), 1.0);
}

TEST(Scalar, PrimalAndTangentExtractors) {
  const Tag t = nestad::fresh_tag();
  const Tag u = nestad::fresh_tag();
  const D64 d = nestad::make_dual(D64(3.0), D64(7.0), t);
  EXPECT_EQ(nestad::primal(d).value(), 3.0);
  EXPECT_TRUE(nestad::primal(d).is_const());
  EXPECT_EQ(nestad::tangent(d, t).value(), 7.0);
  EXPECT_EQ(nestad::tangent(d, u).value(), 0.0);
}

TEST(Scalar, MakeDualRejectsComponentWithSameOrLargerTag) {
  const Tag t = nestad::fresh_tag();
  const Tag u = nestad::fresh_tag();
  const D64 inner = nestad::make_dual(D64(1.0), D64(1.0), u);
  EXPECT_THROW(nestad::make_dual(inner, D64(1.0), t), nestad::tag_error);
  EXPECT_THROW(nestad::make_dual(D64(1.0), inner, u), nestad::tag_error);
}

TEST(Reverse, ExpAtZero) {
  auto tape = nestad::Tape<double>::create(nestad::fresh_tag());
  const D64 x = tape->variable(D64(0.0));
  const D64 y = exp(x);
  nestad::reverse_sweep(y, D64(1.0), tape->tag());
  EXPECT_EQ(nestad::adjoint(x).value(), 1.0);
}

TEST(Reverse, Square) {
  auto tape = nestad::Tape<double>::create(nestad::fresh_tag());
  const D64 x = tape->variable(D64(3.0));
  nestad::reverse_sweep(x * x, D64(1.0), tape->tag());
  EXPECT_EQ(nestad::adjoint(x).value(), 6.0);
}

TEST(Reverse, IdentityPassesSeedThrough) {
  auto tape = nestad::Tape<double>::create(nestad::fresh_tag());
  const D64 x = tape->variable(D64(-4.5));
  nestad::reverse_sweep(x, D64(2.75), tape->tag());
  EXPECT_EQ(nestad::adjoint(x).value(), 2.75);
}

TEST(Reverse, ProductPlusSineMatchesCentralDifferences) {
  auto tape = nestad::Tape<double>::create(nestad::fresh_tag());
  const D64 x1 = tape->variable(D64(1.0));
  const D64 x2 = tape->variable(D64(2.0));
  nestad::reverse_sweep(x1 * x2 + sin(x1), D64(1.0), tape->tag());
  const auto g = ts::central_grad([](const ts::Vec& v) { return v[0] * v[1] + std::sin(v[0]); }, {1.0, 2.0});
  EXPECT_NEAR(nestad::adjoint(x1).value(), g[0], 1e-8);
  EXPECT_NEAR(nestad::adjoint(x2).value(), g[1], 1e-8);
}

TEST(Reverse, SweepWithWrongTagIsRejected) {
  auto tape = nestad::Tape<double>::create(nestad::fresh_tag());
  const D64 x = tape->variable(D64(1.0));
  EXPECT_THROW(nestad::reverse_sweep(x * x, D64(1.0), nestad::fresh_tag()), nestad::tag_error);
  EXPECT_THROW(nestad::reverse_sweep(D64(1.0), D64(1.0), tape->tag()), nestad::tag_error);
}

TEST(Reverse, AdjointBeforeSweepIsZeroAndFlagged) {
  auto tape = nestad::Tape<double>::create(nestad::fresh_tag());
  const D64 x = tape->variable(D64(1.0));
  const D64 y = x * x;
  EXPECT_FALSE(tape->read_before_sweep());
  EXPECT_EQ(nestad::adjoint(x).value(), 0.0);
  EXPECT_TRUE(tape->read_before_sweep());
  nestad::reverse_sweep(y, D64(1.0), tape->tag());
  EXPECT_EQ(nestad::adjoint(x).value(), 2.0);
}

TEST(Reverse, RepeatedSweepsResetAdjoints) {
  auto tape = nestad::Tape<double>::create(nestad::fresh_tag());
  const D64 x = tape->variable(D64(3.0));
  const D64 y = x * x * x;
  nestad::reverse_sweep(y, D64(1.0), tape->tag());
  EXPECT_EQ(nestad::adjoint(x).value(), 27.0);
  nestad::reverse_sweep(y, D64(1.0), tape->tag());
  EXPECT_EQ(nestad::adjoint(x).value(), 27.0);
  nestad::reverse_sweep(y, D64(-2.0), tape->tag());
  EXPECT_EQ(nestad::adjoint(x).value(), -54.0);
}

TEST(Reverse, TapeIsTopological) {
  auto tape = nestad::Tape<double>::create(nestad::fresh_tag());
  const D64 x = tape->variable(D64(0.3));
  const D64 z = tape->variable(D64(-0.7));
  D64 y = x;
  for (int i = 0; i < 20; ++i) y = sin(y) * z + atan2(y, x) - pow(abs(z) + 1.0, y);
  ASSERT_GT(tape->size(), 40u);
  for (std::size_t i = 0; i < tape->size(); ++i)
    for (std::size_t p : tape->parents(i)) EXPECT_LT(p, i);
}

// Each unary op against a central difference of the same std function.
struct UnaryCase {
  const char* name;
  D64 (*ad)(const D64&);
  double (*ref)(double);
  std::vector<double> points;
};

TEST(ChainRule, UnaryOpsForwardAndReverseMatchCentralDifferences) {
  const std::vector<UnaryCase> cases{
      {"exp", [](const D64& x) { return exp(x); }, [](double x) { return std::exp(x); }, {-1.3, 0.0, 0.7, 2.1}},
      {"log", [](const D64& x) { return log(x); }, [](double x) { return std::log(x); }, {0.2, 1.0, 3.5}},
      {"sqrt", [](const D64& x) { return sqrt(x); }, [](double x) { return std::sqrt(x); }, {0.3, 2.0, 9.0}},
      {"sin", [](const D64& x) { return sin(x); }, [](double x) { return std::sin(x); }, {-2.0, 0.1, 1.4}},
      {"cos", [](const D64& x) { return cos(x); }, [](double x) { return std::cos(x); }, {-2.0, 0.1, 1.4}},
      {"tan", [](const D64& x) { return tan(x); }, [](double x) { return std::tan(x); }, {-1.0, 0.2, 1.1}},
      {"asin", [](const D64& x) { return asin(x); }, [](double x) { return std::asin(x); }, {-0.8, 0.0, 0.6}},
      {"acos", [](const D64& x) { return acos(x); }, [](double x) { return std::acos(x); }, {-0.8, 0.0, 0.6}},
      {"atan", [](const D64& x) { return atan(x); }, [](double x) { return std::atan(x); }, {-3.0, 0.4, 2.0}},
      {"sinh", [](const D64& x) { return sinh(x); }, [](double x) { return std::sinh(x); }, {-1.5, 0.3, 2.0}},
      {"cosh", [](const D64& x) { return cosh(x); }, [](double x) { return std::cosh(x); }, {-1.5, 0.3, 2.0}},
      {"tanh", [](const D64& x) { return tanh(x); }, [](double x) { return std::tanh(x); }, {-1.5, 0.3, 2.0}},
      {"abs", [](const D64& x) { return abs(x); }, [](double x) { return std::abs(x); }, {-1.5, 0.3, 2.0}},
      {"neg", [](const D64& x) { return -x; }, [](double x) { return -x; }, {-1.5, 0.3}},
      {"pow_const_exp", [](const D64& x) { return pow(x, 2.5); }, [](double x) { return std::pow(x, 2.5); },
       {0.4, 1.7}},
      {"pow_const_base", [](const D64& x) { return pow(1.8, x); }, [](double x) { return std::pow(1.8, x); },
       {-0.4, 1.7}},
  };
  for (const auto& c : cases) {
    for (double x : c.points) {
      SCOPED_TRACE(std::string(c.name) + " at " + std::to_string(x));
      const double want = ts::central(c.ref, x);
      const auto [v, fwd] = nestad::diffp(c.ad, x);
      EXPECT_EQ(v.value(), c.ref(x));
      EXPECT_TRUE(ts::close(fwd.value(), want, 1e-9, 1e-6)) << fwd.value() << " vs " << want;
      const auto rev = nestad::grad([&](const nestad::DV64& u) { return c.ad(u[0]); }, nestad::DV64{x});
      EXPECT_TRUE(ts::close(rev[0].value(), want, 1e-9, 1e-6)) << rev[0].value() << " vs " << want;
    }
  }
}

struct BinaryCase {
  const char* name;
  D64 (*ad)(const D64&, const D64&);
  double (*ref)(double, double);
  std::vector<std::pair<double, double>> points;
};

TEST(ChainRule, BinaryOpsMatchCentralDifferencesInBothArguments) {
  const std::vector<BinaryCase> cases{
      {"add", [](const D64& a, const D64& b) { return a + b; }, [](double a, double b) { return a + b; }, {{1, 2}}},
      {"sub", [](const D64& a, const D64& b) { return a - b; }, [](double a, double b) { return a - b; }, {{1, 2}}},
      {"mul", [](const D64& a, const D64& b) { return a * b; }, [](double a, double b) { return a * b; },
       {{1.5, -2}}},
      {"div", [](const D64& a, const D64& b) { return a / b; }, [](double a, double b) { return a / b; },
       {{1.5, -2}, {0.3, 0.7}}},
      {"pow", [](const D64& a, const D64& b) { return pow(a, b); },
       [](double a, double b) { return std::pow(a, b); }, {{1.5, 2.2}, {0.6, -1.3}}},
      {"atan2", [](const D64& a, const D64& b) { return atan2(a, b); },
       [](double a, double b) { return std::atan2(a, b); }, {{1.5, 2.2}, {-0.6, -1.3}}},
      {"min2", [](const D64& a, const D64& b) { return min2(a, b); },
       [](double a, double b) { return std::min(a, b); }, {{1.5, 2.2}, {0.6, -1.3}}},
      {"max2", [](const D64& a, const D64& b) { return max2(a, b); },
       [](double a, double b) { return std::max(a, b); }, {{1.5, 2.2}, {0.6, -1.3}}},
  };
  for (const auto& c : cases) {
    for (auto [a, b] : c.points) {
      SCOPED_TRACE(std::string(c.name) + " at " + std::to_string(a) + "," + std::to_string(b));
      const double da = ts::central([&](double s) { return c.ref(s, b); }, a);
      const double db = ts::central([&](double s) { return c.ref(a, s); }, b);
      EXPECT_TRUE(ts::close(nestad::diff([&](const D64& s) { return c.ad(s, D64(b)); }, a).value(), da, 1e-9, 1e-6));
      EXPECT_TRUE(ts::close(nestad::diff([&](const D64& s) { return c.ad(D64(a), s); }, b).value(), db, 1e-9, 1e-6));
      const auto g = nestad::grad([&](const nestad::DV64& u) { return c.ad(u[0], u[1]); }, nestad::DV64{a, b});
      EXPECT_TRUE(ts::close(g[0].value(), da, 1e-9, 1e-6));
      EXPECT_TRUE(ts::close(g[1].value(), db, 1e-9, 1e-6));
    }
  }
}

TEST(ChainRule, AbsAndSignHaveZeroDerivativeAtZero) {
  auto fa = [](const D64& x) { return abs(x); };
  auto fs = [](const D64& x) { return sign(x) * 3.0; };
  EXPECT_EQ(nestad::diff(fa, 0.0).value(), 0.0);
  EXPECT_EQ(nestad::grad([&](const nestad::DV64& v) { return fa(v[0]); }, nestad::DV64{0.0})[0].value(), 0.0);
  EXPECT_EQ(nestad::diff(fs, 0.0).value(), 0.0);
  EXPECT_EQ(nestad::diff(fs, 2.0).value(), 0.0);
  EXPECT_EQ(nestad::diff(fa, -2.0).value(), -1.0);
  EXPECT_EQ(sign(D64(-3.0)).value(), -1.0);
  EXPECT_EQ(floor(D64(2.7)).value(), 2.0);
  EXPECT_EQ(ceil(D64(2.2)).value(), 3.0);
  EXPECT_EQ(nestad::diff([](const D64& x) { return floor(x) + ceil(x); }, 2.5).value(), 0.0);
}

TEST(ChainRule, MinMaxTiesFollowFirstArgument) {
  const auto gmin = nestad::grad([](const nestad::DV64& v) { return min2(v[0], v[1]); }, nestad::DV64{1.0, 1.0});
  EXPECT_EQ(gmin[0].value(), 1.0);
  EXPECT_EQ(gmin[1].value(), 0.0);
  const auto gmax = nestad::grad([](const nestad::DV64& v) { return max2(v[1], v[0]); }, nestad::DV64{1.0, 1.0});
  EXPECT_EQ(gmax[0].value(), 0.0);
  EXPECT_EQ(gmax[1].value(), 1.0);
  EXPECT_EQ(nestad::diff([](const D64& x) { return min2(x, D64(1.0)); }, 1.0).value(), 1.0);
  EXPECT_EQ(nestad::diff([](const D64& x) { return max2(D64(1.0), x); }, 1.0).value(), 0.0);
}

TEST(ChainRule, DomainViolationsPropagateNaN) {
  const auto [v, d] = nestad::diffp([](const D64& x) { return log(x); }, -1.0);
  EXPECT_TRUE(std::isnan(v.value()));
  EXPECT_TRUE(std::isnan(nestad::diff([](const D64& x) { return sqrt(x); }, -4.0).value()));
}

TEST(Nesting, PerturbationConfusionGivesOne) {
  const D64 z = nestad::diff(
      [](const D64& x) { return x * nestad::diff([&](const D64& y) { return x + y; }, D64(1.0)); }, 1.0);
  EXPECT_EQ(z.value(), 1.0);
  const auto bad = ts::untagged_diff(
      [](ts::UntaggedDual x) { return x * ts::untagged_diff([&](ts::UntaggedDual y) { return x + y; }, {1.0, 0.0}); },
      {1.0, 0.0});
  EXPECT_EQ(bad.v, 2.0);
}

TEST(Nesting, LowerTagIsConstantForHigherTag) {
  const Tag lo = nestad::fresh_tag();
  const Tag hi = nestad::fresh_tag();
  const D64 a = nestad::make_dual(D64(2.0), D64(1.0), lo);
  const D64 b = nestad::make_dual(D64(5.0), D64(1.0), hi);
  const D64 p = a * b;
  EXPECT_EQ(p.tag(), hi);
  EXPECT_EQ(nestad::tangent(p, hi).value(), 2.0);  // d/db with a held fixed
  const D64 inner = nestad::tangent(p, hi);
  EXPECT_EQ(inner.mode(), Mode::forward);
  EXPECT_EQ(nestad::tangent(inner, lo).value(), 1.0);
  EXPECT_EQ(nestad::tangent(nestad::primal(p), lo).value(), 5.0);
}

TEST(Nesting, DiffnOfExpAtZero) {
  for (std::size_t k = 0; k <= 4; ++k)
    EXPECT_NEAR(nestad::diffn(k, [](const D64& x) { return exp(x); }, 0.0).value(), 1.0, 1e-9) << "k = " << k;
}

TEST(Nesting, NestedDiffCallsGiveHigherDerivatives) {
  // d^3/dx^3 sin at 0.4 through three written-out nested diff calls
  auto d1 = [](const D64& x) { return nestad::diff([](const D64& y) { return sin(y); }, x); };
  auto d2 = [&](const D64& x) { return nestad::diff(d1, x); };
  EXPECT_NEAR(nestad::diff(d2, 0.4).value(), -std::cos(0.4), 1e-14);
}

TEST(Nesting, ForwardOverReverseOnScalars) {
  // derivative of a reverse-mode derivative: (x^3)'' = 6x
  auto g = [](const D64& x) {
    return nestad::grad([](const nestad::DV64& v) { return v[0] * v[0] * v[0]; }, nestad::DV64(std::vector<D64>{x}))[0];
  };
  EXPECT_NEAR(nestad::diff(g, 1.5).value(), 9.0, 1e-13);
}

TEST(Agreement, ForwardTangentEqualsReverseAdjointOnRandomCompositions) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto c = nestad::bench::Composition::generate(seed, 1, 1, 6);
    const double x = c.point()[0];
    const double fwd = nestad::diff([&](const D64& t) { return c.univariate(t); }, x).value();
    const double rev =
        nestad::grad([&](const nestad::DV64& v) { return c.univariate(v[0]); }, nestad::DV64{x})[0].value();
    EXPECT_NEAR(fwd, rev, 1e-12 * std::max(1.0, std::abs(fwd))) << "seed " << seed;
  }
}

TEST(Float32, ForwardAndReverse) {
  const float x = 0.7f;
  const D32 d = nestad::diff([](const D32& t) { return sin(t) * exp(t); }, x);
  const double want = std::cos(0.7) * std::exp(0.7) + std::sin(0.7) * std::exp(0.7);
  EXPECT_TRUE(ts::close(d.value(), want, 0, 1e-3));
  const auto g = nestad::grad([](const nestad::DV32& v) { return v[0] * v[1] + log(v[1]); }, nestad::DV32{2.0f, 3.0f});
  EXPECT_TRUE(ts::close(g[0].value(), 3.0, 0, 1e-3));
  EXPECT_TRUE(ts::close(g[1].value(), 2.0 + 1.0 / 3.0, 0, 1e-3));
  const D32 z = nestad::diff(
      [](const D32& a) { return a * nestad::diff([&](const D32& b) { return a + b; }, D32(1.0f)); }, 1.0f);
  EXPECT_EQ(z.value(), 1.0f);
}
