#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cfdim/continued_fraction.hpp"
#include "cfdim/expression.hpp"
#include "cfdim/function_spec.hpp"
#include "cfdim/growth.hpp"
#include "cfdim/potential.hpp"

using namespace cfdim;

TEST_CASE("expression grammar: values and precedence") {
  CHECK(Expression::parse("2+3*4^2").eval(0) == 50.0);
  CHECK(Expression::parse("(2+3)*4").eval(0) == 20.0);
  CHECK(Expression::parse("2-3-4").eval(0) == -5.0);
  CHECK(Expression::parse("12/4/3").eval(0) == 1.0);
  CHECK(Expression::parse("2^3^2").eval(0) == 512.0);  // right-associative
  CHECK(Expression::parse("2+(x-0.3)^2").eval(0.3) == 2.0);
  CHECK(Expression::parse("min(x,1-x)").eval(0.25) == 0.25);
  CHECK(Expression::parse("min(x,1-x)").eval(0.8) ==
        Catch::Approx(0.2).epsilon(1e-15));
  CHECK(Expression::parse("max(abs(x-0.5),0.1)").eval(0.5) == 0.1);
  CHECK(Expression::parse("exp(log(x))").eval(0.37) ==
        Catch::Approx(0.37).epsilon(1e-15));
  CHECK(Expression::parse("sqrt(x)").eval(0.25) == 0.5);
  CHECK(Expression::parse(" 2 + 3 ").eval(0) == 5.0);
  CHECK(Expression::parse("3.5e-2").eval(0) == 0.035);
}

TEST_CASE("expression grammar: parse errors carry offsets") {
  auto offset_of = [](const char* text) -> std::size_t {
    try {
      Expression::parse(text);
    } catch (const ParseError& e) {
      return e.offset();
    }
    return static_cast<std::size_t>(-1);
  };
  CHECK(offset_of("1 +") == 3);
  CHECK(offset_of("") == 0);
  CHECK(offset_of("(1+2") == 4);
  CHECK(offset_of("sin(x)") == 0);
  CHECK(offset_of("2*foo(x)") == 2);
  CHECK(offset_of("min(x)") == 0);
  CHECK(offset_of("log(x,x)") == 0);
  CHECK(offset_of("1 ? 2") == 2);
  CHECK(offset_of("2..5") == 2);
}

TEST_CASE("expression grammar: evaluation errors carry the point") {
  const Expression lg = Expression::parse("log(x)");
  CHECK_THROWS_AS(lg.eval(0.0), EvalError);
  CHECK_THROWS_AS(lg.eval(-1.0), EvalError);
  CHECK_THROWS_AS(Expression::parse("1/x").eval(0.0), EvalError);
  CHECK_THROWS_AS(Expression::parse("sqrt(x-1)").eval(0.5), EvalError);
  CHECK_THROWS_AS(Expression::parse("exp(x^2)").eval(1e6), EvalError);
  try {
    lg.eval(0.0);
  } catch (const EvalError& e) {
    CHECK(e.x() == 0.0);
  }
}

TEST_CASE("expression printing round-trips structurally") {
  const char* samples[] = {
      "2+(x-0.3)^2", "min(x,1-x)",     "2^3^2",          "x*x+2/x",
      "log(2+x)",    "sqrt(abs(x-1))", "max(x,0.5)*3-1", "1-x^2^x",
      "((x))",       "0.5",            "exp(x)/log(x+2)",
  };
  for (const char* s : samples) {
    const Expression a = Expression::parse(s);
    const Expression b = Expression::parse(a.str());
    CHECK(a == b);
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("function descriptors parse to the right kinds") {
  const FunctionSpec lt = FunctionSpec::parse("logT");
  CHECK(lt.is_log_t());
  CHECK(lt.describe() == "logT");
  CHECK(lt.eval(0.5) == Catch::Approx(2.0 * std::log(2.0)).epsilon(1e-15));

  const FunctionSpec lb = FunctionSpec::parse("logB:3.0");
  CHECK(lb.is_const());
  CHECK(lb.const_value() == Catch::Approx(std::log(3.0)).epsilon(1e-15));

  const FunctionSpec ct = FunctionSpec::parse("const:0.5");
  CHECK(ct.is_const());
  CHECK(ct.const_value() == 0.5);

  const FunctionSpec ex = FunctionSpec::parse("expr:2+(x-0.3)^2");
  CHECK(ex.kind() == FunctionSpec::Kind::kExpression);
  CHECK(ex.eval(0.3) == 2.0);

  // Constant expressions fold to constants.
  const FunctionSpec folded = FunctionSpec::parse("expr:1+1");
  CHECK(folded.is_const());
  CHECK(folded.const_value() == 2.0);

  CHECK_THROWS_AS(FunctionSpec::parse("huh:1"), ParseError);
  CHECK_THROWS_AS(FunctionSpec::parse("logB:-2"), ParseError);
  CHECK_THROWS_AS(FunctionSpec::parse("const:abc"), ParseError);
  CHECK_THROWS_AS(FunctionSpec::parse("expr:1+"), ParseError);
}

TEST_CASE("tau_min over the closed uniform grid") {
  CHECK(tau_min(FunctionSpec::parse("expr:2+(x-0.3)^2")) ==
        Catch::Approx(2.0).margin(1e-8));
  CHECK(tau_min(FunctionSpec::constant(0.7)) == 0.7);
  CHECK(tau_min(FunctionSpec::parse("expr:min(x,1-x)")) == 0.0);  // endpoints
  CHECK(tau_min(FunctionSpec::parse("expr:1-x"), 101) == 0.0);
  // Failures propagate with the evaluation point.
  CHECK_THROWS_AS(tau_min(FunctionSpec::parse("expr:log(x)")), EvalError);
  CHECK_THROWS_AS(tau_min(FunctionSpec::parse("expr:1/(x-0.5)"), 3),
                  EvalError);
}

TEST_CASE("ergodic sums along anchor orbits") {
  // S_2 of f(x)=x on the word [3,2]: anchor 2/7, then T(2/7) = 1/2.
  const double s2 = ergodic_sum(FunctionSpec::parse("expr:x"), word_of({3, 2}));
  CHECK(s2 == Catch::Approx(2.0 / 7.0 + 0.5).epsilon(1e-15));

  // log|T'| telescopes to 2 log q_n exactly.
  CHECK(ergodic_sum(FunctionSpec::log_t(), all_ones(5)) ==
        Catch::Approx(2.0 * std::log(8.0)).epsilon(1e-15));

  // Constants sum to n*c.
  CHECK(ergodic_sum(FunctionSpec::constant(std::log(2.0)), all_ones(10)) ==
        Catch::Approx(10.0 * std::log(2.0)).epsilon(1e-15));

  // The expression route for logT-like input agrees with the exact formula.
  Rng rng(11);
  const FunctionSpec lt_expr = FunctionSpec::parse("expr:0-2*log(x)");
  for (int it = 0; it < 500; ++it) {
    Word w;
    const int len = 1 + static_cast<int>(rng.uniform(0, 11));
    for (int i = 0; i < len; ++i) w.emplace_back(rng.uniform(1, 9));
    const double exact = ergodic_sum(FunctionSpec::log_t(), w);
    const double sampled = ergodic_sum(lt_expr, w);
    CHECK(sampled == Catch::Approx(exact).margin(1e-10));
  }
}

TEST_CASE("orbit points are the suffix values, exactly") {
  Rng rng(12);
  for (int it = 0; it < 300; ++it) {
    Word w;
    const int len = 1 + static_cast<int>(rng.uniform(0, 9));
    for (int i = 0; i < len; ++i) w.emplace_back(rng.uniform(1, 20));
    const std::vector<double> xs = orbit_points(w);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const Word tail(w.begin() + static_cast<long>(k), w.end());
      CHECK(xs[k] == Catch::Approx(to_double(value(tail))).margin(1e-14));
    }
  }
}

TEST_CASE("psi_eval composes growth, tau_min and the Birkhoff sum") {
  PotentialSpec pot;
  pot.r = 1;
  pot.h = FunctionSpec::log_t();
  pot.tau = FunctionSpec::constant(1.0);
  const Word w = all_ones(6);
  const double q = 13.0;  // q_6 of the all-ones word
  const double s = 0.7;
  // Weight collapses: psi = -(s + g_1(s)) * 2 log q = -(0.7+0.7)*2 log q.
  CHECK(psi_eval(pot, w, s) ==
        Catch::Approx(-2.0 * (0.7 + 0.7) * std::log(q)).epsilon(1e-13));

  pot.h = FunctionSpec::constant(std::log(2.0));
  // psi = -g*tau_min*n*log2 - 2 s log q.
  CHECK(psi_eval(pot, w, s) ==
        Catch::Approx(-0.7 * 6.0 * std::log(2.0) - 1.4 * std::log(q))
            .epsilon(1e-13));
}

TEST_CASE("sigma collapse: closed forms") {
  // h = log|T'|, r = 1, tau = 1/2: sigma_eff = s + g_1(s)/2 = 1.5 s.
  PotentialSpec pot;
  pot.r = 1;
  pot.h = FunctionSpec::log_t();
  pot.tau = FunctionSpec::constant(0.5);
  for (double s : {0.55, 0.7, 0.9, 1.0}) {
    const auto c = sigma_collapse(pot, s, tau_min(pot.tau));
    REQUIRE(c.has_value());
    CHECK(c->sigma_eff == Catch::Approx(1.5 * s).epsilon(1e-14));
    CHECK(c->step_log == 0.0);
  }

  // h = log|T'|, r = 2, tau = 1: sigma_eff = s + s^2.
  pot.r = 2;
  pot.tau = FunctionSpec::constant(1.0);
  for (double s : {0.6, 0.75, 1.0}) {
    const auto c = sigma_collapse(pot, s, tau_min(pot.tau));
    REQUIRE(c.has_value());
    CHECK(c->sigma_eff == Catch::Approx(s + s * s).epsilon(1e-13));
  }

  // Constant h contributes a per-step constant instead.
  pot.r = 1;
  pot.h = FunctionSpec::constant(std::log(2.0));
  const auto c = sigma_collapse(pot, 0.7, 1.0);
  REQUIRE(c.has_value());
  CHECK(c->sigma_eff == 0.7);
  CHECK(c->step_log == Catch::Approx(-0.7 * std::log(2.0)).epsilon(1e-14));

  // Genuine expressions do not collapse.
  pot.h = FunctionSpec::parse("expr:2+x");
  CHECK_FALSE(sigma_collapse(pot, 0.7, 1.0).has_value());

  // psi_eval must agree with the collapsed form when both apply.
  PotentialSpec p2;
  p2.r = 2;
  p2.h = FunctionSpec::log_t();
  p2.tau = FunctionSpec::constant(1.0);
  const Word w = word_of({2, 1, 3, 1, 5});
  const double lq = log_big(convergents(w).qn());
  const auto cw = sigma_collapse(p2, 0.8, 1.0);
  REQUIRE(cw.has_value());
  CHECK(psi_eval(p2, w, 0.8) ==
        Catch::Approx(-2.0 * cw->sigma_eff * lq +
                      static_cast<double>(w.size()) * cw->step_log)
            .epsilon(1e-12));
}

TEST_CASE("variation profile: Lipschitz test function") {
  const VariationProfile vp =
      variation_profile(FunctionSpec::parse("expr:x"), 5, 8);
  REQUIRE(vp.var.size() == 5);
  // Var_k of f(x)=x is bounded by the largest depth-k cylinder length,
  // which is the all-ones cylinder 1/(q_k (q_k + q_{k-1})).
  const double fib_q[] = {1, 2, 3, 5, 8};       // q_k, all-ones
  const double fib_qp[] = {1, 1, 2, 3, 5};      // q_{k-1}
  for (int k = 1; k <= 5; ++k) {
    const double maxlen = 1.0 / (fib_q[k - 1] * (fib_q[k - 1] + fib_qp[k - 1]));
    CHECK(vp.var[k - 1] <= maxlen);
    CHECK(vp.var[k - 1] > 0.0);
  }
  CHECK(vp.tempered);
}

TEST_CASE("variation profile: log|T'| is tempered with Var_1 <= 2 log 2") {
  const VariationProfile vp = variation_profile(FunctionSpec::log_t(), 5, 16);
  CHECK(vp.var[0] <= 2.0 * std::log(2.0) + 1e-12);
  CHECK(vp.var[0] >= 1.0);  // the sampled oscillation on (1/2,1) is ~2log2
  CHECK(vp.tempered);
  for (int k = 1; k < 5; ++k) CHECK(vp.var[k] < vp.var[k - 1]);
}

TEST_CASE("variation profile: constants have zero variation") {
  const VariationProfile vp =
      variation_profile(FunctionSpec::constant(3.0), 4, 8);
  for (double v : vp.var) CHECK(v == 0.0);
  CHECK(vp.tempered);
}
