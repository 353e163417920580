// Nested-cylinder construction: schedules, window ladders, seeded point
// generation, membership verification, measure weights, and gap estimates.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cfdim/cantor.hpp"
#include "cfdim/dimension.hpp"

using namespace cfdim;

namespace {

PotentialSpec tau_half(int r) {
  PotentialSpec pot;
  pot.r = r;
  pot.tau = FunctionSpec::constant(0.5);
  return pot;
}

// Ladder exponent three centi-units below the truncated dimension, the
// regime the construction is designed for.
GammaLadder ladder_for(const PotentialSpec& pot, int M) {
  const double sM = solve_pressure_root(pot, alphabet_range(1, M)).root;
  return gamma_ladder(pot.r, sM - 0.03);
}

}  // namespace

TEST_CASE("schedule recursion materializes the index sequences") {
  // r=2, t0=1, m_j = j+1: n_0 = 3 and n_1 = (3+1)+2+2+1 = 9.
  const Schedule sch = build_schedule(2, 1, {2, 3, 4}, 3, 20);
  CHECK(sch.n[0] == 3);
  CHECK(sch.t[1] == 2);
  CHECK(sch.m[1] == 2);
  CHECK(sch.n[1] == 9);
  for (int j = 1; j <= sch.J; ++j) {
    CHECK(sch.l[j] == sch.t[j] + sch.m[j]);
    CHECK(sch.n[j] > sch.n[j - 1]);
    CHECK(sch.n[j] == sch.n[j - 1] + (sch.r - 1) + sch.t[j] + sch.m[j] + 1);
  }
  CHECK(sch.final_depth() == sch.n[3] + 1);

  const Schedule single = build_schedule(1, 1, {1}, 1, 5);
  CHECK(single.J == 1);
  CHECK(single.n[1] == 3 + 0 + 2 + 1 + 1);
}

TEST_CASE("schedule validation") {
  CHECK_THROWS_AS(build_schedule(0, 1, {1}, 1, 5), Error);
  CHECK_THROWS_AS(build_schedule(1, -1, {1}, 1, 5), Error);
  CHECK_THROWS_AS(build_schedule(1, 1, {1}, 0, 5), Error);
  CHECK_THROWS_AS(build_schedule(1, 1, {1}, 1, 0), Error);
  CHECK_THROWS_AS(build_schedule(1, 1, {1}, 2, 5), Error);       // too short
  CHECK_THROWS_AS(build_schedule(1, 1, {2, 2}, 2, 5), Error);    // not increasing
  CHECK_THROWS_AS(build_schedule(1, 1, {3, 1}, 2, 5), Error);    // decreasing
  CHECK_THROWS_AS(build_schedule(1, 1, {0, 1}, 2, 5), Error);    // m_j < 1
}

TEST_CASE("window ladder bases and telescoping") {
  const GammaLadder lad = gamma_ladder(2, 0.6);
  REQUIRE(lad.log_gamma.size() == 1);
  // log gamma_0 = g_2(0.6)/0.6 = 0.36/0.6 = 0.6, so gamma_0 = e^0.6.
  CHECK(lad.log_gamma[0] == Catch::Approx(0.6).margin(1e-15));
  CHECK(std::exp(lad.log_gamma[0]) == Catch::Approx(1.8221188).margin(1e-6));
  CHECK(lad.log_final == Catch::Approx(0.4).margin(1e-15));
  // -s log gamma_0 = -g_2(s) for r = 2.
  for (double s : {0.55, 0.6, 0.75, 0.9}) {
    const GammaLadder l2 = gamma_ladder(2, s);
    CHECK(-s * l2.log_gamma[0] ==
          Catch::Approx(-growth_exponent(2, s)).margin(1e-14));
  }
}

TEST_CASE("ladder bases stay in [1, e] and telescope to -g_r(s)") {
  for (int r = 1; r <= 8; ++r) {
    for (double s : {0.51, 0.6, 0.7, 0.8, 0.95, 0.99}) {
      const GammaLadder lad = gamma_ladder(r, s);
      REQUIRE(static_cast<int>(lad.log_gamma.size()) == r - 1);
      double sum = 0.0;
      double prev = std::numeric_limits<double>::infinity();
      for (double lg : lad.log_gamma) {
        CHECK(lg >= 0.0);        // gamma_i >= 1
        CHECK(lg <= 1.0);        // gamma_i <= e
        CHECK(lg <= prev);       // the defining exponents decay geometrically
        prev = lg;
        sum += lg;
      }
      // Telescoping identity: (1 - s) * sum(log gamma) - s = -g_r(s).
      CHECK((1.0 - s) * sum - s ==
            Catch::Approx(-growth_exponent(r, s)).margin(1e-12));
      CHECK(lad.log_final == Catch::Approx(1.0 - sum).margin(1e-15));
    }
  }
  // r = 1 degenerates: empty ladder, the single window base is e itself.
  const GammaLadder deg = gamma_ladder(1, 0.7);
  CHECK(deg.log_gamma.empty());
  CHECK(deg.log_final == 1.0);
  CHECK(deg.gamma0_log() == 1.0);

  CHECK_THROWS_AS(gamma_ladder(2, 0.5), Error);
  CHECK_THROWS_AS(gamma_ladder(2, 1.0), Error);
  CHECK_THROWS_AS(gamma_ladder(2, 0.3), Error);
  CHECK_THROWS_AS(gamma_ladder(0, 0.7), Error);
}

TEST_CASE("generated words follow the construction layout") {
  for (int r : {1, 2}) {
    const PotentialSpec pot = tau_half(r);
    const Schedule sch = build_schedule(r, 1, {1, 2, 3}, 3, 20);
    const GammaLadder lad = ladder_for(pot, 20);

    for (std::uint64_t seed : {1ull, 7ull, 991ull}) {
      const GeneratedPoint pt = generate_point(sch, lad, pot, seed);
      REQUIRE(static_cast<long long>(pt.word.size()) == sch.final_depth());
      REQUIRE(static_cast<int>(pt.levels.size()) == sch.J);

      // Determinism.
      const GeneratedPoint again = generate_point(sch, lad, pot, seed);
      CHECK(again.word == pt.word);

      // Exact containment in its own deepest cylinder.
      CHECK(cylinder(pt.word).contains(pt.value));
      CHECK(cylinder(Word(pt.word.begin(), pt.word.begin() + sch.n[1]))
                .contains(pt.value));

      long long cursor = sch.n[0] + (r - 1);
      for (int j = 1; j <= sch.J; ++j) {
        const LevelRecord& lev = pt.levels[j - 1];
        REQUIRE(static_cast<long long>(lev.block.size()) == sch.l[j]);
        REQUIRE(static_cast<int>(lev.windows.size()) == r);

        // Copied prefix: the block repeats the word's first t_j digits.
        for (long long i = 0; i < sch.t[j]; ++i) {
          CHECK(lev.block[i] == pt.word[i]);
          CHECK(pt.word[cursor + i] == pt.word[i]);
        }
        // Free digits lie in 1..M.
        for (long long i = sch.t[j]; i < sch.l[j]; ++i) {
          CHECK(lev.block[i] >= 1);
          CHECK(lev.block[i] <= sch.M);
        }
        cursor += sch.l[j];
        // Window digits live inside their recorded integer windows, and the
        // window exponents telescope to E_j exactly.
        double expo_sum = 0.0;
        for (int i = 0; i < r; ++i) {
          const WindowRecord& wr = lev.windows[i];
          CHECK(wr.position == cursor + i + 1);
          CHECK(wr.first <= wr.digit);
          CHECK(wr.digit <= wr.last);
          CHECK(pt.word[cursor + i] == wr.digit);
          CHECK(wr.first >= 1);
          expo_sum += wr.exponent;
        }
        CHECK(expo_sum ==
              Catch::Approx(lev.exponent)
                  .margin(1e-12 * std::max(1.0, lev.exponent)));
        cursor += r;
      }
      CHECK(cursor == sch.final_depth());
      CHECK(pt.widened_windows == 0);
    }
  }
}

TEST_CASE("every generated point passes block-local membership at each level") {
  for (int r : {1, 2}) {
    const PotentialSpec pot = tau_half(r);
    const Schedule sch = build_schedule(r, 1, {1, 2, 3, 4}, 4, 20);
    const GammaLadder lad = ladder_for(pot, 20);
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      const GeneratedPoint pt = generate_point(sch, lad, pot, seed);
      for (int j = 1; j <= sch.J; ++j) {
        REQUIRE(membership_at_level(pt, sch, pot, j));
      }
    }
  }
}

TEST_CASE("membership thresholds behave as the set definition dictates") {
  PotentialSpec pot;
  pot.tau = FunctionSpec::constant(1.0);
  pot.h = FunctionSpec::constant(std::numbers::ln2);
  // All-ones word: a_11 = 1 < e^{10 log 2} = 1024.
  const Word ones = all_ones(12);
  CHECK_FALSE(membership_check(ones, pot, 10, 1));

  // Zero tau: threshold e^0 = 1, met by any digit.
  PotentialSpec idle;
  idle.tau = FunctionSpec::constant(0.0);
  CHECK(membership_check(ones, idle, 10, 1));

  // A word whose tail digit clears the threshold.
  Word big = all_ones(10);
  big.push_back(BigInt(1025));
  CHECK(membership_check(big, pot, 10, 1));

  CHECK_THROWS_AS(membership_check(ones, pot, 12, 1), Error);  // too short
  CHECK_THROWS_AS(membership_check(ones, pot, 0, 1), Error);
  CHECK_THROWS_AS(membership_check(ones, pot, 5, 0), Error);
}

TEST_CASE("zero tau widens every window to its ceiling integer") {
  PotentialSpec pot;
  pot.tau = FunctionSpec::constant(0.0);
  const Schedule sch = build_schedule(1, 1, {1, 2}, 2, 5);
  const GammaLadder lad = gamma_ladder(1, 0.7);
  const GeneratedPoint pt = generate_point(sch, lad, pot, 3);
  // E_j = 0, so the real window [1, 2) holds no integer strictly above 1.
  CHECK(pt.widened_windows == 2);
  for (const LevelRecord& lev : pt.levels) {
    CHECK(lev.windows[0].widened);
    CHECK(lev.windows[0].digit == 2);
  }
  for (int j = 1; j <= sch.J; ++j) {
    CHECK(membership_at_level(pt, sch, pot, j));
  }
}

TEST_CASE("nonconstant tau seeds the outer cylinder at its grid argmin") {
  PotentialSpec pot;
  pot.tau = FunctionSpec::expression("2+(x-0.3)^2");
  const Schedule sch = build_schedule(1, 1, {1}, 1, 5);
  const GammaLadder lad = gamma_ladder(1, 0.7);
  const GeneratedPoint pt = generate_point(sch, lad, pot, 1);
  // 0.3 = [0; 3, 3]; the remaining seed digit pads with ones.
  CHECK(pt.word[0] == 3);
  CHECK(pt.word[1] == 3);
  CHECK(pt.word[2] == 1);
}

TEST_CASE("measure weights are consistent and normalize single families") {
  for (int r : {1, 2}) {
    const PotentialSpec pot = tau_half(r);
    const Schedule sch = build_schedule(r, 1, {1, 2, 3}, 3, 20);
    const GammaLadder lad = ladder_for(pot, 20);
    MeasureCache cache;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const GeneratedPoint pt = generate_point(sch, lad, pot, seed);
      const MeasureTree mt = assign_measure(sch, lad, pot, pt, &cache);
      REQUIRE(static_cast<int>(mt.levels.size()) == sch.J);
      CHECK(mt.max_consistency_error <= 1e-9);
      CHECK(mt.root_weight_log == 0.0);
      double expect = 0.0;
      for (const MeasureLevel& ml : mt.levels) {
        CHECK(ml.s_j > 0.0);
        CHECK(ml.s_j <= 1.0);
        CHECK(ml.family_size ==
              static_cast<std::size_t>(std::pow(sch.M, sch.m[ml.j])));
        CHECK(ml.block_weight_log < expect);  // splitting shrinks weights
        expect = ml.window_weight_logs.back();
        // Window fans split exactly uniformly.
        double run = ml.block_weight_log;
        for (std::size_t i = 0; i < ml.window_counts.size(); ++i) {
          run -= log_big(ml.window_counts[i]);
          CHECK(ml.window_weight_logs[i] ==
                Catch::Approx(run).margin(1e-12));
        }
      }
      CHECK(mt.leaf_weight_log == Catch::Approx(expect).margin(1e-12));
      CHECK(mt.leaf_weight_log < 0.0);
    }
    // Cached and uncached normalizations agree bit-for-bit.
    const GeneratedPoint pt = generate_point(sch, lad, pot, 13);
    const MeasureTree fresh = assign_measure(sch, lad, pot, pt, nullptr);
    const MeasureTree cached = assign_measure(sch, lad, pot, pt, &cache);
    CHECK(fresh.leaf_weight_log == cached.leaf_weight_log);
  }

  // One level, one free block: the block carries the full unit weight.
  PotentialSpec pot = tau_half(1);
  const Schedule tiny = build_schedule(1, 1, {1}, 1, 1);
  const GammaLadder lad = gamma_ladder(1, 0.7);
  const GeneratedPoint pt = generate_point(tiny, lad, pot, 1);
  const MeasureTree mt = assign_measure(tiny, lad, pot, pt);
  CHECK(mt.levels[0].family_size == 1);
  CHECK(mt.levels[0].block_weight_log == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("deep window splits approximate the idealized composition law") {
  // With large windows the uniform split over ~gamma_i^{E} integers composes
  // to the e^{-E} law between the block and the deepest window node.
  const PotentialSpec pot = tau_half(2);
  const Schedule sch = build_schedule(2, 1, {1, 2, 3}, 3, 20);
  const GammaLadder lad = ladder_for(pot, 20);
  MeasureCache cache;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GeneratedPoint pt = generate_point(sch, lad, pot, seed);
    const MeasureTree mt = assign_measure(sch, lad, pot, pt, &cache);
    const MeasureLevel& ml = mt.levels.back();
    const LevelRecord& lev = pt.levels.back();
    bool all_big = true;
    for (const WindowRecord& wr : lev.windows) all_big &= wr.first >= 8;
    if (!all_big) continue;
    double split = 0.0;
    for (const BigInt& c : ml.window_counts) split += log_big(c);
    CHECK(split == Catch::Approx(lev.exponent).margin(0.75 * sch.r));
  }
}

TEST_CASE("gap estimates hold in exact rational arithmetic") {
  // Exhaustive small prefixes: all digit words of depth <= 3 over {1..4}.
  std::vector<Word> prefixes{Word{}};
  for (int d = 0; d < 3; ++d) {
    std::vector<Word> next;
    for (const Word& w : prefixes) {
      if (w.size() == static_cast<std::size_t>(d)) {
        for (int a = 1; a <= 4; ++a) {
          Word e = w;
          e.emplace_back(a);
          next.push_back(std::move(e));
        }
      }
    }
    prefixes.insert(prefixes.end(), next.begin(), next.end());
  }

  for (const Word& w : prefixes) {
    const Convergents cv = convergents(w);
    for (std::uint32_t M : {3u, 5u, 20u}) {
      for (std::uint32_t b = 1; b < M && b <= 6; ++b) {
        const GapCheck g = gap_free_adjacent(w, b, M);
        INFO("prefix=" << to_string(w) << " b=" << b << " M=" << M);
        CHECK(g.holds);
        CHECK(g.gap > 0);
      }
    }
    for (long long ell : {2, 3, 10, 1000}) {
      const GapCheck g = gap_window_low(w, BigInt(ell));
      CHECK(g.holds);
      // Exact algebraic form: gap >= |I|/8 iff (7*ell - 8) q >= q_prev.
      const bool algebraic =
          (BigInt(7) * ell - 8) * cv.qn() >= cv.qn_prev();
      CHECK(g.holds == algebraic);
    }
  }

  CHECK_THROWS_AS(gap_free_adjacent(Word{}, 1, 2), Error);   // M < 3
  CHECK_THROWS_AS(gap_free_adjacent(Word{}, 3, 3), Error);   // b = M
  CHECK_THROWS_AS(gap_free_adjacent(Word{}, 0, 5), Error);
  CHECK_THROWS_AS(gap_window_low(Word{}, BigInt(1)), Error);  // window at 1
}

TEST_CASE("gap estimates hold at generated construction sites") {
  const PotentialSpec pot = tau_half(1);
  const Schedule sch = build_schedule(1, 1, {1, 2, 3}, 3, 20);
  const GammaLadder lad = ladder_for(pot, 20);
  int free_checked = 0, window_checked = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const GeneratedPoint pt = generate_point(sch, lad, pot, seed);
    // First free digit of every level.
    for (int j = 1; j <= sch.J; ++j) {
      const long long pos = sch.n[j - 1] + (sch.r - 1) + sch.t[j] + 1;
      const auto b = static_cast<std::uint32_t>(pt.word[pos - 1]);
      if (b < static_cast<std::uint32_t>(sch.M)) {
        const Word pre(pt.word.begin(), pt.word.begin() + pos - 1);
        CHECK(gap_free_adjacent(pre, b, sch.M).holds);
        ++free_checked;
      }
      const WindowRecord& wr = pt.levels[j - 1].windows[0];
      if (wr.first >= 2) {
        const Word pre(pt.word.begin(), pt.word.begin() + wr.position - 1);
        CHECK(gap_window_low(pre, wr.first).holds);
        ++window_checked;
      }
    }
  }
  CHECK(free_checked >= 100);
  CHECK(window_checked >= 100);
}

TEST_CASE("fundamental cylinders report the active digit constraint") {
  const PotentialSpec pot = tau_half(2);
  const Schedule sch = build_schedule(2, 1, {1, 2}, 2, 20);
  const GammaLadder lad = ladder_for(pot, 20);
  const GeneratedPoint pt = generate_point(sch, lad, pot, 5);

  // Inside the seed block: forced digits.
  FundamentalCylinder fc = fundamental_cylinder(sch, pt, 0);
  CHECK(fc.tag == CaseTag::k3e);
  CHECK(fc.level == 0);
  CHECK(fc.digit_lo == pt.word[0]);
  CHECK(fc.digit_lo == fc.digit_hi);

  const long long base1 = sch.n[0] + (sch.r - 1);
  // Copied region of level 1.
  fc = fundamental_cylinder(sch, pt, base1);
  CHECK(fc.tag == CaseTag::k3e);
  CHECK(fc.level == 1);
  CHECK(fc.digit_lo == pt.word[base1]);
  // Free region of level 1.
  fc = fundamental_cylinder(sch, pt, base1 + sch.t[1]);
  CHECK(fc.tag == CaseTag::k3a);
  CHECK(fc.digit_lo == 1);
  CHECK(fc.digit_hi == sch.M);
  // First window (order n_1 - 1 constrains digit n_1).
  fc = fundamental_cylinder(sch, pt, sch.n[1] - 1);
  CHECK(fc.tag == CaseTag::k3b);
  CHECK(fc.digit_lo == pt.levels[0].windows[0].first);
  CHECK(fc.digit_hi == pt.levels[0].windows[0].last);
  CHECK(std::string(to_string(fc.tag)) == "3b");
  // Final window of the r = 2 pair.
  fc = fundamental_cylinder(sch, pt, sch.n[1]);
  CHECK(fc.tag == CaseTag::k3d);
  CHECK(fc.digit_lo == pt.levels[0].windows[1].first);

  CHECK_THROWS_AS(fundamental_cylinder(sch, pt,
                                       static_cast<long long>(pt.word.size())),
                  Error);

  // r = 3 exposes an intermediate window tag.
  PotentialSpec pot3 = tau_half(3);
  const Schedule sch3 = build_schedule(3, 1, {1, 2}, 2, 20);
  const GammaLadder lad3 = gamma_ladder(3, 0.7);
  const GeneratedPoint pt3 = generate_point(sch3, lad3, pot3, 2);
  fc = fundamental_cylinder(sch3, pt3, sch3.n[1]);
  CHECK(fc.tag == CaseTag::k3c);
}
