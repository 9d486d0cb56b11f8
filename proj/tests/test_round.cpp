// Rounding stages: solution plumbing, the per-group transport program, the
// baseline rounding, the configuration rounding, and the cutting-plane
// driver that alternates solving and rounding.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "ckm/basiclp.hpp"
#include "ckm/cluster.hpp"
#include "ckm/configlp.hpp"
#include "ckm/constants.hpp"
#include "ckm/errors.hpp"
#include "ckm/instance.hpp"
#include "ckm/round.hpp"
#include "helpers.hpp"

namespace {

ckm::Instance zero_instance(int nf, int nc, int k, std::vector<int> caps) {
  ckm::Instance inst;
  inst.num_facilities = nf;
  inst.num_clients = nc;
  inst.k = k;
  inst.capacities = std::move(caps);
  const int n = nf + nc;
  inst.dist.assign(static_cast<std::size_t>(n) * n, 0.0);
  return inst;
}

// Two facilities and two clients on a line at coordinates f0=0, f1=10,
// c0=0, c1=10.
ckm::Instance two_sites_instance() {
  ckm::Instance inst;
  inst.num_facilities = 2;
  inst.num_clients = 2;
  inst.k = 2;
  inst.capacities = {1, 1};
  const double pos[4] = {0, 10, 0, 10};
  inst.dist.assign(16, 0.0);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      inst.dist[static_cast<std::size_t>(a) * 4 + b] =
          std::abs(pos[a] - pos[b]);
  return inst;
}

}  // namespace

TEST_CASE("solution checker flags each defect class", "[round]") {
  const ckm::Instance inst = zero_instance(2, 2, 2, {1, 1});
  ckm::IntegralSolution sol;
  sol.open_copies = {1, 1};
  sol.assignment = {0, 1};
  sol.cost = 0.0;
  sol.opened_total = 2;
  CHECK(ckm::verify_solution(inst, sol).empty());

  ckm::IntegralSolution bad = sol;
  bad.open_copies = {1};
  CHECK_THAT(ckm::verify_solution(inst, bad),
             Catch::Matchers::ContainsSubstring("wrong length"));

  bad = sol;
  bad.open_copies[0] = 3;
  bad.opened_total = 4;
  CHECK_THAT(ckm::verify_solution(inst, bad),
             Catch::Matchers::ContainsSubstring("outside {0, 1, 2}"));

  bad = sol;
  bad.opened_total = 1;
  CHECK_THAT(ckm::verify_solution(inst, bad),
             Catch::Matchers::ContainsSubstring("does not match copies"));

  bad = sol;
  bad.assignment = {-1, 1};
  CHECK_THAT(ckm::verify_solution(inst, bad),
             Catch::Matchers::ContainsSubstring("not assigned"));

  bad = sol;
  bad.open_copies = {1, 0};
  bad.opened_total = 1;
  CHECK_THAT(ckm::verify_solution(inst, bad),
             Catch::Matchers::ContainsSubstring("closed facility"));

  bad = sol;
  bad.assignment = {0, 0};  // two clients on a capacity-1 copy
  CHECK_THAT(ckm::verify_solution(inst, bad),
             Catch::Matchers::ContainsSubstring("capacity"));

  bad = sol;
  bad.cost = 3.5;
  CHECK_THAT(ckm::verify_solution(inst, bad),
             Catch::Matchers::ContainsSubstring("stored cost"));
}

TEST_CASE("solution text round-trips through write and parse", "[round]") {
  const ckm::Instance inst = two_sites_instance();
  ckm::IntegralSolution sol;
  sol.open_copies = {1, 2};
  sol.assignment = {0, 1};
  sol.cost = 0.0;
  sol.opened_total = 3;
  REQUIRE(ckm::verify_solution(inst, sol).empty());

  std::ostringstream os;
  ckm::write_solution(os, inst, sol);
  std::istringstream is(os.str());
  const ckm::IntegralSolution back = ckm::parse_solution(is, inst);
  CHECK(back.open_copies == sol.open_copies);
  CHECK(back.assignment == sol.assignment);
  CHECK(back.cost == sol.cost);
  CHECK(back.opened_total == sol.opened_total);
  CHECK(ckm::verify_solution(inst, back).empty());

  std::istringstream bad_header("ckm-sol v7\ncost 0 opened 1 k 1\n");
  CHECK_THROWS_AS(ckm::parse_solution(bad_header, inst), ckm::input_error);
  std::istringstream bad_summary("ckm-sol v1\ncost zero opened 1 k 1\n");
  CHECK_THROWS_AS(ckm::parse_solution(bad_summary, inst), ckm::input_error);
  std::istringstream bad_kind(
      "ckm-sol v1\ncost 0 opened 1 k 1\nshut 0 1\n");
  CHECK_THROWS_WITH(ckm::parse_solution(bad_kind, inst),
                    Catch::Matchers::ContainsSubstring("unknown line kind"));
  std::istringstream bad_open(
      "ckm-sol v1\ncost 0 opened 1 k 1\nopen 9 1\n");
  CHECK_THROWS_AS(ckm::parse_solution(bad_open, inst), ckm::input_error);
}

TEST_CASE("transport program picks the cheap facility when slack allows",
          "[round]") {
  const ckm::MoveResult mv =
      ckm::move_lp_group({2, 2}, {1.0, 3.0}, 2.0, 0, 1.5);
  CHECK(testutil::close(mv.objective, 2.0, 1e-9));
  CHECK(testutil::close(mv.alpha[0], 2.0, 1e-9));
  CHECK(testutil::close(mv.alpha[1], 0.0, 1e-9));
  CHECK(ckm::fractional_count(mv.alpha, {2, 2}) == 0);
}

TEST_CASE("transport program splits when the opening budget binds", "[round]") {
  // alpha0 + alpha1 = 2 and alpha0 + alpha1/4 <= 1 force
  // alpha = (2/3, 4/3) at the cheap-heavy optimum.
  const ckm::MoveResult mv =
      ckm::move_lp_group({1, 4}, {0.0, 1.0}, 2.0, 0, 1.0);
  CHECK(testutil::close(mv.objective, 4.0 / 3.0, 1e-9));
  CHECK(testutil::close(mv.alpha[0], 2.0 / 3.0, 1e-9));
  CHECK(testutil::close(mv.alpha[1], 4.0 / 3.0, 1e-9));
  // A vertex of the two-row program has at most two fractional entries.
  CHECK(ckm::fractional_count(mv.alpha, {1, 4}) == 2);
}

TEST_CASE("transport program edge cases and witness checks", "[round]") {
  {  // zero demand short-circuits
    const ckm::MoveResult mv =
        ckm::move_lp_group({1, 1}, {5.0, 5.0}, 0.0, 0, 1.0);
    CHECK(mv.objective == 0.0);
    CHECK(mv.alpha == std::vector<double>{0.0, 0.0});
  }
  CHECK_THROWS_AS(ckm::move_lp_group({1}, {1.0}, -1.0, 0, 1.0),
                  ckm::internal_error);
  {  // an over-constrained program without a witness is a hard failure
    CHECK_THROWS_AS(ckm::move_lp_group({1, 2}, {0.0, 5.0}, 2.0, 1, 1.5),
                    ckm::internal_error);
  }
  {  // a valid witness passes and dominates the optimum
    const std::vector<double> witness = {1.0, 1.0};
    const ckm::MoveResult mv =
        ckm::move_lp_group({2, 2}, {1.0, 3.0}, 2.0, 0, 1.5, &witness);
    CHECK(mv.objective <= 1.0 * 1.0 + 1.0 * 3.0 + 1e-9);
  }
  {  // witness that does not carry the demand
    const std::vector<double> witness = {0.5, 0.0};
    CHECK_THROWS_WITH(
        ckm::move_lp_group({2, 2}, {1.0, 3.0}, 2.0, 0, 1.5, &witness),
        Catch::Matchers::ContainsSubstring("does not carry"));
  }
  {  // witness beyond the opening budget
    const std::vector<double> witness = {2.0, 0.0};
    CHECK_THROWS_WITH(
        ckm::move_lp_group({2, 2}, {1.0, 3.0}, 2.0, 1, 1.5, &witness),
        Catch::Matchers::ContainsSubstring("opening budget"));
  }
  {  // witness outside the per-facility bounds
    const std::vector<double> witness = {3.0, -1.0};
    CHECK_THROWS_WITH(
        ckm::move_lp_group({2, 2}, {1.0, 3.0}, 2.0, 0, 1.5, &witness),
        Catch::Matchers::ContainsSubstring("outside its bounds"));
  }
}

TEST_CASE("fractional count only sees strictly interior values", "[round]") {
  CHECK(ckm::fractional_count({0.0, 1.0, 0.5}, {1, 1, 1}) == 1);
  CHECK(ckm::fractional_count({0.25, 1.75}, {1, 2}) == 2);
  CHECK(ckm::fractional_count({}, {}) == 0);
}

TEST_CASE("final assignment preserves fixed clients and completes the rest",
          "[round]") {
  const ckm::Instance inst = two_sites_instance();
  ckm::IntegralSolution sol;
  ckm::final_assignment(inst, {1, 1}, {-1, -1}, &sol);
  CHECK(sol.assignment == std::vector<int>{0, 1});  // both trips free
  CHECK(sol.cost == 0.0);
  CHECK(sol.opened_total == 2);

  // Fixing client 0 to the far facility costs 10 and pushes client 1 to
  // the remaining seat.
  ckm::final_assignment(inst, {1, 1}, {1, -1}, &sol);
  CHECK(sol.assignment == std::vector<int>{1, 0});
  CHECK(testutil::close(sol.cost, 20.0, 1e-12));
  CHECK(ckm::verify_solution(inst, sol).empty());
}

TEST_CASE("final assignment rejects impossible completions", "[round]") {
  const ckm::Instance inst = zero_instance(2, 2, 2, {1, 1});
  ckm::IntegralSolution sol;
  // Opened capacity 1 cannot cover two clients.
  CHECK_THROWS_WITH(
      ckm::final_assignment(inst, {1, 0}, {-1, -1}, &sol),
      Catch::Matchers::ContainsSubstring("cannot cover"));
  // Client fixed to a closed facility.
  CHECK_THROWS_WITH(ckm::final_assignment(inst, {1, 0}, {-1, 1}, &sol),
                    Catch::Matchers::ContainsSubstring("closed facility"));
  // Two clients fixed onto one capacity-1 copy.
  CHECK_THROWS_WITH(ckm::final_assignment(inst, {1, 1}, {0, 0}, &sol),
                    Catch::Matchers::ContainsSubstring("exceeds capacity"));
  // Size mismatch.
  CHECK_THROWS_AS(ckm::final_assignment(inst, {1}, {-1, -1}, &sol),
                  ckm::internal_error);
}

TEST_CASE("baseline rounding solves a co-located instance for free",
          "[round]") {
  const ckm::Instance inst = zero_instance(2, 3, 1, {3, 3});
  const testutil::Pipeline p = testutil::run_pipeline(inst);
  ckm::RoundReport report;
  std::vector<ckm::MoveRecord> records;
  const ckm::IntegralSolution sol =
      ckm::round_basic(inst, p.frac, p.shares, p.cl, &report, &records);
  CHECK(ckm::verify_solution(inst, sol).empty());
  CHECK(sol.cost == 0.0);
  CHECK(sol.opened_total <= 4 * inst.k);
  CHECK(report.cost == sol.cost);
  CHECK(report.opened_total == sol.opened_total);
  REQUIRE(records.size() == 1);
  CHECK(records[0].frac_count <= 2);
}

TEST_CASE("baseline rounding meets its guarantees on random instances",
          "[round]") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u}) {
    ckm::RandomSpec spec = testutil::small_spec(seed, 6, 10, 3);
    const ckm::Instance inst = ckm::gen_random(spec);
    const testutil::Pipeline p = testutil::run_pipeline(inst);
    ckm::RoundReport report;
    std::vector<ckm::MoveRecord> records;
    const ckm::IntegralSolution sol =
        ckm::round_basic(inst, p.frac, p.shares, p.cl, &report, &records);

    CHECK(ckm::verify_solution(inst, sol).empty());
    CHECK(sol.opened_total <= 4 * inst.k);
    CHECK(sol.cost <=
          11.0 * p.frac.lp_value + 1e-7 * std::max(1.0, p.frac.lp_value));
    // One transport program per cluster, each resolving at a vertex.
    CHECK(records.size() == p.cl.reps.size());
    for (const ckm::MoveRecord& r : records) {
      CHECK(r.frac_count <= 2);
      CHECK(r.opened <=
            static_cast<int>(std::floor(r.budget + 1e-7)) + 2);
    }
    // The moving-cost breakdown upper-bounds the matched cost.
    const double breakdown = ckm::report_breakdown_total(report);
    CHECK(sol.cost <= breakdown + 1e-7 * std::max(1.0, breakdown));
    CHECK(testutil::close(report.ratio, sol.cost / p.frac.lp_value, 1e-12));
    CHECK(testutil::close(report.cardinality_slack,
                          static_cast<double>(sol.opened_total) / inst.k,
                          1e-12));
  }
}

TEST_CASE("baseline rounding is free on the lower-bound family", "[round]") {
  const ckm::Instance inst = ckm::gen_gap_instance(2, 100.0);
  const testutil::Pipeline p = testutil::run_pipeline(inst);
  REQUIRE(testutil::close(p.frac.lp_value, 0.0, 1e-9));
  const ckm::IntegralSolution sol =
      ckm::round_basic(inst, p.frac, p.shares, p.cl);
  CHECK(ckm::verify_solution(inst, sol).empty());
  CHECK(sol.cost <= 1e-7);  // eleven times a zero relaxation value
  CHECK(sol.opened_total <= 4 * inst.k);
}

TEST_CASE("configuration rounding reports the infeasible pair on the "
          "lower-bound family",
          "[round]") {
  const ckm::Instance inst = ckm::gen_gap_instance(3, 100.0);
  const testutil::Pipeline p = testutil::run_pipeline(inst);
  std::mt19937_64 rng(7);
  const ckm::ConfigRoundOutcome out =
      ckm::round_config(inst, p.frac, p.shares, p.cl, 1.0, rng);
  REQUIRE_FALSE(out.success);
  // The violated set is one cluster's two co-located facilities.
  REQUIRE(out.violated_set.size() == 2);
  CHECK(inst.d_ff(out.violated_set[0], out.violated_set[1]) == 0.0);
  CHECK(out.cut_violation > 1e-9);
  CHECK(ckm::cut_value(out.cut, p.frac.x, p.frac.y) > 1e-9);
}

TEST_CASE("configuration rounding succeeds for free on a co-located instance",
          "[round]") {
  const ckm::Instance inst = zero_instance(2, 3, 1, {3, 3});
  const testutil::Pipeline p = testutil::run_pipeline(inst);
  std::mt19937_64 rng(11);
  const ckm::ConfigRoundOutcome out =
      ckm::round_config(inst, p.frac, p.shares, p.cl, 1.0, rng);
  REQUIRE(out.success);
  CHECK(ckm::verify_solution(inst, out.sol).empty());
  CHECK(out.sol.cost == 0.0);
  CHECK(out.sol.opened_total <= 2 * inst.k);  // floor((1 + 5/5) k)
  CHECK(out.concentrated_nodes >= 1);
  CHECK(out.preassigned_count >= 0);
}

TEST_CASE("configuration rounding honors its guarantees when it succeeds",
          "[round]") {
  const ckm::GuaranteeParams gp = ckm::GuaranteeParams::from_epsilon(1.0);
  const double K = ckm::cost_guarantee_factor(gp.ell, gp.ell2);
  int successes = 0;
  for (std::uint64_t seed : {1u, 2u, 3u, 5u, 9u}) {
    ckm::RandomSpec spec = testutil::small_spec(seed, 5, 8, 3);
    const ckm::Instance inst = ckm::gen_random(spec);
    const testutil::Pipeline p = testutil::run_pipeline(inst);
    std::mt19937_64 rng(seed);
    const ckm::ConfigRoundOutcome out =
        ckm::round_config(inst, p.frac, p.shares, p.cl, 1.0, rng);
    if (!out.success) {
      // The reported inequality must separate the current point.
      CHECK(ckm::cut_value(out.cut, p.frac.x, p.frac.y) > 1e-9);
      continue;
    }
    ++successes;
    CHECK(ckm::verify_solution(inst, out.sol).empty());
    CHECK(out.sol.opened_total <=
          static_cast<int>(std::floor((1.0 + 5.0 / gp.ell) * inst.k + 1e-7)));
    CHECK(out.sol.cost <=
          K * p.frac.lp_value + 1e-7 * std::max(1.0, K * p.frac.lp_value));
    const double breakdown =
        out.preassign_cost + out.client_move_cost + out.group_move_cost;
    CHECK(out.sol.cost <= breakdown + 1e-7 * std::max(1.0, breakdown));
    for (const ckm::MoveRecord& r : out.moves) CHECK(r.frac_count <= 2);
  }
  // The family is easy enough that rounding usually goes through directly.
  CHECK(successes >= 1);
}

TEST_CASE("driver finishes without inequalities on a co-located instance",
          "[round]") {
  const ckm::Instance inst = zero_instance(2, 3, 1, {3, 3});
  std::mt19937_64 rng(3);
  const ckm::SolveResult res = ckm::cutting_plane_solve(inst, 1.0, rng);
  CHECK(res.sol.cost == 0.0);
  CHECK(ckm::verify_solution(inst, res.sol).empty());
  CHECK(res.iterations == 1);
  CHECK(res.cuts.empty());
  CHECK(res.report.cuts_emitted == 0);
}

TEST_CASE("driver closes the integrality gap family with valid inequalities",
          "[round]") {
  const ckm::Instance inst = ckm::gen_gap_instance(3, 100.0);
  std::mt19937_64 rng(1);
  const ckm::SolveResult res = ckm::cutting_plane_solve(inst, 1.0, rng);

  CHECK(ckm::verify_solution(inst, res.sol).empty());
  CHECK(res.iterations <= 50);
  REQUIRE(res.cuts.size() >= 1);
  CHECK(res.cuts.size() == static_cast<std::size_t>(res.iterations - 1));
  CHECK(res.report.cuts_emitted == static_cast<int>(res.cuts.size()));
  // The relaxation value must have been lifted off zero before rounding
  // could succeed, and the final cost obeys the guarantee against it.
  const ckm::GuaranteeParams gp = ckm::GuaranteeParams::from_epsilon(1.0);
  CHECK(res.frac.lp_value > 1e-9);
  CHECK(res.sol.cost <= ckm::cost_guarantee_factor(gp.ell, gp.ell2) *
                                res.frac.lp_value +
                            1e-7);
  CHECK(res.sol.opened_total <=
        static_cast<int>(std::floor((1.0 + 5.0 / gp.ell) * inst.k + 1e-7)));

  // Deterministic replay: the t-th inequality was extracted at the centered
  // optimum over the first t inequalities, and must cut that point off.
  for (std::size_t t = 0; t < res.cuts.size(); ++t) {
    const std::vector<ckm::Cut> prefix(res.cuts.begin(),
                                       res.cuts.begin() + t);
    const ckm::FractionalSolution frac_t =
        ckm::detail::center_on_cuts(inst, prefix, ckm::solve_basic(inst, prefix));
    CHECK(ckm::cut_value(res.cuts[t], frac_t.x, frac_t.y) > 1e-9);
    // Earlier inequalities hold at the point that produced the next one.
    for (std::size_t u = 0; u < t; ++u)
      CHECK(ckm::cut_value(res.cuts[u], frac_t.x, frac_t.y) <= 1e-7);
  }
}

TEST_CASE("driver validates its iteration budget", "[round]") {
  const ckm::Instance inst = ckm::gen_gap_instance(3, 100.0);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(ckm::cutting_plane_solve(inst, 1.0, rng, 0),
                  ckm::input_error);
  std::mt19937_64 rng2(1);
  CHECK_THROWS_WITH(
      ckm::cutting_plane_solve(inst, 1.0, rng2, 1),
      Catch::Matchers::ContainsSubstring("iteration budget exhausted"));
}

TEST_CASE("report writer emits every field with the breakdown total",
          "[round]") {
  ckm::RoundReport r;
  r.opened_total = 4;
  r.cost = 12.5;
  r.lp_value = 5.0;
  r.ratio = 2.5;
  r.cardinality_slack = 1.5;
  r.cuts_emitted = 3;
  r.preassign_cost = 1.5;
  r.client_move_cost = 4.0;
  r.group_move_cost = 7.5;
  CHECK(ckm::report_breakdown_total(r) == 13.0);

  std::ostringstream os;
  ckm::write_report(os, r);
  const std::string text = os.str();
  for (const char* key :
       {"opened_total 4", "cost 12.5", "lp_value 5", "ratio 2.5",
        "cardinality_slack 1.5", "cuts_emitted 3", "preassign_cost 1.5",
        "client_move_cost 4", "group_move_cost 7.5", "breakdown_total 13"}) {
    INFO(key);
    CHECK(text.find(key) != std::string::npos);
  }
}
