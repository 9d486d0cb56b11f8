// Command-line front end: generate instances, solve the relaxation, run the
// two rounding algorithms, drive the cutting-plane loop, query the exact
// oracle, audit pipeline artifacts, and sweep benchmark seeds.
//
// Exit codes: 0 success, 1 algorithmic failure (iteration or retry budgets
// exhausted, infeasible configuration system, failed audit), 2 input error
// (bad flags, unreadable files, malformed instances).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ckm/basiclp.hpp"
#include "ckm/cluster.hpp"
#include "ckm/configlp.hpp"
#include "ckm/constants.hpp"
#include "ckm/errors.hpp"
#include "ckm/grouping.hpp"
#include "ckm/instance.hpp"
#include "ckm/oracle.hpp"
#include "ckm/round.hpp"

namespace {

struct Options {
  double epsilon = 1.0;
  std::uint64_t seed = 1;
  int max_iters = 50;
  int max_retries = 200;
  std::string mode = "basic";
  bool trace = false;
  std::string out;
  int gap_u = 0;
  double gap_l = 100.0;
  std::string random_dims;
  std::string seeds_range = "1-10";
  std::string instance_path;
};

ckm::RandomSpec parse_random_dims(const std::string& dims,
                                  std::uint64_t seed) {
  ckm::RandomSpec spec;
  spec.seed = seed;
  if (dims.empty()) return spec;
  char c1 = 0, c2 = 0;
  std::istringstream ss(dims);
  if (!(ss >> spec.num_facilities >> c1 >> spec.num_clients >> c2 >>
        spec.k) ||
      c1 != ',' || c2 != ',' || (ss >> std::ws, !ss.eof()))
    throw ckm::input_error("--random expects nF,nC,k (got '" + dims + "')");
  return spec;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(
    const std::string& text) {
  char dash = 0;
  std::uint64_t lo = 0, hi = 0;
  std::istringstream ss(text);
  if (!(ss >> lo >> dash >> hi) || dash != '-' || lo > hi ||
      (ss >> std::ws, !ss.eof()))
    throw ckm::input_error("--seeds expects lo-hi (got '" + text + "')");
  return {lo, hi};
}

struct PipelineArtifacts {
  ckm::FractionalSolution frac;
  ckm::CostShares shares;
  ckm::Clustering cl;
};

PipelineArtifacts run_pipeline(const ckm::Instance& inst) {
  PipelineArtifacts p;
  p.frac = ckm::solve_basic(inst);
  p.shares = ckm::cost_shares(inst, p.frac);
  p.cl = ckm::voronoi_partition(inst,
                                ckm::select_representatives(inst, p.shares));
  return p;
}

void emit_solution(const Options& opt, const ckm::Instance& inst,
                   const ckm::IntegralSolution& sol) {
  if (opt.out.empty()) {
    ckm::write_solution(std::cout, inst, sol);
    return;
  }
  std::ofstream os(opt.out);
  if (!os) throw ckm::input_error("cannot write '" + opt.out + "'");
  ckm::write_solution(os, inst, sol);
}

const char* color_name(ckm::EdgeColor c) {
  switch (c) {
    case ckm::EdgeColor::Black:
      return "black";
    case ckm::EdgeColor::Grey:
      return "grey";
    default:
      return "white";
  }
}

// Text dump of the spanning-forest grouping used by the configuration
// rounding, for inspection at a given accuracy knob.
void dump_grouping(std::ostream& os, const ckm::Instance& inst,
                   const PipelineArtifacts& p, int ell) {
  const ckm::ColoredMst mst = ckm::build_colored_mst(inst, p.cl, p.frac, ell);
  os << "reps " << p.cl.reps.size() << "\n";
  for (std::size_t v = 0; v < p.cl.reps.size(); ++v) {
    os << "rep " << v << " client " << p.cl.reps[v] << " facilities";
    for (int i : p.cl.U[v]) os << " " << i;
    os << "\n";
  }
  for (const ckm::MstEdge& e : mst.edges) {
    os << "edge " << e.u << " " << e.v << " " << ckm::format_real(e.length)
       << " " << color_name(e.color);
    if (e.color == ckm::EdgeColor::Grey)
      os << " toward " << e.grey_from;
    os << "\n";
  }
  const ckm::ContractedForest forest = ckm::contract(inst, p.cl, mst, ell);
  for (std::size_t n = 0; n < forest.nodes.size(); ++n) {
    const ckm::ForestNode& node = forest.nodes[n];
    os << "node " << n << " weight " << ckm::format_real(node.weight)
       << (node.root ? " root" : " parent ") << (node.root ? "" : std::to_string(node.parent))
       << " members";
    for (int pos : node.members) os << " " << pos;
    os << "\n";
  }
  const ckm::GroupDecomposition gd = ckm::decompose(forest, ell);
  for (std::size_t g = 0; g < gd.groups.size(); ++g) {
    const ckm::Group& grp = gd.groups[g];
    os << "group " << g << " tree " << grp.tree_index
       << (grp.is_root_group ? " root" : " subtree") << " reps";
    for (int pos : grp.reps) os << " " << pos;
    os << "\n";
  }
}

int cmd_gen(const Options& opt) {
  if ((opt.gap_u > 0) == !opt.random_dims.empty())
    throw ckm::input_error("gen needs exactly one of --gap or --random");
  const ckm::Instance inst =
      opt.gap_u > 0
          ? ckm::gen_gap_instance(opt.gap_u, opt.gap_l)
          : ckm::gen_random(parse_random_dims(opt.random_dims, opt.seed));
  ckm::save_instance(opt.out, inst);
  return 0;
}

int cmd_lp(const Options& opt) {
  const ckm::Instance inst = ckm::load_instance(opt.instance_path);
  const ckm::FractionalSolution frac = ckm::solve_basic(inst);
  std::cout << "lp_value " << ckm::format_real(frac.lp_value) << "\n";
  if (opt.trace) {
    for (int i = 0; i < inst.num_facilities; ++i)
      std::cout << "y " << i << " " << ckm::format_real(frac.y[i]) << "\n";
    for (int i = 0; i < inst.num_facilities; ++i)
      for (int j = 0; j < inst.num_clients; ++j) {
        const double v = frac.x[static_cast<std::size_t>(i) *
                                    inst.num_clients +
                                j];
        if (v > ckm::tol::mass)
          std::cout << "x " << i << " " << j << " " << ckm::format_real(v)
                    << "\n";
      }
  }
  return 0;
}

int cmd_round(const Options& opt) {
  const ckm::Instance inst = ckm::load_instance(opt.instance_path);
  const PipelineArtifacts p = run_pipeline(inst);
  const ckm::GuaranteeParams gp =
      ckm::GuaranteeParams::from_epsilon(opt.epsilon);
  if (opt.trace) dump_grouping(std::cout, inst, p, gp.ell);

  ckm::RoundReport report;
  ckm::IntegralSolution sol;
  if (opt.mode == "basic") {
    std::vector<ckm::MoveRecord> records;
    sol = ckm::round_basic(inst, p.frac, p.shares, p.cl, &report, &records);
  } else {
    std::mt19937_64 rng(opt.seed);
    ckm::ConfigRoundOutcome out = ckm::round_config(
        inst, p.frac, p.shares, p.cl, opt.epsilon, rng, opt.max_retries);
    if (!out.success) {
      std::string ids;
      for (int i : out.violated_set)
        ids += (ids.empty() ? "" : ",") + std::to_string(i);
      throw ckm::algorithm_failure(
          "configuration system infeasible for facility group {" + ids +
          "} (violation " + ckm::format_real(out.cut_violation) +
          "); run the solve subcommand to iterate with separating "
          "inequalities");
    }
    sol = out.sol;
    report.opened_total = sol.opened_total;
    report.cost = sol.cost;
    report.lp_value = p.frac.lp_value;
    report.ratio = p.frac.lp_value > 0 ? sol.cost / p.frac.lp_value : 0.0;
    report.cardinality_slack = static_cast<double>(sol.opened_total) / inst.k;
    report.cuts_emitted = 0;
    report.preassign_cost = out.preassign_cost;
    report.client_move_cost = out.client_move_cost;
    report.group_move_cost = out.group_move_cost;
  }
  emit_solution(opt, inst, sol);
  ckm::write_report(std::cout, report);
  return 0;
}

int cmd_solve(const Options& opt) {
  const ckm::Instance inst = ckm::load_instance(opt.instance_path);
  std::mt19937_64 rng(opt.seed);
  const ckm::SolveResult res =
      ckm::cutting_plane_solve(inst, opt.epsilon, rng, opt.max_iters,
                               opt.max_retries,
                               opt.trace ? &std::cout : nullptr);
  emit_solution(opt, inst, res.sol);
  std::cout << "iterations " << res.iterations << "\n";
  ckm::write_report(std::cout, res.report);
  return 0;
}

int cmd_exact(const Options& opt) {
  const ckm::Instance inst = ckm::load_instance(opt.instance_path);
  const ckm::ExactResult res = ckm::exact_opt(inst);
  std::cout << "opt_cost " << ckm::format_real(res.opt_cost) << "\n";
  int copies = 0;
  for (int c : res.opt_open) copies += c;
  std::cout << "opened_total " << copies << "\n";
  for (int i = 0; i < inst.num_facilities; ++i)
    if (res.opt_open[i] > 0)
      std::cout << "open " << i << " " << res.opt_open[i] << "\n";
  return 0;
}

int cmd_check(const Options& opt) {
  const ckm::Instance inst = ckm::load_instance(opt.instance_path);
  const PipelineArtifacts p = run_pipeline(inst);
  const ckm::GuaranteeParams gp =
      ckm::GuaranteeParams::from_epsilon(opt.epsilon);
  ckm::RoundReport report;
  std::vector<ckm::MoveRecord> records;
  const ckm::IntegralSolution sol =
      ckm::round_basic(inst, p.frac, p.shares, p.cl, &report, &records);
  const ckm::AuditReport audit =
      ckm::audit(inst, p.frac, p.shares, p.cl, gp.ell, &sol, &records);
  std::cout << "checks_run " << audit.checks_run << "\n";
  std::cout << "failures " << audit.failures.size() << "\n";
  for (const std::string& f : audit.failures)
    std::cout << "failure " << f << "\n";
  return audit.ok() ? 0 : 1;
}

int cmd_bench(const Options& opt) {
  const auto [lo, hi] = parse_seed_range(opt.seeds_range);
  std::mt19937_64 rng(opt.seed);  // one stream for all algorithmic draws
  std::cout << "seed\tlp_value\topt\tbasic_cost\tconfig_cost\tbasic_opened"
               "\tconfig_opened\n";
  for (std::uint64_t s = lo; s <= hi; ++s) {
    const ckm::Instance inst =
        ckm::gen_random(parse_random_dims(opt.random_dims, s));
    const PipelineArtifacts p = run_pipeline(inst);
    const double opt_cost = ckm::exact_opt(inst).opt_cost;
    const ckm::IntegralSolution basic =
        ckm::round_basic(inst, p.frac, p.shares, p.cl);
    const ckm::SolveResult config = ckm::cutting_plane_solve(
        inst, opt.epsilon, rng, opt.max_iters, opt.max_retries);
    std::cout << s << "\t" << ckm::format_real(p.frac.lp_value) << "\t"
              << ckm::format_real(opt_cost) << "\t"
              << ckm::format_real(basic.cost) << "\t"
              << ckm::format_real(config.sol.cost) << "\t"
              << basic.opened_total << "\t" << config.sol.opened_total
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"capacitated k-median toolkit: relaxation, rounding, "
               "cutting planes, exact oracle"};
  app.require_subcommand(1);

  CLI::App* gen = app.add_subcommand("gen", "generate an instance file");
  gen->add_option("--gap", opt.gap_u,
                  "co-located cluster family with this many clusters");
  gen->add_option("--L", opt.gap_l, "inter-cluster distance (default 100)");
  gen->add_option("--random", opt.random_dims, "random instance nF,nC,k");
  gen->add_option("--seed", opt.seed, "generation seed");
  gen->add_option("-o", opt.out, "output path")->required();

  const auto add_instance_arg = [&](CLI::App* sub) {
    sub->add_option("instance", opt.instance_path, "instance file")
        ->required();
  };

  CLI::App* lp = app.add_subcommand("lp", "solve the relaxation");
  add_instance_arg(lp);
  lp->add_flag("--trace", opt.trace, "also print the fractional point");

  CLI::App* round = app.add_subcommand("round", "run one rounding");
  add_instance_arg(round);
  round->add_option("--mode", opt.mode, "basic or config")
      ->check(CLI::IsMember({"basic", "config"}));
  round->add_option("--epsilon", opt.epsilon, "accuracy knob in (0, 2]");
  round->add_option("--seed", opt.seed, "randomness seed");
  round->add_option("--max-retries", opt.max_retries,
                    "pre-assignment retry budget");
  round->add_flag("--trace", opt.trace, "dump the grouping forest");
  round->add_option("-o", opt.out, "solution output path");

  CLI::App* solve = app.add_subcommand("solve", "cutting-plane driver");
  add_instance_arg(solve);
  solve->add_option("--epsilon", opt.epsilon, "accuracy knob in (0, 2]");
  solve->add_option("--seed", opt.seed, "randomness seed");
  solve->add_option("--max-iters", opt.max_iters, "iteration budget");
  solve->add_option("--max-retries", opt.max_retries,
                    "pre-assignment retry budget");
  solve->add_flag("--trace", opt.trace, "print per-iteration progress");
  solve->add_option("-o", opt.out, "solution output path");

  CLI::App* exact = app.add_subcommand("exact", "brute-force optimum");
  add_instance_arg(exact);

  CLI::App* check = app.add_subcommand("check", "audit pipeline invariants");
  add_instance_arg(check);
  check->add_option("--epsilon", opt.epsilon, "accuracy knob in (0, 2]");

  CLI::App* bench = app.add_subcommand("bench", "sweep benchmark seeds");
  bench->add_option("--seeds", opt.seeds_range, "seed range lo-hi");
  bench->add_option("--random", opt.random_dims, "instance shape nF,nC,k");
  bench->add_option("--epsilon", opt.epsilon, "accuracy knob in (0, 2]");
  bench->add_option("--seed", opt.seed, "algorithmic randomness seed");
  bench->add_option("--max-iters", opt.max_iters, "iteration budget");
  bench->add_option("--max-retries", opt.max_retries,
                    "pre-assignment retry budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(opt);
    if (lp->parsed()) return cmd_lp(opt);
    if (round->parsed()) return cmd_round(opt);
    if (solve->parsed()) return cmd_solve(opt);
    if (exact->parsed()) return cmd_exact(opt);
    if (check->parsed()) return cmd_check(opt);
    if (bench->parsed()) return cmd_bench(opt);
  } catch (const ckm::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
