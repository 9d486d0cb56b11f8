// End-to-end tests of the command-line binary: every subcommand is exercised
// through a real subprocess, outputs are parsed back with the library, and
// the exit-code contract (0 ok / 1 algorithmic failure / 2 input error) is
// pinned down together with byte-identical reproducibility.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "ckm/instance.hpp"
#include "ckm/round.hpp"

namespace {

struct CliResult {
  int status = -1;
  std::string out;
};

// Runs the tool with the given arguments, capturing stdout.  stderr is
// dropped unless the caller redirects it inside `args`.
CliResult run_cli(const std::string& args, bool keep_stderr = false) {
  const std::string cmd = std::string(CKM_CLI_PATH) + " " + args +
                          (keep_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int rc = ::pclose(pipe);
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return r;
}

std::string tmp_path(const std::string& name) {
  static const std::string dir = [] {
    const std::string d =
        (std::filesystem::temp_directory_path() /
         ("ckm_cli_" + std::to_string(::getpid())))
            .string();
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir + "/" + name;
}

// Value after the first line that starts with `key` followed by a space.
double report_value(const std::string& out, const std::string& key,
                    bool* found = nullptr) {
  std::istringstream ss(out);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind(key + " ", 0) == 0) {
      if (found) *found = true;
      return std::stod(line.substr(key.size() + 1));
    }
  }
  if (found) *found = false;
  return 0.0;
}

bool has_key(const std::string& out, const std::string& key) {
  bool found = false;
  report_value(out, key, &found);
  return found;
}

std::string gen_gap_file(int u, const std::string& name) {
  const std::string path = tmp_path(name);
  const CliResult r = run_cli("gen --gap " + std::to_string(u) +
                              " --L 100 -o " + path);
  REQUIRE(r.status == 0);
  return path;
}

}  // namespace

TEST_CASE("generator writes a loadable file and the relaxation is free",
          "[cli]") {
  const std::string path = gen_gap_file(2, "g2.ckm");
  const ckm::Instance inst = ckm::load_instance(path);
  CHECK(inst.num_facilities == 4);
  CHECK(inst.num_clients == 6);
  CHECK(inst.k == 3);

  const CliResult lp = run_cli("lp " + path);
  REQUIRE(lp.status == 0);
  bool found = false;
  const double value = report_value(lp.out, "lp_value", &found);
  REQUIRE(found);
  CHECK(std::abs(value) <= 1e-9);

  // --trace appends the fractional point itself.
  const CliResult traced = run_cli("lp --trace " + path);
  REQUIRE(traced.status == 0);
  CHECK(traced.out.find("\ny 0 ") != std::string::npos);
  CHECK(traced.out.find("\nx ") != std::string::npos);

  SECTION("random generation honours the requested shape") {
    const std::string rnd = tmp_path("r.ckm");
    REQUIRE(run_cli("gen --random 4,7,2 --seed 11 -o " + rnd).status == 0);
    const ckm::Instance ri = ckm::load_instance(rnd);
    CHECK(ri.num_facilities == 4);
    CHECK(ri.num_clients == 7);
    CHECK(ri.k == 2);
  }
}

TEST_CASE("basic rounding writes a verified solution within the opening bound",
          "[cli]") {
  const std::string path = gen_gap_file(2, "g2b.ckm");
  const std::string sol_path = tmp_path("g2b.sol");
  const CliResult r =
      run_cli("round --mode basic -o " + sol_path + " " + path);
  REQUIRE(r.status == 0);
  CHECK(has_key(r.out, "opened_total"));
  CHECK(has_key(r.out, "breakdown_total"));

  const ckm::Instance inst = ckm::load_instance(path);
  std::ifstream is(sol_path);
  REQUIRE(is.good());
  const ckm::IntegralSolution sol = ckm::parse_solution(is, inst);
  CHECK(ckm::verify_solution(inst, sol).empty());
  CHECK(sol.opened_total <= 4 * inst.k);
  CHECK(sol.cost <= 1e-7);  // co-located family rounds at no cost

  SECTION("grouping trace names representatives and tree edges") {
    const CliResult t = run_cli("round --mode basic --trace " + path);
    REQUIRE(t.status == 0);
    CHECK(t.out.find("rep 0 ") != std::string::npos);
    CHECK(t.out.find("edge ") != std::string::npos);
    CHECK(t.out.find("group 0 ") != std::string::npos);
  }
}

TEST_CASE("cutting-plane driver separates the co-located cluster family",
          "[cli]") {
  const std::string path = gen_gap_file(3, "g3.ckm");
  const std::string sol_path = tmp_path("g3.sol");
  const CliResult r = run_cli("solve --epsilon 1 --seed 1 -o " + sol_path +
                              " " + path);
  REQUIRE(r.status == 0);
  bool found = false;
  CHECK(report_value(r.out, "iterations", &found) >= 2.0);
  REQUIRE(found);
  const double cuts = report_value(r.out, "cuts_emitted", &found);
  REQUIRE(found);
  CHECK(cuts >= 1.0);

  const ckm::Instance inst = ckm::load_instance(path);
  std::ifstream is(sol_path);
  REQUIRE(is.good());
  const ckm::IntegralSolution sol = ckm::parse_solution(is, inst);
  CHECK(ckm::verify_solution(inst, sol).empty());
}

TEST_CASE("identical invocations are byte-identical", "[cli]") {
  const std::string path = gen_gap_file(3, "g3r.ckm");
  const std::string args = "solve --epsilon 1 --seed 7 " + path;
  const CliResult a = run_cli(args);
  const CliResult b = run_cli(args);
  REQUIRE(a.status == 0);
  CHECK(a.status == b.status);
  CHECK(a.out == b.out);

  const CliResult c = run_cli("bench --seeds 1-2 --random 4,6,2");
  const CliResult d = run_cli("bench --seeds 1-2 --random 4,6,2");
  REQUIRE(c.status == 0);
  CHECK(c.out == d.out);
}

TEST_CASE("exact subcommand prints the brute-force optimum", "[cli]") {
  const std::string path = gen_gap_file(2, "g2e.ckm");
  const CliResult r = run_cli("exact " + path);
  REQUIRE(r.status == 0);
  bool found = false;
  CHECK(report_value(r.out, "opt_cost", &found) == Catch::Approx(100.0));
  REQUIRE(found);
  CHECK(report_value(r.out, "opened_total", &found) == 3.0);
  REQUIRE(found);
}

TEST_CASE("audit subcommand reports zero failures on a sound pipeline",
          "[cli]") {
  const std::string path = gen_gap_file(2, "g2c.ckm");
  const CliResult r = run_cli("check " + path);
  REQUIRE(r.status == 0);
  bool found = false;
  CHECK(report_value(r.out, "checks_run", &found) >= 5.0);
  REQUIRE(found);
  CHECK(report_value(r.out, "failures", &found) == 0.0);
  REQUIRE(found);
}

TEST_CASE("bench emits a well-formed, self-consistent table", "[cli]") {
  const CliResult r = run_cli("bench --seeds 1-3 --random 4,6,2");
  REQUIRE(r.status == 0);
  std::istringstream ss(r.out);
  std::string header;
  REQUIRE(std::getline(ss, header));
  CHECK(header ==
        "seed\tlp_value\topt\tbasic_cost\tconfig_cost\tbasic_opened"
        "\tconfig_opened");
  int rows = 0;
  std::string line;
  while (std::getline(ss, line)) {
    std::istringstream row(line);
    long seed = -1;
    double lp = -1, opt = -1, basic = -1, config = -1;
    int basic_opened = -1, config_opened = -1;
    REQUIRE((row >> seed >> lp >> opt >> basic >> config >> basic_opened >>
             config_opened));
    ++rows;
    CHECK(seed == rows);
    CHECK(lp >= 0.0);
    CHECK(opt >= 0.0);
    // Pinned guarantees of the two algorithms on the relaxation value.
    CHECK(basic <= 11.0 * lp + 1e-7);
    CHECK(basic_opened <= 4 * 2);
    CHECK(config <= 252236.0 * lp + 1e-7);
    CHECK(config_opened >= 1);
  }
  CHECK(rows == 3);
}

TEST_CASE("bad inputs exit with status two", "[cli]") {
  CHECK(run_cli("lp " + tmp_path("missing.ckm")).status == 2);
  CHECK(run_cli("gen --gap 2").status == 2);  // -o is required
  const std::string out = tmp_path("never.ckm");
  CHECK(run_cli("gen -o " + out).status == 2);  // needs --gap or --random
  CHECK(run_cli("gen --gap 2 --random 3,3,1 -o " + out).status == 2);
  const std::string path = gen_gap_file(2, "g2x.ckm");
  CHECK(run_cli("round --mode bogus " + path).status == 2);
  CHECK(run_cli("solve --epsilon 3 " + path).status == 2);
  CHECK(run_cli("bench --seeds 5-2").status == 2);
  CHECK(run_cli("nonsense").status == 2);
}

TEST_CASE("exhausted budgets exit with status one", "[cli]") {
  const std::string path = gen_gap_file(3, "g3f.ckm");
  const CliResult r = run_cli("solve --max-iters 1 --seed 1 " + path, true);
  CHECK(r.status == 1);
  CHECK(r.out.find("iteration budget") != std::string::npos);
}
