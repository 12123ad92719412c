#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "fadegp/errors.hpp"
#include "fadegp/textio.hpp"

using namespace fadegp;

namespace {

std::string bin() {
  const char* p = std::getenv("FADEGP_BIN");
  REQUIRE(p != nullptr);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " > /tmp/fadegp_cli_out.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string last_output() { return read_text_file("/tmp/fadegp_cli_out.txt"); }

const std::string dir = "/tmp/fadegp_cli_work";

struct Workspace {
  Workspace() {
    REQUIRE(std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str()) == 0);
    // One small, easy dataset shared by the pipeline tests.
    REQUIRE(run("simulate --out " + dir + "/data.csv --n 6 --times 7 --seed 5"
                " --rho 1.2,1.5,0.9,1.8 --sigma 0.2 --knots 2") == 0);
  }
};

const Workspace& workspace() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("help and argument errors") {
  CHECK(run("--help") == 0);
  CHECK(run("fit --help") == 0);
  CHECK(run("") == 2);                       // subcommand required
  CHECK(run("fit --data x.csv") == 2);       // --out missing
  CHECK(run("fit --bogus 1") == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("simulate is deterministic per seed") {
  (void)workspace();
  CHECK(run("simulate --out " + dir + "/s1.csv --n 4 --times 5 --seed 9 --truth-out " + dir +
            "/t1.json") == 0);
  CHECK(run("simulate --out " + dir + "/s2.csv --n 4 --times 5 --seed 9 --truth-out " + dir +
            "/t2.json") == 0);
  CHECK(read_text_file(dir + "/s1.csv") == read_text_file(dir + "/s2.csv"));
  CHECK(read_text_file(dir + "/t1.json") == read_text_file(dir + "/t2.json"));
  CHECK(run("simulate --out " + dir + "/s3.csv --n 4 --times 5 --seed 10") == 0);
  CHECK(read_text_file(dir + "/s1.csv") != read_text_file(dir + "/s3.csv"));
  CHECK(run("simulate --out " + dir + "/s4.csv --rho 1,2,3") == 2);
}

TEST_CASE("basis dump writes the matrices") {
  CHECK(run("basis dump --times 11 --knots 3 --out " + dir + "/basis") == 0);
  const CsvTable knots = read_csv(dir + "/basis/knots.csv");
  REQUIRE(knots.rows.size() == 1);
  CHECK(knots.rows[0][0] == "3.5");
  CHECK(knots.rows[0][2] == "8.5");
  const CsvTable w = read_csv(dir + "/basis/w.csv");
  CHECK(w.rows.size() == 11);
  CHECK(file_exists(dir + "/basis/omega_inv_sqrt.csv"));
  CHECK(run("basis dump --times 11 --knots 3") == 2);  // --out required
}

TEST_CASE("validation failures exit with code 2") {
  CHECK(run("fit --data /tmp/no_such_file_fadegp.csv --out " + dir + "/f") == 2);
  write_text_file(dir + "/bad.csv", "id,Sx,Sy,H,S,I,y1,y2\np1,1,2,3,4,5,0.3,1\n");
  CHECK(run("fit --data " + dir + "/bad.csv --out " + dir + "/f") == 2);
  CHECK(last_output().find("error:") != std::string::npos);
  CHECK(run("cv --data " + dir + "/data.csv --scheme cv9 --out " + dir + "/cv.json") == 2);
}

TEST_CASE("fit, predict and map pipeline") {
  (void)workspace();
  const std::string fit_args = "fit --data " + dir + "/data.csv --out " + dir +
                               "/fit --chains 2 --warmup 150 --samples 150 --seed 3 --knots 2";
  // The budget is deliberately too small for the gate, so plain fit refuses.
  CHECK(run(fit_args) == 3);
  CHECK(last_output().find("convergence gate") != std::string::npos);
  // Outputs were still written for inspection.
  CHECK(file_exists(dir + "/fit/manifest.json"));

  CHECK(run(fit_args + " --force") == 0);
  const std::string manifest = read_text_file(dir + "/fit/manifest.json");
  CHECK(manifest.find("\"format\": \"fadegp-fit/1\"") != std::string::npos);
  CHECK(file_exists(dir + "/fit/draws_chain1.csv"));
  CHECK(file_exists(dir + "/fit/draws_chain2.csv"));
  CHECK(file_exists(dir + "/fit/diagnostics.csv"));

  // Byte-identical rerun.
  const std::string draws_before = read_text_file(dir + "/fit/draws_chain1.csv");
  CHECK(run(fit_args + " --force") == 0);
  CHECK(read_text_file(dir + "/fit/draws_chain1.csv") == draws_before);
  CHECK(read_text_file(dir + "/fit/manifest.json") == manifest);

  // Prediction at two new sites.
  write_text_file(dir + "/at.csv",
                  "id,Sx,Sy,H,S,I\nq1,4.1,5.2,5.3,9.6,5.1\nq2,3.2,4.4,5.0,9.8,5.3\n");
  const std::string pred_args =
      "predict --fit " + dir + "/fit --at " + dir + "/at.csv --out " + dir + "/pred.csv";
  CHECK(run(pred_args) == 3);  // the stored fit still fails the gate
  CHECK(run(pred_args + " --force") == 0);
  const CsvTable pred = read_csv(dir + "/pred.csv");
  REQUIRE(pred.header.size() == 6);
  CHECK(pred.header[0] == "id");
  CHECK(pred.header[2] == "f_mean");
  REQUIRE(pred.rows.size() == 14);  // 2 sites x 7 times
  CHECK(pred.rows[0][1] == "1");
  CHECK(parse_double(pred.rows[0][3], "y1") == 0.0);  // anchored start
  const std::string pred_before = read_text_file(dir + "/pred.csv");
  CHECK(run(pred_args + " --force") == 0);
  CHECK(read_text_file(dir + "/pred.csv") == pred_before);

  // Grid map over a few pixels.
  std::string grid = "px,py,H,S,I\n";
  for (int py = 0; py < 3; ++py) {
    for (int px = 0; px < 4; ++px) {
      grid += std::to_string(px) + "," + std::to_string(py) + ",5.2,9.7,5.1\n";
    }
  }
  write_text_file(dir + "/grid.csv", grid);
  const std::string map_args = "map --fit " + dir + "/fit --grid " + dir + "/grid.csv --out " +
                               dir + "/map.csv --pgm " + dir + "/map.pgm --force";
  CHECK(run(map_args) == 0);
  const CsvTable map = read_csv(dir + "/map.csv");
  CHECK(map.rows.size() == 12);
  const std::string pgm = read_text_file(dir + "/map.pgm");
  CHECK(pgm.rfind("P2\n", 0) == 0);
  CHECK(pgm.find("4 3\n255\n") != std::string::npos);
  const std::string map_before = read_text_file(dir + "/map.csv");
  CHECK(run(map_args) == 0);
  CHECK(read_text_file(dir + "/map.csv") == map_before);
}

TEST_CASE("cv writes a well-formed report even when folds are excluded") {
  (void)workspace();
  const int code = run("cv --data " + dir + "/data.csv --scheme cv1 --out " + dir +
                       "/cv.json --max-folds 2 --chains 2 --warmup 200 --samples 200 --seed 7");
  CHECK((code == 0 || code == 3));
  const std::string report = read_text_file(dir + "/cv.json");
  CHECK(report.find("\"scheme\": \"cv1\"") != std::string::npos);
  CHECK(report.find("\"requested_folds\": 2") != std::string::npos);
}

TEST_CASE("config file drives the run and rejects unknown keys") {
  (void)workspace();
  write_text_file(dir + "/good.cfg",
                  "[model]\nknots = 2\n\n[sampler]\nchains = 2\nwarmup = 120\nsamples = 100\n"
                  "seed = 4\n");
  CHECK(run("fit --data " + dir + "/data.csv --out " + dir + "/fitc --config " + dir +
            "/good.cfg --force") == 0);
  const std::string manifest = read_text_file(dir + "/fitc/manifest.json");
  CHECK(manifest.find("\"warmup\": 120") != std::string::npos);
  CHECK(manifest.find("\"knots\": 2") != std::string::npos);

  write_text_file(dir + "/bad.cfg", "[sampler]\nchainz = 2\n");
  CHECK(run("fit --data " + dir + "/data.csv --out " + dir + "/fitc --config " + dir +
            "/bad.cfg --force") == 2);
  write_text_file(dir + "/dup.cfg", "[sampler]\nchains = 2\nchains = 3\n");
  CHECK(run("fit --data " + dir + "/data.csv --out " + dir + "/fitc --config " + dir +
            "/dup.cfg --force") == 2);

  // Flags win over the file.
  CHECK(run("fit --data " + dir + "/data.csv --out " + dir + "/fitc2 --config " + dir +
            "/good.cfg --warmup 80 --force") == 0);
  CHECK(read_text_file(dir + "/fitc2/manifest.json").find("\"warmup\": 80") != std::string::npos);
}

TEST_CASE("error classes map to distinct exit codes") {
  CHECK(ValidationError("x").exit_code() == 2);
  CHECK(ConvergenceError("x").exit_code() == 3);
  CHECK(NumericalError("x").exit_code() == 4);
}
