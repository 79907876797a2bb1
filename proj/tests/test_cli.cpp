#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qla/csv.hpp"
#include "qla/simulate.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;   // path to the qla binary, from argv[1]
fs::path g_workdir;  // scratch directory

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("simulate writes a CSV that ingests back to the exact path") {
  const fs::path csv = g_workdir / "path.csv";
  REQUIRE(run_cli("simulate --model exp-sin2 --n 200 --T 1 --theta-star 1.0 --seed 42 --out " +
                  csv.string()) == 0);

  const auto model = qla::make_model("exp-sin2");
  const auto path = qla::simulate_path(model, 200, 1.0, qla::scalar_vec(1.0), 42);
  const auto obs = qla::ingest_csv(csv.string());
  REQUIRE(obs.n == 200);
  CHECK(obs.T == doctest::Approx(1.0).epsilon(1e-15));
  for (int k = 0; k <= 200; ++k) {
    CHECK(obs.y(k, 0) == doctest::Approx(path.y(k, 0)).epsilon(1e-15));
    CHECK(obs.x(k, 0) == doctest::Approx(path.x(k, 0)).epsilon(1e-15));
  }
  CHECK(obs.provenance == qla::Observations::Provenance::ingested);
}

TEST_CASE("ingest rejects malformed CSVs") {
  // Shuffled rows break the uniform time grid.
  const fs::path good = g_workdir / "path.csv";
  const fs::path shuffled = g_workdir / "shuffled.csv";
  {
    std::ifstream in(good);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() > 3);
    std::swap(lines[1], lines[2]);
    std::ofstream out(shuffled);
    for (const auto& l : lines) out << l << "\n";
  }
  CHECK_THROWS_AS(qla::ingest_csv(shuffled.string()), qla::GridError);

  // Missing y column.
  const fs::path noy = g_workdir / "noy.csv";
  {
    std::ofstream out(noy);
    out << "t,x_1\n0,0\n0.5,0.1\n1,0.2\n";
  }
  CHECK_THROWS_AS(qla::ingest_csv(noy.string()), qla::FormatError);

  // Ragged row.
  const fs::path ragged = g_workdir / "ragged.csv";
  {
    std::ofstream out(ragged);
    out << "t,x_1,y_1\n0,0,0\n0.5,0.1\n1,0.2,0.2\n";
  }
  CHECK_THROWS_AS(qla::ingest_csv(ragged.string()), qla::FormatError);

  CHECK_THROWS_AS(qla::ingest_csv((g_workdir / "missing.csv").string()), qla::FormatError);
}

TEST_CASE("estimate on malformed data exits with the error code") {
  CHECK(run_cli("estimate --model exp-sin2 --data " + (g_workdir / "shuffled.csv").string() +
                " --estimator qmle") == 1);
}

TEST_CASE("identical estimate runs produce identical output") {
  const fs::path a = g_workdir / "a.json";
  const fs::path b = g_workdir / "b.json";
  const std::string args =
      "estimate --model sin-sin --simulate --n 100 --T 1 --theta-star 0.3 --seed 9 "
      "--estimator bayes --out ";
  REQUIRE(run_cli(args + a.string()) == 0);
  REQUIRE(run_cli(args + b.string()) == 0);
  const std::string sa = slurp(a), sb = slurp(b);
  CHECK(sa == sb);
  CHECK_FALSE(sa.empty());
}

TEST_CASE("unknown flags exit with the usage code") {
  CHECK(run_cli("estimate --model exp-sin2 --frobnicate") == 2);
  CHECK(run_cli("definitely-not-a-subcommand") == 2);
}

TEST_CASE("mc-study writes the full report set") {
  const fs::path cfg = g_workdir / "study.json";
  {
    std::ofstream out(cfg);
    out << R"({"schema":1,"model":"exp-sin2","theta_star":[1.0],"T":1.0,"h_list":[0.02],)"
        << R"("replicates":3,"seed":5,"substeps":2,"threads":1,"dump_reps":true,)"
        << R"("estimators":[{"kind":"qmle","init":[0.0]}]})";
  }
  const fs::path outdir = g_workdir / "study_out";
  REQUIRE(run_cli("mc-study --config " + cfg.string() + " --out-dir " + outdir.string()) == 0);
  CHECK(fs::exists(outdir / "report.json"));
  CHECK(fs::exists(outdir / "table.csv"));
  CHECK(fs::exists(outdir / "table.txt"));
  CHECK(fs::exists(outdir / "reps.csv"));
  CHECK(slurp(outdir / "table.txt").find("1/50") != std::string::npos);

  // Bad config: exit code 1.
  const fs::path bad = g_workdir / "bad.json";
  {
    std::ofstream out(bad);
    out << "{\"schema\":1}";
  }
  CHECK(run_cli("mc-study --config " + bad.string() + " --out-dir " + outdir.string()) == 1);
}

TEST_CASE("nondeg chi0 runs and reports json") {
  const fs::path out = g_workdir / "chi0.json";
  REQUIRE(run_cli("nondeg --check chi0 --model exp-sin2 --theta-star 1.0 --n 50 --T 1 --seed 3 "
                  "--out " +
                  out.string()) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("\"chi0\"") != std::string::npos);
  CHECK(text.find("grid_min") != std::string::npos);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-qla-binary>\n");
    return 1;
  }
  g_cli = argv[1];
  g_workdir = fs::temp_directory_path() / "qla_cli_test";
  fs::remove_all(g_workdir);
  fs::create_directories(g_workdir);

  doctest::Context ctx;
  ctx.applyCommandLine(argc - 1, argv + 1);
  const int rc = ctx.run();
  fs::remove_all(g_workdir);
  return rc;
}
