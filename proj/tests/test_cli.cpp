#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kRoot = fs::path(NHMM_TEST_TMP) / "cli";

struct Result {
  int code = -1;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result run(const std::string& args) {
  fs::create_directories(kRoot);
  const fs::path err = kRoot / "stderr.txt";
  const std::string cmd = std::string(NHMM_CLI_PATH) + " " + args + " --quiet > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

Result run_plain(const std::string& args) {
  fs::create_directories(kRoot);
  const fs::path err = kRoot / "stderr.txt";
  const std::string cmd = std::string(NHMM_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string error_type(const Result& r) {
  try {
    return json::parse(r.err).at("error").at("type").get<std::string>();
  } catch (...) {
    return "unparsable: " + r.err;
  }
}

const fs::path& dataset() {
  static const fs::path dir = [] {
    const fs::path d = kRoot / "data";
    fs::remove_all(d);
    REQUIRE(run("synth --out " + d.string() + " --states 2 --stations 3 --days 300 --x-count 1 --w-count 1 "
                "--missing 0.05 --seed 3").code == 0);
    return d;
  }();
  return dir;
}

std::string fit_args(const fs::path& out, int seed, int states = 2) {
  const auto& d = dataset();
  return "fit --obs " + (d / "obs.csv").string() + " --x " + (d / "x.csv").string() + " --w " +
         (d / "w.csv").string() + " --states " + std::to_string(states) + " --iterations 100 --seed " + std::to_string(seed) + " --out " +
         out.string();
}

}  // namespace

TEST_CASE("synth writes a complete data set") {
  const auto& d = dataset();
  for (const char* f : {"obs.csv", "x.csv", "w.csv", "true_states.csv", "truth.json"}) CHECK(fs::exists(d / f));
}

TEST_CASE("fit is byte-identical for a fixed seed") {
  const fs::path a = kRoot / "fit_a";
  const fs::path b = kRoot / "fit_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(run(fit_args(a, 7)).code == 0);
  REQUIRE(run(fit_args(b, 7)).code == 0);
  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    if (rel == "run.json") continue;  // records the output path
    CHECK(slurp(entry.path()) == slurp(b / rel));
    ++compared;
  }
  CHECK(compared >= 10);
}

TEST_CASE("score, simulate, forecast and diagnose") {
  const fs::path f = kRoot / "fit_hold";
  fs::remove_all(f);
  REQUIRE(run(fit_args(f, 11) + " --holdout 30").code == 0);
  REQUIRE(run("score --fit " + f.string()).code == 0);
  const json s = json::parse(slurp(f / "scores.json"));
  for (const char* key : {"K", "p", "loglik", "bic", "pls", "n_obs", "seed"}) CHECK(s.contains(key));
  CHECK(s["K"] == 2);
  CHECK(s["pls"].is_number());

  REQUIRE(run("simulate --fit " + f.string() + " --draws 3").code == 0);
  CHECK(fs::exists(f / "simulations" / "sim_00001.csv"));
  CHECK(fs::exists(f / "simulations" / "day_of_year_summary.csv"));

  // The fit held out 30 days, so compare two simulated panels of equal length.
  std::vector<fs::path> sims;
  for (const auto& entry : fs::directory_iterator(f / "simulations"))
    if (entry.path().filename().string().starts_with("sim_")) sims.push_back(entry.path());
  std::sort(sims.begin(), sims.end());
  REQUIRE(sims.size() == 3);
  REQUIRE(run("diagnose --obs " + sims[1].string() + " --against " + sims[0].string() + " --out " +
              (kRoot / "diag.json").string())
              .code == 0);
  CHECK(json::parse(slurp(kRoot / "diag.json")).is_object());

  // Forecast without the emission covariates the fit used is an input error.
  const Result missing = run("forecast --fit " + f.string() + " --days 10");
  CHECK(missing.code == 2);
  CHECK(error_type(missing) == "input");
}

TEST_CASE("failures are reported as structured errors") {
  const Result no_file = run("fit --obs " + (kRoot / "nope.csv").string() + " --out " + (kRoot / "x").string());
  CHECK(no_file.code == 2);
  CHECK(error_type(no_file) == "input");

  {
    std::ofstream(kRoot / "neg.csv") << "a,b\n1,2\n-3,4\n";
  }
  const Result negative = run("fit --obs " + (kRoot / "neg.csv").string() + " --out " + (kRoot / "x").string());
  CHECK(negative.code == 2);
  CHECK(json::parse(negative.err)["error"]["message"].get<std::string>().find("line 3") != std::string::npos);

  const Result bad_k = run(fit_args(kRoot / "x", 1, 0));
  CHECK(bad_k.code == 2);
  CHECK(error_type(bad_k) == "config");

  const Result bad_flag = run("fit --bogus");
  CHECK(bad_flag.code == 2);
  CHECK(error_type(bad_flag) == "usage");

  const Result bad_sub = run_plain("frobnicate");
  CHECK(bad_sub.code == 2);
  CHECK(error_type(bad_sub) == "usage");

  const Result harmonics = run(fit_args(kRoot / "x", 1) + " --add-harmonics sometimes");
  CHECK(harmonics.code == 2);
  CHECK(error_type(harmonics) == "config");

  const Result no_store = run("score --fit " + (kRoot / "empty_dir").string());
  CHECK(no_store.code == 2);
}

TEST_CASE("bare harmonics flag adds covariates to both blocks") {
  const fs::path f = kRoot / "fit_harm";
  fs::remove_all(f);
  const auto& d = dataset();
  REQUIRE(run("fit --obs " + (d / "obs.csv").string() + " --states 2 --iterations 20 --add-harmonics --out " +
              f.string())
              .code == 0);
  const json run_info = json::parse(slurp(f / "run.json"));
  CHECK(run_info["harmonics"] == "both");
  const json manifest = json::parse(slurp(f / "store" / "manifest.json"));
  CHECK(manifest.dump().find("cos182.5") != std::string::npos);
}

TEST_CASE("config file values apply unless overridden") {
  const fs::path f = kRoot / "fit_cfg";
  fs::remove_all(f);
  const auto& d = dataset();
  {
    std::ofstream(kRoot / "cfg.json") << R"({"iterations": 12, "states": 3, "obs": ")" << (d / "obs.csv").string()
                                      << R"("})";
  }
  REQUIRE(run("fit --config " + (kRoot / "cfg.json").string() + " --states 2 --out " + f.string()).code == 0);
  const json run_info = json::parse(slurp(f / "run.json"));
  CHECK(run_info["states"] == 2);
  const json manifest = json::parse(slurp(f / "store" / "manifest.json"));
  CHECK(manifest.dump().find("\"iterations\":12") != std::string::npos);
}
