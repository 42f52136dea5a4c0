#include <algorithm>
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lagan/cli.hpp"

namespace fs = std::filesystem;
using lagan::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lagan-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const char* kSmallConfig = R"({
  "version": 1, "scheme": "alpha_gan", "alpha_d": 1, "alpha_g": 5,
  "steps": 30, "batch_size": 32, "eval_every": 10, "eval_samples": 1000,
  "generator_hidden": [16], "discriminator_hidden": [16]
})";

}  // namespace

TEST_CASE("verify theorem1 with three seeds writes one record per family, support and seed") {
  const auto r = call({"verify", "--suite", "theorem1", "--seeds", "3"});
  CHECK(r.code == 0);
  CHECK(lines(r.out) == 3 * 12 * 3);
  CHECK(r.out.find("\"check\":\"theorem1\"") != std::string::npos);
  CHECK(r.err.find("0 failed") != std::string::npos);
}

TEST_CASE("verify all passes") {
  const auto dir = scratch("verify");
  const auto r = call({"verify", "--seeds", "2", "--out", (dir / "v.jsonl").string()});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  const std::string report = slurp(dir / "v.jsonl");
  CHECK(report.find("\"pass\":false") == std::string::npos);
  for (const char* c : {"lemma2", "lemma3", "lemma4", "prop1", "prop3", "remark1_swap", "renyi_hellinger"}) {
    CHECK(report.find(std::string("\"check\":\"") + c) != std::string::npos);
  }
}

TEST_CASE("verify with an impossible tolerance fails and lists records") {
  const auto r = call({"verify", "--suite", "lemmas", "--seeds", "1", "--tol", "1e-18"});
  CHECK(r.code == 1);
  CHECK(r.err.find("FAIL lemma") != std::string::npos);
}

TEST_CASE("verify rejects unknown suites") {
  CHECK(call({"verify", "--suite", "everything"}).code == 2);
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
}

TEST_CASE("divergence command") {
  const auto dir = scratch("div");
  write(dir / "a.pmf", "0.5\n0.5\n");
  write(dir / "b.pmf", "0.25\n0.75\n");
  write(dir / "c.pmf", "0.2\n0.3\n0.5\n");
  write(dir / "d.pmf", "2\n2\n");
  const auto a = (dir / "a.pmf").string(), b = (dir / "b.pmf").string();

  auto r = call({"divergence", "kl", a, a});
  CHECK(r.code == 0);
  CHECK(r.out == "divergence 0\n");

  r = call({"divergence", "kl", a, b});
  CHECK(r.out == "divergence 0.143841036226\n");

  r = call({"divergence", "kl", a, b, "--jensen"});
  CHECK(r.out.find("jensen 0.0338") != std::string::npos);

  r = call({"divergence", "renyi:2", a, b});
  CHECK(r.out == "divergence 0.287682072452\n");

  r = call({"divergence", "arimoto:1", a, b});
  CHECK(r.code == 2);
  CHECK(r.err.find("alpha != 1") != std::string::npos);

  CHECK(call({"divergence", "kl", a, (dir / "c.pmf").string()}).code == 2);
  CHECK(call({"divergence", "kl", a, (dir / "missing.pmf").string()}).code == 2);
  CHECK(call({"divergence", "renyi:1", a, b}).code == 2);

  r = call({"divergence", "kl", (dir / "d.pmf").string(), a});
  CHECK(r.code == 0);
  CHECK(r.out == "divergence 0\n");
  CHECK(r.err.find("renormalized") != std::string::npos);
}

TEST_CASE("derive command") {
  auto r = call({"derive", "vanilla"});
  CHECK(r.code == 0);
  CHECK(r.out.find("a 1\n") != std::string::npos);
  CHECK(r.out.find("b 0.69314718056\n") != std::string::npos);
  CHECK(r.out.find("f(1) 0\n") != std::string::npos);

  r = call({"derive", "slk:2"});
  CHECK(r.out.find("a 0.25\n") != std::string::npos);
  CHECK(r.out.find("b 3\n") != std::string::npos);
  CHECK(r.out.find("f(2) 6\n") != std::string::npos);
  CHECK(r.out.find("curvature concave") != std::string::npos);

  r = call({"derive", "alpha:0.4"});
  CHECK(r.code == 1);
  CHECK(r.err.find("generator not convex") != std::string::npos);

  CHECK(call({"derive", "alpha:2", "--a", "2"}).out.find("a 2\n") != std::string::npos);
  CHECK(call({"derive", "hinge"}).code == 2);
}

TEST_CASE("train command writes one csv and manifest per seed, reproducibly") {
  const auto dir = scratch("train");
  write(dir / "cfg.json", kSmallConfig);
  const auto cfg = (dir / "cfg.json").string();

  auto r = call({"train", "--config", cfg, "--seeds", "1,2,3", "--out", (dir / "run1").string()});
  REQUIRE(r.code == 0);
  for (int s : {1, 2, 3}) {
    const auto stem = dir / "run1" / ("train-seed-" + std::to_string(s));
    CHECK(fs::exists(stem.string() + ".csv"));
    CHECK(fs::exists(stem.string() + ".manifest.json"));
    CHECK(fs::exists(stem.string() + ".generator.json"));
    CHECK(fs::exists(stem.string() + ".samples.csv"));
    const auto m = nlohmann::json::parse(slurp(stem.string() + ".manifest.json"));
    CHECK(m.at("seed") == s);
    CHECK(m.at("config").at("alpha_g") == 5.0);
    CHECK(m.at("collapsed") == false);
    CHECK_FALSE(m.at("finished").is_null());
  }
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(dir / "run1")) {
    if (e.path().extension() == ".csv" && e.path().string().find("samples") == std::string::npos) ++csvs;
  }
  CHECK(csvs == 3);

  r = call({"train", "--config", cfg, "--seeds", "1,2,3", "--out", (dir / "run2").string()});
  REQUIRE(r.code == 0);
  for (int s : {1, 2, 3}) {
    const auto name = "train-seed-" + std::to_string(s) + ".csv";
    CHECK(slurp(dir / "run1" / name) == slurp(dir / "run2" / name));
  }

  const auto first = slurp(dir / "run1" / "train-seed-1.csv");
  CHECK(first.rfind("step,d_loss,g_loss,hist_jsd,mode_coverage,wall_ms\n", 0) == 0);
  CHECK(lines(first) == 4);
}

TEST_CASE("train rejects invalid configs with exit 2") {
  const auto dir = scratch("badcfg");
  write(dir / "k0.json", R"({"version": 1, "scheme": "lk_slkgan", "k": 0})");
  auto r = call({"train", "--config", (dir / "k0.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("k > 0") != std::string::npos);

  write(dir / "junk.json", "{not json");
  CHECK(call({"train", "--config", (dir / "junk.json").string(), "--out", (dir / "o").string()}).code == 2);
  CHECK(call({"train", "--config", (dir / "none.json").string(), "--out", (dir / "o").string()}).code == 2);
}

TEST_CASE("train reports collapse with exit 3 and keeps results") {
  const auto dir = scratch("collapse");
  write(dir / "c.json", R"({"version": 1, "steps": 200, "batch_size": 8, "eval_samples": 1000,
    "generator_hidden": [8], "discriminator_hidden": [8], "collapse_after": 3,
    "adam": {"learning_rate": 1e300}})");
  const auto r = call({"train", "--config", (dir / "c.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 3);
  CHECK(fs::exists(dir / "o" / "train-seed-0.csv"));
}

TEST_CASE("grad-check command") {
  const auto r = call({"grad-check", "--nets", "4"});
  CHECK(r.code == 0);
  CHECK(lines(r.out) == 4);
  CHECK(call({"grad-check", "--nets", "2", "--tol", "0"}).code == 1);
}
