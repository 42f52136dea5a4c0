#include "lagan/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "lagan/cpe.hpp"
#include "lagan/detail/spec_parse.hpp"
#include "lagan/divergence.hpp"
#include "lagan/gan.hpp"
#include "lagan/random.hpp"

namespace lagan::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kSupports[] = {2, 8, 64};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

struct Pair {
  FiniteDistribution p;
  FiniteDistribution q;
};

Pair random_pair(std::size_t n, std::uint64_t seed) {
  return {random_distribution(n, derive_seed(seed, 2 * n)),
          random_distribution(n, derive_seed(seed, 2 * n + 1))};
}

template <typename F>
void over_pairs(std::size_t seeds, std::vector<IdentityReport>& out, F&& check) {
  for (std::size_t s = 0; s < seeds; ++s) {
    for (std::size_t n : kSupports) {
      const Pair pr = random_pair(n, s);
      IdentityReport r = check(pr.p, pr.q);
      r.seed = s;
      out.push_back(std::move(r));
    }
  }
}

void theorem1_suite(std::size_t seeds, double tol, std::vector<IdentityReport>& out) {
  std::vector<CpeLoss> losses{CpeLoss::vanilla()};
  for (double a : {0.6, 1.0, 2.0, 5.0, 10.0, 20.0}) losses.push_back(CpeLoss::alpha(a));
  for (double k : {0.25, 1.0, 2.0, 7.5, 15.0}) losses.push_back(CpeLoss::slk(k));
  for (const CpeLoss& loss : losses) {
    over_pairs(seeds, out, [&](const auto& p, const auto& q) {
      return theorem1_identity(loss, std::nullopt, p, q, tol);
    });
  }
}

void lemma_suite(std::size_t seeds, double tol, std::vector<IdentityReport>& out) {
  over_pairs(seeds, out, [&](const auto& p, const auto& q) { return lemma2_identity(p, q, tol); });
  for (double a : {0.6, 1.0, 2.0, 5.0, 20.0}) {
    over_pairs(seeds, out, [&](const auto& p, const auto& q) {
      return lemma3_divergence_identity(a, p, q, tol);
    });
  }
  for (double k : {0.25, 1.0, 2.0, 7.5, 15.0}) {
    over_pairs(seeds, out, [&](const auto& p, const auto& q) {
      return lemma4_identity(k, p, q, Lemma4Constant::theorem1, tol);
    });
  }
}

void prop_suite(std::size_t seeds, double tol, std::vector<IdentityReport>& out) {
  for (double a : {0.5, 2.0, 5.0}) {
    over_pairs(seeds, out, [&](const auto& p, const auto& q) {
      return prop1_arimoto_identity(a, p, q, tol);
    });
  }
  over_pairs(seeds, out, [&](const auto& p, const auto& q) {
    return prop1_alpha_one_check(p, q, tol).two_jsd;
  });
  struct Lk {
    double k, beta, gamma, c;
  };
  for (const Lk& v : {Lk{2.0, 0.0, 1.0, 0.5}, Lk{3.0, 0.2, 0.6, 0.4}, Lk{1.5, 0.0, 0.5, 0.25}}) {
    over_pairs(seeds, out, [&](const auto& p, const auto& q) {
      return prop3_vajda_identity(v.k, v.beta, v.gamma, v.c, p, q, tol);
    });
  }
}

IdentityReport labelled(IdentityReport r, const GeneratingFunction& f, std::size_t n) {
  r.family = f.name;
  r.parameter = f.parameters.empty() ? 0.0 : f.parameters.front();
  r.support = n;
  return r;
}

void zoo_suite(std::size_t seeds, double tol, std::vector<IdentityReport>& out) {
  const double tight = std::min(tol, 1e-12);
  std::vector<GeneratingFunction> zoo{
      builtin_generator(GeneratorFamily::kl),
      builtin_generator(GeneratorFamily::jsd),
      builtin_generator(GeneratorFamily::pearson_chi2),
      builtin_generator(GeneratorFamily::vanilla_ulogu),
  };
  for (double k : {1.5, 2.0, 3.5}) zoo.push_back(builtin_generator(GeneratorFamily::pearson_vajda, k));
  for (double a : {0.5, 2.0, 5.0}) {
    zoo.push_back(builtin_generator(GeneratorFamily::arimoto, a));
    zoo.push_back(builtin_generator(GeneratorFamily::hellinger, a));
  }
  for (const GeneratingFunction& f : zoo) {
    const GeneratingFunction fbar = symmetrize(f);
    over_pairs(seeds, out, [&](const auto& p, const auto& q) {
      return labelled(compare_within("remark1_symmetrized", f_divergence(fbar, p, q),
                                       jensen_f(f, p, q), tight),
                      f, p.size());
    });
    over_pairs(seeds, out, [&](const auto& p, const auto& q) {
      return labelled(compare("remark1_swap", jensen_f(f, p, q), jensen_f(f, q, p), 0.0), f,
                      p.size());
    });
  }
  for (double a : {0.5, 2.0, 5.0}) {
    const GeneratingFunction h = builtin_generator(GeneratorFamily::hellinger, a);
    over_pairs(seeds, out, [&](const auto& p, const auto& q) {
      const double rhs = std::log1p((a - 1.0) * f_divergence(h, p, q)) / (a - 1.0);
      return labelled(compare_within("renyi_hellinger", renyi_divergence(a, p, q), rhs, tight),
                      h, p.size());
    });
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

int usage(std::ostream& err, const std::string& what) {
  err << "error: " << what << '\n';
  return kUsageError;
}

// ---------------------------------------------------------------- commands

struct VerifyArgs {
  std::string suite = "all";
  std::size_t seeds = 20;
  double tolerance = kIdentityTolerance;
  std::string out_path;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  const std::vector<IdentityReport> reports = run_suite(a.suite, a.seeds, a.tolerance);
  std::ofstream file;
  std::ostream* sink = &out;
  if (!a.out_path.empty()) {
    file.open(a.out_path);
    if (!file) return usage(err, "cannot write " + a.out_path);
    sink = &file;
  }
  std::size_t failed = 0;
  for (const IdentityReport& r : reports) {
    *sink << to_json(r).dump() << '\n';
    if (!r.pass) {
      ++failed;
      err << "FAIL " << r.check << " family=" << r.family << " parameter=" << num(r.parameter)
          << " support=" << r.support << " seed=" << r.seed << " lhs=" << num(r.lhs)
          << " rhs=" << num(r.rhs) << " residual=" << num(r.rel_residual)
          << " abs_residual=" << num(r.abs_residual) << '\n';
    }
  }
  err << reports.size() << " checks, " << failed << " failed\n";
  return failed == 0 ? kSuccess : kVerificationFailure;
}

struct DivergenceArgs {
  std::string family;
  std::string file_a;
  std::string file_b;
  bool jensen = false;
};

int cmd_divergence(const DivergenceArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<GeneratingFunction> f;
  std::optional<double> renyi_order;
  try {
    const detail::ParsedSpec spec = detail::parse_spec(a.family);
    if (spec.family == "renyi") {
      renyi_order = detail::require_parameter(spec, a.family);
      if (*renyi_order == 1.0 || !(*renyi_order > 0.0)) {
        return usage(err, "renyi requires alpha > 0 and alpha != 1");
      }
      if (a.jensen) return usage(err, "--jensen is not defined for renyi");
    } else {
      f = parse_generator(a.family);
    }
  } catch (const std::invalid_argument& e) {
    return usage(err, e.what());
  }

  std::optional<PmfFile> pa, pb;
  try {
    pa = read_pmf_file(a.file_a);
    pb = read_pmf_file(a.file_b);
    require_same_support(pa->distribution.size(), pb->distribution.size());
  } catch (const std::exception& e) {
    return usage(err, e.what());
  }
  for (const auto* pf : {&*pa, &*pb}) {
    if (pf->renormalized) {
      err << "warning: masses summed to " << num(pf->raw_sum) << "; renormalized\n";
    }
  }
  try {
    const FiniteDistribution& p = pa->distribution;
    const FiniteDistribution& q = pb->distribution;
    const double d = renyi_order ? renyi_divergence(*renyi_order, p, q) : f_divergence(*f, p, q);
    out << "divergence " << num(d) << '\n';
    if (a.jensen) out << "jensen " << num(jensen_f(*f, p, q)) << '\n';
  } catch (const std::exception& e) {
    return usage(err, e.what());
  }
  return kSuccess;
}

struct DeriveArgs {
  std::string loss;
  std::optional<double> a;
};

int cmd_derive(const DeriveArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<CpeLoss> loss;
  try {
    loss = parse_loss(a.loss);
  } catch (const std::invalid_argument& e) {
    return usage(err, e.what());
  }
  try {
    const DerivedGenerator g = derive_generator(*loss, a.a);
    out << "loss " << loss->name() << '\n';
    out << "a " << num(g.a) << '\n';
    out << "b " << num(g.b) << '\n';
    out << "curvature " << to_string(g.curvature) << '\n';
    for (double u : {0.0, 0.5, 1.0, 1.5, 2.0}) out << "f(" << u << ") " << num(g.generator(u)) << '\n';
    return kSuccess;
  } catch (const DerivationError& e) {
    err << "error: " << e.what() << " (worst at u = " << num(e.worst_u()) << ")\n";
    return kVerificationFailure;
  } catch (const std::invalid_argument& e) {
    return usage(err, e.what());
  }
}

struct TrainArgs {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  bool wall_clock = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  gan::TrainConfig base;
  try {
    std::ifstream f(a.config);
    if (!f) return usage(err, "cannot read config " + a.config);
    base = gan::config_from_json(nlohmann::json::parse(f));
    gan::validate(base);
  } catch (const nlohmann::json::exception& e) {
    return usage(err, std::string("config is not valid JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return usage(err, std::string("invalid config: ") + e.what());
  }
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) return usage(err, "cannot create " + a.out_dir + ": " + ec.message());

  const std::vector<std::uint64_t> seeds = a.seeds.empty() ? std::vector{base.seed} : a.seeds;
  std::size_t collapsed = 0;
  for (std::uint64_t seed : seeds) {
    gan::TrainConfig cfg = base;
    cfg.seed = seed;
    const std::string stem = "train-seed-" + std::to_string(seed);
    const fs::path dir(a.out_dir);
    const fs::path csv = dir / (stem + ".csv");
    const fs::path gen = dir / (stem + ".generator.json");
    const fs::path disc = dir / (stem + ".discriminator.json");
    const fs::path samples = dir / (stem + ".samples.csv");
    const fs::path manifest_path = dir / (stem + ".manifest.json");

    nlohmann::json manifest = {
        {"command", "train"},
        {"tool_version", kToolVersion},
        {"config", gan::to_json(cfg)},
        {"seed", seed},
        {"started", utc_now()},
        {"finished", nullptr},
        {"outputs",
         {{"metrics", csv.string()},
          {"generator", gen.string()},
          {"discriminator", disc.string()},
          {"samples", samples.string()}}},
    };
    write_json_file(manifest_path, manifest);

    const auto t0 = std::chrono::steady_clock::now();
    const gan::TrainRecord rec = gan::train(cfg);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    {
      std::ofstream f(csv);
      gan::write_metrics_csv(f, rec, a.wall_clock);
    }
    {
      std::ofstream f(gen);
      nn::write_snapshot(f, rec.generator);
    }
    {
      std::ofstream f(disc);
      nn::write_snapshot(f, rec.discriminator);
    }
    {
      std::ofstream f(samples);
      gan::write_samples_csv(f, rec.final_samples);
    }
    manifest["finished"] = utc_now();
    manifest["wall_ms"] = ms;
    manifest["completed_steps"] = rec.completed_steps;
    manifest["skipped_steps"] = rec.skipped_steps;
    manifest["collapsed"] = rec.collapsed;
    write_json_file(manifest_path, manifest);

    if (rec.collapsed) ++collapsed;
    out << "seed " << seed << ": steps " << rec.completed_steps;
    if (!rec.entries.empty()) {
      out << ", hist_jsd " << num(rec.entries.back().hist_jsd) << ", mode_coverage "
          << rec.entries.back().mode_coverage;
    }
    out << (rec.collapsed ? ", collapsed" : "") << '\n';
  }
  return collapsed == 0 ? kSuccess : kPartialCollapse;
}

struct GradCheckArgs {
  std::size_t nets = 10;
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
};

int cmd_grad_check(const GradCheckArgs& a, std::ostream& out) {
  std::size_t failed = 0;
  for (std::size_t i = 0; i < a.nets; ++i) {
    const nn::GradientCheck g = grad_check_toy(derive_seed(a.seed, i));
    const bool pass = g.parameters <= a.tolerance && g.input <= a.tolerance &&
                      g.logit_input <= a.tolerance;
    if (!pass) ++failed;
    out << "net " << i << ": parameters " << num(g.parameters) << ", input " << num(g.input)
        << ", logit input " << num(g.logit_input) << (pass ? " PASS" : " FAIL") << '\n';
  }
  return failed == 0 ? kSuccess : kVerificationFailure;
}

}  // namespace

nlohmann::json to_json(const IdentityReport& r) {
  auto finite_or_null = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return {
      {"check", r.check},
      {"family", r.family},
      {"parameter", r.parameter},
      {"support", r.support},
      {"seed", r.seed},
      {"lhs", finite_or_null(r.lhs)},
      {"rhs", finite_or_null(r.rhs)},
      {"residual", finite_or_null(r.rel_residual)},
      {"abs_residual", finite_or_null(r.abs_residual)},
      {"tolerance", r.tolerance},
      {"pass", r.pass},
  };
}

std::vector<IdentityReport> run_suite(const std::string& suite, std::size_t seeds, double tolerance) {
  std::vector<IdentityReport> out;
  const bool all = suite == "all";
  if (!all && suite != "theorem1" && suite != "lemmas" && suite != "props" &&
      suite != "divergence-zoo") {
    throw std::invalid_argument("unknown suite '" + suite +
                                "' (expected all, theorem1, lemmas, props, divergence-zoo)");
  }
  if (all || suite == "theorem1") theorem1_suite(seeds, tolerance, out);
  if (all || suite == "lemmas") lemma_suite(seeds, tolerance, out);
  if (all || suite == "props") prop_suite(seeds, tolerance, out);
  if (all || suite == "divergence-zoo") zoo_suite(seeds, tolerance, out);
  return out;
}

nn::GradientCheck grad_check_toy(std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<std::size_t> in_width(2, 4), hidden_width(3, 8), depth(1, 2);
  std::bernoulli_distribution use_tanh(0.5);
  std::normal_distribution<double> normal;

  std::vector<std::size_t> widths{in_width(rng)};
  std::vector<nn::Activation> acts;
  for (std::size_t l = depth(rng); l > 0; --l) {
    widths.push_back(hidden_width(rng));
    acts.push_back(use_tanh(rng) ? nn::Activation::tanh() : nn::Activation::leaky_relu());
  }
  widths.push_back(1);
  acts.push_back(nn::Activation::sigmoid());
  const nn::Mlp net = nn::init_mlp(widths, acts, derive_seed(seed, 1));

  const Eigen::Index batch = 5;
  nn::Matrix x(batch, static_cast<Eigen::Index>(widths.front()));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  nn::Matrix probe(batch, 1);
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe(i) = normal(rng);
  return nn::check_gradients(net, x, probe);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"L-alpha GAN numerical lab", "lagan"};
  app.require_subcommand(1);

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Check the equilibrium identities on random pairs");
  v->add_option("--suite", verify.suite, "all, theorem1, lemmas, props, divergence-zoo")
      ->check(CLI::IsMember({"all", "theorem1", "lemmas", "props", "divergence-zoo"}));
  v->add_option("--seeds", verify.seeds, "Random pairs per family and support")
      ->check(CLI::PositiveNumber);
  v->add_option("--tol", verify.tolerance, "Relative tolerance")->check(CLI::NonNegativeNumber);
  v->add_option("--out", verify.out_path, "JSON-lines report (default: stdout)");

  DivergenceArgs div;
  auto* d = app.add_subcommand("divergence", "Evaluate an f-divergence between two PMF files");
  d->add_option("family", div.family, "kl, jsd, chi2, vajda:k, arimoto:a, hellinger:a, renyi:a")
      ->required();
  d->add_option("a", div.file_a, "PMF file for p")->required();
  d->add_option("b", div.file_b, "PMF file for q")->required();
  d->add_flag("--jensen", div.jensen, "Also print the Jensen-f value");

  DeriveArgs der;
  auto* r = app.add_subcommand("derive", "Derive the generating function of a CPE loss");
  r->add_option("loss", der.loss, "vanilla, alpha:a, slk:k")->required();
  r->add_option("--a", der.a, "Magnitude of a (sign follows the curvature)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a GAN on the ring data");
  t->add_option("--config", tr.config, "JSON config file")->required();
  t->add_option("--seeds", tr.seeds, "Comma-separated seeds (default: the config seed)")
      ->delimiter(',');
  t->add_option("--out", tr.out_dir, "Output directory")->required();
  t->add_flag("--record-wall-clock", tr.wall_clock, "Write real timings into the wall_ms column");

  GradCheckArgs gc;
  auto* g = app.add_subcommand("grad-check", "Compare reverse-mode gradients with finite differences");
  g->add_option("--nets", gc.nets, "Number of random toy networks");
  g->add_option("--seed", gc.seed, "Base seed");
  g->add_option("--tol", gc.tolerance, "Relative tolerance");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (v->parsed()) return cmd_verify(verify, out, err);
    if (d->parsed()) return cmd_divergence(div, out, err);
    if (r->parsed()) return cmd_derive(der, out, err);
    if (t->parsed()) return cmd_train(tr, out, err);
    if (g->parsed()) return cmd_grad_check(gc, out);
  } catch (const std::invalid_argument& e) {
    return usage(err, e.what());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kVerificationFailure;
  }
  return kUsageError;
}

}  // namespace lagan::cli
