#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "lagan/gan.hpp"
#include "lagan/random.hpp"

using namespace lagan;
using namespace lagan::gan;

namespace {

Matrix uniform01(Eigen::Index n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Matrix m(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) m(i) = u(rng);
  return m;
}

TrainConfig scheme(Scheme s, double ad = 1.0, double ag = 1.0, double k = 2.0) {
  TrainConfig c;
  c.scheme = s;
  c.alpha_d = ad;
  c.alpha_g = ag;
  c.k = k;
  return c;
}

TrainConfig tiny() {
  TrainConfig c;
  c.steps = 20;
  c.batch_size = 16;
  c.generator_hidden = {8};
  c.discriminator_hidden = {8};
  c.eval_every = 10;
  c.eval_samples = 1000;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("discriminator objectives at reference points") {
  const Matrix half = Matrix::Constant(4, 1, 0.5);
  const auto v = discriminator_objective(scheme(Scheme::vanilla_slkgan), half, half);
  CHECK(v.value == doctest::Approx(2.0 * std::numbers::ln2).epsilon(1e-15));

  const Matrix ones = Matrix::Ones(4, 1);
  const Matrix zeros = Matrix::Zero(4, 1);
  CHECK(discriminator_objective(scheme(Scheme::lk_slkgan), ones, zeros).value == 0.0);
  CHECK_THROWS(discriminator_objective(scheme(Scheme::lk_slkgan), ones, Matrix::Zero(3, 1)));
}

TEST_CASE("alpha_D = 1 and the log loss agree pointwise") {
  const Matrix r = uniform01(64, 1);
  const Matrix f = uniform01(64, 2);
  const auto a = discriminator_objective(scheme(Scheme::alpha_gan, 1.0), r, f);
  const auto v = discriminator_objective(scheme(Scheme::vanilla_slkgan), r, f);
  CHECK(std::abs(a.value - v.value) <= 1e-12);
  for (Eigen::Index i = 0; i < 64; ++i) {
    CHECK(std::abs(a.grad_real(i) - v.grad_real(i)) <= 1e-12);
    CHECK(std::abs(a.grad_fake(i) - v.grad_fake(i)) <= 1e-12);
  }
}

TEST_CASE("objective gradients match finite differences") {
  const Matrix r = uniform01(5, 3);
  const Matrix f = uniform01(5, 4);
  const double h = 1e-7;
  for (const auto& cfg : {scheme(Scheme::alpha_gan, 0.7, 3.0), scheme(Scheme::alpha_gan, 4.0, 1.0),
                          scheme(Scheme::lk_slkgan, 1, 1, 2.0), scheme(Scheme::vanilla_slkgan, 1, 1, 0.5),
                          scheme(Scheme::lk_slkgan, 1, 1, 7.5)}) {
    const auto d = discriminator_objective(cfg, r, f);
    const auto g = generator_objective(cfg, f);
    for (Eigen::Index i = 0; i < 5; ++i) {
      Matrix rp = r, rm = r, fp = f, fm = f;
      rp(i) += h;
      rm(i) -= h;
      fp(i) += h;
      fm(i) -= h;
      const double dr = (discriminator_objective(cfg, rp, f).value - discriminator_objective(cfg, rm, f).value) / (2 * h);
      const double df = (discriminator_objective(cfg, r, fp).value - discriminator_objective(cfg, r, fm).value) / (2 * h);
      const double dg = (generator_objective(cfg, fp).value - generator_objective(cfg, fm).value) / (2 * h);
      CHECK(d.grad_real(i) == doctest::Approx(dr).epsilon(1e-6));
      CHECK(d.grad_fake(i) == doctest::Approx(df).epsilon(1e-6));
      CHECK(g.grad_fake(i) == doctest::Approx(dg).epsilon(1e-6));
    }
  }
}

TEST_CASE("generator objectives at reference points") {
  const Matrix ones = Matrix::Ones(3, 1);
  CHECK(generator_objective(scheme(Scheme::lk_slkgan, 1, 1, 3.0), ones).value == -0.5);
  CHECK(generator_objective(scheme(Scheme::vanilla_slkgan, 1, 1, 0.25), ones).value == -0.5);

  const Matrix half = Matrix::Constant(3, 1, 0.5);
  CHECK(generator_objective(scheme(Scheme::alpha_gan, 1, 1), half).value ==
        doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  auto sat = scheme(Scheme::alpha_gan, 1, 1);
  sat.saturating_generator = true;
  CHECK(generator_objective(sat, half).value == doctest::Approx(-std::numbers::ln2).epsilon(1e-15));

  const Matrix d = uniform01(10, 7);
  const auto g = generator_objective(scheme(Scheme::lk_slkgan, 1, 1, 2.0), d);
  double oracle = 0.0;
  for (Eigen::Index i = 0; i < 10; ++i) oracle += 0.5 * ((1 - d(i)) * (1 - d(i)) - 1.0);
  CHECK(g.value == doctest::Approx(oracle / 10.0).epsilon(1e-15));
  CHECK(generator_objective(scheme(Scheme::vanilla_slkgan, 1, 1, 2.0), d).value == g.value);
}

TEST_CASE("gradient penalty") {
  Rng rng = make_rng(1);
  std::normal_distribution<double> n;
  Matrix x(6, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n(rng);

  nn::Dense flat{Matrix::Zero(1, 2), Vector::Constant(1, 0.3), nn::Activation::sigmoid()};
  CHECK(gradient_penalty(nn::Mlp({flat}), x, 5.0, false).value == 0.0);

  nn::Dense logistic{Matrix(1, 2), Vector::Constant(1, 0.1), nn::Activation::sigmoid()};
  logistic.weights << 0.4, -0.9;
  const nn::Mlp d({logistic});
  const double w2 = 0.4 * 0.4 + 0.9 * 0.9;
  const auto gp = gradient_penalty(d, x, 5.0, true);
  CHECK(gp.value == doctest::Approx(5.0 * 6.0 * w2).epsilon(1e-14));
  // d/dw of c·B·‖w‖² is 2cBw; the bias does not enter.
  CHECK(gp.parameter_gradient(0) == doctest::Approx(2 * 5.0 * 6.0 * 0.4).epsilon(1e-7));
  CHECK(gp.parameter_gradient(1) == doctest::Approx(2 * 5.0 * 6.0 * -0.9).epsilon(1e-7));
  CHECK(std::abs(gp.parameter_gradient(2)) < 1e-6);

  CHECK(gradient_penalty(d, x, 10.0, false).value == 2.0 * gp.value);
}

TEST_CASE("exact and finite-difference penalty gradients agree") {
  Rng rng = make_rng(3);
  std::normal_distribution<double> n;
  Matrix x(8, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n(rng);
  const auto leaky = nn::Activation::leaky_relu(0.2);
  const nn::Mlp d = nn::init_mlp({2, 5, 4, 1}, {leaky, leaky, nn::Activation::sigmoid()}, 17);
  const auto exact = gradient_penalty(d, x, 5.0, true);

  nn::Mlp probe = d;
  Vector theta = d.parameters();
  Vector numeric(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double saved = theta(j);
    theta(j) = saved + 1e-6;
    probe.set_parameters(theta);
    const double up = gradient_penalty(probe, x, 5.0, false).value;
    theta(j) = saved - 1e-6;
    probe.set_parameters(theta);
    const double down = gradient_penalty(probe, x, 5.0, false).value;
    theta(j) = saved;
    numeric(j) = (up - down) / 2e-6;
  }
  CHECK((exact.parameter_gradient - numeric).norm() <= 1e-6 * numeric.norm());
}

TEST_CASE("mode coverage") {
  auto s = ring_sampler(8, 1.0, 0.05, 3);
  auto real = s.clone_with_stream(9);
  CHECK(mode_coverage(real.sample(10000), s) == 8);
  const std::vector<Point2> one(2000, s.centers()[2]);
  CHECK(mode_coverage(one, s) == 1);
  std::vector<Point2> far;
  for (std::size_t i = 0; i < 2000; ++i) far.push_back({s.centers()[i % 8].x * 1.5, s.centers()[i % 8].y * 1.5});
  CHECK(mode_coverage(far, s) == 0);
  CHECK_THROWS(mode_coverage(std::vector<Point2>(999), s));
}

TEST_CASE("config validation") {
  auto c = scheme(Scheme::lk_slkgan, 1, 1, 0.0);
  CHECK_THROWS_WITH(validate(c), doctest::Contains("k > 0"));
  c.k = 2.0;
  CHECK_NOTHROW(validate(c));
  c.alpha_g = -1;
  CHECK_THROWS_WITH(validate(c), doctest::Contains("alpha_g > 0"));
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS(validate(c));
  c = TrainConfig{};
  c.gp_coefficient = -1;
  CHECK_THROWS(validate(c));
  c = TrainConfig{};
  c.steps = 0;
  CHECK_THROWS(validate(c));
}

TEST_CASE("config json round-trips and rejects unknown fields") {
  TrainConfig c = tiny();
  c.scheme = Scheme::vanilla_slkgan;
  c.k = 7.5;
  c.adam.learning_rate = 1e-3;
  c.data.modes = 5;
  c.seed = 123456789012345ULL;
  const auto j = to_json(c);
  CHECK(j.at("version") == TrainConfig::kVersion);
  const TrainConfig back = config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.seed == c.seed);

  auto extra = j;
  extra["epochs"] = 3;
  CHECK_THROWS_WITH(config_from_json(extra), doctest::Contains("epochs"));
  auto wrong = j;
  wrong["version"] = 2;
  CHECK_THROWS(config_from_json(wrong));
  auto partial = nlohmann::json{{"version", 1}, {"scheme", "lk_slkgan"}};
  CHECK(config_from_json(partial).steps == TrainConfig{}.steps);
  CHECK_THROWS(config_from_json(nlohmann::json{{"scheme", "wgan"}}));
}

TEST_CASE("one step, batch one: one evaluation entry") {
  TrainConfig c = tiny();
  c.steps = 1;
  c.batch_size = 1;
  const auto rec = train(c);
  REQUIRE(rec.entries.size() == 1);
  CHECK(rec.entries[0].step == 1);
  CHECK(rec.completed_steps == 1);
  CHECK_FALSE(rec.collapsed);
}

TEST_CASE("evaluation cadence and metric ranges") {
  TrainConfig c = tiny();
  c.steps = 25;
  const auto rec = train(c);
  REQUIRE(rec.entries.size() == 3);
  CHECK(rec.entries[0].step == 10);
  CHECK(rec.entries[2].step == 25);
  for (const auto& e : rec.entries) {
    CHECK(e.hist_jsd >= 0.0);
    CHECK(e.hist_jsd <= std::numbers::ln2 + 1e-9);
    CHECK(e.mode_coverage <= 8);
  }
  CHECK(rec.final_samples.size() == c.eval_samples);
}

TEST_CASE("training is a pure function of config and seed") {
  for (Scheme s : {Scheme::alpha_gan, Scheme::lk_slkgan, Scheme::vanilla_slkgan}) {
    TrainConfig c = tiny();
    c.scheme = s;
    c.alpha_g = 3.0;
    const auto a = train(c);
    const auto b = train(c);
    std::ostringstream ca, cb;
    write_metrics_csv(ca, a, false);
    write_metrics_csv(cb, b, false);
    CHECK(ca.str() == cb.str());
    CHECK(a.generator == b.generator);
    CHECK(a.discriminator == b.discriminator);
    c.seed += 1;
    CHECK_FALSE(train(c).generator == a.generator);
  }
}

TEST_CASE("each step only moves its own network") {
  Trainer t(tiny());
  const auto g0 = t.generator().parameter_hash();
  const auto d0 = t.discriminator().parameter_hash();
  const Matrix real = t.sample_real(16);
  const Matrix z = t.sample_noise(16);
  REQUIRE(t.discriminator_step(real, z).applied);
  CHECK(t.generator().parameter_hash() == g0);
  const auto d1 = t.discriminator().parameter_hash();
  CHECK(d1 != d0);
  REQUIRE(t.generator_step(t.sample_noise(16)).applied);
  CHECK(t.discriminator().parameter_hash() == d1);
  CHECK(t.generator().parameter_hash() != g0);
}

TEST_CASE("penalty with coefficient zero is bit-identical to no penalty") {
  TrainConfig off = tiny();
  TrainConfig zero = tiny();
  zero.gradient_penalty = true;
  zero.gp_coefficient = 0.0;
  const auto a = train(off);
  const auto b = train(zero);
  CHECK(a.generator == b.generator);
  CHECK(a.discriminator == b.discriminator);

  TrainConfig on = tiny();
  on.steps = 3;
  on.gradient_penalty = true;
  const auto c = train(on);
  off.steps = 3;
  CHECK_FALSE(c.discriminator == train(off).discriminator);
}

TEST_CASE("divergent training is flagged as collapsed") {
  TrainConfig c = tiny();
  c.steps = 500;
  c.collapse_after = 5;
  c.adam.learning_rate = 1e300;
  const auto rec = train(c);
  CHECK(rec.collapsed);
  CHECK(rec.completed_steps < 500);
  CHECK(rec.skipped_steps >= 5);
  CHECK_FALSE(rec.entries.empty());
}

TEST_CASE("csv layout") {
  TrainRecord r;
  r.entries.push_back({100, 1.0 / 3.0, 0.5, 0.125, 7, 12.5});
  std::ostringstream a, b;
  write_metrics_csv(a, r, false);
  write_metrics_csv(b, r, true);
  CHECK(a.str() == "step,d_loss,g_loss,hist_jsd,mode_coverage,wall_ms\n100,0.333333333333,0.5,0.125,7,0\n");
  CHECK(b.str().find(",12.5\n") != std::string::npos);
}
