#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lagan/equilibrium.hpp"

using namespace lagan;

namespace {

struct Pair {
  FiniteDistribution p, q;
};

Pair pair(std::size_t n, std::uint64_t s) {
  return {random_distribution(n, 1000 + 2 * s), random_distribution(n, 1001 + 2 * s)};
}

const auto U2 = FiniteDistribution::from_masses({0.5, 0.5});

}  // namespace

TEST_CASE("optimal discriminators") {
  const auto p = FiniteDistribution::from_masses({0.2, 0.8, 0.0});
  const auto q = FiniteDistribution::from_masses({0.6, 0.4, 0.0});
  const auto d = canonical_discriminator(p, q);
  CHECK(d[0] == doctest::Approx(0.25));
  CHECK(d[1] == doctest::Approx(2.0 / 3.0));
  CHECK(d[2] == 0.5);

  const auto d1 = alpha_discriminator(1.0, p, q);
  for (std::size_t i = 0; i < 3; ++i) CHECK(d1[i] == d[i]);
  const auto d2 = alpha_discriminator(2.0, p, q);
  CHECK(d2[0] == doctest::Approx(0.04 / 0.40));

  const auto lk = lk_discriminator(1.0, 0.0, p, q);
  for (std::size_t i = 0; i < 3; ++i) CHECK(lk[i] == doctest::Approx(d[i]));
  CHECK_THROWS(lk_discriminator(1.5, 0.0, p, q));
  CHECK_THROWS(DiscriminatorField({0.5, 1.2}));
}

TEST_CASE("slk:2 equilibrium value at p = q is -3/2") {
  // D* = 1/2, so each term is (1/2)^2 - 1.
  const auto r = theorem1_identity(CpeLoss::slk(2.0), std::nullopt, U2, U2);
  CHECK(r.lhs == doctest::Approx(-1.5).epsilon(1e-15));
  CHECK(r.pass);
}

TEST_CASE("equilibrium value equals the scaled Jensen-f divergence on random pairs") {
  std::vector<CpeLoss> losses{CpeLoss::vanilla()};
  for (double a : {0.6, 1.0, 2.0, 5.0, 10.0, 20.0}) losses.push_back(CpeLoss::alpha(a));
  for (double k : {0.25, 1.0, 2.0, 7.5, 15.0}) losses.push_back(CpeLoss::slk(k));
  for (const auto& l : losses) {
    for (std::size_t n : {2, 8, 64}) {
      for (std::uint64_t s = 0; s < 5; ++s) {
        const auto [p, q] = pair(n, s);
        const auto r = theorem1_identity(l, std::nullopt, p, q);
        CAPTURE(l.name());
        CHECK(r.rel_residual <= 1e-9);
      }
    }
  }
}

TEST_CASE("equilibrium identity does not depend on the magnitude of a") {
  const auto [p, q] = pair(8, 9);
  for (double a : {0.1, 1.0, 7.0}) CHECK(theorem1_identity(CpeLoss::alpha(2.0), a, p, q).pass);
}

TEST_CASE("vanilla equilibrium value against an independent jsd") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto [p, q] = pair(8, s);
    double jsd = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      const double m = 0.5 * (p[i] + q[i]);
      jsd += 0.5 * p[i] * std::log(p[i] / m) + 0.5 * q[i] * std::log(q[i] / m);
    }
    const auto r = lemma2_identity(p, q);
    CHECK(r.pass);
    CHECK(r.rhs == doctest::Approx(2.0 * jsd - 2.0 * std::numbers::ln2).epsilon(1e-12));
  }
}

TEST_CASE("alpha-pair divergence equals the scaled Jensen-f_alpha divergence") {
  for (double a : {0.6, 1.0, 2.0, 5.0, 20.0}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto [p, q] = pair(16, s);
      CAPTURE(a);
      CHECK(lemma3_divergence_identity(a, p, q).pass);
    }
  }
  const auto [p, q] = pair(4, 0);
  CHECK_THROWS(lemma3_divergence_identity(0.4, p, q));
}

TEST_CASE("alpha pair generator vanishes at 1 and is continuous in alpha_G") {
  for (double ad : {0.5, 1.0, 3.0}) {
    CHECK(std::abs(alpha_pair_generator(ad, 1.0)(1.0)) < 1e-15);
    CHECK(std::abs(alpha_pair_generator(ad, 2.0)(1.0)) < 1e-14);
    for (double u : {0.2, 1.7, 3.0}) {
      CHECK(alpha_pair_generator(ad, 1.0 + 1e-7)(u) ==
            doctest::Approx(alpha_pair_generator(ad, 1.0)(u)).epsilon(1e-5));
    }
  }
}

TEST_CASE("alpha-GAN equilibrium in Arimoto form: closed forms") {
  // p = q: D* = 1/2 and the value is -2 L_2(1, 1/2) = 2(sqrt 2 - 2).
  const auto eq = prop1_arimoto_identity(2.0, U2, U2);
  CHECK(eq.lhs == doctest::Approx(2.0 * (std::numbers::sqrt2 - 2.0)).epsilon(1e-14));
  CHECK(eq.pass);
  // Disjoint supports: D* is a perfect classifier and the value is 0.
  const auto p = FiniteDistribution::from_masses({1.0, 0.0});
  const auto q = FiniteDistribution::from_masses({0.0, 1.0});
  const auto dj = prop1_arimoto_identity(5.0, p, q);
  CHECK(std::abs(dj.lhs) < 1e-12);
  CHECK(dj.pass);
  for (double a : {0.5, 2.0, 5.0}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto [pp, qq] = pair(8, s);
      CHECK(prop1_arimoto_identity(a, pp, qq).pass);
    }
  }
  CHECK_THROWS(prop1_arimoto_identity(1.0, U2, U2));
}

TEST_CASE("alpha-GAN equilibrium at alpha = 1 matches 2 JSD - 2 ln 2") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto [p, q] = pair(8, s);
    const auto adj = prop1_alpha_one_check(p, q);
    CHECK(adj.matching == "two_jsd");
    CHECK(adj.two_jsd.pass);
    CHECK_FALSE(adj.one_jsd.pass);
  }
}

TEST_CASE("least-squares discriminator gives the Pearson-Vajda form") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto [p, q] = pair(8, s);
    CHECK(prop3_vajda_identity(2.0, 0.0, 1.0, 0.5, p, q).pass);
    CHECK(prop3_vajda_identity(3.0, 0.2, 0.6, 0.4, p, q).pass);
  }
  // k = 2, γ = 1, β = 0, c = 1/2 at p = q: D* = 1/2, so both sides vanish.
  const auto z = prop3_vajda_identity(2.0, 0.0, 1.0, 0.5, U2, U2);
  CHECK(z.lhs == 0.0);
  CHECK(z.pass);
  CHECK_THROWS_WITH(prop3_vajda_identity(2.0, 0.0, 1.0, 0.4, U2, U2), doctest::Contains("2(c - beta)"));
  CHECK_THROWS(prop3_vajda_identity(1.0, 0.0, 1.0, 0.5, U2, U2));
}

TEST_CASE("shifted-Lk value: the 1/2 constant is off by 3/2") {
  // At p = q and k = 1 the objective is 2((1/2) - 1) = -1, while the closed
  // form with the 1/2 constant gives J + 1 - 1/2 = 1/2.
  const auto stated = lemma4_identity(1.0, U2, U2, Lemma4Constant::stated);
  CHECK(stated.lhs == doctest::Approx(-1.0));
  CHECK(stated.rhs == doctest::Approx(0.5));
  CHECK_FALSE(stated.pass);
  const auto fixed = lemma4_identity(1.0, U2, U2, Lemma4Constant::theorem1);
  CHECK(fixed.pass);
  for (double k : {0.25, 1.0, 2.0, 7.5, 15.0}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto [p, q] = pair(8, s);
      const auto r = lemma4_identity(k, p, q, Lemma4Constant::theorem1);
      CHECK(r.pass);
      const auto wrong = lemma4_identity(k, p, q, Lemma4Constant::stated);
      CHECK(wrong.rhs - r.rhs == doctest::Approx(1.5));
    }
  }
}

TEST_CASE("compare") {
  CHECK(compare("x", 1.0, 1.0 + 1e-10, 1e-9).pass);
  CHECK_FALSE(compare("x", 1.0, 1.0 + 1e-8, 1e-9).pass);
  CHECK_FALSE(compare("x", NAN, 1.0, 1e-9).pass);
  CHECK(compare("x", 0.0, 1e-13, 1e-9).pass);
  CHECK_FALSE(compare("x", 0.0, 1e-11, 1e-9).pass);
  CHECK(compare_within("x", 1e7, 1e7 + 1e-6, 1e-12).pass);
  CHECK(compare_within("x", 1e-5, 1e-5 + 1e-16, 1e-12).pass);
  CHECK_FALSE(compare_within("x", 1.0, 1.0 + 1e-9, 1e-12).pass);
}
