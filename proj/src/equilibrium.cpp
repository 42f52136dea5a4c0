#include "lagan/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lagan {

namespace {

constexpr double kLn2 = std::numbers::ln2;

void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  }
}

template <typename F>
DiscriminatorField pointwise(const FiniteDistribution& p, const FiniteDistribution& q, F&& f) {
  require_same_support(p.size(), q.size());
  std::vector<double> d(p.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = (p[i] + q[i] > 0.0) ? f(p[i], q[i]) : 0.5;
  }
  return DiscriminatorField(std::move(d));
}

double jsd_from_kl(const FiniteDistribution& p, const FiniteDistribution& q) {
  const auto kl = builtin_generator(GeneratorFamily::kl);
  const FiniteDistribution m = midpoint_mixture(p, q);
  return 0.5 * f_divergence(kl, p, m) + 0.5 * f_divergence(kl, q, m);
}

IdentityReport tagged(IdentityReport r, std::string family, double parameter, std::size_t support) {
  r.family = std::move(family);
  r.parameter = parameter;
  r.support = support;
  return r;
}

}  // namespace

DiscriminatorField::DiscriminatorField(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) {
      throw std::invalid_argument("discriminator value outside [0,1] at index " + std::to_string(i));
    }
  }
}

DiscriminatorField canonical_discriminator(const FiniteDistribution& p, const FiniteDistribution& q) {
  return pointwise(p, q, [](double pi, double qi) { return pi / (pi + qi); });
}

DiscriminatorField alpha_discriminator(double alpha, const FiniteDistribution& p,
                                       const FiniteDistribution& q) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha_discriminator requires alpha > 0");
  }
  if (alpha == 1.0) return canonical_discriminator(p, q);
  return pointwise(p, q, [alpha](double pi, double qi) {
    const double a = std::pow(pi, alpha);
    const double b = std::pow(qi, alpha);
    // Both powers can underflow for tiny masses; fall back to the ratio form.
    if (a + b == 0.0) return 1.0 / (1.0 + std::pow(qi / pi, alpha));
    return a / (a + b);
  });
}

DiscriminatorField lk_discriminator(double gamma, double beta, const FiniteDistribution& p,
                                    const FiniteDistribution& q) {
  require_unit_interval(gamma, "gamma");
  require_unit_interval(beta, "beta");
  return pointwise(p, q, [gamma, beta](double pi, double qi) {
    return std::clamp((gamma * pi + beta * qi) / (pi + qi), 0.0, 1.0);
  });
}

double generator_value(const CpeLoss& loss, const DiscriminatorField& d,
                       const FiniteDistribution& p, const FiniteDistribution& q) {
  require_same_support(p.size(), q.size());
  require_same_support(p.size(), d.size());
  double real = 0.0;
  double fake = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) real += p[i] * -loss(1, d[i]);
    if (q[i] > 0.0) fake += q[i] * -loss(0, d[i]);
  }
  const double v = real + fake;
  if (std::isnan(v)) throw std::domain_error("loss '" + loss.name() + "' evaluated to NaN");
  return v;
}

IdentityReport compare(std::string check, double lhs, double rhs, double tolerance) {
  IdentityReport r;
  r.check = std::move(check);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tolerance;
  r.abs_residual = std::abs(lhs - rhs);
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  r.rel_residual = scale > 0.0 ? r.abs_residual / scale : 0.0;
  if (scale < 1e-6) {
    r.pass = r.abs_residual <= std::min(tolerance, 1e-12);
  } else {
    r.pass = r.rel_residual <= tolerance;
  }
  if (std::isnan(lhs) || std::isnan(rhs)) r.pass = false;
  return r;
}

IdentityReport compare_within(std::string check, double lhs, double rhs, double tolerance) {
  IdentityReport r = compare(std::move(check), lhs, rhs, tolerance);
  r.pass = r.abs_residual <= tolerance || r.rel_residual <= tolerance;
  if (std::isnan(lhs) || std::isnan(rhs)) r.pass = false;
  return r;
}

IdentityReport theorem1_identity(const CpeLoss& loss, std::optional<double> a_magnitude,
                                 const FiniteDistribution& p, const FiniteDistribution& q,
                                 double tolerance) {
  const DerivedGenerator g = derive_generator(loss, a_magnitude);
  const double lhs = generator_value(loss, canonical_discriminator(p, q), p, q);
  const double rhs = 2.0 * g.a * jensen_f(g.generator, p, q) - 2.0 * g.a * g.b;
  return tagged(compare("theorem1", lhs, rhs, tolerance), loss.name(), loss.parameter(), p.size());
}

IdentityReport lemma2_identity(const FiniteDistribution& p, const FiniteDistribution& q,
                               double tolerance) {
  const double lhs = generator_value(CpeLoss::vanilla(), canonical_discriminator(p, q), p, q);
  const double rhs = 2.0 * jsd_from_kl(p, q) - 2.0 * kLn2;
  return tagged(compare("lemma2", lhs, rhs, tolerance), "vanilla", 1.0, p.size());
}

GeneratingFunction alpha_pair_generator(double alpha_d, double alpha_g) {
  if (!(alpha_d > 0.0) || !(alpha_g > 0.0)) {
    throw std::invalid_argument("alpha_pair_generator requires alpha_D, alpha_G > 0");
  }
  std::ostringstream name;
  name << "f[" << alpha_d << ',' << alpha_g << ']';
  GeneratingFunction g;
  g.name = name.str();
  g.parameters = {alpha_d, alpha_g};
  if (alpha_g == 1.0) {
    const double at_one = -2.0 * kLn2;
    g.evaluate = [alpha_d, at_one](double u) {
      const double ulogu = u == 0.0 ? 0.0 : u * std::log(u);
      return alpha_d * ulogu - (u + 1.0) * std::log(std::pow(u, alpha_d) + 1.0) - at_one;
    };
    g.slope_at_infinity = 0.0;
    return g;
  }
  // Affine part scale·(u + 1) removed; f-divergences are unchanged.
  const double scale = alpha_g / (alpha_g - 1.0);
  const double inner = 1.0 - 1.0 / alpha_g;
  const double at_one = scale * (std::pow(2.0, 1.0 / alpha_g) - 2.0);
  g.evaluate = [alpha_d, scale, inner, at_one](double u) {
    const double num = std::pow(u, alpha_d * inner + 1.0) + 1.0;
    const double den = std::pow(std::pow(u, alpha_d) + 1.0, inner);
    return scale * (num / den - (u + 1.0)) - at_one;
  };
  g.slope_at_infinity = 0.0;
  return g;
}

IdentityReport lemma3_divergence_identity(double alpha, const FiniteDistribution& p,
                                          const FiniteDistribution& q, double tolerance) {
  if (!(alpha > 0.5)) {
    throw std::invalid_argument("lemma 3 requires alpha_D = 1 and alpha_G = alpha > 1/2");
  }
  const double lhs = f_divergence(alpha_pair_generator(1.0, alpha), p, q);
  const DerivedGenerator g = derive_generator(CpeLoss::alpha(alpha));
  const double rhs = std::pow(2.0, 1.0 / alpha) * jensen_f(g.generator, p, q);
  return tagged(compare("lemma3", lhs, rhs, tolerance), "alpha", alpha, p.size());
}

IdentityReport prop1_arimoto_identity(double alpha, const FiniteDistribution& p,
                                      const FiniteDistribution& q, double tolerance) {
  if (alpha == 1.0) {
    throw std::invalid_argument(
        "prop1 with alpha = 1 has no Arimoto form; use prop1_alpha_one_check");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("prop1 requires alpha > 0");
  const double lhs = generator_value(CpeLoss::alpha(alpha), alpha_discriminator(alpha, p, q), p, q);
  const double rhs = arimoto_formula(alpha, p.masses(), q.masses()) +
                     alpha / (alpha - 1.0) * (std::pow(2.0, 1.0 / alpha) - 2.0);
  return tagged(compare("prop1", lhs, rhs, tolerance), "alpha", alpha, p.size());
}

AlphaOneAdjudication prop1_alpha_one_check(const FiniteDistribution& p, const FiniteDistribution& q,
                                           double tolerance) {
  const double lhs = generator_value(CpeLoss::alpha(1.0), canonical_discriminator(p, q), p, q);
  const double jsd = jsd_from_kl(p, q);
  AlphaOneAdjudication out;
  out.two_jsd = tagged(compare("prop1_alpha1_two_jsd", lhs, 2.0 * jsd - 2.0 * kLn2, tolerance),
                       "alpha", 1.0, p.size());
  out.one_jsd = tagged(compare("prop1_alpha1_one_jsd", lhs, jsd - 2.0 * kLn2, tolerance), "alpha",
                       1.0, p.size());
  if (out.two_jsd.pass && out.one_jsd.pass) {
    out.matching = "both";
  } else if (out.two_jsd.pass) {
    out.matching = "two_jsd";
  } else if (out.one_jsd.pass) {
    out.matching = "one_jsd";
  } else {
    out.matching = "neither";
  }
  return out;
}

IdentityReport prop3_vajda_identity(double k, double beta, double gamma, double c,
                                    const FiniteDistribution& p, const FiniteDistribution& q,
                                    double tolerance) {
  if (!(k > 1.0)) throw std::invalid_argument("prop3 requires k > 1");
  require_unit_interval(beta, "beta");
  require_unit_interval(gamma, "gamma");
  require_unit_interval(c, "c");
  if (std::abs((gamma - beta) - 2.0 * (c - beta)) > 1e-12) {
    throw std::invalid_argument("prop3 requires gamma - beta = 2(c - beta)");
  }
  const DiscriminatorField d = lk_discriminator(gamma, beta, p, q);
  double lhs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dist = std::pow(std::abs(d[i] - c), k);
    lhs += p[i] * dist + q[i] * dist;
  }
  std::vector<double> sum(p.size());
  std::vector<double> twice_q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    sum[i] = p[i] + q[i];
    twice_q[i] = 2.0 * q[i];
  }
  const double rhs = std::pow(std::abs(c - beta), k) * pearson_vajda_formula(k, sum, twice_q);
  return tagged(compare("prop3", lhs, rhs, tolerance), "lk", k, p.size());
}

IdentityReport lemma4_identity(double k, const FiniteDistribution& p, const FiniteDistribution& q,
                               Lemma4Constant constant, double tolerance) {
  if (!(k > 0.0)) throw std::invalid_argument("lemma 4 requires k > 0");
  const DiscriminatorField d = canonical_discriminator(p, q);
  double lhs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    lhs += p[i] * (std::pow(std::abs(d[i]), k) - 1.0);
    lhs += q[i] * (std::pow(std::abs(1.0 - d[i]), k) - 1.0);
  }
  GeneratingFunction fk;
  fk.name = "u(u^k-1)";
  fk.parameters = {k};
  fk.evaluate = [k](double u) { return u * (std::pow(u, k) - 1.0); };
  fk.slope_at_infinity = std::numeric_limits<double>::infinity();

  const double scale = std::pow(2.0, 1.0 - k);
  const double shift = constant == Lemma4Constant::stated ? 0.5 : 2.0;
  const double rhs = scale * jensen_f(fk, p, q) + scale - shift;
  const char* check = constant == Lemma4Constant::stated ? "lemma4_stated" : "lemma4";
  return tagged(compare(check, lhs, rhs, tolerance), "slk", k, p.size());
}

}  // namespace lagan
