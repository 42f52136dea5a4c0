#include "lagan/divergence.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "lagan/detail/spec_parse.hpp"

namespace lagan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogx(double u) { return u == 0.0 ? 0.0 : u * std::log(u); }

void require_alpha(double alpha, const char* family) {
  if (!(alpha > 0.0) || alpha == 1.0 || !std::isfinite(alpha)) {
    std::ostringstream os;
    os << family << " requires alpha > 0 and alpha != 1 (got " << alpha << ")";
    throw std::invalid_argument(os.str());
  }
}

std::string with_param(const char* family, double v) {
  std::ostringstream os;
  os << family << ':' << v;
  return os.str();
}

}  // namespace

GeneratingFunction builtin_generator(GeneratorFamily family, double parameter) {
  GeneratingFunction g;
  switch (family) {
    case GeneratorFamily::kl:
    case GeneratorFamily::vanilla_ulogu:
      g.name = family == GeneratorFamily::kl ? "kl" : "vanilla_ulogu";
      g.evaluate = xlogx;
      g.slope_at_infinity = kInf;
      return g;
    case GeneratorFamily::jsd:
      g.name = "jsd";
      g.evaluate = [](double u) { return 0.5 * (xlogx(u) - (u + 1.0) * std::log((u + 1.0) / 2.0)); };
      g.slope_at_infinity = 0.5 * std::numbers::ln2;
      return g;
    case GeneratorFamily::pearson_chi2:
      g.name = "chi2";
      g.evaluate = [](double u) {
        const double r = std::sqrt(u);
        const double d = r - 1.0 / r;
        return d * d;
      };
      g.slope_at_infinity = 1.0;
      return g;
    case GeneratorFamily::pearson_vajda: {
      const double k = parameter;
      if (!(k > 1.0) || !std::isfinite(k)) {
        throw std::invalid_argument("pearson_vajda requires k > 1");
      }
      g.name = with_param("vajda", k);
      g.parameters = {k};
      g.evaluate = [k](double u) { return std::pow(u, 1.0 - k) * std::pow(std::abs(1.0 - u), k); };
      g.slope_at_infinity = 1.0;
      return g;
    }
    case GeneratorFamily::arimoto: {
      const double a = parameter;
      require_alpha(a, "arimoto");
      // (1 + u^α)^{1/α}: the form whose f-divergence reproduces
      // α/(α−1)(Σ (p^α + q^α)^{1/α} − 2^{1/α}).
      const double scale = a / (a - 1.0);
      const double c = std::pow(2.0, 1.0 / a);
      g.name = with_param("arimoto", a);
      g.parameters = {a};
      g.evaluate = [a, scale, c](double u) {
        return scale * (std::pow(1.0 + std::pow(u, a), 1.0 / a) - (1.0 + u) - c + 2.0);
      };
      g.slope_at_infinity = 0.0;
      return g;
    }
    case GeneratorFamily::hellinger: {
      const double a = parameter;
      require_alpha(a, "hellinger");
      g.name = with_param("hellinger", a);
      g.parameters = {a};
      g.evaluate = [a](double u) { return (std::pow(u, a) - 1.0) / (a - 1.0); };
      g.slope_at_infinity = a > 1.0 ? kInf : 0.0;
      return g;
    }
  }
  throw std::invalid_argument("unknown generator family");
}

GeneratingFunction parse_generator(std::string_view spec) {
  const auto s = detail::parse_spec(spec);
  if (s.family == "kl") return builtin_generator(GeneratorFamily::kl);
  if (s.family == "jsd") return builtin_generator(GeneratorFamily::jsd);
  if (s.family == "chi2") return builtin_generator(GeneratorFamily::pearson_chi2);
  if (s.family == "vanilla_ulogu") return builtin_generator(GeneratorFamily::vanilla_ulogu);
  if (s.family == "vajda") {
    return builtin_generator(GeneratorFamily::pearson_vajda, detail::require_parameter(s, spec));
  }
  if (s.family == "arimoto") {
    return builtin_generator(GeneratorFamily::arimoto, detail::require_parameter(s, spec));
  }
  if (s.family == "hellinger") {
    return builtin_generator(GeneratorFamily::hellinger, detail::require_parameter(s, spec));
  }
  throw std::invalid_argument("unknown divergence family '" + s.family + "'");
}

double f_divergence(const GeneratingFunction& f, std::span<const double> p,
                    std::span<const double> q) {
  require_same_support(p.size(), q.size());
  if (!f.normalized) {
    throw std::invalid_argument("generator '" + f.name + "' is not normalized (f(1) != 0)");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double term = 0.0;
    if (q[i] > 0.0) {
      const double u = p[i] / q[i];
      const double fu = u <= f.domain_max ? f(u) : std::numeric_limits<double>::quiet_NaN();
      term = q[i] * fu;
    } else if (p[i] > 0.0) {
      if (!f.slope_at_infinity) {
        throw std::domain_error("generator '" + f.name + "' has no asymptotic slope but p has mass " +
                                "outside the support of q at index " + std::to_string(i));
      }
      term = p[i] * *f.slope_at_infinity;
    }
    if (std::isnan(term)) {
      throw std::domain_error("generator '" + f.name + "' evaluated to NaN at index " +
                              std::to_string(i));
    }
    total += term;
  }
  return total;
}

double f_divergence(const GeneratingFunction& f, const FiniteDistribution& p,
                    const FiniteDistribution& q) {
  return f_divergence(f, p.masses(), q.masses());
}

double jensen_f(const GeneratingFunction& f, const FiniteDistribution& p,
                const FiniteDistribution& q) {
  const FiniteDistribution m = midpoint_mixture(p, q);
  return 0.5 * f_divergence(f, p, m) + 0.5 * f_divergence(f, q, m);
}

GeneratingFunction symmetrize(const GeneratingFunction& f) {
  if (!f.normalized) {
    throw std::invalid_argument("symmetrize: generator '" + f.name + "' is not normalized");
  }
  GeneratingFunction bar;
  bar.name = "sym(" + f.name + ")";
  bar.parameters = f.parameters;
  bar.evaluate = [inner = f.evaluate](double u) {
    if (std::isinf(u)) return std::numeric_limits<double>::quiet_NaN();
    const double s = u + 1.0;
    return s / 4.0 * (inner(2.0 * u / s) + inner(2.0 / s));
  };
  // lim f̄(t)/t = (f(2) + f(0)) / 4
  bar.slope_at_infinity = (f(2.0) + f(0.0)) / 4.0;
  return bar;
}

double renyi_divergence(double alpha, const FiniteDistribution& p, const FiniteDistribution& q) {
  if (alpha == 1.0) {
    throw std::invalid_argument("renyi order 1 is the KL divergence; use the kl family");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("renyi order must be in (0,1) or (1,inf)");
  }
  require_same_support(p.size(), q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      if (alpha > 1.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    s += std::pow(p[i], alpha) * std::pow(q[i], 1.0 - alpha);
  }
  return std::log(s) / (alpha - 1.0);
}

double arimoto_formula(double alpha, std::span<const double> p, std::span<const double> q) {
  require_alpha(alpha, "arimoto");
  require_same_support(p.size(), q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += std::pow(std::pow(p[i], alpha) + std::pow(q[i], alpha), 1.0 / alpha);
  }
  return alpha / (alpha - 1.0) * (s - std::pow(2.0, 1.0 / alpha));
}

double pearson_vajda_formula(double k, std::span<const double> p, std::span<const double> q) {
  require_same_support(p.size(), q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = std::abs(q[i] - p[i]);
    if (diff == 0.0) continue;
    s += std::pow(diff, k) / std::pow(p[i], k - 1.0);
  }
  return s;
}

ConvexityReport convexity_report(const GeneratingFunction& f, double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo >= 0.0) || !(hi > lo)) {
    throw std::invalid_argument("convexity_report: need 0 <= lo < hi and step > 0");
  }
  ConvexityReport r;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    v[j] = f(lo + static_cast<double>(j) * step);
    if (!std::isfinite(v[j])) ++r.non_finite;
  }
  bool first = true;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    if (!std::isfinite(v[j - 1]) || !std::isfinite(v[j]) || !std::isfinite(v[j + 1])) continue;
    const double d = v[j - 1] - 2.0 * v[j] + v[j + 1];
    if (first || d < r.worst_second_difference) {
      r.worst_second_difference = d;
      r.worst_at = lo + static_cast<double>(j) * step;
      first = false;
    }
  }
  r.convex = r.worst_second_difference >= -kCurvatureTolerance;
  r.strict_at_1 = true;
  const double f1 = f(1.0);
  for (double h : {1e-2, 1e-1}) {
    const double gap = 0.5 * f(1.0 - h) + 0.5 * f(1.0 + h) - f1;
    if (!(gap > kCurvatureTolerance)) r.strict_at_1 = false;
  }
  return r;
}

}  // namespace lagan
