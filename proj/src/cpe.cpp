#include "lagan/cpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "lagan/detail/spec_parse.hpp"

namespace lagan {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSymmetryTolerance = 1e-12;
constexpr double kProbeStep = 1e-3;

std::string param_name(const char* family, double v) {
  std::ostringstream os;
  os << family << ':' << v;
  return os.str();
}

// Builds a symmetric loss from its y = 1 branch g: L(1, ŷ) = g(ŷ), L(0, ŷ) = g(1 − ŷ).
std::function<double(int, double)> mirrored(std::function<double(double)> g) {
  return [g = std::move(g)](int y, double yhat) {
    return y == 1 ? g(yhat) : g(1.0 - yhat);
  };
}

}  // namespace

CpeLoss CpeLoss::vanilla() {
  return CpeLoss(LossFamily::vanilla, 1.0, "vanilla",
                 mirrored([](double t) { return -std::log(std::max(t, kPredictionClamp)); }));
}

CpeLoss CpeLoss::alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha-loss requires alpha > 0");
  }
  if (alpha == 1.0) {
    CpeLoss v = vanilla();
    return CpeLoss(LossFamily::alpha, 1.0, "alpha:1", v.fn_);
  }
  const double scale = alpha / (alpha - 1.0);
  const double power = 1.0 - 1.0 / alpha;
  const bool singular_at_zero = power < 0.0;
  return CpeLoss(LossFamily::alpha, alpha, param_name("alpha", alpha),
                 mirrored([scale, power, singular_at_zero](double t) {
                   if (singular_at_zero) t = std::max(t, kPredictionClamp);
                   return scale * (1.0 - std::pow(t, power));
                 }));
}

CpeLoss CpeLoss::slk(double k) {
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw std::invalid_argument("slk loss requires k > 0");
  }
  return CpeLoss(LossFamily::slk, k, param_name("slk", k),
                 mirrored([k](double t) { return 1.0 - std::pow(t, k); }));
}

CpeLoss CpeLoss::custom(std::string name, std::function<double(int, double)> fn) {
  return CpeLoss(LossFamily::custom, 0.0, std::move(name), std::move(fn));
}

double CpeLoss::operator()(int y, double yhat) const {
  if (y != 0 && y != 1) throw std::invalid_argument("CPE label must be 0 or 1");
  if (!(yhat >= 0.0 && yhat <= 1.0)) return kNaN;
  return fn_(y, yhat);
}

CpeLoss make_loss(LossFamily family, double parameter) {
  switch (family) {
    case LossFamily::vanilla:
      return CpeLoss::vanilla();
    case LossFamily::alpha:
      return CpeLoss::alpha(parameter);
    case LossFamily::slk:
      return CpeLoss::slk(parameter);
    case LossFamily::custom:
      break;
  }
  throw std::invalid_argument("make_loss: custom losses are built with CpeLoss::custom");
}

CpeLoss parse_loss(std::string_view spec) {
  const auto s = detail::parse_spec(spec);
  if (s.family == "vanilla") return CpeLoss::vanilla();
  if (s.family == "alpha") return CpeLoss::alpha(detail::require_parameter(s, spec));
  if (s.family == "slk") return CpeLoss::slk(detail::require_parameter(s, spec));
  throw std::invalid_argument("unknown loss '" + s.family + "' (expected vanilla, alpha:a, slk:k)");
}

double symmetry_defect(const CpeLoss& loss) {
  double worst = 0.0;
  for (int j = 0; j <= 10; ++j) {
    const double yhat = j / 10.0;
    const double d = std::abs(loss(1, yhat) - loss(0, 1.0 - yhat));
    if (std::isnan(d)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, d);
  }
  return worst;
}

bool check_symmetry(const CpeLoss& loss) { return symmetry_defect(loss) <= kSymmetryTolerance; }

std::string_view to_string(Curvature c) { return c == Curvature::convex ? "convex" : "concave"; }

std::optional<double> family_default_a(const CpeLoss& loss) {
  switch (loss.family()) {
    case LossFamily::vanilla:
      return 1.0;
    case LossFamily::alpha:
      return loss.parameter() == 1.0 ? 1.0 : std::pow(2.0, 1.0 / loss.parameter() - 1.0);
    case LossFamily::slk:
      return std::pow(2.0, -loss.parameter());
    case LossFamily::custom:
      break;
  }
  return std::nullopt;
}

GeneratingFunction generator_from_loss(const CpeLoss& loss, double a, double b) {
  GeneratingFunction g;
  g.name = "f[" + loss.name() + "]";
  g.parameters = {a, b};
  g.domain_max = 2.0;
  g.evaluate = [loss, a, b](double u) {
    if (!(u >= 0.0 && u <= 2.0)) return kNaN;
    return -u * (loss(1, u / 2.0) / a - b);
  };
  return g;
}

Curvature classify_curvature(const CpeLoss& loss) {
  const auto n = static_cast<std::size_t>(std::lround(2.0 / kProbeStep)) + 1;
  std::vector<double> h(n);
  // Probes u in (0, 2]; h[0] is unused.
  for (std::size_t j = 1; j < n; ++j) {
    const double u = static_cast<double>(j) * kProbeStep;
    h[j] = u * loss(1, u / 2.0);
    if (!std::isfinite(h[j])) {
      throw DerivationError("u*L(1,u/2) is not finite", u);
    }
  }
  double most_negative = 0.0, most_negative_at = 0.0;
  double most_positive = 0.0, most_positive_at = 0.0;
  for (std::size_t j = 2; j + 1 < n; ++j) {
    const double d = h[j - 1] - 2.0 * h[j] + h[j + 1];
    const double u = static_cast<double>(j) * kProbeStep;
    if (d < most_negative) {
      most_negative = d;
      most_negative_at = u;
    }
    if (d > most_positive) {
      most_positive = d;
      most_positive_at = u;
    }
  }
  const bool has_negative = most_negative < -kCurvatureTolerance;
  const bool has_positive = most_positive > kCurvatureTolerance;
  if (has_negative && has_positive) {
    // Report the offender against the dominant curvature.
    const bool mostly_concave = -most_negative >= most_positive;
    throw DerivationError("u*L(1,u/2) is neither convex nor concave on [0,2]",
                          mostly_concave ? most_positive_at : most_negative_at);
  }
  if (!has_negative && !has_positive) {
    throw DerivationError("u*L(1,u/2) is affine on [0,2]; no strictly convex generator exists", 1.0);
  }
  const Curvature c = has_positive ? Curvature::convex : Curvature::concave;
  const double sign = c == Curvature::convex ? 1.0 : -1.0;
  const double h1 = loss(1, 0.5);
  for (double step : {1e-2, 1e-1}) {
    const double gap = 0.5 * (1.0 - step) * loss(1, (1.0 - step) / 2.0) +
                       0.5 * (1.0 + step) * loss(1, (1.0 + step) / 2.0) - h1;
    if (!(sign * gap > kCurvatureTolerance)) {
      throw DerivationError("u*L(1,u/2) is not strictly curved around u = 1", 1.0);
    }
  }
  return c;
}

DerivedGenerator derive_generator(const CpeLoss& loss, std::optional<double> a_magnitude) {
  if (!check_symmetry(loss)) {
    throw DerivationError("loss '" + loss.name() + "' is not symmetric: L(1,y) != L(0,1-y)",
                          std::numeric_limits<double>::quiet_NaN());
  }
  const Curvature curvature = classify_curvature(loss);
  const double required_sign = curvature == Curvature::concave ? 1.0 : -1.0;
  const double l_half = loss(1, 0.5);

  double a = required_sign;
  if (a_magnitude) {
    if (!(*a_magnitude > 0.0) || !std::isfinite(*a_magnitude)) {
      throw std::invalid_argument("a magnitude must be a positive finite number");
    }
    a = required_sign * *a_magnitude;
  } else if (const auto def = family_default_a(loss)) {
    a = *def;
    if (a * required_sign <= 0.0) {
      const auto rep = convexity_report(generator_from_loss(loss, a, l_half / a), 0.0, 2.0, kProbeStep);
      throw DerivationError("generator not convex for '" + loss.name() + "' with default a", rep.worst_at);
    }
  }

  DerivedGenerator out;
  out.a = a;
  out.b = l_half / a;
  out.curvature = curvature;
  out.generator = generator_from_loss(loss, out.a, out.b);
  const auto rep = convexity_report(out.generator, 0.0, 2.0, kProbeStep);
  if (!rep.convex || !rep.strict_at_1) {
    throw DerivationError("generator not convex for '" + loss.name() + "'", rep.worst_at);
  }
  return out;
}

}  // namespace lagan
