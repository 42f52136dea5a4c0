#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lagan/prob.hpp"

namespace lagan {

/// A generating function f: [0, ∞) → (−∞, ∞] of an f-divergence.
///
/// `slope_at_infinity` is lim_{t→∞} f(t)/t; it prices mass of p sitting where
/// q has none. Generators that are only meaningful on a bounded interval (for
/// instance the ones derived from CPE losses, which live on [0, 2]) leave it
/// empty and `domain_max` finite.
struct GeneratingFunction {
  std::string name;
  std::vector<double> parameters;
  std::function<double(double)> evaluate;
  std::optional<double> slope_at_infinity;
  double domain_max = std::numeric_limits<double>::infinity();
  bool normalized = true;

  double operator()(double u) const { return evaluate(u); }
};

enum class GeneratorFamily {
  kl,
  jsd,
  pearson_chi2,
  pearson_vajda,
  arimoto,
  hellinger,
  vanilla_ulogu,
};

/// Generators of the classical f-divergences. Parameterized families take
/// k > 1 (pearson_vajda) or α > 0, α ≠ 1 (arimoto, hellinger).
GeneratingFunction builtin_generator(GeneratorFamily family, double parameter = 0.0);

/// Parses `kl`, `jsd`, `chi2`, `vajda:k`, `arimoto:alpha`, `hellinger:alpha`.
GeneratingFunction parse_generator(std::string_view spec);

/// Σ q_i f(p_i / q_i) with 0·f(0/0) = 0 and 0·f(a/0) = a·slope_at_infinity.
///
/// The span overload does not require unit mass, so it also serves
/// unnormalized measures.
double f_divergence(const GeneratingFunction& f, std::span<const double> p,
                    std::span<const double> q);
double f_divergence(const GeneratingFunction& f, const FiniteDistribution& p,
                    const FiniteDistribution& q);

/// ½ D_f(p ‖ m) + ½ D_f(q ‖ m) with m the midpoint mixture.
double jensen_f(const GeneratingFunction& f, const FiniteDistribution& p,
                const FiniteDistribution& q);

/// f̄(u) = ((u+1)/4)(f(2u/(u+1)) + f(2/(u+1))); D_f̄ equals the Jensen-f-divergence.
GeneratingFunction symmetrize(const GeneratingFunction& f);

/// (1/(α−1)) log Σ p^α q^{1−α}.
double renyi_divergence(double alpha, const FiniteDistribution& p, const FiniteDistribution& q);

/// α/(α−1) (Σ (p^α + q^α)^{1/α} − 2^{1/α}), summed directly.
double arimoto_formula(double alpha, std::span<const double> p, std::span<const double> q);

/// Σ |q − p|^k / p^{k−1}, summed directly; accepts unnormalized measures.
double pearson_vajda_formula(double k, std::span<const double> p, std::span<const double> q);

struct ConvexityReport {
  bool convex = true;
  bool strict_at_1 = false;
  double worst_second_difference = 0.0;
  double worst_at = 0.0;
  std::size_t non_finite = 0;
};

/// Second differences below this magnitude are treated as zero.
inline constexpr double kCurvatureTolerance = 1e-9;

/// Probes f on {lo, lo+step, ..., hi}. Convex when no second difference falls
/// below −kCurvatureTolerance; strict at 1 when the midpoint gap
/// f(1−h)/2 + f(1+h)/2 − f(1) exceeds kCurvatureTolerance for h ∈ {0.01, 0.1}.
ConvexityReport convexity_report(const GeneratingFunction& f, double lo, double hi, double step);

}  // namespace lagan
