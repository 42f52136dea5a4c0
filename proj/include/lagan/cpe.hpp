#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lagan/divergence.hpp"

namespace lagan {

enum class LossFamily { vanilla, alpha, slk, custom };

/// Predictions are clamped to [kPredictionClamp, 1 − kPredictionClamp] on
/// whichever side a loss has a logarithmic or negative-power singularity.
inline constexpr double kPredictionClamp = 1e-7;

/// A class probability estimation loss L(y, ŷ), y ∈ {0, 1}, ŷ ∈ [0, 1].
class CpeLoss {
 public:
  /// −y log ŷ − (1−y) log(1−ŷ)
  static CpeLoss vanilla();
  /// α/(α−1) (1 − ŷ^{1−1/α}) for y = 1, mirrored for y = 0; α = 1 is vanilla.
  static CpeLoss alpha(double alpha);
  /// −(y(ŷ^k − 1) + (1−y)((1−ŷ)^k − 1))
  static CpeLoss slk(double k);
  /// Arbitrary user loss; `fn(y, ŷ)` with y ∈ {0, 1}.
  static CpeLoss custom(std::string name, std::function<double(int, double)> fn);

  double operator()(int y, double yhat) const;

  LossFamily family() const noexcept { return family_; }
  double parameter() const noexcept { return parameter_; }
  const std::string& name() const noexcept { return name_; }

 private:
  CpeLoss(LossFamily family, double parameter, std::string name,
          std::function<double(int, double)> fn)
      : family_(family), parameter_(parameter), name_(std::move(name)), fn_(std::move(fn)) {}

  LossFamily family_;
  double parameter_;
  std::string name_;
  std::function<double(int, double)> fn_;
};

/// Rejects nonpositive parameters; `parameter` is ignored for vanilla.
CpeLoss make_loss(LossFamily family, double parameter = 0.0);

/// Parses `vanilla`, `alpha:α`, `slk:k`.
CpeLoss parse_loss(std::string_view spec);

/// max over ŷ ∈ {0, 0.1, ..., 1} of |L(1, ŷ) − L(0, 1 − ŷ)|.
double symmetry_defect(const CpeLoss& loss);
bool check_symmetry(const CpeLoss& loss);

enum class Curvature { convex, concave };

std::string_view to_string(Curvature c);

struct DerivedGenerator {
  GeneratingFunction generator;
  double a = 0.0;
  double b = 0.0;
  Curvature curvature = Curvature::concave;
};

/// Raised when a loss cannot produce a valid generating function.
class DerivationError : public std::runtime_error {
 public:
  DerivationError(const std::string& what, double worst_u)
      : std::runtime_error(what), worst_u_(worst_u) {}
  double worst_u() const noexcept { return worst_u_; }

 private:
  double worst_u_;
};

/// The scale `a` used when the caller gives no override: 1 for vanilla and
/// alpha(1), 2^{1/α − 1} for alpha(α), 2^{−k} for slk(k). Empty for custom losses.
std::optional<double> family_default_a(const CpeLoss& loss);

/// f(u) = −u (L(1, u/2)/a − b) on [0, 2], with no validity checks.
GeneratingFunction generator_from_loss(const CpeLoss& loss, double a, double b);

/// Curvature of u ↦ u·L(1, u/2) on (0, 2]; throws DerivationError if it is
/// neither convex nor concave (or is affine).
Curvature classify_curvature(const CpeLoss& loss);

/// Builds (f, a, b) with f(1) = 0.
///
/// With an explicit `a_magnitude` the sign of a follows the curvature rule
/// (a < 0 for convex u·L(1, u/2), a > 0 for concave). Without one, the
/// family's signed default is used and must agree with that rule; otherwise
/// the resulting generator is not convex and derivation is rejected.
DerivedGenerator derive_generator(const CpeLoss& loss,
                                  std::optional<double> a_magnitude = std::nullopt);

}  // namespace lagan
