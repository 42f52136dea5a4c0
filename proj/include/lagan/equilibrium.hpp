#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lagan/cpe.hpp"
#include "lagan/divergence.hpp"
#include "lagan/prob.hpp"

namespace lagan {

/// Pointwise discriminator output D_i ∈ [0, 1] on a finite support.
class DiscriminatorField {
 public:
  explicit DiscriminatorField(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

// Indices where p_i + q_i = 0 carry no mass; they are assigned ½.

/// D* = p / (p + q)
DiscriminatorField canonical_discriminator(const FiniteDistribution& p, const FiniteDistribution& q);
/// D* = p^α / (p^α + q^α)
DiscriminatorField alpha_discriminator(double alpha, const FiniteDistribution& p,
                                       const FiniteDistribution& q);
/// D* = (γ p + β q) / (p + q)
DiscriminatorField lk_discriminator(double gamma, double beta, const FiniteDistribution& p,
                                    const FiniteDistribution& q);

/// Σ p_i (−L(1, D_i)) + Σ q_i (−L(0, D_i)); zero-mass terms are skipped.
double generator_value(const CpeLoss& loss, const DiscriminatorField& d,
                       const FiniteDistribution& p, const FiniteDistribution& q);

struct IdentityReport {
  std::string check;
  std::string family;
  double parameter = 0.0;
  std::size_t support = 0;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_residual = 0.0;
  double rel_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline constexpr double kIdentityTolerance = 1e-9;

/// Relative comparison; when both sides are below 1e-6 in magnitude the
/// absolute residual is compared against min(tolerance, 1e-12) instead.
IdentityReport compare(std::string check, double lhs, double rhs, double tolerance);
/// Passes when either the absolute or the relative residual is within tolerance.
IdentityReport compare_within(std::string check, double lhs, double rhs, double tolerance);

/// V_{L,G}(D*, G) at the canonical D* against 2a·J_{f}(p‖q) − 2ab.
IdentityReport theorem1_identity(const CpeLoss& loss, std::optional<double> a_magnitude,
                                 const FiniteDistribution& p, const FiniteDistribution& q,
                                 double tolerance = kIdentityTolerance);

/// Vanilla value at D* against 2·JSD(p‖q) − 2 log 2, JSD from two KL terms.
IdentityReport lemma2_identity(const FiniteDistribution& p, const FiniteDistribution& q,
                               double tolerance = kIdentityTolerance);

/// Generator of the (α_D, α_G) equilibrium divergence up to an affine term, with f(1) = 0.
/// α_G = 1 uses the limiting form α_D u log u − (u+1) log(u^{α_D} + 1).
GeneratingFunction alpha_pair_generator(double alpha_d, double alpha_g);

/// D_{f_{1,α}}(p‖q) against 2^{1/α}·J_{f_α}(p‖q); requires α > ½.
IdentityReport lemma3_divergence_identity(double alpha, const FiniteDistribution& p,
                                          const FiniteDistribution& q,
                                          double tolerance = kIdentityTolerance);

/// α-GAN value at p^α/(p^α+q^α) against A_α(p‖q) + α/(α−1)(2^{1/α} − 2); α ≠ 1.
IdentityReport prop1_arimoto_identity(double alpha, const FiniteDistribution& p,
                                      const FiniteDistribution& q,
                                      double tolerance = kIdentityTolerance);

/// The α = 1 value of the α-GAN at D* compared with two candidate
/// constants: 2·JSD − 2 log 2 and JSD − 2 log 2.
struct AlphaOneAdjudication {
  IdentityReport two_jsd;
  IdentityReport one_jsd;
  /// "two_jsd", "one_jsd", "both" or "neither".
  std::string matching;
};
AlphaOneAdjudication prop1_alpha_one_check(const FiniteDistribution& p, const FiniteDistribution& q,
                                           double tolerance = kIdentityTolerance);

/// Σ (p + q)|D* − c|^k at the (γ, β) least-squares discriminator against
/// |c − β|^k · Σ |2q − (p+q)|^k / (p+q)^{k−1}. Requires γ − β = 2(c − β), k > 1.
IdentityReport prop3_vajda_identity(double k, double beta, double gamma, double c,
                                    const FiniteDistribution& p, const FiniteDistribution& q,
                                    double tolerance = kIdentityTolerance);

/// Which additive constant the shifted-Lk identity is checked against.
enum class Lemma4Constant {
  /// 2^{1−k} J + 2^{1−k} − ½.
  stated,
  /// 2^{1−k} J − 2^{1−k}(2^k − 1) = 2^{1−k} J + 2^{1−k} − 2, the value of 2a·J − 2ab.
  theorem1,
};

/// E_p[|D*|^k − 1] + E_q[|1 − D*|^k − 1] at the canonical D* against the
/// chosen closed form with f_k(u) = u(u^k − 1).
IdentityReport lemma4_identity(double k, const FiniteDistribution& p, const FiniteDistribution& q,
                               Lemma4Constant constant = Lemma4Constant::stated,
                               double tolerance = kIdentityTolerance);

}  // namespace lagan
