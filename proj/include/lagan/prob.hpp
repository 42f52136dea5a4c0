#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "lagan/random.hpp"

namespace lagan {

/// Probability masses on a finite support {0, ..., n-1}.
///
/// Construction validates nonnegativity and unit sum (absolute tolerance
/// kUnitSumTolerance). Instances are immutable.
class FiniteDistribution {
 public:
  static constexpr double kUnitSumTolerance = 1e-12;

  /// Adopts already-normalized masses; throws std::invalid_argument otherwise.
  static FiniteDistribution from_masses(std::vector<double> masses);

  std::span<const double> masses() const noexcept { return masses_; }
  std::size_t size() const noexcept { return masses_.size(); }
  double operator[](std::size_t i) const { return masses_[i]; }

  friend bool operator==(const FiniteDistribution&, const FiniteDistribution&) = default;

 private:
  explicit FiniteDistribution(std::vector<double> masses) : masses_(std::move(masses)) {}
  std::vector<double> masses_;
};

/// Throws std::invalid_argument unless both distributions share a support size.
void require_same_support(std::size_t n_p, std::size_t n_q);

FiniteDistribution normalize(std::span<const double> weights);

/// The equal-weight mixture (p + q) / 2.
FiniteDistribution midpoint_mixture(const FiniteDistribution& p, const FiniteDistribution& q);

/// Strictly positive random masses (normalized unit-rate exponential draws,
/// i.e. a uniform point on the open simplex). Deterministic in (n, seed).
FiniteDistribution random_distribution(std::size_t n, std::uint64_t seed);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Grid2 {
  double x_min = -1.5;
  double x_max = 1.5;
  double y_min = -1.5;
  double y_max = 1.5;
  std::size_t x_bins = 20;
  std::size_t y_bins = 20;

  std::size_t cells() const noexcept { return x_bins * y_bins; }
  /// Row-major cell index (x fastest); out-of-range points clamp to edge cells.
  std::size_t cell_of(const Point2& pt) const noexcept;
};

inline constexpr double kHistogramSmoothing = 1e-9;

/// Normalized bin occupancy with additive smoothing kHistogramSmoothing per cell.
FiniteDistribution histogram_estimate(std::span<const Point2> samples, const Grid2& grid);

/// Isotropic Gaussian mixture in the plane.
class Point2Sampler {
 public:
  Point2Sampler(std::vector<Point2> centers, double sigma, FiniteDistribution weights,
                std::uint64_t seed);

  Point2 sample();
  std::vector<Point2> sample(std::size_t count);

  /// Fresh sampler with identical mixture and a seed derived from this one's.
  Point2Sampler clone_with_stream(std::uint64_t stream) const;

  const std::vector<Point2>& centers() const noexcept { return centers_; }
  double sigma() const noexcept { return sigma_; }
  const FiniteDistribution& weights() const noexcept { return weights_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::vector<Point2> centers_;
  double sigma_;
  FiniteDistribution weights_;
  std::uint64_t seed_;
  Rng rng_;
  std::discrete_distribution<std::size_t> pick_;
  std::normal_distribution<double> noise_{0.0, 1.0};
};

/// `modes` equal-weight components centred at radius·(cos 2πj/modes, sin 2πj/modes).
Point2Sampler ring_sampler(std::size_t modes, double radius, double sigma, std::uint64_t seed);

struct PmfFile {
  FiniteDistribution distribution;
  double raw_sum = 0.0;
  /// Raw masses summed to something further than 1e-6 from 1 before normalizing.
  bool renormalized = false;
};

/// Plain text, one nonnegative decimal per line; blank lines ignored.
PmfFile read_pmf(std::istream& in);
PmfFile read_pmf_file(const std::filesystem::path& path);

}  // namespace lagan
