#include "lagan/prob.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lagan {

namespace {

std::string index_message(const char* what, std::size_t i, double value) {
  std::ostringstream os;
  os << what << " at index " << i << " (value " << value << ")";
  return os.str();
}

}  // namespace

FiniteDistribution FiniteDistribution::from_masses(std::vector<double> masses) {
  if (masses.empty()) {
    throw std::invalid_argument("distribution has empty support");
  }
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!std::isfinite(masses[i]) || masses[i] < 0.0) {
      throw std::invalid_argument(index_message("invalid mass", i, masses[i]));
    }
  }
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (std::abs(total - 1.0) > kUnitSumTolerance) {
    std::ostringstream os;
    os << "masses sum to " << total << ", not 1";
    throw std::invalid_argument(os.str());
  }
  return FiniteDistribution(std::move(masses));
}

void require_same_support(std::size_t n_p, std::size_t n_q) {
  if (n_p != n_q) {
    throw std::invalid_argument("support size mismatch: " + std::to_string(n_p) + " vs " +
                                std::to_string(n_q));
  }
}

FiniteDistribution normalize(std::span<const double> weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i])) {
      throw std::invalid_argument(index_message("non-finite weight", i, weights[i]));
    }
    if (weights[i] < 0.0) {
      throw std::invalid_argument(index_message("negative weight", i, weights[i]));
    }
    total += weights[i];
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("degenerate weight vector");
  }
  std::vector<double> masses(weights.begin(), weights.end());
  for (double& m : masses) m /= total;
  return FiniteDistribution::from_masses(std::move(masses));
}

FiniteDistribution midpoint_mixture(const FiniteDistribution& p, const FiniteDistribution& q) {
  require_same_support(p.size(), q.size());
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return FiniteDistribution::from_masses(std::move(m));
}

FiniteDistribution random_distribution(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("random_distribution needs support size >= 2");
  Rng rng = make_rng(seed);
  std::exponential_distribution<double> draw(1.0);
  std::vector<double> w(n);
  for (double& x : w) {
    do {
      x = draw(rng);
    } while (!(x > 0.0));
  }
  return normalize(w);
}

std::size_t Grid2::cell_of(const Point2& pt) const noexcept {
  auto bin = [](double v, double lo, double hi, std::size_t n) -> std::size_t {
    const double t = (v - lo) / (hi - lo) * static_cast<double>(n);
    if (!(t > 0.0)) return 0;  // also catches NaN
    const auto b = static_cast<std::size_t>(t);
    return std::min(b, n - 1);
  };
  return bin(pt.y, y_min, y_max, y_bins) * x_bins + bin(pt.x, x_min, x_max, x_bins);
}

FiniteDistribution histogram_estimate(std::span<const Point2> samples, const Grid2& grid) {
  if (samples.empty()) throw std::invalid_argument("histogram_estimate: empty sample list");
  if (grid.x_bins < 1 || grid.y_bins < 1) {
    throw std::invalid_argument("histogram_estimate: bin counts must be >= 1");
  }
  if (!std::isfinite(grid.x_min) || !std::isfinite(grid.x_max) || !std::isfinite(grid.y_min) ||
      !std::isfinite(grid.y_max) || !(grid.x_min < grid.x_max) || !(grid.y_min < grid.y_max)) {
    throw std::invalid_argument("histogram_estimate: grid bounds must be finite with min < max");
  }
  std::vector<double> counts(grid.cells(), kHistogramSmoothing);
  for (const Point2& s : samples) counts[grid.cell_of(s)] += 1.0;
  return normalize(counts);
}

Point2Sampler::Point2Sampler(std::vector<Point2> centers, double sigma,
                             FiniteDistribution weights, std::uint64_t seed)
    : centers_(std::move(centers)),
      sigma_(sigma),
      weights_(std::move(weights)),
      seed_(seed),
      rng_(make_rng(seed)),
      pick_(weights_.masses().begin(), weights_.masses().end()) {
  if (centers_.empty()) throw std::invalid_argument("sampler needs at least one mode");
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
    throw std::invalid_argument("sampler sigma must be > 0");
  }
  require_same_support(centers_.size(), weights_.size());
}

Point2 Point2Sampler::sample() {
  const Point2& c = centers_[pick_(rng_)];
  const double dx = noise_(rng_);
  const double dy = noise_(rng_);
  return {c.x + sigma_ * dx, c.y + sigma_ * dy};
}

std::vector<Point2> Point2Sampler::sample(std::size_t count) {
  std::vector<Point2> out(count);
  for (auto& pt : out) pt = sample();
  return out;
}

Point2Sampler Point2Sampler::clone_with_stream(std::uint64_t stream) const {
  return Point2Sampler(centers_, sigma_, weights_, derive_seed(seed_, stream));
}

Point2Sampler ring_sampler(std::size_t modes, double radius, double sigma, std::uint64_t seed) {
  if (modes < 1) throw std::invalid_argument("ring_sampler: modes must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("ring_sampler: radius must be > 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("ring_sampler: sigma must be > 0");
  std::vector<Point2> centers(modes);
  for (std::size_t j = 0; j < modes; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(modes);
    centers[j] = {radius * std::cos(angle), radius * std::sin(angle)};
  }
  std::vector<double> w(modes, 1.0);
  return Point2Sampler(std::move(centers), sigma, normalize(w), seed);
}

PmfFile read_pmf(std::istream& in) {
  std::vector<double> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line.substr(first), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("pmf line " + std::to_string(lineno) + ": not a number");
    }
    if (line.find_first_not_of(" \t\r", first + used) != std::string::npos) {
      throw std::invalid_argument("pmf line " + std::to_string(lineno) + ": trailing characters");
    }
    raw.push_back(v);
  }
  if (raw.empty()) throw std::invalid_argument("pmf file has no masses");
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  PmfFile out{normalize(raw), total, std::abs(total - 1.0) > 1e-6};
  return out;
}

PmfFile read_pmf_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open pmf file " + path.string());
  return read_pmf(in);
}

}  // namespace lagan
