#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagan/nn.hpp"
#include "lagan/prob.hpp"

namespace lagan::gan {

using nn::Matrix;
using nn::Vector;

/// Which pair of objectives drives training.
enum class Scheme {
  alpha_gan,       // α_D-loss discriminator, α_G-loss generator
  lk_slkgan,       // least-squares discriminator (labels 1/0), shifted Lk generator
  vanilla_slkgan,  // log-loss discriminator, shifted Lk generator
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct RingSpec {
  std::size_t modes = 8;
  double radius = 1.0;
  double sigma = 0.05;
};

struct TrainConfig {
  static constexpr int kVersion = 1;

  Scheme scheme = Scheme::alpha_gan;
  double alpha_d = 1.0;
  double alpha_g = 1.0;
  double k = 2.0;
  /// alpha_gan only: descend −ℓ_{α_G}(0, D(G(z))) instead of ℓ_{α_G}(1, D(G(z))).
  bool saturating_generator = false;

  bool gradient_penalty = false;
  double gp_coefficient = 5.0;

  std::size_t steps = 5000;
  std::size_t batch_size = 256;
  std::size_t d_steps_per_g = 1;
  nn::AdamConfig adam;

  std::size_t noise_dim = 8;
  std::vector<std::size_t> generator_hidden{128, 128};
  std::vector<std::size_t> discriminator_hidden{128, 128};
  double leaky_slope = 0.2;

  RingSpec data;
  Grid2 grid;
  std::size_t eval_every = 100;
  std::size_t eval_samples = 10000;
  std::size_t collapse_after = 50;

  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument naming the violated constraint.
void validate(const TrainConfig& cfg);

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing keys keep their defaults; unknown keys and version mismatches are rejected.
TrainConfig config_from_json(const nlohmann::json& j);

/// Objective value over one batch and its gradient w.r.t. each D output.
struct DiscriminatorObjective {
  double value = 0.0;
  Matrix grad_real;
  Matrix grad_fake;
};

struct GeneratorObjective {
  double value = 0.0;
  Matrix grad_fake;
};

/// The per-scheme discriminator loss to be descended, averaged over the batch.
DiscriminatorObjective discriminator_objective(const TrainConfig& cfg, const Matrix& d_real,
                                               const Matrix& d_fake);
/// The per-scheme generator loss to be descended, averaged over the batch.
GeneratorObjective generator_objective(const TrainConfig& cfg, const Matrix& d_fake);

struct PenaltyResult {
  double value = 0.0;
  Vector parameter_gradient;  // empty unless requested
};

/// coefficient · Σ_i ‖∇_x log(D(x_i)/(1 − D(x_i)))‖², summed (not averaged)
/// over the batch. The input gradient is exact. The θ_D gradient, if requested,
/// is exact for leaky/identity hidden layers and otherwise uses central
/// differences with step 1e-4·max(1, |θ|).
PenaltyResult gradient_penalty(const nn::Mlp& discriminator, const Matrix& real, double coefficient,
                               bool with_parameter_gradient);

/// Modes with at least 1% of samples within 3σ of their center.
std::size_t mode_coverage(std::span<const Point2> samples, const Point2Sampler& sampler);

struct EvalEntry {
  std::size_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double hist_jsd = 0.0;
  std::size_t mode_coverage = 0;
  double wall_ms = 0.0;
};

struct TrainRecord {
  std::vector<EvalEntry> entries;
  bool collapsed = false;
  std::size_t skipped_steps = 0;
  std::size_t completed_steps = 0;
  nn::Mlp generator;
  nn::Mlp discriminator;
  std::vector<Point2> final_samples;
};

struct StepResult {
  double objective = 0.0;
  bool applied = false;
};

/// Owns both networks, their optimizers and all random streams of one trial.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  /// One Adam step on θ_D from the given real batch and noise.
  StepResult discriminator_step(const Matrix& real, const Matrix& noise);
  /// One Adam step on θ_G from the given noise.
  StepResult generator_step(const Matrix& noise);

  /// One iteration: d_steps_per_g discriminator steps then one generator
  /// step, all on freshly sampled batches.
  void iterate();

  EvalEntry evaluate(std::size_t step);

  Matrix sample_real(std::size_t count);
  Matrix sample_noise(std::size_t count);
  std::vector<Point2> generate(std::size_t count);

  /// The full loop; returns early (flagged) on collapse.
  TrainRecord run();

  const nn::Mlp& generator() const noexcept { return generator_; }
  const nn::Mlp& discriminator() const noexcept { return discriminator_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  bool collapsed() const noexcept { return collapsed_; }

 private:
  void note(const StepResult& r);

  TrainConfig cfg_;
  nn::Mlp generator_;
  nn::Mlp discriminator_;
  nn::AdamState g_opt_;
  nn::AdamState d_opt_;
  Point2Sampler data_;
  Point2Sampler eval_data_;
  Rng noise_rng_;
  Rng eval_noise_rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};

  double last_d_ = 0.0;
  double last_g_ = 0.0;
  std::size_t consecutive_skips_ = 0;
  std::size_t skipped_ = 0;
  bool collapsed_ = false;
  std::vector<Point2> last_samples_;
};

TrainRecord train(const TrainConfig& cfg);

/// Header step,d_loss,g_loss,hist_jsd,mode_coverage,wall_ms; numbers with 12
/// significant digits. Without `include_wall_clock` the wall_ms column is 0 so
/// that reruns are byte-identical.
void write_metrics_csv(std::ostream& out, const TrainRecord& record, bool include_wall_clock);
void write_samples_csv(std::ostream& out, std::span<const Point2> samples);

}  // namespace lagan::gan
