#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lagan::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ActivationKind { leaky_relu, tanh, sigmoid, identity };

struct Activation {
  ActivationKind kind = ActivationKind::identity;
  double slope = 0.2;  // leaky_relu only

  static Activation leaky_relu(double slope = 0.2) { return {ActivationKind::leaky_relu, slope}; }
  static Activation tanh() { return {ActivationKind::tanh, 0.0}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
  static Activation identity() { return {ActivationKind::identity, 0.0}; }
};

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

/// Sigmoid outputs are clamped to [kSigmoidClamp, 1 − kSigmoidClamp].
inline constexpr double kSigmoidClamp = 1e-7;

struct Dense {
  Matrix weights;  // out × in
  Vector bias;     // out
  Activation activation;
};

/// Rows of `inputs` are samples. Pre-activations are kept so backward can
/// resume from either the layer outputs or the final pre-activation.
struct ForwardCache {
  std::vector<Matrix> inputs;          // input to each layer
  std::vector<Matrix> preactivations;  // per layer
  Matrix output;
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix input;
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Dense> layers);

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t parameter_count() const;
  const std::vector<Dense>& layers() const noexcept { return layers_; }

  ForwardCache forward(const Matrix& batch) const;
  Matrix predict(const Matrix& batch) const { return forward(batch).output; }

  /// Reverse-mode gradients of Σ_{ij} grad_output_{ij} · output_{ij}.
  Gradients backward(const ForwardCache& cache, const Matrix& grad_output) const;

  /// As backward, seeded at the final layer's pre-activation instead of its
  /// output. For a sigmoid head the pre-activation is the logit
  /// log(D/(1 − D)); entries whose output hit the clamp get zero gradient.
  Gradients backward_from_logit(const ForwardCache& cache, const Matrix& grad_logit) const;

  /// True when every layer below the last is leaky_relu or identity, so the
  /// input gradient is piecewise constant in the activations.
  bool piecewise_linear_hidden() const;

  /// θ-gradient of Σ_ij weight_ij · v_ij where v = backward_from_logit(cache, 1).input.
  /// Exact for piecewise_linear_hidden() networks (bias gradients are zero);
  /// throws std::logic_error otherwise.
  Gradients logit_input_gradient_backward(const ForwardCache& cache, const Matrix& weight) const;

  /// Parameters flattened layer by layer: weights row-major, then bias.
  Vector parameters() const;
  void set_parameters(const Vector& flat);
  static Vector flatten(const Gradients& g);

  /// FNV-1a over the raw parameter bytes.
  std::uint64_t parameter_hash() const;

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  Gradients backward_impl(const ForwardCache& cache, Matrix delta, std::size_t top) const;
  std::vector<Dense> layers_;
};

/// widths.size() == activations.size() + 1; weights ~ N(0, 1/fan_in), zero biases.
Mlp init_mlp(const std::vector<std::size_t>& widths, const std::vector<Activation>& activations,
             std::uint64_t seed);

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

struct AdamState {
  AdamConfig config;
  Vector m;
  Vector v;
  std::uint64_t step = 0;
  std::uint64_t skipped = 0;

  explicit AdamState(std::size_t parameter_count, AdamConfig cfg = {})
      : config(cfg), m(Vector::Zero(static_cast<Eigen::Index>(parameter_count))),
        v(Vector::Zero(static_cast<Eigen::Index>(parameter_count))) {}
};

/// Bias-corrected Adam update in place. Returns false (and leaves params and
/// moments untouched) when any gradient entry is non-finite.
bool adam_step(AdamState& state, Vector& params, const Vector& grads);

/// Convenience wrapper over a network's flattened parameters.
bool adam_step(AdamState& state, Mlp& net, const Gradients& grads);

/// Relative errors ‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖, 1e-12)
/// of reverse-mode gradients against central differences, for the scalar
/// Σ probe ⊙ output (parameters and inputs) and Σ final pre-activation (inputs).
struct GradientCheck {
  double parameters = 0.0;
  double input = 0.0;
  double logit_input = 0.0;
};
GradientCheck check_gradients(const Mlp& net, const Matrix& batch, const Matrix& probe,
                              double step = 1e-6);

/// Self-describing JSON snapshot: {"format", "version", "layers": [{rows, cols,
/// activation, slope, weights (row-major), biases}]}.
void write_snapshot(std::ostream& out, const Mlp& net);
Mlp read_snapshot(std::istream& in);

}  // namespace lagan::nn
