#include "lagan/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <json.hpp>

#include "lagan/random.hpp"

namespace lagan::nn {

namespace {

void apply_activation(const Activation& act, Matrix& z) {
  switch (act.kind) {
    case ActivationKind::leaky_relu:
      z = z.unaryExpr([s = act.slope](double x) { return x > 0.0 ? x : s * x; });
      return;
    case ActivationKind::tanh:
      z = z.array().tanh().matrix();
      return;
    case ActivationKind::sigmoid:
      z = z.unaryExpr([](double x) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return std::clamp(s, kSigmoidClamp, 1.0 - kSigmoidClamp);
      });
      return;
    case ActivationKind::identity:
      return;
  }
}

// d output / d preactivation, elementwise.
Matrix activation_derivative(const Activation& act, const Matrix& z) {
  switch (act.kind) {
    case ActivationKind::leaky_relu:
      return z.unaryExpr([s = act.slope](double x) { return x > 0.0 ? 1.0 : s; });
    case ActivationKind::tanh:
      return z.unaryExpr([](double x) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      });
    case ActivationKind::sigmoid:
      return z.unaryExpr([](double x) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        if (s < kSigmoidClamp || s > 1.0 - kSigmoidClamp) return 0.0;
        return s * (1.0 - s);
      });
    case ActivationKind::identity:
      return Matrix::Ones(z.rows(), z.cols());
  }
  return Matrix::Ones(z.rows(), z.cols());
}

}  // namespace

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::leaky_relu:
      return "leaky_relu";
    case ActivationKind::tanh:
      return "tanh";
    case ActivationKind::sigmoid:
      return "sigmoid";
    case ActivationKind::identity:
      return "identity";
  }
  return "identity";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "leaky_relu") return ActivationKind::leaky_relu;
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  if (name == "identity") return ActivationKind::identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<Dense> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Dense& d = layers_[l];
    if (d.bias.size() != d.weights.rows()) {
      throw std::invalid_argument("layer " + std::to_string(l) + ": bias/weight shape mismatch");
    }
    if (l > 0 && d.weights.cols() != layers_[l - 1].weights.rows()) {
      throw std::invalid_argument("layer " + std::to_string(l) + ": width mismatch with previous layer");
    }
    if (d.activation.kind == ActivationKind::leaky_relu &&
        !(d.activation.slope > 0.0 && d.activation.slope < 1.0)) {
      throw std::invalid_argument("leaky_relu slope must lie in (0, 1)");
    }
    if (!d.weights.allFinite() || !d.bias.allFinite()) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has non-finite parameters");
    }
  }
}

std::size_t Mlp::input_width() const { return static_cast<std::size_t>(layers_.front().weights.cols()); }
std::size_t Mlp::output_width() const { return static_cast<std::size_t>(layers_.back().weights.rows()); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Dense& d : layers_) n += static_cast<std::size_t>(d.weights.size() + d.bias.size());
  return n;
}

ForwardCache Mlp::forward(const Matrix& batch) const {
  if (static_cast<std::size_t>(batch.cols()) != input_width()) {
    throw std::invalid_argument("batch width " + std::to_string(batch.cols()) +
                                " does not match network input width " +
                                std::to_string(input_width()));
  }
  if (!batch.allFinite()) throw std::invalid_argument("non-finite network input");
  ForwardCache cache;
  cache.inputs.reserve(layers_.size());
  cache.preactivations.reserve(layers_.size());
  Matrix x = batch;
  for (const Dense& d : layers_) {
    Matrix z = x * d.weights.transpose();
    z.rowwise() += d.bias.transpose();
    cache.inputs.push_back(std::move(x));
    cache.preactivations.push_back(z);
    apply_activation(d.activation, z);
    x = std::move(z);
  }
  cache.output = std::move(x);
  return cache;
}

Gradients Mlp::backward_impl(const ForwardCache& cache, Matrix delta, std::size_t top) const {
  Gradients g;
  g.weights.resize(layers_.size());
  g.biases.resize(layers_.size());
  for (std::size_t l = top + 1; l-- > 0;) {
    const Dense& d = layers_[l];
    if (l != top) delta = delta.cwiseProduct(activation_derivative(d.activation, cache.preactivations[l]));
    g.weights[l] = delta.transpose() * cache.inputs[l];
    g.biases[l] = delta.colwise().sum().transpose();
    delta = delta * d.weights;
  }
  g.input = std::move(delta);
  return g;
}

Gradients Mlp::backward(const ForwardCache& cache, const Matrix& grad_output) const {
  if (cache.preactivations.size() != layers_.size() || grad_output.rows() != cache.output.rows() ||
      grad_output.cols() != cache.output.cols()) {
    throw std::invalid_argument("backward: cache or output gradient does not match this network");
  }
  const std::size_t top = layers_.size() - 1;
  Matrix delta = grad_output.cwiseProduct(
      activation_derivative(layers_[top].activation, cache.preactivations[top]));
  return backward_impl(cache, std::move(delta), top);
}

Gradients Mlp::backward_from_logit(const ForwardCache& cache, const Matrix& grad_logit) const {
  if (cache.preactivations.size() != layers_.size() || grad_logit.rows() != cache.output.rows() ||
      grad_logit.cols() != cache.output.cols()) {
    throw std::invalid_argument("backward: cache or logit gradient does not match this network");
  }
  const std::size_t top = layers_.size() - 1;
  Matrix delta = grad_logit;
  if (layers_[top].activation.kind == ActivationKind::sigmoid) {
    // Clamped outputs have a constant logit.
    const Matrix& out = cache.output;
    for (Eigen::Index i = 0; i < delta.rows(); ++i) {
      for (Eigen::Index j = 0; j < delta.cols(); ++j) {
        if (out(i, j) <= kSigmoidClamp || out(i, j) >= 1.0 - kSigmoidClamp) delta(i, j) = 0.0;
      }
    }
  }
  return backward_impl(cache, std::move(delta), top);
}

bool Mlp::piecewise_linear_hidden() const {
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const ActivationKind k = layers_[l].activation.kind;
    if (k != ActivationKind::leaky_relu && k != ActivationKind::identity) return false;
  }
  return true;
}

Gradients Mlp::logit_input_gradient_backward(const ForwardCache& cache, const Matrix& weight) const {
  if (!piecewise_linear_hidden()) {
    throw std::logic_error("logit_input_gradient_backward needs leaky_relu or identity hidden layers");
  }
  if (cache.preactivations.size() != layers_.size() || weight.rows() != cache.output.rows() ||
      weight.cols() != static_cast<Eigen::Index>(input_width())) {
    throw std::invalid_argument("logit_input_gradient_backward: cache or weight does not match");
  }
  const std::size_t top = layers_.size() - 1;
  // deltas[l]: masked backward signal at layer l's pre-activation.
  std::vector<Matrix> deltas(layers_.size());
  Matrix delta = Matrix::Ones(cache.output.rows(), cache.output.cols());
  if (layers_[top].activation.kind == ActivationKind::sigmoid) {
    for (Eigen::Index i = 0; i < delta.rows(); ++i) {
      for (Eigen::Index j = 0; j < delta.cols(); ++j) {
        const double o = cache.output(i, j);
        if (o <= kSigmoidClamp || o >= 1.0 - kSigmoidClamp) delta(i, j) = 0.0;
      }
    }
  }
  std::vector<Matrix> masks(layers_.size());
  for (std::size_t l = top + 1; l-- > 0;) {
    if (l != top) {
      masks[l] = activation_derivative(layers_[l].activation, cache.preactivations[l]);
      delta = delta.cwiseProduct(masks[l]);
    }
    deltas[l] = delta;
    delta = delta * layers_[l].weights;
  }

  Gradients g;
  g.weights.resize(layers_.size());
  g.biases.resize(layers_.size());
  Matrix h = weight;
  for (std::size_t l = 0; l <= top; ++l) {
    g.weights[l] = deltas[l].transpose() * h;
    g.biases[l] = Vector::Zero(layers_[l].bias.size());
    if (l != top) h = (h * layers_[l].weights.transpose()).cwiseProduct(masks[l]);
  }
  g.input = Matrix::Zero(weight.rows(), weight.cols());
  return g;
}

Vector Mlp::parameters() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (const Dense& d : layers_) {
    for (Eigen::Index r = 0; r < d.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < d.weights.cols(); ++c) flat[k++] = d.weights(r, c);
    }
    for (Eigen::Index r = 0; r < d.bias.size(); ++r) flat[k++] = d.bias[r];
  }
  return flat;
}

void Mlp::set_parameters(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw std::invalid_argument("set_parameters: size mismatch");
  }
  Eigen::Index k = 0;
  for (Dense& d : layers_) {
    for (Eigen::Index r = 0; r < d.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < d.weights.cols(); ++c) d.weights(r, c) = flat[k++];
    }
    for (Eigen::Index r = 0; r < d.bias.size(); ++r) d.bias[r] = flat[k++];
  }
}

Vector Mlp::flatten(const Gradients& g) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) n += g.weights[l].size() + g.biases[l].size();
  Vector flat(n);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    const Matrix& w = g.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat[k++] = w(r, c);
    }
    for (Eigen::Index r = 0; r < g.biases[l].size(); ++r) flat[k++] = g.biases[l][r];
  }
  return flat;
}

std::uint64_t Mlp::parameter_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const Vector flat = parameters();
  const auto* bytes = reinterpret_cast<const unsigned char*>(flat.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(flat.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const Dense& x = a.layers_[l];
    const Dense& y = b.layers_[l];
    if (x.activation.kind != y.activation.kind || x.activation.slope != y.activation.slope) return false;
    if (x.weights.rows() != y.weights.rows() || x.weights.cols() != y.weights.cols()) return false;
    if (x.weights != y.weights || x.bias != y.bias) return false;
  }
  return true;
}

Mlp init_mlp(const std::vector<std::size_t>& widths, const std::vector<Activation>& activations,
             std::uint64_t seed) {
  if (widths.size() != activations.size() + 1 || activations.empty()) {
    throw std::invalid_argument("init_mlp: need one activation per layer (widths = activations + 1)");
  }
  for (std::size_t w : widths) {
    if (w < 1) throw std::invalid_argument("init_mlp: layer widths must be >= 1");
  }
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Dense> layers;
  for (std::size_t l = 0; l < activations.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths[l]);
    const auto out = static_cast<Eigen::Index>(widths[l + 1]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    Dense d;
    d.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) d.weights(r, c) = scale * normal(rng);
    }
    d.bias = Vector::Zero(out);
    d.activation = activations[l];
    layers.push_back(std::move(d));
  }
  return Mlp(std::move(layers));
}

bool adam_step(AdamState& state, Vector& params, const Vector& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state shape mismatch");
  }
  if (!grads.allFinite()) {
    ++state.skipped;
    return false;
  }
  const AdamConfig& c = state.config;
  ++state.step;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grads;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * grads.cwiseProduct(grads);
  const double t = static_cast<double>(state.step);
  const double m_corr = 1.0 - std::pow(c.beta1, t);
  const double v_corr = 1.0 - std::pow(c.beta2, t);
  params.array() -= c.learning_rate * (state.m.array() / m_corr) /
                    ((state.v.array() / v_corr).sqrt() + c.epsilon);
  return true;
}

bool adam_step(AdamState& state, Mlp& net, const Gradients& grads) {
  Vector params = net.parameters();
  if (!adam_step(state, params, Mlp::flatten(grads))) return false;
  net.set_parameters(params);
  return true;
}

void write_snapshot(std::ostream& out, const Mlp& net) {
  nlohmann::json j;
  j["format"] = "lagan-mlp";
  j["version"] = 1;
  j["layers"] = nlohmann::json::array();
  for (const Dense& d : net.layers()) {
    nlohmann::json layer;
    layer["rows"] = d.weights.rows();
    layer["cols"] = d.weights.cols();
    layer["activation"] = to_string(d.activation.kind);
    layer["slope"] = d.activation.slope;
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(d.weights.size()));
    for (Eigen::Index r = 0; r < d.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < d.weights.cols(); ++c) w.push_back(d.weights(r, c));
    }
    layer["weights"] = w;
    layer["biases"] = std::vector<double>(d.bias.data(), d.bias.data() + d.bias.size());
    j["layers"].push_back(std::move(layer));
  }
  out << j.dump(1) << '\n';
}

Mlp read_snapshot(std::istream& in) {
  const nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "lagan-mlp" || j.value("version", 0) != 1) {
    throw std::invalid_argument("not a lagan-mlp version 1 snapshot");
  }
  std::vector<Dense> layers;
  for (const auto& layer : j.at("layers")) {
    const auto rows = layer.at("rows").get<Eigen::Index>();
    const auto cols = layer.at("cols").get<Eigen::Index>();
    const auto w = layer.at("weights").get<std::vector<double>>();
    const auto b = layer.at("biases").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
      throw std::invalid_argument("snapshot layer has inconsistent sizes");
    }
    Dense d;
    d.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) d.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    }
    d.bias = Eigen::Map<const Vector>(b.data(), rows);
    d.activation.kind = activation_from_string(layer.at("activation").get<std::string>());
    d.activation.slope = layer.at("slope").get<double>();
    layers.push_back(std::move(d));
  }
  return Mlp(std::move(layers));
}

}  // namespace lagan::nn

namespace lagan::nn {

namespace {

double relative_error(const Vector& a, const Vector& n) {
  const double scale = std::max({a.norm(), n.norm(), 1e-12});
  return (a - n).norm() / scale;
}

Vector as_vector(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}  // namespace

GradientCheck check_gradients(const Mlp& net, const Matrix& batch, const Matrix& probe,
                              double step) {
  const ForwardCache cache = net.forward(batch);
  const Gradients g = net.backward(cache, probe);
  const Gradients gl = net.backward_from_logit(cache, Matrix::Ones(cache.output.rows(),
                                                                    cache.output.cols()));
  auto scalar = [&](const Mlp& m, const Matrix& x) { return m.predict(x).cwiseProduct(probe).sum(); };
  auto logit = [](const Mlp& m, const Matrix& x) { return m.forward(x).preactivations.back().sum(); };

  GradientCheck out;
  Mlp probe_net = net;
  Vector theta = net.parameters();
  Vector numeric(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double saved = theta(j);
    theta(j) = saved + step;
    probe_net.set_parameters(theta);
    const double up = scalar(probe_net, batch);
    theta(j) = saved - step;
    probe_net.set_parameters(theta);
    const double down = scalar(probe_net, batch);
    theta(j) = saved;
    numeric(j) = (up - down) / (2.0 * step);
  }
  out.parameters = relative_error(Mlp::flatten(g), numeric);

  Matrix x = batch;
  Matrix num_in(batch.rows(), batch.cols());
  Matrix num_logit(batch.rows(), batch.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + step;
      const double up = scalar(net, x);
      const double lup = logit(net, x);
      x(i, j) = saved - step;
      const double down = scalar(net, x);
      const double ldown = logit(net, x);
      x(i, j) = saved;
      num_in(i, j) = (up - down) / (2.0 * step);
      num_logit(i, j) = (lup - ldown) / (2.0 * step);
    }
  }
  out.input = relative_error(as_vector(g.input), as_vector(num_in));
  out.logit_input = relative_error(as_vector(gl.input), as_vector(num_logit));
  return out;
}

}  // namespace lagan::nn
