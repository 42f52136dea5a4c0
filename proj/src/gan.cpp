#include "lagan/gan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "lagan/cpe.hpp"
#include "lagan/divergence.hpp"
#include "lagan/random.hpp"

namespace lagan::gan {

namespace {

enum Stream : std::uint64_t {
  kGeneratorInit = 1,
  kDiscriminatorInit,
  kData,
  kNoise,
  kEvalData,
  kEvalNoise,
};

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void require_positive(double v, const char* name) {
  require(std::isfinite(v) && v > 0.0, std::string(name) + " > 0 required (got " + num(v) + ")");
}

nn::Mlp build(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
              nn::Activation head, double slope, std::uint64_t seed) {
  std::vector<std::size_t> widths{in};
  std::vector<nn::Activation> acts;
  for (std::size_t h : hidden) {
    widths.push_back(h);
    acts.push_back(nn::Activation::leaky_relu(slope));
  }
  widths.push_back(out);
  acts.push_back(head);
  return nn::init_mlp(widths, acts, seed);
}

Matrix to_matrix(std::span<const Point2> pts) {
  Matrix m(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = pts[i].x;
    m(static_cast<Eigen::Index>(i), 1) = pts[i].y;
  }
  return m;
}

std::vector<Point2> to_points(const Matrix& m) {
  std::vector<Point2> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = {m(i, 0), m(i, 1)};
  return out;
}

// ℓ_α(1, t) = α/(α−1)(1 − t^{1−1/α}) has derivative −t^{−1/α} for every α > 0.
double alpha_slope_real(double alpha, double t) { return -std::pow(t, -1.0 / alpha); }
double alpha_slope_fake(double alpha, double t) { return std::pow(1.0 - t, -1.0 / alpha); }

double stacked_penalty(const nn::Mlp& d, const Matrix& real) {
  const nn::ForwardCache cache = d.forward(real);
  const nn::Gradients g = d.backward_from_logit(cache, Matrix::Ones(real.rows(), 1));
  return g.input.squaredNorm();
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::alpha_gan:
      return "alpha_gan";
    case Scheme::lk_slkgan:
      return "lk_slkgan";
    case Scheme::vanilla_slkgan:
      return "vanilla_slkgan";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "alpha_gan") return Scheme::alpha_gan;
  if (name == "lk_slkgan") return Scheme::lk_slkgan;
  if (name == "vanilla_slkgan") return Scheme::vanilla_slkgan;
  throw std::invalid_argument("unknown scheme '" + name +
                              "' (expected alpha_gan, lk_slkgan or vanilla_slkgan)");
}

void validate(const TrainConfig& c) {
  require_positive(c.alpha_d, "alpha_d");
  require_positive(c.alpha_g, "alpha_g");
  require_positive(c.k, "k");
  require(std::isfinite(c.gp_coefficient) && c.gp_coefficient >= 0.0,
          "gp_coefficient >= 0 required (got " + num(c.gp_coefficient) + ")");
  require(c.steps >= 1, "steps >= 1 required");
  require(c.batch_size >= 1, "batch_size >= 1 required");
  require(c.d_steps_per_g >= 1, "d_steps_per_g >= 1 required");
  require(c.noise_dim >= 1, "noise_dim >= 1 required");
  require(c.leaky_slope > 0.0 && c.leaky_slope < 1.0, "leaky_slope in (0, 1) required");
  for (std::size_t h : c.generator_hidden) require(h >= 1, "hidden widths must be >= 1");
  for (std::size_t h : c.discriminator_hidden) require(h >= 1, "hidden widths must be >= 1");
  require_positive(c.adam.learning_rate, "learning_rate");
  require(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0, "beta1 in [0, 1) required");
  require(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0, "beta2 in [0, 1) required");
  require_positive(c.adam.epsilon, "epsilon");
  require(c.data.modes >= 1, "modes >= 1 required");
  require_positive(c.data.radius, "radius");
  require_positive(c.data.sigma, "sigma");
  require(c.grid.x_min < c.grid.x_max && c.grid.y_min < c.grid.y_max, "grid bounds must be ordered");
  require(c.grid.x_bins >= 1 && c.grid.y_bins >= 1, "grid bins must be >= 1");
  require(c.eval_every >= 1, "eval_every >= 1 required");
  require(c.eval_samples >= 1000, "eval_samples >= 1000 required");
  require(c.collapse_after >= 1, "collapse_after >= 1 required");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"version", TrainConfig::kVersion},
      {"scheme", to_string(c.scheme)},
      {"alpha_d", c.alpha_d},
      {"alpha_g", c.alpha_g},
      {"k", c.k},
      {"saturating_generator", c.saturating_generator},
      {"gradient_penalty", c.gradient_penalty},
      {"gp_coefficient", c.gp_coefficient},
      {"steps", c.steps},
      {"batch_size", c.batch_size},
      {"d_steps_per_g", c.d_steps_per_g},
      {"adam",
       {{"learning_rate", c.adam.learning_rate},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"epsilon", c.adam.epsilon}}},
      {"noise_dim", c.noise_dim},
      {"generator_hidden", c.generator_hidden},
      {"discriminator_hidden", c.discriminator_hidden},
      {"leaky_slope", c.leaky_slope},
      {"data", {{"modes", c.data.modes}, {"radius", c.data.radius}, {"sigma", c.data.sigma}}},
      {"grid",
       {{"x_min", c.grid.x_min},
        {"x_max", c.grid.x_max},
        {"y_min", c.grid.y_min},
        {"y_max", c.grid.y_max},
        {"x_bins", c.grid.x_bins},
        {"y_bins", c.grid.y_bins}}},
      {"eval_every", c.eval_every},
      {"eval_samples", c.eval_samples},
      {"collapse_after", c.collapse_after},
      {"seed", c.seed},
  };
}

namespace {

template <typename T>
void read_into(const nlohmann::json& obj, const char* key, T& out,
               std::vector<std::string>& seen) {
  seen.emplace_back(key);
  if (auto it = obj.find(key); it != obj.end()) {
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(std::string("config field '") + key + "' has the wrong type");
    }
  }
}

void reject_unknown(const nlohmann::json& obj, const std::vector<std::string>& seen,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(seen.begin(), seen.end(), it.key()) == seen.end()) {
      throw std::invalid_argument("unknown config field '" + where + it.key() + "'");
    }
  }
}

}  // namespace

TrainConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  TrainConfig c;
  std::vector<std::string> seen;

  int version = TrainConfig::kVersion;
  read_into(j, "version", version, seen);
  if (version != TrainConfig::kVersion) {
    throw std::invalid_argument("unsupported config version " + std::to_string(version));
  }
  std::string scheme = to_string(c.scheme);
  read_into(j, "scheme", scheme, seen);
  c.scheme = scheme_from_string(scheme);

  read_into(j, "alpha_d", c.alpha_d, seen);
  read_into(j, "alpha_g", c.alpha_g, seen);
  read_into(j, "k", c.k, seen);
  read_into(j, "saturating_generator", c.saturating_generator, seen);
  read_into(j, "gradient_penalty", c.gradient_penalty, seen);
  read_into(j, "gp_coefficient", c.gp_coefficient, seen);
  read_into(j, "steps", c.steps, seen);
  read_into(j, "batch_size", c.batch_size, seen);
  read_into(j, "d_steps_per_g", c.d_steps_per_g, seen);
  read_into(j, "noise_dim", c.noise_dim, seen);
  read_into(j, "generator_hidden", c.generator_hidden, seen);
  read_into(j, "discriminator_hidden", c.discriminator_hidden, seen);
  read_into(j, "leaky_slope", c.leaky_slope, seen);
  read_into(j, "eval_every", c.eval_every, seen);
  read_into(j, "eval_samples", c.eval_samples, seen);
  read_into(j, "collapse_after", c.collapse_after, seen);
  read_into(j, "seed", c.seed, seen);

  seen.emplace_back("adam");
  if (auto it = j.find("adam"); it != j.end()) {
    std::vector<std::string> s;
    read_into(*it, "learning_rate", c.adam.learning_rate, s);
    read_into(*it, "beta1", c.adam.beta1, s);
    read_into(*it, "beta2", c.adam.beta2, s);
    read_into(*it, "epsilon", c.adam.epsilon, s);
    reject_unknown(*it, s, "adam.");
  }
  seen.emplace_back("data");
  if (auto it = j.find("data"); it != j.end()) {
    std::vector<std::string> s;
    read_into(*it, "modes", c.data.modes, s);
    read_into(*it, "radius", c.data.radius, s);
    read_into(*it, "sigma", c.data.sigma, s);
    reject_unknown(*it, s, "data.");
  }
  seen.emplace_back("grid");
  if (auto it = j.find("grid"); it != j.end()) {
    std::vector<std::string> s;
    read_into(*it, "x_min", c.grid.x_min, s);
    read_into(*it, "x_max", c.grid.x_max, s);
    read_into(*it, "y_min", c.grid.y_min, s);
    read_into(*it, "y_max", c.grid.y_max, s);
    read_into(*it, "x_bins", c.grid.x_bins, s);
    read_into(*it, "y_bins", c.grid.y_bins, s);
    reject_unknown(*it, s, "grid.");
  }
  reject_unknown(j, seen, "");
  return c;
}

DiscriminatorObjective discriminator_objective(const TrainConfig& cfg, const Matrix& d_real,
                                               const Matrix& d_fake) {
  if (d_real.rows() != d_fake.rows() || d_real.rows() == 0) {
    throw std::invalid_argument("real and fake batches must have equal nonzero size");
  }
  const double inv_b = 1.0 / static_cast<double>(d_real.rows());
  DiscriminatorObjective out;
  out.grad_real.resize(d_real.rows(), d_real.cols());
  out.grad_fake.resize(d_fake.rows(), d_fake.cols());
  double total = 0.0;
  switch (cfg.scheme) {
    case Scheme::alpha_gan: {
      const CpeLoss loss = CpeLoss::alpha(cfg.alpha_d);
      for (Eigen::Index i = 0; i < d_real.size(); ++i) {
        const double r = d_real(i);
        const double f = d_fake(i);
        total += loss(1, r) + loss(0, f);
        out.grad_real(i) = inv_b * alpha_slope_real(cfg.alpha_d, r);
        out.grad_fake(i) = inv_b * alpha_slope_fake(cfg.alpha_d, f);
      }
      break;
    }
    case Scheme::lk_slkgan:
      for (Eigen::Index i = 0; i < d_real.size(); ++i) {
        const double r = d_real(i);
        const double f = d_fake(i);
        total += 0.5 * (r - 1.0) * (r - 1.0) + 0.5 * f * f;
        out.grad_real(i) = inv_b * (r - 1.0);
        out.grad_fake(i) = inv_b * f;
      }
      break;
    case Scheme::vanilla_slkgan:
      for (Eigen::Index i = 0; i < d_real.size(); ++i) {
        const double r = d_real(i);
        const double f = d_fake(i);
        total += -(std::log(r) + std::log(1.0 - f));
        out.grad_real(i) = -inv_b / r;
        out.grad_fake(i) = inv_b / (1.0 - f);
      }
      break;
  }
  out.value = total * inv_b;
  return out;
}

GeneratorObjective generator_objective(const TrainConfig& cfg, const Matrix& d_fake) {
  if (d_fake.rows() == 0) throw std::invalid_argument("empty fake batch");
  const double inv_b = 1.0 / static_cast<double>(d_fake.rows());
  GeneratorObjective out;
  out.grad_fake.resize(d_fake.rows(), d_fake.cols());
  double total = 0.0;
  if (cfg.scheme == Scheme::alpha_gan) {
    const CpeLoss loss = CpeLoss::alpha(cfg.alpha_g);
    for (Eigen::Index i = 0; i < d_fake.size(); ++i) {
      const double t = d_fake(i);
      if (cfg.saturating_generator) {
        total += -loss(0, t);
        out.grad_fake(i) = -inv_b * alpha_slope_fake(cfg.alpha_g, t);
      } else {
        total += loss(1, t);
        out.grad_fake(i) = inv_b * alpha_slope_real(cfg.alpha_g, t);
      }
    }
  } else {
    const double k = cfg.k;
    for (Eigen::Index i = 0; i < d_fake.size(); ++i) {
      const double gap = std::abs(1.0 - d_fake(i));
      total += 0.5 * (std::pow(gap, k) - 1.0);
      out.grad_fake(i) = -inv_b * 0.5 * k * std::pow(gap, k - 1.0);
    }
  }
  out.value = total * inv_b;
  return out;
}

PenaltyResult gradient_penalty(const nn::Mlp& discriminator, const Matrix& real, double coefficient,
                               bool with_parameter_gradient) {
  PenaltyResult out;
  out.value = coefficient * stacked_penalty(discriminator, real);
  if (!with_parameter_gradient) return out;

  if (discriminator.piecewise_linear_hidden()) {
    const nn::ForwardCache cache = discriminator.forward(real);
    const Matrix v = discriminator.backward_from_logit(cache, Matrix::Ones(real.rows(), 1)).input;
    out.parameter_gradient =
        nn::Mlp::flatten(discriminator.logit_input_gradient_backward(cache, 2.0 * coefficient * v));
    return out;
  }

  nn::Mlp probe = discriminator;
  Vector theta = discriminator.parameters();
  out.parameter_gradient.resize(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double saved = theta(j);
    const double h = 1e-4 * std::max(1.0, std::abs(saved));
    theta(j) = saved + h;
    probe.set_parameters(theta);
    const double up = stacked_penalty(probe, real);
    theta(j) = saved - h;
    probe.set_parameters(theta);
    const double down = stacked_penalty(probe, real);
    theta(j) = saved;
    out.parameter_gradient(j) = coefficient * (up - down) / (2.0 * h);
  }
  return out;
}

std::size_t mode_coverage(std::span<const Point2> samples, const Point2Sampler& sampler) {
  if (samples.size() < 1000) {
    throw std::invalid_argument("mode_coverage needs at least 1000 samples (got " +
                                std::to_string(samples.size()) + ")");
  }
  const double r2 = 9.0 * sampler.sigma() * sampler.sigma();
  const double need = 0.01 * static_cast<double>(samples.size());
  std::size_t covered = 0;
  for (const Point2& c : sampler.centers()) {
    std::size_t hits = 0;
    for (const Point2& s : samples) {
      const double dx = s.x - c.x;
      const double dy = s.y - c.y;
      if (dx * dx + dy * dy <= r2) ++hits;
    }
    if (static_cast<double>(hits) >= need) ++covered;
  }
  return covered;
}

Trainer::Trainer(TrainConfig cfg)
    : cfg_((validate(cfg), std::move(cfg))),
      generator_(build(cfg_.noise_dim, cfg_.generator_hidden, 2, nn::Activation::identity(),
                       cfg_.leaky_slope, derive_seed(cfg_.seed, kGeneratorInit))),
      discriminator_(build(2, cfg_.discriminator_hidden, 1, nn::Activation::sigmoid(),
                           cfg_.leaky_slope, derive_seed(cfg_.seed, kDiscriminatorInit))),
      g_opt_(generator_.parameter_count(), cfg_.adam),
      d_opt_(discriminator_.parameter_count(), cfg_.adam),
      data_(ring_sampler(cfg_.data.modes, cfg_.data.radius, cfg_.data.sigma,
                         derive_seed(cfg_.seed, kData))),
      eval_data_(data_.clone_with_stream(kEvalData)),
      noise_rng_(make_rng(cfg_.seed, kNoise)),
      eval_noise_rng_(make_rng(cfg_.seed, kEvalNoise)) {}

Matrix Trainer::sample_real(std::size_t count) { return to_matrix(data_.sample(count)); }

Matrix Trainer::sample_noise(std::size_t count) {
  Matrix z(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(cfg_.noise_dim));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal_(noise_rng_);
  }
  return z;
}

std::vector<Point2> Trainer::generate(std::size_t count) {
  Matrix z(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(cfg_.noise_dim));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal_(eval_noise_rng_);
  }
  return to_points(generator_.predict(z));
}

StepResult Trainer::discriminator_step(const Matrix& real, const Matrix& noise) {
  if (real.rows() != noise.rows()) throw std::invalid_argument("batches of equal size required");
  StepResult r;
  const Matrix fake = generator_.predict(noise);
  if (!fake.allFinite()) return r;

  const Eigen::Index b = real.rows();
  Matrix both(2 * b, 2);
  both.topRows(b) = real;
  both.bottomRows(b) = fake;
  const nn::ForwardCache cache = discriminator_.forward(both);
  const DiscriminatorObjective obj =
      discriminator_objective(cfg_, cache.output.topRows(b), cache.output.bottomRows(b));
  r.objective = obj.value;

  Matrix grad(2 * b, 1);
  grad.topRows(b) = obj.grad_real;
  grad.bottomRows(b) = obj.grad_fake;
  Vector flat = nn::Mlp::flatten(discriminator_.backward(cache, grad));

  if (cfg_.gradient_penalty && cfg_.gp_coefficient > 0.0) {
    const PenaltyResult gp = gradient_penalty(discriminator_, real, cfg_.gp_coefficient, true);
    r.objective += gp.value;
    flat += gp.parameter_gradient;
  }
  if (!std::isfinite(r.objective)) return r;
  Vector theta = discriminator_.parameters();
  r.applied = nn::adam_step(d_opt_, theta, flat);
  if (r.applied) discriminator_.set_parameters(theta);
  return r;
}

StepResult Trainer::generator_step(const Matrix& noise) {
  StepResult r;
  const nn::ForwardCache g_cache = generator_.forward(noise);
  if (!g_cache.output.allFinite()) return r;
  const nn::ForwardCache d_cache = discriminator_.forward(g_cache.output);
  const GeneratorObjective obj = generator_objective(cfg_, d_cache.output);
  r.objective = obj.value;
  if (!std::isfinite(r.objective)) return r;
  const nn::Gradients through_d = discriminator_.backward(d_cache, obj.grad_fake);
  const nn::Gradients g = generator_.backward(g_cache, through_d.input);
  Vector theta = generator_.parameters();
  r.applied = nn::adam_step(g_opt_, theta, nn::Mlp::flatten(g));
  if (r.applied) generator_.set_parameters(theta);
  return r;
}

void Trainer::note(const StepResult& r) {
  if (r.applied) {
    consecutive_skips_ = 0;
    return;
  }
  ++skipped_;
  if (++consecutive_skips_ >= cfg_.collapse_after) collapsed_ = true;
}

void Trainer::iterate() {
  for (std::size_t i = 0; i < cfg_.d_steps_per_g && !collapsed_; ++i) {
    const Matrix real = sample_real(cfg_.batch_size);
    const Matrix noise = sample_noise(cfg_.batch_size);
    const StepResult d = discriminator_step(real, noise);
    last_d_ = d.objective;
    note(d);
  }
  if (collapsed_) return;
  const StepResult g = generator_step(sample_noise(cfg_.batch_size));
  last_g_ = g.objective;
  note(g);
}

EvalEntry Trainer::evaluate(std::size_t step) {
  EvalEntry e;
  e.step = step;
  e.d_loss = last_d_;
  e.g_loss = last_g_;
  last_samples_ = generate(cfg_.eval_samples);
  const std::vector<Point2> real = eval_data_.sample(cfg_.eval_samples);
  bool finite = true;
  for (const Point2& p : last_samples_) finite = finite && std::isfinite(p.x) && std::isfinite(p.y);
  if (finite) {
    const FiniteDistribution fake_h = histogram_estimate(last_samples_, cfg_.grid);
    const FiniteDistribution real_h = histogram_estimate(real, cfg_.grid);
    e.hist_jsd = jensen_f(builtin_generator(GeneratorFamily::kl), fake_h, real_h);
    e.mode_coverage = mode_coverage(last_samples_, data_);
  } else {
    e.hist_jsd = std::numeric_limits<double>::quiet_NaN();
    e.mode_coverage = 0;
  }
  return e;
}

TrainRecord Trainer::run() {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  TrainRecord rec;
  std::size_t step = 0;
  while (step < cfg_.steps && !collapsed_) {
    iterate();
    ++step;
    if (step % cfg_.eval_every == 0 || step == cfg_.steps || collapsed_) {
      EvalEntry e = evaluate(step);
      e.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
      rec.entries.push_back(e);
    }
  }
  rec.collapsed = collapsed_;
  rec.skipped_steps = skipped_;
  rec.completed_steps = step;
  rec.generator = generator_;
  rec.discriminator = discriminator_;
  rec.final_samples = last_samples_;
  return rec;
}

TrainRecord train(const TrainConfig& cfg) { return Trainer(cfg).run(); }

void write_metrics_csv(std::ostream& out, const TrainRecord& record, bool include_wall_clock) {
  out << "step,d_loss,g_loss,hist_jsd,mode_coverage,wall_ms\n";
  for (const EvalEntry& e : record.entries) {
    out << e.step << ',' << num(e.d_loss) << ',' << num(e.g_loss) << ',' << num(e.hist_jsd) << ','
        << e.mode_coverage << ',' << (include_wall_clock ? num(e.wall_ms) : "0") << '\n';
  }
}

void write_samples_csv(std::ostream& out, std::span<const Point2> samples) {
  out << "x,y\n";
  for (const Point2& p : samples) out << num(p.x) << ',' << num(p.y) << '\n';
}

}  // namespace lagan::gan
