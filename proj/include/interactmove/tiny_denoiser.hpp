#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "interactmove/diffusion.hpp"

namespace interactmove {

// Layer sizes of the small conditional denoiser. The signal is split into
// `tokens` chunks of `token_size` values; every chunk is embedded together with
// its side features and positional/timestep encodings, attends into the
// condition tokens, and is decoded by a one-hidden-layer MLP.
struct DenoiserShape {
  int tokens = 1;
  int token_size = 1;
  int side_dim = 0;
  int cond_dim = 8;
  int embed_dim = 8;
  int hidden = 32;
  int mlp_hidden = 32;

  int signal_size() const { return tokens * token_size; }
  int input_dim() const { return token_size + side_dim + 2 * embed_dim; }

  bool operator==(const DenoiserShape&) const = default;
};

class TinyDenoiser : public Denoiser {
 public:
  TinyDenoiser() = default;
  TinyDenoiser(const DenoiserShape& shape, int schedule_steps) : shape_(shape), steps_(schedule_steps) {
    require(shape.tokens > 0 && shape.token_size > 0 && shape.cond_dim > 0 && shape.hidden > 0 && shape.mlp_hidden > 0 &&
                shape.side_dim >= 0 && shape.embed_dim >= 2,
            "invalid denoiser shape");
    params_ = Eigen::VectorXd::Zero(parameter_count(shape));
  }

  static Eigen::Index parameter_count(const DenoiserShape& s) {
    const Eigen::Index h = s.hidden, in = s.input_dim(), d = s.cond_dim, h2 = s.mlp_hidden, p = s.token_size;
    return h * in + h + h * h + h * d + h * d + h2 * h + h2 + p * h2 + p;
  }

  // Scaled-uniform initialisation.
  void initialize(Rng& rng) {
    auto fill = [&](Eigen::Index offset, Eigen::Index rows, Eigen::Index cols, double gain) {
      const double bound = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (Eigen::Index i = 0; i < rows * cols; ++i) params_[offset + i] = uniform(rng, -bound, bound);
    };
    params_.setZero();
    const Layout l = layout();
    fill(l.w_in, shape_.hidden, shape_.input_dim(), 1.0);
    fill(l.wq, shape_.hidden, shape_.hidden, 1.0);
    fill(l.wk, shape_.hidden, shape_.cond_dim, 1.0);
    fill(l.wv, shape_.hidden, shape_.cond_dim, 1.0);
    fill(l.w1, shape_.mlp_hidden, shape_.hidden, 1.0);
    fill(l.w2, shape_.token_size, shape_.mlp_hidden, 0.5);
  }

  const DenoiserShape& shape() const { return shape_; }
  int schedule_steps() const { return steps_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  void set_parameters(const Eigen::VectorXd& p) {
    require(p.size() == params_.size(), "parameter vector has the wrong size");
    require(p.allFinite(), "parameter vector is not finite");
    params_ = p;
  }

  Signal predict(const Signal& noisy, int t, const ConditionBundle& cond) const override {
    Cache c;
    forward(noisy, t, cond, c);
    return Eigen::Map<const Eigen::VectorXd>(c.y.data(), c.y.size());
  }

  // Mean squared error against `target` plus an optional auxiliary term whose
  // gradient with respect to the prediction is supplied by the caller.
  // Accumulates d(loss)/d(params) into `grad` and returns the loss.
  using AuxTerm = std::function<double(const Signal& prediction, Signal& grad_prediction)>;

  double loss_and_gradient(const Signal& noisy, int t, const ConditionBundle& cond, const Signal& target,
                           Eigen::VectorXd& grad, const AuxTerm& aux = {}) const {
    check_same_shape(noisy, target, "denoiser loss");
    Cache c;
    forward(noisy, t, cond, c);
    Eigen::Map<const Eigen::VectorXd> y(c.y.data(), c.y.size());
    const double n = static_cast<double>(target.size());
    Signal dy = 2.0 * (y - target) / n;
    double loss = (y - target).squaredNorm() / n;
    if (aux) {
      Signal g = Signal::Zero(dy.size());
      loss += aux(y, g);
      dy += g;
    }
    backward(c, cond, Eigen::Map<const Eigen::MatrixXd>(dy.data(), shape_.token_size, shape_.tokens), grad);
    return loss;
  }

 private:
  struct Layout {
    Eigen::Index w_in, b_in, wq, wk, wv, w1, b1, w2, b2;
  };

  Layout layout() const {
    const Eigen::Index h = shape_.hidden, in = shape_.input_dim(), d = shape_.cond_dim, h2 = shape_.mlp_hidden,
                       p = shape_.token_size;
    Layout l{};
    l.w_in = 0;
    l.b_in = l.w_in + h * in;
    l.wq = l.b_in + h;
    l.wk = l.wq + h * h;
    l.wv = l.wk + h * d;
    l.w1 = l.wv + h * d;
    l.b1 = l.w1 + h2 * h;
    l.w2 = l.b1 + h2;
    l.b2 = l.w2 + p * h2;
    return l;
  }

  using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
  using ConstVec = Eigen::Map<const Eigen::VectorXd>;

  ConstMat mat(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) const {
    return ConstMat(params_.data() + offset, rows, cols);
  }
  ConstVec vec(Eigen::Index offset, Eigen::Index n) const { return ConstVec(params_.data() + offset, n); }

  struct Cache {
    Eigen::MatrixXd u, h0, q, keys, values, cond, attn, h1, z, y;
  };

  Eigen::MatrixXd condition_matrix(const ConditionBundle& cond, int t) const {
    require(cond.tokens().empty() || cond.token_dim() == shape_.cond_dim, "condition token width does not match denoiser");
    const Eigen::Index k = static_cast<Eigen::Index>(cond.tokens().size()) + 1;
    Eigen::MatrixXd c(shape_.cond_dim, k);
    for (Eigen::Index i = 0; i + 1 < k; ++i) c.col(i) = cond.tokens()[static_cast<std::size_t>(i)];
    c.col(k - 1) = sinusoidal_embedding(static_cast<double>(t), shape_.cond_dim, 2.0 * steps_);
    return c;
  }

  void forward(const Signal& noisy, int t, const ConditionBundle& cond, Cache& c) const {
    const DenoiserShape& s = shape_;
    if (noisy.size() != s.signal_size()) throw ValidationError("denoiser input has the wrong size");
    const Eigen::MatrixXd& side = cond.side_features();
    if (s.side_dim > 0) {
      require(side.rows() == s.side_dim && side.cols() == s.tokens, "side features do not match denoiser shape");
    }
    const Layout l = layout();
    c.u.resize(s.input_dim(), s.tokens);
    c.u.topRows(s.token_size) = ConstMat(noisy.data(), s.token_size, s.tokens);
    if (s.side_dim > 0) c.u.middleRows(s.token_size, s.side_dim) = side;
    const Eigen::VectorXd te = sinusoidal_embedding(static_cast<double>(t), s.embed_dim, 2.0 * steps_);
    for (int m = 0; m < s.tokens; ++m) {
      c.u.col(m).segment(s.token_size + s.side_dim, s.embed_dim) = sinusoidal_embedding(m, s.embed_dim, 4.0 * s.tokens);
      c.u.col(m).tail(s.embed_dim) = te;
    }
    c.h0 = ((mat(l.w_in, s.hidden, s.input_dim()) * c.u).colwise() + vec(l.b_in, s.hidden)).array().tanh().matrix();
    c.cond = condition_matrix(cond, t);
    c.q = mat(l.wq, s.hidden, s.hidden) * c.h0;
    c.keys = mat(l.wk, s.hidden, s.cond_dim) * c.cond;
    c.values = mat(l.wv, s.hidden, s.cond_dim) * c.cond;
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.hidden));
    c.attn = (c.q.transpose() * c.keys) * scale;  // tokens x cond
    for (Eigen::Index m = 0; m < c.attn.rows(); ++m) {
      const double mx = c.attn.row(m).maxCoeff();
      c.attn.row(m) = (c.attn.row(m).array() - mx).exp().matrix();
      c.attn.row(m) /= c.attn.row(m).sum();
    }
    c.h1 = c.h0 + c.values * c.attn.transpose();
    c.z = ((mat(l.w1, s.mlp_hidden, s.hidden) * c.h1).colwise() + vec(l.b1, s.mlp_hidden)).array().tanh().matrix();
    c.y = (mat(l.w2, s.token_size, s.mlp_hidden) * c.z).colwise() + vec(l.b2, s.token_size);
  }

  void backward(const Cache& c, const ConditionBundle&, const Eigen::MatrixXd& dy, Eigen::VectorXd& grad) const {
    const DenoiserShape& s = shape_;
    const Layout l = layout();
    if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());
    auto gmat = [&](Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
      return Eigen::Map<Eigen::MatrixXd>(grad.data() + offset, rows, cols);
    };
    auto gvec = [&](Eigen::Index offset, Eigen::Index n) { return Eigen::Map<Eigen::VectorXd>(grad.data() + offset, n); };

    gmat(l.w2, s.token_size, s.mlp_hidden) += dy * c.z.transpose();
    gvec(l.b2, s.token_size) += dy.rowwise().sum();
    const Eigen::MatrixXd dz = mat(l.w2, s.token_size, s.mlp_hidden).transpose() * dy;
    const Eigen::MatrixXd da1 = dz.array() * (1.0 - c.z.array().square());
    gmat(l.w1, s.mlp_hidden, s.hidden) += da1 * c.h1.transpose();
    gvec(l.b1, s.mlp_hidden) += da1.rowwise().sum();
    const Eigen::MatrixXd dh1 = mat(l.w1, s.mlp_hidden, s.hidden).transpose() * da1;

    // h1 = h0 + V A^T
    const Eigen::MatrixXd dvalues = dh1 * c.attn;           // hidden x cond
    const Eigen::MatrixXd dattn = dh1.transpose() * c.values;  // tokens x cond
    Eigen::MatrixXd dscores(dattn.rows(), dattn.cols());
    for (Eigen::Index m = 0; m < dattn.rows(); ++m) {
      const double dot = dattn.row(m).dot(c.attn.row(m));
      dscores.row(m) = c.attn.row(m).array() * (dattn.row(m).array() - dot);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.hidden));
    const Eigen::MatrixXd dq = (c.keys * dscores.transpose()) * scale;  // hidden x tokens
    const Eigen::MatrixXd dkeys = (c.q * dscores) * scale;              // hidden x cond
    gmat(l.wq, s.hidden, s.hidden) += dq * c.h0.transpose();
    gmat(l.wk, s.hidden, s.cond_dim) += dkeys * c.cond.transpose();
    gmat(l.wv, s.hidden, s.cond_dim) += dvalues * c.cond.transpose();

    Eigen::MatrixXd dh0 = dh1 + mat(l.wq, s.hidden, s.hidden).transpose() * dq;
    const Eigen::MatrixXd da0 = dh0.array() * (1.0 - c.h0.array().square());
    gmat(l.w_in, s.hidden, s.input_dim()) += da0 * c.u.transpose();
    gvec(l.b_in, s.hidden) += da0.rowwise().sum();
  }

  DenoiserShape shape_;
  int steps_ = 1;
  Eigen::VectorXd params_;
};

// ---------------------------------------------------------------------------
// Training

struct TrainingSample {
  Signal target;
  ConditionBundle cond;
};

struct OptimizerConfig {
  int epochs = 200;
  int batch_size = 8;
  double learning_rate = 2e-3;
  double final_learning_rate = 2e-4;  // cosine decay target
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
};

struct TrainingResult {
  std::vector<double> loss_curve;  // mean loss per epoch
};

// Auxiliary per-sample loss on the prediction (used for the contact and
// penetration terms of interaction training).
using SampleAuxLoss = std::function<double(std::size_t sample, const Signal& prediction, Signal& grad_prediction)>;

class AdamState {
 public:
  explicit AdamState(Eigen::Index n) : m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr, const OptimizerConfig& cfg) {
    ++t_;
    m_ = cfg.beta1 * m_ + (1.0 - cfg.beta1) * grad;
    v_ = cfg.beta2 * v_ + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg.beta2, t_);
    params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg.epsilon);
  }

 private:
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

// Trains `model` in place on the A_0-prediction objective: each sample draws
// t ~ U{1..T} and eps ~ N(0, I), and the loss is ||A_0 - G(A_t, t, c)||^2
// averaged over entries, plus the auxiliary term when given.
inline TrainingResult train_denoiser(TinyDenoiser& model, const std::vector<TrainingSample>& dataset,
                                     const NoiseSchedule& sched, const OptimizerConfig& cfg,
                                     const SampleAuxLoss& aux = {}) {
  require(!dataset.empty(), "train_denoiser: empty dataset");
  require(cfg.epochs > 0 && cfg.batch_size > 0, "train_denoiser: invalid optimizer config");
  for (const auto& s : dataset) {
    require(s.target.size() == model.shape().signal_size(), "train_denoiser: sample size does not match model");
  }
  Rng rng(cfg.seed);
  AdamState adam(model.parameters().size());
  Eigen::VectorXd params = model.parameters();
  TrainingResult result;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int batches_per_epoch = static_cast<int>((dataset.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                                 static_cast<std::size_t>(cfg.batch_size));
  const int total_steps = cfg.epochs * batches_per_epoch;
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        const TrainingSample& sample = dataset[idx];
        const int t = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(sched.steps())));
        const Signal noisy = forward_sample(sample.target, t, standard_normal_vector(rng, sample.target.size()), sched);
        TinyDenoiser::AuxTerm term;
        if (aux) term = [&](const Signal& y, Signal& g) { return aux(idx, y, g); };
        batch_loss += model.loss_and_gradient(noisy, t, sample.cond, sample.target, grad, term);
      }
      const double count = static_cast<double>(end - start);
      grad /= count;
      batch_loss /= count;
      if (!std::isfinite(batch_loss) || !grad.allFinite()) {
        throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + " (loss " +
                                  std::to_string(batch_loss) + ")",
                              epoch);
      }
      const double gn = grad.norm();
      if (cfg.clip_norm > 0.0 && gn > cfg.clip_norm) grad *= cfg.clip_norm / gn;
      constexpr double kPi = 3.14159265358979323846;
      const double progress = total_steps > 1 ? static_cast<double>(step) / (total_steps - 1) : 1.0;
      const double lr = cfg.final_learning_rate +
                        0.5 * (cfg.learning_rate - cfg.final_learning_rate) * (1.0 + std::cos(kPi * progress));
      adam.step(params, grad, lr, cfg);
      model.set_parameters(params);
      epoch_loss += batch_loss * count;
      ++step;
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: little-endian binary
//   "IMCK" | u32 version | 7 x u32 shape | u32 T | T x f64 beta | u64 n | n x f64 params

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TinyDenoiser model;
  NoiseSchedule schedule;
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint and array I/O assume a little-endian host");

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("unexpected end of file");
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const TinyDenoiser& model, const NoiseSchedule& sched) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write("IMCK", 4);
  detail::write_pod(out, kCheckpointVersion);
  const DenoiserShape& s = model.shape();
  for (int v : {s.tokens, s.token_size, s.side_dim, s.cond_dim, s.embed_dim, s.hidden, s.mlp_hidden}) {
    detail::write_pod(out, static_cast<std::uint32_t>(v));
  }
  detail::write_pod(out, static_cast<std::uint32_t>(sched.steps()));
  for (double b : sched.betas()) detail::write_pod(out, b);
  detail::write_pod(out, static_cast<std::uint64_t>(model.parameters().size()));
  out.write(reinterpret_cast<const char*>(model.parameters().data()),
            static_cast<std::streamsize>(model.parameters().size() * sizeof(double)));
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "IMCK", 4) != 0) throw IoError("'" + path + "' is not a denoiser checkpoint");
  if (detail::read_pod<std::uint32_t>(in) != kCheckpointVersion) throw IoError("unsupported checkpoint version");
  DenoiserShape s;
  s.tokens = static_cast<int>(detail::read_pod<std::uint32_t>(in));
  s.token_size = static_cast<int>(detail::read_pod<std::uint32_t>(in));
  s.side_dim = static_cast<int>(detail::read_pod<std::uint32_t>(in));
  s.cond_dim = static_cast<int>(detail::read_pod<std::uint32_t>(in));
  s.embed_dim = static_cast<int>(detail::read_pod<std::uint32_t>(in));
  s.hidden = static_cast<int>(detail::read_pod<std::uint32_t>(in));
  s.mlp_hidden = static_cast<int>(detail::read_pod<std::uint32_t>(in));
  const auto steps = detail::read_pod<std::uint32_t>(in);
  if (steps == 0 || steps > 100000) throw IoError("corrupt checkpoint schedule");
  std::vector<double> betas(steps);
  for (auto& b : betas) b = detail::read_pod<double>(in);
  const auto n = detail::read_pod<std::uint64_t>(in);
  TinyDenoiser model(s, static_cast<int>(steps));
  if (n != static_cast<std::uint64_t>(model.parameters().size())) throw IoError("checkpoint parameter count mismatch");
  Eigen::VectorXd params(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(params.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw IoError("truncated checkpoint '" + path + "'");
  model.set_parameters(params);
  return {std::move(model), NoiseSchedule::from_betas(std::move(betas))};
}

}  // namespace interactmove
