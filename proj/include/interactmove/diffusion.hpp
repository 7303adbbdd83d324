#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "interactmove/core.hpp"

namespace interactmove {

using Signal = Eigen::VectorXd;

// DDPM variance schedule. beta(t) is defined for t = 1..T and alpha_bar(t)
// for t = 0..T with alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  NoiseSchedule() : NoiseSchedule(linear(100, 1e-4, 2e-2)) {}

  static NoiseSchedule linear(int steps, double beta_start, double beta_end) {
    require(steps > 0, "noise schedule needs at least one step");
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
      betas[static_cast<std::size_t>(i)] =
          steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * static_cast<double>(i) / (steps - 1);
    }
    return from_betas(std::move(betas));
  }

  static NoiseSchedule from_betas(std::vector<double> betas) {
    require(!betas.empty(), "noise schedule needs at least one step");
    for (double b : betas) require(b > 0.0 && b < 1.0, "noise schedule betas must lie in (0, 1)");
    NoiseSchedule s(0);
    s.betas_ = std::move(betas);
    s.alpha_bar_.assign(s.betas_.size() + 1, 1.0);
    for (std::size_t t = 1; t <= s.betas_.size(); ++t) s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - s.betas_[t - 1]);
    return s;
  }

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(static_cast<std::size_t>(t - 1)); }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t)); }
  const std::vector<double>& betas() const { return betas_; }

  // Variance of q(A_{t-1} | A_t, A_0).
  double posterior_variance(int t) const { return beta(t) * (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)); }

 private:
  explicit NoiseSchedule(int) {}
  std::vector<double> betas_;
  std::vector<double> alpha_bar_;
};

inline void check_same_shape(const Signal& a, const Signal& b, const char* what) {
  if (a.size() != b.size()) {
    throw ValidationError(std::string(what) + ": shape mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
}

// Closed-form marginal: A_t = sqrt(abar_t) A_0 + sqrt(1 - abar_t) eps.
inline Signal forward_sample(const Signal& a0, int t, const Signal& eps, const NoiseSchedule& sched) {
  require(t >= 0 && t <= sched.steps(), "forward_sample: timestep out of range");
  check_same_shape(a0, eps, "forward_sample");
  const double ab = sched.alpha_bar(t);
  return std::sqrt(ab) * a0 + std::sqrt(1.0 - ab) * eps;
}

// One transition with an explicit variance, beta in [0, 1].
inline Signal forward_step_with_beta(const Signal& prev, double beta, const Signal& eps) {
  require(beta >= 0.0 && beta <= 1.0, "forward_step: beta must lie in [0, 1]");
  check_same_shape(prev, eps, "forward_step");
  return std::sqrt(1.0 - beta) * prev + std::sqrt(beta) * eps;
}

inline Signal forward_step(const Signal& prev, int t, const Signal& eps, const NoiseSchedule& sched) {
  require(t >= 1 && t <= sched.steps(), "forward_step: timestep out of range");
  return forward_step_with_beta(prev, sched.beta(t), eps);
}

inline double diffusion_loss(const Signal& a0, const Signal& a0_hat) {
  check_same_shape(a0, a0_hat, "diffusion_loss");
  if (a0.size() == 0) return 0.0;
  return (a0 - a0_hat).squaredNorm() / static_cast<double>(a0.size());
}

// ---------------------------------------------------------------------------
// Conditioning

inline Eigen::VectorXd sinusoidal_embedding(double position, int dim, double max_period = 1000.0) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(max_period, -static_cast<double>(i) / std::max(1, half));
    e[2 * i] = std::sin(position * freq);
    e[2 * i + 1] = std::cos(position * freq);
  }
  return e;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Signed hashed bag-of-words, unit length (zero for empty text).
inline Eigen::VectorXd text_embedding(std::string_view text, int dim) {
  require(dim > 0, "text embedding dimension must be positive");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  std::string word;
  auto flush = [&]() {
    if (word.empty()) return;
    const std::uint64_t h = fnv1a(word);
    e[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim))] += ((h >> 32) & 1u) ? 1.0 : -1.0;
    word.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  const double n = e.norm();
  return n > 0.0 ? Eigen::VectorXd(e / n) : e;
}

// Global condition tokens (all of one width) plus optional per-signal-token
// side features whose columns align with the denoiser's signal tokens.
class ConditionBundle {
 public:
  ConditionBundle() = default;
  explicit ConditionBundle(int token_dim) : token_dim_(token_dim) {}

  int token_dim() const { return token_dim_; }
  const std::vector<Eigen::VectorXd>& tokens() const { return tokens_; }
  const Eigen::MatrixXd& side_features() const { return side_; }

  // Pads with zeros (or truncates) to the bundle width.
  void add_token(const Eigen::VectorXd& token) {
    require(token_dim_ > 0, "condition bundle has no token width");
    Eigen::VectorXd t = Eigen::VectorXd::Zero(token_dim_);
    const Eigen::Index n = std::min<Eigen::Index>(token.size(), token_dim_);
    t.head(n) = token.head(n);
    tokens_.push_back(std::move(t));
  }

  // One column per signal token.
  void set_side_features(Eigen::MatrixXd side) { side_ = std::move(side); }

 private:
  int token_dim_ = 0;
  std::vector<Eigen::VectorXd> tokens_;
  Eigen::MatrixXd side_;
};

// ---------------------------------------------------------------------------
// Denoisers

// Maps (A_t, t, condition) to an estimate of A_0 with the shape of A_t.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Signal predict(const Signal& noisy, int t, const ConditionBundle& cond) const = 0;
};

class FunctionDenoiser : public Denoiser {
 public:
  using Fn = std::function<Signal(const Signal&, int, const ConditionBundle&)>;
  explicit FunctionDenoiser(Fn fn) : fn_(std::move(fn)) {}
  Signal predict(const Signal& noisy, int t, const ConditionBundle& cond) const override { return fn_(noisy, t, cond); }

 private:
  Fn fn_;
};

// Orthonormal DCT-II basis, frames x keep.
inline Eigen::MatrixXd dct_basis(int frames, int keep) {
  require(frames > 0 && keep > 0 && keep <= frames, "dct_basis: invalid size");
  constexpr double kPi = 3.14159265358979323846;
  Eigen::MatrixXd b(frames, keep);
  for (int k = 0; k < keep; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / frames) : std::sqrt(2.0 / frames);
    for (int n = 0; n < frames; ++n) b(n, k) = scale * std::cos(kPi * (n + 0.5) * k / frames);
  }
  return b;
}

// DCT components plus linear and quadratic trends, orthonormalised. The
// trends absorb the end-point slopes a pure cosine basis cannot represent,
// which otherwise leak into every projected frame.
inline Eigen::MatrixXd temporal_basis(int frames, int keep) {
  const int extra = std::min(2, frames - keep);
  Eigen::MatrixXd a(frames, keep + extra);
  a.leftCols(keep) = dct_basis(frames, keep);
  for (int p = 0; p < extra; ++p) {
    for (int n = 0; n < frames; ++n) a(n, keep + p) = std::pow(2.0 * (n + 0.5) / frames - 1.0, p + 1);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(frames, keep + extra);
}

// Non-learned denoiser for frame-major signals (frames x channels): rescales
// A_t by 1/sqrt(abar_t) and projects every channel onto a low-order temporal
// basis.
class SmoothingDenoiser : public Denoiser {
 public:
  SmoothingDenoiser(int frames, int channels, int keep, NoiseSchedule sched)
      : frames_(frames), channels_(channels), basis_(temporal_basis(frames, keep)), sched_(std::move(sched)) {
    require(channels > 0, "smoothing denoiser needs channels");
  }

  Signal predict(const Signal& noisy, int t, const ConditionBundle&) const override {
    if (noisy.size() != static_cast<Eigen::Index>(frames_) * channels_) {
      throw ValidationError("smoothing denoiser: signal size does not match frames x channels");
    }
    // Frame-major storage maps to a channels x frames column-major matrix.
    Eigen::Map<const Eigen::MatrixXd> x(noisy.data(), channels_, frames_);
    const Eigen::MatrixXd projected = (x * basis_) * basis_.transpose();
    Signal out(noisy.size());
    Eigen::Map<Eigen::MatrixXd>(out.data(), channels_, frames_) = projected / std::sqrt(sched_.alpha_bar(t));
    return out;
  }

 private:
  int frames_;
  int channels_;
  Eigen::MatrixXd basis_;
  NoiseSchedule sched_;
};

// Frame-major local smoother: one explicit descent step on the squared third
// difference in time, A_0 = (I - rate D'D) A_t / sqrt(abar_t). When used for
// inpainting, its fixed point is the minimum-jerk completion of the editable
// frames given their observed neighbours.
class JerkSmoothingDenoiser : public Denoiser {
 public:
  JerkSmoothingDenoiser(int frames, int channels, double rate, NoiseSchedule sched)
      : frames_(frames), channels_(channels), sched_(std::move(sched)) {
    require(frames > 0 && channels > 0, "jerk smoother needs frames and channels");
    // |D'D| <= 64, so rates up to 1/32 keep the step stable
    require(rate >= 0.0 && rate <= 1.0 / 32.0, "jerk smoother rate must lie in [0, 1/32]");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(std::max(0, frames - 3), frames);
    for (int r = 0; r + 3 < frames; ++r) d.row(r).segment(r, 4) << -1.0, 3.0, -3.0, 1.0;
    smoother_ = Eigen::MatrixXd::Identity(frames, frames) - rate * d.transpose() * d;
  }

  Signal predict(const Signal& noisy, int t, const ConditionBundle&) const override {
    if (noisy.size() != static_cast<Eigen::Index>(frames_) * channels_) {
      throw ValidationError("jerk smoother: signal size does not match frames x channels");
    }
    Eigen::Map<const Eigen::MatrixXd> x(noisy.data(), channels_, frames_);
    Signal out(noisy.size());
    Eigen::Map<Eigen::MatrixXd>(out.data(), channels_, frames_) = (x * smoother_) / std::sqrt(sched_.alpha_bar(t));
    return out;
  }

 private:
  int frames_;
  int channels_;
  Eigen::MatrixXd smoother_;  // symmetric
  NoiseSchedule sched_;
};

// Applied to the decoded estimate of A_0 after each reverse step.
using GuidanceCorrector = std::function<void(Signal& a0_hat, int t)>;

inline void check_finite(const Signal& s, int t) {
  if (!s.allFinite()) throw DivergenceError("reverse process diverged at step " + std::to_string(t), t);
}

// DDPM ancestral sampling with an A_0-predicting denoiser. At every step the
// (optionally guided) estimate of A_0 forms the posterior mean of A_{t-1};
// posterior noise is added while t > 1. Returns the final estimate.
inline Signal reverse_denoise(const Signal& a_T, const Denoiser& denoiser, const ConditionBundle& cond,
                              const NoiseSchedule& sched, Rng& rng, const GuidanceCorrector& guidance = {},
                              int start_step = -1) {
  const int top = start_step < 0 ? sched.steps() : start_step;
  require(top <= sched.steps(), "reverse_denoise: start step beyond schedule");
  Signal x = a_T;
  Signal a0_hat = a_T;
  for (int t = top; t >= 1; --t) {
    a0_hat = denoiser.predict(x, t, cond);
    check_same_shape(x, a0_hat, "reverse_denoise");
    check_finite(a0_hat, t);
    if (guidance) {
      guidance(a0_hat, t);
      check_finite(a0_hat, t);
    }
    if (t == 1) break;
    const double ab = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t - 1);
    const double c0 = std::sqrt(ab_prev) * sched.beta(t) / (1.0 - ab);
    const double ct = std::sqrt(sched.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
    x = c0 * a0_hat + ct * x + std::sqrt(sched.posterior_variance(t)) * standard_normal_vector(rng, x.size());
    check_finite(x, t);
  }
  return a0_hat;
}

struct InpaintResult {
  Signal signal;
  std::string warning;
};

// Regenerates the entries where `observed` is false: noise the input for
// `t_noise` steps, then reverse-denoise while re-imposing the observed entries
// (noised to the current level) after every step. With resample > 1 each step
// is repeated after re-noising by one step, which lets the editable region
// settle against its fixed neighbours. Observed entries of the result equal
// the input bit for bit.
inline InpaintResult inpaint(const Signal& signal, const std::vector<bool>& observed, int t_noise,
                             const Denoiser& denoiser, const ConditionBundle& cond, const NoiseSchedule& sched,
                             Rng& rng, int resample = 1) {
  require(static_cast<Eigen::Index>(observed.size()) == signal.size(), "inpaint: mask size does not match signal");
  require(t_noise >= 0 && t_noise <= sched.steps(), "inpaint: t_noise out of range");
  require(resample >= 1, "inpaint: resample count must be positive");
  InpaintResult result{signal, {}};
  const bool any_editable = std::find(observed.begin(), observed.end(), false) != observed.end();
  if (!any_editable) {
    result.warning = "inpaint: every entry is observed, returning input unchanged";
    return result;
  }
  if (t_noise == 0) return result;

  auto clamp = [&](Signal& x, const Signal& reference) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (observed[static_cast<std::size_t>(i)]) x[i] = reference[i];
    }
  };
  auto noised = [&](int t) { return forward_sample(signal, t, standard_normal_vector(rng, signal.size()), sched); };

  Signal x = noised(t_noise);
  Signal a0_hat = signal;
  for (int t = t_noise; t >= 1; --t) {
    for (int r = 0; r < resample; ++r) {
      a0_hat = denoiser.predict(x, t, cond);
      check_same_shape(x, a0_hat, "inpaint");
      check_finite(a0_hat, t);
      clamp(a0_hat, signal);
      if (t == 1) break;
      const double ab = sched.alpha_bar(t);
      const double ab_prev = sched.alpha_bar(t - 1);
      const double c0 = std::sqrt(ab_prev) * sched.beta(t) / (1.0 - ab);
      const double ct = std::sqrt(sched.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
      Signal prev = c0 * a0_hat + ct * x + std::sqrt(sched.posterior_variance(t)) * standard_normal_vector(rng, x.size());
      clamp(prev, noised(t - 1));
      x = r + 1 < resample ? forward_step(prev, t, standard_normal_vector(rng, x.size()), sched) : prev;
    }
  }
  result.signal = a0_hat;
  return result;
}

}  // namespace interactmove
