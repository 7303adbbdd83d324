#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "interactmove/tiny_denoiser.hpp"
#include "oracles.hpp"

namespace im = interactmove;

TEST(Schedule, DefaultsAndMonotonicity) {
  const im::NoiseSchedule s;
  EXPECT_EQ(s.steps(), 100);
  EXPECT_DOUBLE_EQ(s.beta(1), 1e-4);
  EXPECT_DOUBLE_EQ(s.beta(100), 2e-2);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  for (int t = 1; t <= s.steps(); ++t) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
  double prod = 1.0;
  for (int t = 1; t <= 100; ++t) prod *= 1.0 - s.beta(t);
  EXPECT_NEAR(s.alpha_bar(100), prod, 1e-15);
  EXPECT_THROW(im::NoiseSchedule::from_betas({0.1, 1.0}), im::ValidationError);
}

TEST(ForwardProcess, ClosedFormEdgeCases) {
  const im::NoiseSchedule s;
  im::Rng rng(1);
  const im::Signal a0 = im::standard_normal_vector(rng, 12);
  const im::Signal eps = im::standard_normal_vector(rng, 12);
  EXPECT_EQ(im::forward_sample(a0, 0, eps, s), a0);
  const im::Signal zero = im::Signal::Zero(12);
  EXPECT_EQ(im::forward_sample(zero, 37, eps, s), std::sqrt(1.0 - s.alpha_bar(37)) * eps);
  EXPECT_THROW(im::forward_sample(a0, 101, eps, s), im::ValidationError);
  EXPECT_THROW(im::forward_sample(a0, 3, im::Signal::Zero(5), s), im::ValidationError);
}

TEST(ForwardProcess, StepEdgeCases) {
  im::Rng rng(2);
  const im::Signal prev = im::standard_normal_vector(rng, 9);
  const im::Signal eps = im::standard_normal_vector(rng, 9);
  EXPECT_EQ(im::forward_step_with_beta(prev, 0.0, eps), prev);
  EXPECT_EQ(im::forward_step_with_beta(prev, 1.0, eps), eps);
  const im::NoiseSchedule s;
  EXPECT_THROW(im::forward_step(prev, 0, eps, s), im::ValidationError);
  EXPECT_THROW(im::forward_step(prev, 101, eps, s), im::ValidationError);
}

TEST(ForwardProcess, MonteCarloMoments) {
  const im::NoiseSchedule s;
  const int n = 10000;
  const double a0 = 0.8;
  for (int t : {1, 25, 60, 100}) {
    im::Rng rng(100 + t);
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) {
      const im::Signal e = im::standard_normal_vector(rng, 1);
      xs.push_back(im::forward_sample(im::Signal::Constant(1, a0), t, e, s)[0]);
    }
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n - 1;
    const double sigma2 = 1.0 - s.alpha_bar(t);
    EXPECT_LE(std::abs(mean - std::sqrt(s.alpha_bar(t)) * a0), 3.0 * std::sqrt(sigma2 / n)) << t;
    EXPECT_LE(std::abs(var - sigma2), 3.0 * sigma2 * std::sqrt(2.0 / (n - 1))) << t;
  }
}

TEST(ForwardProcess, IteratedStepsMatchClosedFormInDistribution) {
  const im::NoiseSchedule s;
  const int n = 10000;
  for (int t : {1, 10, 30, 60, 100}) {
    im::Rng iter_rng(7 + t), closed_rng(9000 + t);
    std::vector<double> iterated, closed;
    for (int i = 0; i < n; ++i) {
      im::Signal x = im::Signal::Constant(1, 0.5);
      for (int k = 1; k <= t; ++k) x = im::forward_step(x, k, im::standard_normal_vector(iter_rng, 1), s);
      iterated.push_back(x[0]);
      closed.push_back(im::forward_sample(im::Signal::Constant(1, 0.5), t, im::standard_normal_vector(closed_rng, 1), s)[0]);
    }
    EXPECT_GT(oracle::ks_two_sample(iterated, closed).p_value, 0.01) << "t=" << t;
  }
}

TEST(Loss, MeanSquaredError) {
  im::Rng rng(3);
  const im::Signal a = im::standard_normal_vector(rng, 50);
  const im::Signal b = im::standard_normal_vector(rng, 50);
  EXPECT_EQ(im::diffusion_loss(a, a), 0.0);
  EXPECT_EQ(im::diffusion_loss(im::Signal::Zero(7), im::Signal::Ones(7)), 1.0);
  double sum = 0.0;
  for (int i = 0; i < 50; ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_NEAR(im::diffusion_loss(a, b), sum / 50.0, 1e-14);
  EXPECT_THROW(im::diffusion_loss(a, im::Signal::Zero(3)), im::ValidationError);
}

TEST(Reverse, OracleDenoiserIsExactForAnySchedule) {
  im::Rng rng(4);
  const im::Signal a0 = im::standard_normal_vector(rng, 30);
  const im::FunctionDenoiser oracle([&](const im::Signal&, int, const im::ConditionBundle&) { return a0; });
  for (const auto& sched : {im::NoiseSchedule(), im::NoiseSchedule::linear(10, 0.01, 0.3),
                            im::NoiseSchedule::from_betas({0.5, 0.2, 0.9})}) {
    const im::Signal out = im::reverse_denoise(im::standard_normal_vector(rng, 30), oracle, {}, sched, rng);
    EXPECT_EQ(out, a0);
  }
}

TEST(Reverse, ZeroDenoiserGivesZero) {
  im::Rng rng(5);
  const im::FunctionDenoiser zero([](const im::Signal& x, int, const im::ConditionBundle&) { return im::Signal::Zero(x.size()); });
  const im::Signal out = im::reverse_denoise(im::standard_normal_vector(rng, 16), zero, {}, im::NoiseSchedule(), rng);
  EXPECT_EQ(out, im::Signal::Zero(16));
}

TEST(Reverse, DivergenceNamesTheStep) {
  im::Rng rng(6);
  const im::FunctionDenoiser bad([](const im::Signal& x, int t, const im::ConditionBundle&) {
    im::Signal y = x;
    if (t == 42) y[0] = std::nan("");
    return y;
  });
  try {
    im::reverse_denoise(im::standard_normal_vector(rng, 4), bad, {}, im::NoiseSchedule(), rng);
    FAIL();
  } catch (const im::DivergenceError& e) {
    EXPECT_EQ(e.step(), 42);
  }
}

TEST(Reverse, GuidanceSeesEveryStepAndSeedsReproduce) {
  const im::SmoothingDenoiser smooth(20, 2, 5, im::NoiseSchedule());
  std::vector<int> seen;
  auto run = [&](std::uint64_t seed) {
    im::Rng rng(seed);
    return im::reverse_denoise(im::standard_normal_vector(rng, 40), smooth, {}, im::NoiseSchedule(), rng,
                               [&](im::Signal& a, int t) {
                                 seen.push_back(t);
                                 a *= 0.99;
                               });
  };
  const im::Signal a = run(9);
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(seen.front(), 100);
  EXPECT_EQ(seen.back(), 1);
  EXPECT_EQ(run(9), a);
  EXPECT_NE(run(10), a);
}

TEST(Conditioning, TextEmbeddingIsDeterministicAndNormalised) {
  const auto e1 = im::text_embedding("A person drinks the bowl", 32);
  const auto e2 = im::text_embedding("a person DRINKS the bowl.", 32);
  EXPECT_EQ(e1, e2);
  EXPECT_NEAR(e1.norm(), 1.0, 1e-12);
  EXPECT_EQ(im::text_embedding("", 8), Eigen::VectorXd::Zero(8));
  EXPECT_NE(im::text_embedding("lift the box", 32), im::text_embedding("lift the cup", 32));
}

TEST(Conditioning, BundlePadsTokens) {
  im::ConditionBundle b(4);
  b.add_token(Eigen::Vector2d(1, 2));
  b.add_token(Eigen::VectorXd::Ones(6));
  ASSERT_EQ(b.tokens().size(), 2u);
  EXPECT_EQ(b.tokens()[0], Eigen::Vector4d(1, 2, 0, 0));
  EXPECT_EQ(b.tokens()[1], Eigen::Vector4d::Ones());
}

namespace {

im::Signal sinusoid(int frames) {
  im::Signal s(frames);
  for (int n = 0; n < frames; ++n) s[n] = std::sin(2.0 * 3.14159265358979323846 * n / 30.0);
  return s;
}

double max_second_difference(const im::Signal& s, int from, int to) {
  double m = 0.0;
  for (int n = std::max(1, from); n < std::min<int>(static_cast<int>(s.size()) - 1, to); ++n) {
    m = std::max(m, std::abs(s[n + 1] - 2.0 * s[n] + s[n - 1]));
  }
  return m;
}

}  // namespace

TEST(Inpaint, AllObservedIsIdentityWithWarning) {
  im::Rng rng(11);
  const im::Signal s = sinusoid(40);
  const im::SmoothingDenoiser d(40, 1, 10, im::NoiseSchedule());
  const auto r = im::inpaint(s, std::vector<bool>(40, true), 25, d, {}, im::NoiseSchedule(), rng);
  EXPECT_EQ(r.signal, s);
  EXPECT_FALSE(r.warning.empty());
}

TEST(Inpaint, ZeroNoiseIsIdentity) {
  im::Rng rng(12);
  im::Signal s = sinusoid(40);
  s[20] += 3.0;
  std::vector<bool> mask(40, true);
  for (int n = 15; n < 25; ++n) mask[static_cast<std::size_t>(n)] = false;
  const im::SmoothingDenoiser d(40, 1, 10, im::NoiseSchedule());
  EXPECT_EQ(im::inpaint(s, mask, 0, d, {}, im::NoiseSchedule(), rng).signal, s);
}

TEST(Inpaint, SinusoidGapIsSmoothAndObservedEntriesAreExact) {
  const int frames = 90;
  const im::Signal clean = sinusoid(frames);
  im::Signal corrupted = clean;
  std::vector<bool> mask(frames, true);
  for (int n = 40; n < 50; ++n) {
    mask[static_cast<std::size_t>(n)] = false;
    corrupted[n] = 2.0;  // garbage inside the gap
  }
  const im::NoiseSchedule sched;
  const im::SmoothingDenoiser d(frames, 1, 12, sched);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    im::Rng rng(seed);
    const auto r = im::inpaint(corrupted, mask, 25, d, {}, sched, rng, 10);
    for (int n = 0; n < frames; ++n) {
      if (mask[static_cast<std::size_t>(n)]) {
        ASSERT_EQ(r.signal[n], corrupted[n]);
      }
    }
    const double surrounding = std::max(max_second_difference(clean, 1, 39), max_second_difference(clean, 51, frames - 1));
    EXPECT_LE(max_second_difference(r.signal, 39, 51), 2.0 * surrounding) << seed;
  }
}

namespace {

im::DenoiserShape small_shape() {
  im::DenoiserShape s;
  s.tokens = 5;
  s.token_size = 3;
  s.side_dim = 2;
  s.cond_dim = 6;
  s.embed_dim = 4;
  s.hidden = 10;
  s.mlp_hidden = 9;
  return s;
}

im::ConditionBundle random_condition(const im::DenoiserShape& s, im::Rng& rng, int tokens = 3) {
  im::ConditionBundle c(s.cond_dim);
  for (int i = 0; i < tokens; ++i) c.add_token(im::standard_normal_vector(rng, s.cond_dim));
  if (s.side_dim > 0) {
    Eigen::MatrixXd side(s.side_dim, s.tokens);
    for (Eigen::Index i = 0; i < side.size(); ++i) side.data()[i] = im::standard_normal(rng);
    c.set_side_features(side);
  }
  return c;
}

}  // namespace

TEST(TinyDenoiser, ShapeContract) {
  im::Rng rng(13);
  im::TinyDenoiser model(small_shape(), 100);
  model.initialize(rng);
  const auto cond = random_condition(model.shape(), rng);
  const im::Signal x = im::standard_normal_vector(rng, model.shape().signal_size());
  const im::Signal y = model.predict(x, 17, cond);
  EXPECT_EQ(y.size(), x.size());
  EXPECT_EQ(model.predict(x, 17, cond), y);
  EXPECT_THROW(model.predict(im::Signal::Zero(4), 17, cond), im::ValidationError);
}

TEST(TinyDenoiser, GradientMatchesCentralDifferences) {
  im::Rng rng(14);
  im::TinyDenoiser model(small_shape(), 100);
  model.initialize(rng);
  // perturb biases so every parameter block carries gradient
  Eigen::VectorXd p = model.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += 0.05 * im::standard_normal(rng);
  model.set_parameters(p);
  const auto cond = random_condition(model.shape(), rng);
  const im::Signal x = im::standard_normal_vector(rng, model.shape().signal_size());
  const im::Signal target = im::standard_normal_vector(rng, x.size());
  const im::TinyDenoiser::AuxTerm aux = [](const im::Signal& y, im::Signal& g) {
    g = 0.2 * y.array().cube().matrix();
    return 0.05 * y.array().pow(4).sum();
  };
  for (const bool with_aux : {false, true}) {
    Eigen::VectorXd grad;
    model.loss_and_gradient(x, 23, cond, target, grad, with_aux ? aux : im::TinyDenoiser::AuxTerm{});
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const auto i = static_cast<Eigen::Index>(im::uniform_index(rng, static_cast<std::size_t>(p.size())));
      const double h = 1e-5;
      Eigen::VectorXd plus = p, minus = p;
      plus[i] += h;
      minus[i] -= h;
      Eigen::VectorXd scratch;
      im::TinyDenoiser mp = model, mm = model;
      mp.set_parameters(plus);
      mm.set_parameters(minus);
      const auto ax = with_aux ? aux : im::TinyDenoiser::AuxTerm{};
      const double fd = (mp.loss_and_gradient(x, 23, cond, target, scratch, ax) -
                         mm.loss_and_gradient(x, 23, cond, target, scratch, ax)) /
                        (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
      worst = std::max(worst, std::abs(fd - grad[i]) / denom);
    }
    EXPECT_LE(worst, 1e-4) << "aux=" << with_aux;
  }
}

namespace {

std::vector<im::TrainingSample> memorization_set(const im::DenoiserShape& s, int count, im::Rng& rng) {
  std::vector<im::TrainingSample> data;
  for (int i = 0; i < count; ++i) {
    im::ConditionBundle c(s.cond_dim);
    Eigen::VectorXd key = im::standard_normal_vector(rng, s.cond_dim);
    c.add_token(key);
    im::Signal target(s.signal_size());
    for (Eigen::Index k = 0; k < target.size(); ++k) target[k] = std::tanh(key[k % s.cond_dim] + 0.3 * static_cast<double>(k % 5));
    data.push_back({target, c});
  }
  return data;
}

double tail_mean(const std::vector<double>& curve, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) s += curve[i];
  return s / static_cast<double>(n);
}

}  // namespace

TEST(Training, SingleSampleIsMemorised) {
  im::DenoiserShape shape = small_shape();
  shape.side_dim = 0;
  im::Rng rng(15);
  im::TinyDenoiser model(shape, 100);
  model.initialize(rng);
  const auto data = memorization_set(shape, 1, rng);
  im::OptimizerConfig cfg;
  cfg.epochs = 4000;
  cfg.learning_rate = 1e-2;
  cfg.final_learning_rate = 1e-4;
  const auto result = im::train_denoiser(model, data, im::NoiseSchedule(), cfg);
  EXPECT_LT(tail_mean(result.loss_curve, 50), 1e-3);
  EXPECT_LT(tail_mean(result.loss_curve, 50), 0.01 * result.loss_curve.front());
}

TEST(Training, LossDropsNinetyPercentAndBeatsShuffledLabels) {
  im::DenoiserShape shape = small_shape();
  shape.side_dim = 0;
  shape.hidden = 24;
  shape.mlp_hidden = 24;
  im::Rng rng(16);
  const auto data = memorization_set(shape, 24, rng);
  auto shuffled = data;
  for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].target = data[(i + 7) % data.size()].target;
  // shuffled control: pair every condition with the target of another
  // sample and with a second, conflicting target
  std::vector<im::TrainingSample> control;
  for (std::size_t i = 0; i < data.size(); ++i) {
    control.push_back({data[i].target, data[i].cond});
    control.push_back({shuffled[i].target, data[i].cond});
  }
  std::vector<im::TrainingSample> doubled;
  for (const auto& s : data) {
    doubled.push_back(s);
    doubled.push_back(s);
  }
  im::OptimizerConfig cfg;
  cfg.epochs = 250;
  cfg.learning_rate = 5e-3;
  cfg.seed = 3;
  im::Rng init(17);
  im::TinyDenoiser a(shape, 100);
  a.initialize(init);
  im::TinyDenoiser b = a;
  const auto truth = im::train_denoiser(a, doubled, im::NoiseSchedule(), cfg);
  const auto ctrl = im::train_denoiser(b, control, im::NoiseSchedule(), cfg);
  EXPECT_LE(tail_mean(truth.loss_curve, 20), 0.1 * truth.loss_curve.front());
  EXPECT_GT(tail_mean(ctrl.loss_curve, 20), tail_mean(truth.loss_curve, 20));
  EXPECT_GT(tail_mean(ctrl.loss_curve, 100), tail_mean(truth.loss_curve, 100));
}

TEST(Training, RejectsEmptyDataAndReportsDivergence) {
  im::TinyDenoiser model(small_shape(), 100);
  EXPECT_THROW(im::train_denoiser(model, {}, im::NoiseSchedule(), {}), im::ValidationError);
  im::DenoiserShape shape = small_shape();
  shape.side_dim = 0;
  im::TinyDenoiser m2(shape, 100);
  im::Rng rng(18);
  m2.initialize(rng);
  auto data = memorization_set(shape, 2, rng);
  data[0].target[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(im::train_denoiser(m2, data, im::NoiseSchedule(), {}), im::DivergenceError);
}

TEST(Checkpoint, RoundTripIsExact) {
  im::Rng rng(19);
  im::TinyDenoiser model(small_shape(), 50);
  model.initialize(rng);
  const auto sched = im::NoiseSchedule::linear(50, 1e-3, 0.05);
  const auto path = (std::filesystem::temp_directory_path() / "im_ckpt_test.bin").string();
  im::save_checkpoint(path, model, sched);
  const auto loaded = im::load_checkpoint(path);
  EXPECT_EQ(loaded.model.shape(), model.shape());
  EXPECT_EQ(loaded.model.parameters(), model.parameters());
  EXPECT_EQ(loaded.schedule.betas(), sched.betas());
  const auto cond = random_condition(model.shape(), rng);
  const im::Signal x = im::standard_normal_vector(rng, model.shape().signal_size());
  EXPECT_EQ(loaded.model.predict(x, 9, cond), model.predict(x, 9, cond));
  std::remove(path.c_str());
  EXPECT_THROW(im::load_checkpoint(path), im::IoError);
}

TEST(JerkSmoother, QuadraticsAreFixedAndCubicJerkShrinks) {
  const im::NoiseSchedule s;
  const int frames = 20, channels = 3;
  const im::JerkSmoothingDenoiser den(frames, channels, 1.0 / 64.0, s);
  im::Signal quad(frames * channels), noisy(frames * channels);
  im::Rng rng(4);
  const im::Signal eps = im::standard_normal_vector(rng, frames * channels);
  for (int f = 0; f < frames; ++f) {
    for (int c = 0; c < channels; ++c) quad[f * channels + c] = 0.3 * c + 0.1 * f - 0.02 * f * f;
  }
  const im::Signal same = den.predict(quad, 0, {});
  EXPECT_LT((same - quad).cwiseAbs().maxCoeff(), 1e-12);
  // at step t the output is rescaled by 1/sqrt(alpha_bar)
  const im::Signal scaled = den.predict(quad, 50, {});
  EXPECT_LT((scaled * std::sqrt(s.alpha_bar(50)) - quad).cwiseAbs().maxCoeff(), 1e-12);
  noisy = quad + 0.05 * eps;
  auto jerk = [&](const im::Signal& x) {
    double sum = 0.0;
    for (int f = 3; f < frames; ++f) {
      for (int c = 0; c < channels; ++c) {
        const double d = x[f * channels + c] - 3 * x[(f - 1) * channels + c] + 3 * x[(f - 2) * channels + c] - x[(f - 3) * channels + c];
        sum += d * d;
      }
    }
    return sum;
  };
  EXPECT_LT(jerk(den.predict(noisy, 0, {})), jerk(noisy));
  EXPECT_THROW(im::JerkSmoothingDenoiser(frames, channels, 0.05, s), im::ValidationError);
  EXPECT_THROW(den.predict(im::Signal::Zero(5), 0, {}), im::ValidationError);
}
