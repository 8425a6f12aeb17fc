#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "emolat/data/preprocess.hpp"
#include "emolat/models/checkpoint.hpp"
#include "emolat/models/losses.hpp"
#include "emolat/models/network.hpp"
#include "emolat/models/schedule.hpp"
#include "emolat/models/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

namespace emolat {

void PrintTo(Variant v, std::ostream* os) { *os << variant_name(v); }

namespace {

using testing::cluster_oracle;
using testing::random_matrix;

EncoderDecoderConfig small_config(Variant v) {
  EncoderDecoderConfig c;
  c.input_dim = 6;
  c.hidden = {5, 4};
  c.variant = v;
  return c;
}

EncoderDecoderConfig vae_config(Variant v) {
  EncoderDecoderConfig c;
  c.variant = v;
  return c;
}

ModelParams random_params(const EncoderDecoderConfig& cfg, Rng& rng) {
  ModelParams p = init_params(cfg, rng);
  for (Matrix* m : p.tensors())
    for (double& v : m->data()) v += 0.1 * rng.gaussian();
  return p;
}

std::vector<Emotion> random_labels(Rng& rng, std::size_t n) {
  std::vector<Emotion> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(kAllEmotions[i < 2 ? i : rng.below(4)]);
  return out;
}

TEST(Schedule, SpotValues) {
  EXPECT_EQ(beta_schedule(1), 0.0);
  EXPECT_NEAR(beta_schedule(13), 0.24, 1e-15);
  EXPECT_EQ(beta_schedule(14), 0.25);
  EXPECT_EQ(beta_schedule(20), 0.25);
  EXPECT_EQ(beta_schedule(26), 0.0);
  EXPECT_EQ(beta_schedule(50), 0.25);
}

TEST(Schedule, MatchesRationalEvaluation) {
  // T/M = 25, so tau = ((e-1) mod 25) / 25 and beta = tau / 2 while tau <= 1/2.
  for (std::size_t e = 1; e <= 50; ++e) {
    const long num = static_cast<long>((e - 1) % 25);
    const double expected = 2 * num <= 25 ? static_cast<double>(num) / 50.0 : 0.25;
    EXPECT_NEAR(beta_schedule(e), expected, 1e-12) << "epoch " << e;
  }
}

TEST(Schedule, ShapeWithinCycle) {
  const auto beta = AnnealingSchedule{}.values();
  for (std::size_t e = 1; e < beta.size(); ++e) {
    EXPECT_GE(beta[e], 0.0);
    EXPECT_LE(beta[e], 0.25);
    if (e % 25 != 0) {
      EXPECT_GE(beta[e], beta[e - 1]);
    }
  }
}

TEST(Schedule, OutOfRangeEpoch) {
  EXPECT_THROW(beta_schedule(0), ContractError);
  EXPECT_THROW(beta_schedule(51), ContractError);
}

TEST(Schedule, VariantBetas) {
  const AnnealingOptions a;
  EXPECT_EQ(beta_for(Variant::kDae, 20, 50, a), 0.0);
  EXPECT_EQ(beta_for(Variant::kVae, 1, 50, a), 1.0);
  EXPECT_EQ(beta_for(Variant::kVaeSs, 13, 50, a), beta_schedule(13));
}

TEST(Encode, ZeroNetworkGivesZeroLatent) {
  Rng rng(1);
  ModelParams p = init_params(EncoderDecoderConfig{}, rng);
  for (Matrix* m : p.tensors()) m->fill(0.0);
  const Matrix z = embed(p, random_matrix(rng, 7, kFeatureDim));
  EXPECT_EQ(z, Matrix(7, 2, 0.0));
}

TEST(Encode, HandComputedToy) {
  EncoderDecoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden = {2};
  Rng rng(2);
  ModelParams p = init_params(cfg, rng);
  p.encoder[0] = {Matrix{{1, 0}, {0, 1}}, Matrix{{0.5, -1}}};
  p.mean_head = {Matrix{{2, 0}, {0, 3}}, Matrix{{0, 1}}};
  const Matrix z = embed(p, Matrix{{1, 2}, {-1, 0.5}});
  // relu([1.5, 1]) -> [3, 4]; relu([-0.5, -0.5]) -> [0, 1]
  EXPECT_NEAR(z(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(z(0, 1), 4.0, 1e-12);
  EXPECT_NEAR(z(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(z(1, 1), 1.0, 1e-12);
}

TEST(Encode, OutputShapes) {
  Rng rng(3);
  const ModelParams p = init_params(vae_config(Variant::kVae), rng);
  const auto out = encode(p, random_matrix(rng, 11, kFeatureDim));
  EXPECT_EQ(out.mean.rows(), 11u);
  EXPECT_EQ(out.mean.cols(), 2u);
  ASSERT_TRUE(out.logvar.has_value());
  EXPECT_EQ(out.logvar->rows(), 11u);
  EXPECT_EQ(decode(p, out.mean).cols(), kFeatureDim);
  EXPECT_THROW(encode(p, Matrix(3, 87)), ShapeError);
}

TEST(Encode, NonFiniteActivationNamesLayer) {
  Rng rng(4);
  ModelParams p = init_params(EncoderDecoderConfig{}, rng);
  p.encoder[1].bias(0, 0) = std::numeric_limits<double>::infinity();
  try {
    embed(p, Matrix(1, kFeatureDim, 0.0));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder"), std::string::npos) << e.what();
  }
}

TEST(Reparameterize, DegenerateVarianceReturnsMean) {
  Rng rng(5);
  const Matrix mu = random_matrix(rng, 4, 2);
  const Matrix z = reparameterize(mu, Matrix(4, 2, -50.0), rng);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z.data()[i], mu.data()[i], 1e-10);
}

TEST(Reparameterize, StandardNormalStatistics) {
  Rng rng(6);
  const Matrix z = reparameterize(Matrix(50000, 2, 0.0), Matrix(50000, 2, 0.0), rng);
  double mean = 0.0, var = 0.0;
  for (double v : z.data()) mean += v;
  mean /= static_cast<double>(z.size());
  for (double v : z.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(z.size() - 1);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(Reparameterize, MeanGradientIsOne) {
  const std::size_t n = 1000;
  const Matrix logvar(n, 2, std::log(0.7));
  auto mean_z = [&](double shift) {
    Rng rng(7);  // common random numbers
    const Matrix z = reparameterize(Matrix(n, 2, 0.3 + shift), logvar, rng);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += z(i, 0);
    return s / static_cast<double>(n);
  };
  EXPECT_NEAR((mean_z(1e-5) - mean_z(-1e-5)) / 2e-5, 1.0, 1e-8);

  Tape tape;
  Rng rng(7);
  Var mu = tape.parameter(Matrix(n, 2, 0.3));
  Var lv = tape.parameter(logvar);
  Var z = ad::add(mu, ad::mul(ad::exp(ad::scale(lv, 0.5)), tape.constant(gaussian_sample(rng, n, 2))));
  const auto grads = tape.backward(ad::scale(ad::sum(z), 1.0 / static_cast<double>(n)));
  for (double g : grads[0].data()) EXPECT_DOUBLE_EQ(g, 1.0 / static_cast<double>(n));
}

TEST(DaeLoss, IdentityAutoencoderWithoutNoiseIsZero) {
  EncoderDecoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden = {2};
  Rng rng(8);
  ModelParams p = init_params(cfg, rng);
  const Matrix id{{1, 0}, {0, 1}};
  p.encoder[0] = {id, Matrix(1, 2)};
  p.mean_head = {id, Matrix(1, 2)};
  p.decoder[0] = {id, Matrix(1, 2)};
  p.decoder[1] = {id, Matrix(1, 2)};
  const Matrix x{{0.5, 2.0}, {1.0, 0.1}, {3.0, 4.0}};
  EXPECT_EQ(dae_loss(p, x, rng, 0.0).total, 0.0);
}

TEST(DaeLoss, ZeroDecoderGivesMeanSquaredNorm) {
  Rng rng(9);
  const Matrix raw = random_matrix(rng, 300, kFeatureDim, 2.0);
  const Matrix x = fit_standardizer(raw).apply(raw);
  ModelParams p = init_params(EncoderDecoderConfig{}, rng);
  for (auto& l : p.decoder) {
    l.weight.fill(0.0);
    l.bias.fill(0.0);
  }
  EXPECT_NEAR(dae_loss(p, x, rng).reconstruction, 88.0, 1e-9);
}

TEST(DaeLoss, MatchesStraightLineRecomputation) {
  Rng rng(10);
  const ModelParams p = init_params(EncoderDecoderConfig{}, rng);
  const Matrix x = random_matrix(rng, 5, kFeatureDim);
  Rng a(77), b(77);
  const double loss = dae_loss(p, x, a, 1.0).reconstruction;
  Matrix noisy = x;
  const Matrix n = gaussian_sample(b, 5, kFeatureDim);
  for (std::size_t i = 0; i < x.size(); ++i) noisy.data()[i] += n.data()[i];
  const Matrix xhat = decode(p, embed(p, noisy));
  double oracle = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) oracle += std::pow(x(i, j) - xhat(i, j), 2);
  oracle /= static_cast<double>(x.rows());
  EXPECT_NEAR(loss, oracle, 1e-12);
}

TEST(Kl, PriorIsZero) { EXPECT_EQ(kl_gaussian(Matrix(3, 2, 0.0), Matrix(3, 2, 0.0)), 0.0); }

TEST(Kl, UnitShiftIsHalf) { EXPECT_DOUBLE_EQ(kl_gaussian(Matrix{{1.0, 0.0}}, Matrix{{0.0, 0.0}}), 0.5); }

TEST(Kl, MatchesMonteCarlo) {
  Rng rng(11);
  const double mu[2] = {0.8, -1.3};
  const double sigma[2] = {0.6, 1.7};
  const Matrix m{{mu[0], mu[1]}};
  const Matrix lv{{2 * std::log(sigma[0]), 2 * std::log(sigma[1])}};
  const double mc = testing::kl_monte_carlo(mu, sigma, 200000, rng);
  EXPECT_NEAR(kl_gaussian(m, lv), mc, 0.01 * mc);
}

TEST(Kl, NonNegative) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    EXPECT_GE(kl_gaussian(random_matrix(rng, 4, 2, 3.0), random_matrix(rng, 4, 2, 4.0)), -1e-12);
  }
}

TEST(ClusterLoss, CollapsedClustersAreZero) {
  const Matrix z{{1, 1}, {1, 1}, {4, -2}, {1, 1}, {4, -2}};
  const std::vector<Emotion> l{Emotion::kSad, Emotion::kSad, Emotion::kHappy, Emotion::kSad, Emotion::kHappy};
  EXPECT_EQ(cluster_loss(z, l), 0.0);
}

TEST(ClusterLoss, HandGeometry) {
  const Matrix z{{1, 0}, {-1, 0}, {0, 2}, {0, 2}};
  const std::vector<Emotion> l{Emotion::kSad, Emotion::kSad, Emotion::kAngry, Emotion::kAngry};
  EXPECT_DOUBLE_EQ(cluster_loss(z, l), 1.0);
}

TEST(ClusterLoss, MatchesDoubleLoopAndTape) {
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 4 + rng.below(20);
    const Matrix z = random_matrix(rng, n, 2, 2.0);
    const auto labels = random_labels(rng, n);
    const double oracle = cluster_oracle(z, labels);
    EXPECT_NEAR(cluster_loss(z, labels), oracle, 1e-12);
    Tape tape;
    const auto graph = detail::cluster_graph(tape, tape.constant(z), labels);
    ASSERT_TRUE(graph.has_value());
    EXPECT_NEAR(graph->value()(0, 0), oracle, 1e-12);
  }
}

TEST(ClusterLoss, ScaleInvariant) {
  Rng rng(14);
  const Matrix z = random_matrix(rng, 16, 2);
  const auto labels = random_labels(rng, 16);
  Matrix scaled = z;
  for (double& v : scaled.data()) v *= 3.7;
  EXPECT_NEAR(cluster_loss(scaled, labels), cluster_loss(z, labels), 1e-12);
}

TEST(ClusterLoss, SingleClassIsZeroAndFlagged) {
  EXPECT_EQ(cluster_loss(Matrix{{1, 2}, {3, 4}}, std::vector<Emotion>{Emotion::kSad, Emotion::kSad}), 0.0);
  Rng rng(15);
  const EncoderDecoderConfig cfg = small_config(Variant::kVaeSs);
  const ModelParams p = init_params(cfg, rng);
  const std::vector<Emotion> labels(4, Emotion::kHappy);
  const auto b = vae_ss_loss(p, random_matrix(rng, 4, 6), labels, rng, 0.2);
  EXPECT_TRUE(b.cluster_skipped);
  EXPECT_EQ(b.cluster, 0.0);
}

TEST(VaeSsLoss, TermNulling) {
  Rng rng(16);
  const EncoderDecoderConfig cfg = small_config(Variant::kVaeSs);
  const ModelParams p = random_params(cfg, rng);
  const Matrix x = random_matrix(rng, 8, 6);
  const auto labels = random_labels(rng, 8);

  Rng a(3), b(3), c(3);
  EXPECT_EQ(vae_ss_loss(p, x, labels, a, 0.2, 0.0).total, vae_loss(p, x, b, 0.2).total);
  const auto plain = vae_ss_loss(p, x, labels, c, 0.0, 0.0);
  EXPECT_EQ(plain.total, plain.reconstruction);
}

TEST(VaeSsLoss, TotalRecomposes) {
  Rng rng(17);
  const EncoderDecoderConfig cfg = small_config(Variant::kVaeSs);
  for (int t = 0; t < 10; ++t) {
    const ModelParams p = random_params(cfg, rng);
    const auto labels = random_labels(rng, 8);
    const auto b = vae_ss_loss(p, random_matrix(rng, 8, 6), labels, rng, 0.17, 0.5);
    EXPECT_NEAR(b.total, b.reconstruction + b.beta * b.kl + b.gamma * b.cluster, 1e-12);
    double kl = 0.0;
    for (double v : b.kl_per_dim) kl += v;
    EXPECT_NEAR(kl, b.kl, 1e-12);
  }
}

class GradientCheck : public ::testing::TestWithParam<Variant> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  const Variant variant = GetParam();
  Rng rng(100 + static_cast<int>(variant));
  for (int instance = 0; instance < 5; ++instance) {
    EncoderDecoderConfig cfg = small_config(variant);
    if (instance % 2 == 1) cfg.activation = Activation::kTanh;
    const ModelParams p = random_params(cfg, rng);
    const std::size_t n = 3 + rng.below(6);
    const Matrix x = random_matrix(rng, n, cfg.input_dim);
    const Matrix noise = draw_noise(cfg, n, rng);
    const auto labels = random_labels(rng, n);
    const double beta = variant == Variant::kVae ? 1.0 : beta_schedule(1 + rng.below(50));
    const auto result = testing::check_gradients(p, [&](Tape& t, const ParamVars& pv) {
      return model_loss_graph(t, pv, cfg, x, noise, beta, labels).total;
    });
    EXPECT_LT(result.max_rel_error, 1e-4) << "instance " << instance;
    EXPECT_EQ(result.checked, [&] {
      std::size_t count = 0;
      for (const Matrix* m : p.tensors()) count += m->size();
      return count;
    }());
  }
}

INSTANTIATE_TEST_SUITE_P(AllVariants, GradientCheck,
                         ::testing::Values(Variant::kDae, Variant::kVae, Variant::kVaeAnneal, Variant::kVaeSs),
                         [](const auto& info) { return std::string(variant_name(info.param)); });

TEST(Train, DaeLearnsLowRankData) {
  Rng rng(18);
  const Matrix basis = random_matrix(rng, 2, kFeatureDim);
  const Matrix codes = random_matrix(rng, 256, 2);
  const Matrix raw = matmul(codes, basis);
  const Matrix x = fit_standardizer(raw).apply(raw);
  TrainOptions opt;
  opt.epochs = 150;
  opt.batch_size = 32;
  const auto result = train(EncoderDecoderConfig{}, opt, x, {}, 5);
  ASSERT_EQ(result.trace.size(), 150u);
  EXPECT_LT(result.trace.back().reconstruction, 0.1 * result.trace.front().reconstruction)
      << "first " << result.trace.front().reconstruction << " last " << result.trace.back().reconstruction;
}

TEST(Train, VaeTraceRecordsUnitBeta) {
  Rng rng(19);
  const Matrix x = random_matrix(rng, 100, kFeatureDim);
  TrainOptions opt;
  opt.epochs = 4;
  const auto result = train(vae_config(Variant::kVae), opt, x, {}, 1);
  for (const auto& r : result.trace) {
    EXPECT_EQ(r.beta, 1.0);
    EXPECT_TRUE(std::isfinite(r.kl));
    ASSERT_EQ(r.kl_per_dim.size(), 2u);
    EXPECT_EQ(r.batches, 2u);
  }
}

TEST(Train, SameSeedSameParameters) {
  Rng rng(20);
  const Matrix x = random_matrix(rng, 90, kFeatureDim);
  const auto labels = random_labels(rng, 90);
  TrainOptions opt;
  opt.epochs = 3;
  const EncoderDecoderConfig cfg = vae_config(Variant::kVaeSs);
  const auto a = train(cfg, opt, x, labels, 42);
  const auto b = train(cfg, opt, x, labels, 42);
  const auto c = train(cfg, opt, x, labels, 43);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_FALSE(a.params == c.params);
}

TEST(Train, SemiSupervisedNeedsLabels) {
  Rng rng(21);
  EXPECT_THROW(train(vae_config(Variant::kVaeSs), {}, random_matrix(rng, 10, kFeatureDim), {}, 1),
               ContractError);
}

TEST(Checkpoint, BitExactRoundTrip) {
  Rng rng(22);
  EncoderDecoderConfig cfg = vae_config(Variant::kVaeAnneal);
  cfg.annealing.beta_max = 0.3;
  Checkpoint ck{random_params(cfg, rng), 0xfeedbeefULL, fit_standardizer(random_matrix(rng, 10, kFeatureDim))};
  ck.params.encoder[0].weight(0, 0) = std::numbers::pi * 1e-300;
  std::stringstream buf;
  write_checkpoint(ck, buf);
  const Checkpoint back = read_checkpoint(buf);
  EXPECT_TRUE(back == ck);
  EXPECT_TRUE(back.params.config == cfg);
}

TEST(Checkpoint, RejectsTruncatedFile) {
  Rng rng(23);
  Checkpoint ck{init_params(EncoderDecoderConfig{}, rng), 1, std::nullopt};
  std::stringstream buf;
  write_checkpoint(ck, buf);
  std::string text = buf.str();
  std::istringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_checkpoint(cut), FormatError);
}

}  // namespace
}  // namespace emolat
