#include <gtest/gtest.h>

#include "hgr/dataset.hpp"
#include "hgr/gradcheck.hpp"
#include "hgr/network.hpp"
#include "hgr/training.hpp"
#include "test_util.hpp"

using namespace hgr;
using namespace hgr::test;

namespace {

SkeletonSequence random_sequence(std::mt19937_64& rng, int frames, int joints = kDhgJoints) {
  SkeletonSequence s;
  s.joints_per_frame = joints;
  for (int t = 0; t < frames; ++t) s.frames.push_back(random_matrix(rng, joints, 3));
  return s;
}

NetworkParams random_params(const NetworkConfig& c, std::uint64_t seed) {
  NetworkParams p = NetworkParams::init(c, seed);
  std::mt19937_64 rng(seed + 1000);
  p.fc.F = random_matrix(rng, c.n_classes, c.spd_out_dim * c.spd_out_dim, 0.5);
  p.fc.c = random_matrix(rng, c.n_classes, 1, 0.5);
  return p;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST(NetworkConfig, DefaultDimensions) {
  const NetworkConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.spd_in_dim(), 56);
  EXPECT_EQ(c.n_branches(), 60);
  EXPECT_EQ(c.feature_length(), 20100);
  NetworkConfig st = c;
  st.variant = Variant::StOnly;
  EXPECT_EQ(st.n_branches(), 30);
  const NetworkParams p = NetworkParams::init(st, 1);
  EXPECT_EQ(p.w_hat.rows(), 200);
  EXPECT_EQ(p.w_hat.cols(), 1680);
  EXPECT_EQ(NetworkParams::init(c, 1).w_hat.cols(), 3360);
}

TEST(NetworkConfig, ParseAndRoundTrip) {
  const NetworkConfig c = NetworkConfig::parse(
      "# tiny\nconv_dim = 3\nspd_out_dim=5\nn_frames=24\r\nt0=2\nn_chunks=3\nepsilon=1e-3\n"
      "n_classes=4\nvariant=ts_only\ngrid_mode=physical\nridge=1e-5\n");
  EXPECT_EQ(c.conv_dim, 3);
  EXPECT_EQ(c.variant, Variant::TsOnly);
  EXPECT_EQ(c.grid_mode, GridMode::Physical);
  EXPECT_EQ(c.epsilon, 1e-3);
  EXPECT_EQ(NetworkConfig::parse(c.to_text()), c);
  EXPECT_EQ(NetworkConfig::parse(tiny_config().to_text()), tiny_config());
}

TEST(NetworkConfig, Errors) {
  EXPECT_EQ(kind_of([] { NetworkConfig::parse("colour=blue\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { NetworkConfig::parse("t0=one\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { NetworkConfig::parse("t0\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { NetworkConfig::parse("t0=0\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { NetworkConfig::parse("n_chunks=1\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { NetworkConfig::parse("variant=both\n"); }), ErrorKind::ConfigError);
  // d_out^s must not exceed N * d_in^s = 60 * 56.
  EXPECT_NO_THROW(NetworkConfig::parse("spd_out_dim=3360\n"));
  EXPECT_EQ(kind_of([] { NetworkConfig::parse("spd_out_dim=3361\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { NetworkConfig::parse("variant=st_only\nspd_out_dim=1681\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { NetworkConfig::load("/nonexistent/hgr.cfg"); }), ErrorKind::ConfigError);
}

TEST(Network, TinyForwardShapes) {
  const NetworkConfig c = tiny_config();
  std::mt19937_64 rng(1);
  const SkeletonSequence seq = random_sequence(rng, c.n_frames);
  ForwardContext ctx;
  const ForwardResult r = network_forward(seq, NetworkParams::init(c, 1), c, &ctx);
  EXPECT_EQ(ctx.agg.inputs.size(), 60u);
  EXPECT_EQ(ctx.agg.inputs[0].dim(), c.spd_in_dim());
  EXPECT_EQ(r.y_final.dim(), 4);
  EXPECT_EQ(r.probs.size(), 2);
  // Zero FC: uniform probabilities.
  EXPECT_LT((r.probs - Vector::Constant(2, 0.5)).norm(), 1e-15);
  EXPECT_EQ(kind_of([&] { network_forward(random_sequence(rng, 11), NetworkParams::init(c, 1), c); }),
            ErrorKind::InvalidInput);
}

TEST(Network, Deterministic) {
  const NetworkConfig c = tiny_config();
  std::mt19937_64 rng(2);
  const SkeletonSequence seq = random_sequence(rng, c.n_frames);
  const NetworkParams p = random_params(c, 2);
  const ForwardResult a = network_forward(seq, p, c), b = network_forward(seq, p, c);
  EXPECT_EQ(a.probs, b.probs);
  EXPECT_EQ(a.y_final.matrix(), b.y_final.matrix());
  EXPECT_EQ(extract_features(seq, p, c), extract_features(seq, p, c));
  EXPECT_EQ(extract_features(seq, p, c).size(), 10);
}

TEST(Network, OneHotProbabilitiesGiveNoGradient) {
  const NetworkConfig c = tiny_config();
  std::mt19937_64 rng(3);
  NetworkParams p = NetworkParams::init(c, 3);
  p.fc.c = Eigen::Vector2d(1000, -1000);
  ForwardContext ctx;
  const ForwardResult r = network_forward(random_sequence(rng, c.n_frames), p, c, &ctx);
  ASSERT_EQ(r.probs(0), 1.0);
  EXPECT_LE(network_backward(ctx, 0).max_abs(), 1e-10);
}

TEST(Network, EndToEndFiniteDifferences) {
  const NetworkConfig c = tiny_config();
  for (std::uint64_t seed : {1, 2}) {
    std::mt19937_64 rng(seed);
    const SkeletonSequence seq = random_sequence(rng, c.n_frames);
    NetworkParams p = random_params(c, seed);
    const int label = static_cast<int>(seed % 2);
    ForwardContext ctx;
    network_forward(seq, p, c, &ctx);
    const GradientSet g = network_backward(ctx, label);
    auto loss = [&] { return cross_entropy(network_forward(seq, p, c).probs, label); };
    for (int l = 0; l < kFilters; ++l) EXPECT_LT(rel_err(g.conv.W[l], fd_gradient(loss, p.conv.W[l])), 1e-4);
    EXPECT_LT(rel_err(g.w_hat, fd_gradient(loss, p.w_hat)), 1e-4);
    EXPECT_LT(rel_err(g.fc_F, fd_gradient(loss, p.fc.F)), 1e-4);
    EXPECT_LT(rel_err(g.fc_c, fd_gradient(loss, p.fc.c)), 1e-4);
  }
}

TEST(Network, BuiltInGradcheckFiveSeeds) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) EXPECT_LE(network_gradcheck(seed), 1e-4) << seed;
}

TEST(Network, WeightGradientBlocks) {
  const NetworkConfig c = tiny_config();
  std::mt19937_64 rng(4);
  const NetworkParams p = random_params(c, 4);
  ForwardContext ctx;
  network_forward(random_sequence(rng, c.n_frames), p, c, &ctx);
  const GradientSet g = network_backward(ctx, 1);
  const Matrix G = head_backward(ctx.head, 1).d_y.matrix();
  const int d = c.spd_in_dim();
  ASSERT_EQ(g.w_hat.cols(), 60 * d);
  for (int i = 0; i < 60; ++i) {
    const Matrix expected = 2 * G * p.w_hat.middleCols(i * d, d) * ctx.agg.inputs[i].matrix();
    EXPECT_LT((g.w_hat.middleCols(i * d, d) - expected).norm(), 1e-12 * (1 + expected.norm()));
  }
}

TEST(Network, VariantConsistency) {
  const NetworkConfig full = tiny_config();
  NetworkConfig st = full;
  st.variant = Variant::StOnly;
  std::mt19937_64 rng(5);
  const SkeletonSequence seq = random_sequence(rng, full.n_frames);
  NetworkParams p = NetworkParams::init(full, 5);
  ForwardContext ctx;
  network_forward(seq, p, full, &ctx);
  const int width = 30 * full.spd_in_dim();
  Matrix zeroed = p.w_hat;
  zeroed.rightCols(width).setZero();
  const Matrix restricted = spd_agg_blockdiag(ctx.agg.inputs, zeroed).matrix();

  NetworkParams ps = p;
  ps.w_hat = p.w_hat.leftCols(width);
  const ForwardResult r = network_forward(seq, ps, st);
  EXPECT_LT((r.y_final.matrix() - restricted).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Network, TwentyJointInputInGridOrder) {
  std::mt19937_64 rng(6);
  const SkeletonSequence s22 = random_sequence(rng, 3);
  SkeletonSequence s20;
  s20.joints_per_frame = 20;
  for (const auto& f : s22.frames) s20.frames.push_back(f.bottomRows(20));
  const FeatureSequence a = grid_coordinates(s22), b = grid_coordinates(s20);
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(a[t], b[t]);
    EXPECT_EQ(a[t].row(0), s22.frames[t].row(2));
  }
}

TEST(Network, CheckpointRoundTrip) {
  TempDir dir("ckpt");
  NetworkConfig c = tiny_config();
  c.grid_mode = GridMode::Physical;
  c.epsilon = 3e-4;
  const NetworkParams p = random_params(c, 7);
  save_checkpoint(dir.path() / "a.ckpt", p, c);
  const auto [c2, p2] = load_checkpoint(dir.path() / "a.ckpt");
  EXPECT_EQ(c2, c);
  for (int l = 0; l < kFilters; ++l) EXPECT_EQ(p2.conv.W[l], p.conv.W[l]);
  EXPECT_EQ(p2.w_hat, p.w_hat);
  EXPECT_EQ(p2.fc.F, p.fc.F);
  EXPECT_EQ(p2.fc.c, p.fc.c);

  NetworkConfig other = c;
  other.spd_out_dim = 5;
  EXPECT_EQ(kind_of([&] { p2.check(other); }), ErrorKind::ConfigError);
}

TEST(Training, LossDecreasesOverFirstFullBatchSteps) {
  SyntheticOptions o;
  o.per_class = 5;
  o.seed = 3;
  const auto data = synthesize_sequences(o);
  int monotone = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainOptions t;
    t.epochs = 6;
    t.batch_size = 10;
    t.seed = seed;
    const TrainResult r = train_network(data, tiny_config(), t);
    bool ok = true;
    for (int k = 1; k < 6; ++k) ok = ok && r.epochs[k].mean_loss < r.epochs[k - 1].mean_loss;
    monotone += ok ? 1 : 0;
  }
  EXPECT_GE(monotone, 4);
}

TEST(Training, DeterministicAcrossRunsAndWorkers) {
  SyntheticOptions o;
  o.per_class = 4;
  const auto data = synthesize_sequences(o);
  TrainOptions t;
  t.epochs = 2;
  t.batch_size = 3;
  const TrainResult a = train_network(data, tiny_config(), t);
  t.workers = 3;
  const TrainResult b = train_network(data, tiny_config(), t);
  ASSERT_EQ(a.epochs.size(), b.epochs.size());
  for (std::size_t k = 0; k < a.epochs.size(); ++k) EXPECT_EQ(a.epochs[k].mean_loss, b.epochs[k].mean_loss);
  EXPECT_EQ(a.params.w_hat, b.params.w_hat);
  EXPECT_LE((a.params.w_hat * a.params.w_hat.transpose() - Matrix::Identity(4, 4)).norm(), 1e-8);
}

TEST(Training, WritesCheckpointsAndManifest) {
  TempDir dir("train_out");
  SyntheticOptions o;
  o.per_class = 2;
  TrainOptions t;
  t.epochs = 2;
  t.out_dir = dir.path();
  t.dataset_id = "synthetic";
  train_network(synthesize_sequences(o), tiny_config(), t);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "epoch_01.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "epoch_02.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "manifest.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "timings.txt"));
}

TEST(Training, RejectsLabelsOutsideConfig) {
  SyntheticOptions o;
  o.n_classes = 3;
  o.per_class = 1;
  TrainOptions t;
  t.epochs = 1;
  EXPECT_EQ(kind_of([&] { train_network(synthesize_sequences(o), tiny_config(), t); }), ErrorKind::ConfigError);
}
