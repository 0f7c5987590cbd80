#include "hgr/gradcheck.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>

#include "hgr/layers/branch.hpp"
#include "hgr/layers/conv.hpp"
#include "hgr/layers/gauss_agg.hpp"
#include "hgr/layers/head.hpp"
#include "hgr/layers/spd_agg.hpp"
#include "hgr/layers/spectral.hpp"
#include "hgr/network.hpp"

namespace hgr {

double relative_error(const Vector& analytic, const Vector& numeric) {
  require(analytic.size() == numeric.size(), ErrorKind::InvalidInput,
          "relative_error: size mismatch");
  const double scale = std::max(analytic.norm(), numeric.norm());
  if (scale == 0.0) return 0.0;
  return (analytic - numeric).norm() / scale;
}

Vector numeric_gradient(const std::function<double()>& f, double* x, Eigen::Index n, double h) {
  Vector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f();
    x[i] = saved - h;
    const double down = f();
    x[i] = saved;
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

Vector numeric_sym_gradient(const std::function<double()>& f, Matrix& x, double h) {
  const auto n = x.rows();
  Vector g(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double saved = x(i, j);
      auto set = [&](double v) {
        x(i, j) = v;
        x(j, i) = v;
      };
      set(saved + h);
      const double up = f();
      set(saved - h);
      const double down = f();
      set(saved);
      g(k++) = (up - down) / (2 * h);
    }
  }
  return g;
}

Vector sym_gradient_entries(const Matrix& g) {
  const auto n = g.rows();
  Vector out(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) out(k++) = i == j ? g(i, i) : g(i, j) + g(j, i);
  }
  return out;
}

bool GradcheckReport::passed() const {
  return std::all_of(layers.begin(), layers.end(), [](const LayerCheck& c) { return c.passed(); });
}

std::string GradcheckReport::to_text() const {
  std::ostringstream out;
  char buf[200];
  for (const auto& c : layers) {
    std::snprintf(buf, sizeof buf, "%-10s %s worst_rel_err=%.3e threshold=%.0e instances=%d\n",
                  c.layer.c_str(), c.passed() ? "PASS" : "FAIL", c.worst_rel_error, c.threshold,
                  c.instances);
    out << buf;
  }
  return out.str();
}

namespace {

using Rng = std::mt19937_64;

Matrix gaussian(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  }
  return m;
}

Matrix random_orthogonal(int n, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, rng));
  return qr.householderQ() * Matrix::Identity(n, n);
}

// Symmetric matrix with eigenvalues drawn from [lo, hi].
Matrix random_spd(int n, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  const Matrix q = random_orthogonal(n, rng);
  return sym_part(q * v.asDiagonal() * q.transpose());
}

double inner(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

constexpr double kStep = 1e-6;

double check_gauss_agg(Rng& rng) {
  std::uniform_int_distribution<int> dim(1, 6);
  const int d = dim(rng);
  const int n = d + 2 + dim(rng);
  Matrix x = gaussian(n, d, rng);
  const Matrix g = gaussian(d + 1, d + 1, rng);
  GaussAggContext ctx;
  gauss_agg_forward(x, 1e-6, &ctx);
  const Matrix analytic = gauss_agg_backward(ctx, g);
  auto f = [&]() { return inner(g, gauss_agg_forward(x, 1e-6).matrix()); };
  const Vector numeric = numeric_gradient(f, x.data(), x.size(), kStep);
  return relative_error(analytic.reshaped(), numeric);
}

double check_reeig(Rng& rng) {
  std::uniform_int_distribution<int> dim(2, 7);
  const int n = dim(rng);
  // Eigenvalues sit either well below or well above the threshold 0.1.
  std::uniform_real_distribution<double> u(0, 1);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng) < 0.35 ? 0.01 + 0.04 * u(rng) : 0.2 + 1.8 * u(rng);
  // Fully clamped input has an identically zero gradient; keep one eigenvalue active.
  v(0) = std::max(v(0), 0.2 + 1.8 * u(rng));
  const Matrix q = random_orthogonal(n, rng);
  Matrix x = sym_part(q * v.asDiagonal() * q.transpose());
  const Matrix g = gaussian(n, n, rng);
  const double eps = 0.1;
  ReEigContext ctx;
  reeig_forward(SymMatrix(x), eps, &ctx);
  const Vector analytic = sym_gradient_entries(reeig_backward(ctx, g).matrix());
  auto f = [&]() { return inner(g, reeig_forward(SymMatrix(x), eps).matrix()); };
  return relative_error(analytic, numeric_sym_gradient(f, x, kStep));
}

double check_logeig(Rng& rng) {
  std::uniform_int_distribution<int> dim(2, 7);
  const int n = dim(rng);
  Matrix x = random_spd(n, rng, 0.1, 3.0);
  const Matrix g = gaussian(n, n, rng);
  LogEigContext ctx;
  logeig_forward(assert_spd(SymMatrix(x)), &ctx);
  const Vector analytic = sym_gradient_entries(logeig_backward(ctx, g).matrix());
  auto f = [&]() { return inner(g, logeig_forward(assert_spd(SymMatrix(x))).matrix()); };
  return relative_error(analytic, numeric_sym_gradient(f, x, kStep));
}

double check_vecmat(Rng& rng) {
  std::uniform_int_distribution<int> dim(1, 7);
  const int n = dim(rng);
  Matrix x = sym_part(gaussian(n, n, rng));
  const Vector g = gaussian(sym_vec_length(n), 1, rng);
  const Vector analytic = sym_gradient_entries(vecmat_backward(n, g).matrix());
  auto f = [&]() { return g.dot(vecmat_forward(SymMatrix(x))); };
  return relative_error(analytic, numeric_sym_gradient(f, x, kStep));
}

double check_spd_agg(Rng& rng) {
  std::uniform_int_distribution<int> dim(2, 5);
  const int d_in = dim(rng);
  const int count = dim(rng);
  const int d_out = std::min(dim(rng), count * d_in);
  std::vector<Matrix> xs;
  for (int i = 0; i < count; ++i) xs.push_back(random_spd(d_in, rng, 0.2, 2.0));
  Matrix w = gaussian(d_out, count * d_in, rng, 0.5);
  const Matrix g = gaussian(d_out, d_out, rng);
  auto inputs = [&]() {
    std::vector<SPDMatrix> v;
    for (const auto& m : xs) v.push_back(SPDMatrix::trusted(SymMatrix(m)));
    return v;
  };
  SpdAggContext ctx;
  spd_agg_forward(inputs(), w, &ctx);
  const SpdAggGrads grads = spd_agg_backward(ctx, g);
  auto f = [&]() { return inner(g, spd_agg_forward(inputs(), w).matrix()); };
  double worst = relative_error(grads.d_w_hat.reshaped(), numeric_gradient(f, w.data(), w.size(), kStep));
  for (int i = 0; i < count; ++i) {
    const Vector analytic = sym_gradient_entries(grads.d_inputs[static_cast<std::size_t>(i)].matrix());
    worst = std::max(worst, relative_error(analytic, numeric_sym_gradient(f, xs[static_cast<std::size_t>(i)], kStep)));
  }
  return worst;
}

double check_conv(Rng& rng) {
  std::uniform_int_distribution<int> dim(1, 4);
  const int d = dim(rng);
  const int frames = dim(rng);
  const JointGrid grid(rng() % 2 == 0 ? GridMode::Full : GridMode::Physical);
  FeatureSequence coords;
  for (int t = 0; t < frames; ++t) coords.push_back(gaussian(kGridNodes, 3, rng));
  ConvWeights w = ConvWeights::zeros(d);
  for (auto& m : w.W) m = gaussian(d, 3, rng, 0.3);
  FeatureSequence g;
  for (int t = 0; t < frames; ++t) g.push_back(gaussian(kGridNodes, d, rng));
  auto f = [&]() {
    const FeatureSequence out = conv_forward(coords, w, grid);
    double s = 0;
    for (int t = 0; t < frames; ++t) s += inner(g[static_cast<std::size_t>(t)], out[static_cast<std::size_t>(t)]);
    return s;
  };
  ConvContext ctx;
  conv_forward(coords, w, grid, &ctx);
  const ConvGrads grads = conv_backward(ctx, g);
  double worst = 0;
  for (int l = 0; l < kFilters; ++l) {
    worst = std::max(worst, relative_error(grads.d_weights.W[l].reshaped(),
                                           numeric_gradient(f, w.W[l].data(), w.W[l].size(), kStep)));
  }
  for (int t = 0; t < frames; ++t) {
    Matrix& c = coords[static_cast<std::size_t>(t)];
    worst = std::max(worst, relative_error(grads.d_input[static_cast<std::size_t>(t)].reshaped(),
                                           numeric_gradient(f, c.data(), c.size(), kStep)));
  }
  return worst;
}

double check_head(Rng& rng) {
  std::uniform_int_distribution<int> dim(2, 5);
  const int d = dim(rng);
  const int classes = dim(rng);
  const int label = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
  Matrix y = random_spd(d, rng, 0.1, 3.0);
  FcWeights fc{gaussian(classes, d * d, rng, 0.5), gaussian(classes, 1, rng, 0.5)};
  auto f = [&]() {
    return cross_entropy(head_forward(assert_spd(SymMatrix(y)), fc).probs, label);
  };
  HeadContext ctx;
  head_forward(assert_spd(SymMatrix(y)), fc, &ctx);
  const HeadGrads grads = head_backward(ctx, label);
  double worst = relative_error(sym_gradient_entries(grads.d_y.matrix()), numeric_sym_gradient(f, y, kStep));
  worst = std::max(worst, relative_error(grads.d_F.reshaped(), numeric_gradient(f, fc.F.data(), fc.F.size(), kStep)));
  worst = std::max(worst, relative_error(grads.d_c, numeric_gradient(f, fc.c.data(), fc.c.size(), kStep)));
  return worst;
}

double check_branch(Rng& rng, BranchKind kind) {
  std::uniform_int_distribution<int> dim(1, 3);
  const int d = dim(rng);
  const int joints = 1 + dim(rng);
  const int frames = 6 + 2 * dim(rng);
  BranchFeatures features;
  for (int t = 0; t < frames; ++t) features.push_back(gaussian(joints, d, rng));
  const Matrix g = gaussian(sym_vec_length(d + 1) + 1, sym_vec_length(d + 1) + 1, rng);
  const SpdSettings settings{1e-4, 1e-6};
  const int t0 = dim(rng);
  const int chunks = 2 + static_cast<int>(rng() % 2);
  auto forward = [&](BranchContext* ctx) {
    return kind == BranchKind::SpatialTemporal ? st_branch_forward(features, t0, settings, ctx)
                                               : ts_branch_forward(features, chunks, settings, ctx);
  };
  BranchContext ctx;
  forward(&ctx);
  const BranchFeatures grads = branch_backward(ctx, g);
  auto f = [&]() { return inner(g, forward(nullptr).matrix()); };
  double worst = 0;
  for (int t = 0; t < frames; ++t) {
    Matrix& m = features[static_cast<std::size_t>(t)];
    worst = std::max(worst, relative_error(grads[static_cast<std::size_t>(t)].reshaped(),
                                           numeric_gradient(f, m.data(), m.size(), kStep)));
  }
  return worst;
}

template <typename Fn>
LayerCheck run_layer(const std::string& name, int instances, double tol, Rng& rng, Fn fn) {
  LayerCheck c{name, instances, 0.0, tol};
  for (int i = 0; i < instances; ++i) c.worst_rel_error = std::max(c.worst_rel_error, fn(rng));
  return c;
}

SkeletonSequence random_sequence(int frames, Rng& rng) {
  SkeletonSequence seq;
  seq.joints_per_frame = kGridNodes;
  const Matrix base = gaussian(kGridNodes, 3, rng);
  const Matrix drift = gaussian(kGridNodes, 3, rng, 0.5);
  for (int t = 0; t < frames; ++t) {
    const double phase = static_cast<double>(t) / frames;
    Frame f = base + std::sin(6.0 * phase) * drift + gaussian(kGridNodes, 3, rng, 0.3);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

}  // namespace

double network_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  const NetworkConfig config = tiny_config();
  NetworkParams params = NetworkParams::init(config, rng());
  // Nonzero FC weights, otherwise every upstream gradient vanishes.
  params.fc.F = gaussian(params.fc.F.rows(), params.fc.F.cols(), rng, 0.5);
  params.fc.c = gaussian(params.fc.c.size(), 1, rng, 0.5);
  const SkeletonSequence seq = random_sequence(config.n_frames, rng);
  const int label = static_cast<int>(rng() % 2);
  ForwardContext ctx;
  network_forward(seq, params, config, &ctx);
  const GradientSet grads = network_backward(ctx, label);
  auto f = [&]() { return cross_entropy(network_forward(seq, params, config).probs, label); };
  double worst = 0;
  for (int l = 0; l < kFilters; ++l) {
    Matrix& w = params.conv.W[l];
    worst = std::max(worst, relative_error(grads.conv.W[l].reshaped(), numeric_gradient(f, w.data(), w.size(), kStep)));
  }
  worst = std::max(worst, relative_error(grads.w_hat.reshaped(),
                                         numeric_gradient(f, params.w_hat.data(), params.w_hat.size(), kStep)));
  worst = std::max(worst, relative_error(grads.fc_F.reshaped(),
                                         numeric_gradient(f, params.fc.F.data(), params.fc.F.size(), kStep)));
  worst = std::max(worst, relative_error(grads.fc_c, numeric_gradient(f, params.fc.c.data(), params.fc.c.size(), kStep)));
  return worst;
}

GradcheckReport run_gradcheck(const GradcheckOptions& o) {
  Rng rng(o.seed);
  GradcheckReport r;
  const int n = o.layer_instances;
  r.layers.push_back(run_layer("gauss_agg", n, o.layer_tol, rng, check_gauss_agg));
  r.layers.push_back(run_layer("reeig", n, o.layer_tol, rng, check_reeig));
  r.layers.push_back(run_layer("logeig", n, o.layer_tol, rng, check_logeig));
  r.layers.push_back(run_layer("vecmat", n, o.layer_tol, rng, check_vecmat));
  r.layers.push_back(run_layer("spd_agg", n, o.layer_tol, rng, check_spd_agg));
  r.layers.push_back(run_layer("conv", n, o.layer_tol, rng, check_conv));
  r.layers.push_back(run_layer("head", n, o.layer_tol, rng, check_head));
  r.layers.push_back(run_layer("st_branch", n, o.layer_tol, rng,
                               [](Rng& g) { return check_branch(g, BranchKind::SpatialTemporal); }));
  r.layers.push_back(run_layer("ts_branch", n, o.layer_tol, rng,
                               [](Rng& g) { return check_branch(g, BranchKind::TemporalSpatial); }));
  if (o.include_network) {
    r.layers.push_back(run_layer("network", o.network_instances, o.network_tol, rng,
                                 [](Rng& g) { return network_gradcheck(g()); }));
  }
  return r;
}

}  // namespace hgr
