#include "hgr/network.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace hgr {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::StTs: return "st_ts";
    case Variant::StOnly: return "st_only";
    case Variant::TsOnly: return "ts_only";
  }
  return "?";
}

std::string to_string(GridMode m) { return m == GridMode::Full ? "full" : "physical"; }

Variant parse_variant(const std::string& text) {
  if (text == "st_ts") return Variant::StTs;
  if (text == "st_only") return Variant::StOnly;
  if (text == "ts_only") return Variant::TsOnly;
  fail(ErrorKind::ConfigError, "unknown variant '" + text + "' (expected st_ts, st_only or ts_only)");
}

GridMode parse_grid_mode(const std::string& text) {
  if (text == "full") return GridMode::Full;
  if (text == "physical") return GridMode::Physical;
  fail(ErrorKind::ConfigError, "unknown grid mode '" + text + "' (expected full or physical)");
}

int NetworkConfig::spd_in_dim() const { return (conv_dim + 1) * (conv_dim + 2) / 2 + 1; }

int NetworkConfig::n_branches() const {
  return variant == Variant::StTs ? 2 * kBranchesPerNet : kBranchesPerNet;
}

void NetworkConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::ConfigError, msg); };
  check(conv_dim >= 1, "conv_dim must be >= 1");
  check(spd_out_dim >= 1, "spd_out_dim must be >= 1");
  check(n_classes >= 2, "n_classes must be >= 2");
  check(t0 >= 1, "t0 must be >= 1");
  check(n_chunks >= 2, "n_chunks must be >= 2");
  check(std::isfinite(epsilon) && epsilon > 0, "epsilon must be positive");
  check(std::isfinite(ridge) && ridge >= 0, "ridge must be non-negative");
  const long long width = static_cast<long long>(n_branches()) * spd_in_dim();
  check(spd_out_dim <= width, "spd_out_dim " + std::to_string(spd_out_dim) + " exceeds N*d_in = " +
                                  std::to_string(width));
  check(n_frames >= kSubSequences, "n_frames must be >= 6");
  // The shortest sub-sequence is a third of the sequence.
  const int shortest = n_frames / 3;
  if (uses_st()) {
    check(shortest >= 2 * t0 + 1, "n_frames " + std::to_string(n_frames) +
                                      " leaves sub-sequences shorter than the window 2*t0+1");
  }
  if (uses_ts()) {
    check(shortest >= 2 * n_chunks, "n_frames " + std::to_string(n_frames) +
                                        " leaves sub-sequences too short for n_chunks chunks of 2 frames");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& value, const std::string& where) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    fail(ErrorKind::ConfigError, where + ": cannot parse '" + value + "' as a number");
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

NetworkConfig NetworkConfig::parse(const std::string& text, const std::string& origin) {
  NetworkConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::ConfigError, where + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "conv_dim") c.conv_dim = parse_number<int>(value, where);
    else if (key == "spd_out_dim") c.spd_out_dim = parse_number<int>(value, where);
    else if (key == "n_frames") c.n_frames = parse_number<int>(value, where);
    else if (key == "t0") c.t0 = parse_number<int>(value, where);
    else if (key == "n_chunks") c.n_chunks = parse_number<int>(value, where);
    else if (key == "epsilon") c.epsilon = parse_number<double>(value, where);
    else if (key == "n_classes") c.n_classes = parse_number<int>(value, where);
    else if (key == "variant") c.variant = parse_variant(value);
    else if (key == "grid_mode") c.grid_mode = parse_grid_mode(value);
    else if (key == "ridge") c.ridge = parse_number<double>(value, where);
    else fail(ErrorKind::ConfigError, where + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

NetworkConfig NetworkConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::ConfigError, "cannot open config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), file.string());
}

std::string NetworkConfig::to_text() const {
  std::ostringstream out;
  out << "conv_dim=" << conv_dim << "\n"
      << "spd_out_dim=" << spd_out_dim << "\n"
      << "n_frames=" << n_frames << "\n"
      << "t0=" << t0 << "\n"
      << "n_chunks=" << n_chunks << "\n"
      << "epsilon=" << format_double(epsilon) << "\n"
      << "n_classes=" << n_classes << "\n"
      << "variant=" << to_string(variant) << "\n"
      << "grid_mode=" << to_string(grid_mode) << "\n"
      << "ridge=" << format_double(ridge) << "\n";
  return out.str();
}

NetworkConfig tiny_config() {
  NetworkConfig c;
  c.conv_dim = 2;
  c.n_frames = 12;
  c.spd_out_dim = 4;
  c.n_chunks = 2;
  c.n_classes = 2;
  return c;
}

// ---------------------------------------------------------------------------

NetworkParams NetworkParams::init(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  NetworkParams p;
  std::mt19937_64 rng(seed);
  const double a = std::sqrt(3.0 / (3.0 * kFilters));
  std::uniform_real_distribution<double> uni(-a, a);
  p.conv = ConvWeights::zeros(config.conv_dim);
  for (auto& w : p.conv.W) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = uni(rng);
    }
  }
  const std::uint64_t stiefel_seed = rng();
  p.w_hat = stiefel_init(config.spd_out_dim, config.n_branches() * config.spd_in_dim(), stiefel_seed)
                .matrix();
  p.fc = FcWeights::zeros(config.n_classes, config.spd_out_dim);
  return p;
}

void NetworkParams::check(const NetworkConfig& config) const {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::ConfigError, msg); };
  for (const auto& w : conv.W) {
    check(w.rows() == config.conv_dim && w.cols() == 3,
          "conv filter shape " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
              " does not match conv_dim " + std::to_string(config.conv_dim));
  }
  const auto width = static_cast<Eigen::Index>(config.n_branches()) * config.spd_in_dim();
  check(w_hat.rows() == config.spd_out_dim && w_hat.cols() == width,
        "SPDAgg weight is " + std::to_string(w_hat.rows()) + "x" + std::to_string(w_hat.cols()) +
            ", config expects " + std::to_string(config.spd_out_dim) + "x" + std::to_string(width));
  const auto d2 = static_cast<Eigen::Index>(config.spd_out_dim) * config.spd_out_dim;
  check(fc.F.rows() == config.n_classes && fc.F.cols() == d2 && fc.c.size() == config.n_classes,
        "FC weights do not match n_classes/spd_out_dim");
}

TensorArchive NetworkParams::to_archive(const NetworkConfig& config) const {
  TensorArchive a;
  a.add(Tensor::scalar("config.conv_dim", config.conv_dim));
  a.add(Tensor::scalar("config.spd_out_dim", config.spd_out_dim));
  a.add(Tensor::scalar("config.n_frames", config.n_frames));
  a.add(Tensor::scalar("config.t0", config.t0));
  a.add(Tensor::scalar("config.n_chunks", config.n_chunks));
  a.add(Tensor::scalar("config.epsilon", config.epsilon));
  a.add(Tensor::scalar("config.n_classes", config.n_classes));
  a.add(Tensor::scalar("config.variant", static_cast<double>(config.variant)));
  a.add(Tensor::scalar("config.grid_mode", static_cast<double>(config.grid_mode)));
  a.add(Tensor::scalar("config.ridge", config.ridge));
  for (int l = 0; l < kFilters; ++l) {
    a.add(Tensor::from_matrix("conv.W" + std::to_string(l + 1), conv.W[l]));
  }
  a.add(Tensor::from_matrix("spdagg.W", w_hat));
  a.add(Tensor::from_matrix("fc.F", fc.F));
  a.add(Tensor::from_vector("fc.c", fc.c));
  return a;
}

NetworkConfig NetworkParams::config_from_archive(const TensorArchive& a) {
  auto as_int = [&](const char* name) {
    const double v = a.get(name).to_scalar();
    require(v == std::floor(v) && std::abs(v) < 1e9, ErrorKind::ConfigError,
            std::string("checkpoint field ") + name + " is not an integer");
    return static_cast<int>(v);
  };
  NetworkConfig c;
  c.conv_dim = as_int("config.conv_dim");
  c.spd_out_dim = as_int("config.spd_out_dim");
  c.n_frames = as_int("config.n_frames");
  c.t0 = as_int("config.t0");
  c.n_chunks = as_int("config.n_chunks");
  c.epsilon = a.get("config.epsilon").to_scalar();
  c.n_classes = as_int("config.n_classes");
  const int variant = as_int("config.variant");
  require(variant >= 0 && variant <= 2, ErrorKind::ConfigError, "checkpoint has a bad variant code");
  c.variant = static_cast<Variant>(variant);
  const int mode = as_int("config.grid_mode");
  require(mode >= 0 && mode <= 1, ErrorKind::ConfigError, "checkpoint has a bad grid mode code");
  c.grid_mode = static_cast<GridMode>(mode);
  c.ridge = a.get("config.ridge").to_scalar();
  c.validate();
  return c;
}

NetworkParams NetworkParams::from_archive(const TensorArchive& a, const NetworkConfig& config) {
  NetworkParams p;
  for (int l = 0; l < kFilters; ++l) p.conv.W[l] = a.get("conv.W" + std::to_string(l + 1)).to_matrix();
  p.w_hat = a.get("spdagg.W").to_matrix();
  p.fc.F = a.get("fc.F").to_matrix();
  p.fc.c = a.get("fc.c").to_vector();
  p.check(config);
  StiefelPoint::checked(p.w_hat);
  return p;
}

// ---------------------------------------------------------------------------

GradientSet GradientSet::zeros(const NetworkConfig& config) {
  GradientSet g;
  g.conv = ConvWeights::zeros(config.conv_dim);
  g.w_hat = Matrix::Zero(config.spd_out_dim,
                         static_cast<Eigen::Index>(config.n_branches()) * config.spd_in_dim());
  g.fc_F = Matrix::Zero(config.n_classes,
                        static_cast<Eigen::Index>(config.spd_out_dim) * config.spd_out_dim);
  g.fc_c = Vector::Zero(config.n_classes);
  return g;
}

GradientSet& GradientSet::operator+=(const GradientSet& o) {
  for (int l = 0; l < kFilters; ++l) conv.W[l] += o.conv.W[l];
  w_hat += o.w_hat;
  fc_F += o.fc_F;
  fc_c += o.fc_c;
  return *this;
}

GradientSet& GradientSet::operator*=(double s) {
  for (auto& w : conv.W) w *= s;
  w_hat *= s;
  fc_F *= s;
  fc_c *= s;
  return *this;
}

bool GradientSet::all_finite() const {
  for (const auto& w : conv.W) {
    if (!w.allFinite()) return false;
  }
  return w_hat.allFinite() && fc_F.allFinite() && fc_c.allFinite();
}

double GradientSet::max_abs() const {
  double m = 0;
  for (const auto& w : conv.W) m = std::max(m, w.cwiseAbs().maxCoeff());
  m = std::max(m, w_hat.cwiseAbs().maxCoeff());
  m = std::max(m, fc_F.cwiseAbs().maxCoeff());
  return std::max(m, fc_c.cwiseAbs().maxCoeff());
}

// ---------------------------------------------------------------------------

FeatureSequence grid_coordinates(const SkeletonSequence& seq) {
  seq.validate();
  const int skip = seq.joints_per_frame == 22 ? 2 : 0;
  require(seq.joints_per_frame == 22 || seq.joints_per_frame == kGridNodes, ErrorKind::InvalidInput,
          "sequences must have 22 (DHG) or 20 (grid-ordered) joints, got " +
              std::to_string(seq.joints_per_frame));
  FeatureSequence out;
  out.reserve(seq.frames.size());
  for (const auto& f : seq.frames) out.emplace_back(f.middleRows(skip, kGridNodes));
  return out;
}

SkeletonSequence prepare_sequence(const SkeletonSequence& seq, const NetworkConfig& config) {
  require(seq.joints_per_frame == 22 || seq.joints_per_frame == kGridNodes, ErrorKind::InvalidInput,
          "sequences must have 22 or 20 joints");
  return resample(seq, config.n_frames);
}

namespace {

BranchFeatures gather_branch(const FeatureSequence& p, const BranchSpec& spec) {
  BranchFeatures out;
  out.reserve(static_cast<std::size_t>(spec.frames.length()));
  for (int t = spec.frames.begin; t <= spec.frames.end; ++t) {
    const Matrix& frame = p[static_cast<std::size_t>(t - 1)];
    Matrix m(kLevels, frame.cols());
    for (int l = 0; l < kLevels; ++l) m.row(l) = frame.row(JointGrid::index_of(spec.joints[l]));
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

ForwardResult network_forward(const SkeletonSequence& seq, const NetworkParams& params,
                              const NetworkConfig& config, ForwardContext* ctx) {
  config.validate();
  params.check(config);
  require(seq.frame_count() == config.n_frames, ErrorKind::InvalidInput,
          "sequence has " + std::to_string(seq.frame_count()) + " frames, network expects " +
              std::to_string(config.n_frames) + " (resample first)");
  const JointGrid grid(config.grid_mode);
  ConvContext local_conv;
  const FeatureSequence p = conv_forward(grid_coordinates(seq), params.conv, grid,
                                         ctx != nullptr ? &ctx->conv : &local_conv);
  const BranchPlan plan = build_branch_plan(config.n_frames);
  const SpdSettings settings = config.spd_settings();

  std::vector<SPDMatrix> spd;
  spd.reserve(static_cast<std::size_t>(config.n_branches()));
  if (ctx != nullptr) {
    ctx->config = config;
    ctx->plan = plan;
    ctx->branches.assign(static_cast<std::size_t>(config.n_branches()), BranchContext{});
  }
  std::size_t slot = 0;
  auto next_ctx = [&]() { return ctx != nullptr ? &ctx->branches[slot++] : nullptr; };
  if (config.uses_st()) {
    for (const auto& spec : plan.entries) {
      spd.push_back(st_branch_forward(gather_branch(p, spec), config.t0, settings, next_ctx()));
    }
  }
  if (config.uses_ts()) {
    for (const auto& spec : plan.entries) {
      spd.push_back(ts_branch_forward(gather_branch(p, spec), config.n_chunks, settings, next_ctx()));
    }
  }
  SpdAggContext local_agg;
  ForwardResult r;
  r.y_final = spd_agg_forward(spd, params.w_hat, ctx != nullptr ? &ctx->agg : &local_agg);
  HeadContext local_head;
  r.probs = head_forward(r.y_final, params.fc, ctx != nullptr ? &ctx->head : &local_head).probs;
  return r;
}

GradientSet network_backward(const ForwardContext& ctx, int label) {
  const NetworkConfig& config = ctx.config;
  require(ctx.branches.size() == static_cast<std::size_t>(config.n_branches()) &&
              ctx.agg.inputs.size() == ctx.branches.size() && ctx.head.probs.size() > 0,
          ErrorKind::InvalidInput, "network_backward: context was not filled by a forward pass");
  require(label >= 0 && label < config.n_classes, ErrorKind::InvalidInput,
          "label " + std::to_string(label) + " out of range");
  GradientSet g;
  const HeadGrads head = head_backward(ctx.head, label);
  g.fc_F = head.d_F;
  g.fc_c = head.d_c;
  SpdAggGrads agg = spd_agg_backward(ctx.agg, head.d_y.matrix());
  g.w_hat = std::move(agg.d_w_hat);

  FeatureSequence d_p(static_cast<std::size_t>(config.n_frames),
                      Matrix::Zero(kGridNodes, config.conv_dim));
  std::size_t slot = 0;
  const int passes = (config.uses_st() ? 1 : 0) + (config.uses_ts() ? 1 : 0);
  for (int pass = 0; pass < passes; ++pass) {
    for (const auto& spec : ctx.plan.entries) {
      const BranchFeatures d_branch = branch_backward(ctx.branches[slot], agg.d_inputs[slot].matrix());
      ++slot;
      for (int t = spec.frames.begin; t <= spec.frames.end; ++t) {
        const Matrix& src = d_branch[static_cast<std::size_t>(t - spec.frames.begin)];
        Matrix& dst = d_p[static_cast<std::size_t>(t - 1)];
        for (int l = 0; l < kLevels; ++l) dst.row(JointGrid::index_of(spec.joints[l])) += src.row(l);
      }
    }
  }
  g.conv = conv_backward(ctx.conv, d_p).d_weights;
  return g;
}

Vector extract_features(const SkeletonSequence& seq, const NetworkParams& params,
                        const NetworkConfig& config) {
  return extract_representation(network_forward(seq, params, config).y_final);
}

}  // namespace hgr
