#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hgr/dataset.hpp"
#include "hgr/network.hpp"
#include "hgr/svm.hpp"
#include "test_util.hpp"

using namespace hgr;
using hgr::test::TempDir;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CliRun hgrnet(const std::string& args, const fs::path& scratch, const std::string& env = "") {
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = env + " '" + std::string(HGRNET_EXE) + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

// Tiny network config on disk plus a synthetic two-class dataset.
struct Fixture {
  TempDir dir{"cli"};
  fs::path data, config;

  explicit Fixture(int train_per_class = 3, int test_per_class = 1, const std::string& extra_config = "") {
    data = dir.path() / "data";
    config = dir.path() / "tiny.cfg";
    std::ofstream(config) << tiny_config().to_text() << extra_config;
    SyntheticOptions o;
    o.per_class = train_per_class + test_per_class;
    const auto all = synthesize_sequences(o);
    std::vector<SkeletonSequence> train, test;
    for (const auto& s : all) {
      const int seen = static_cast<int>(std::count_if(train.begin(), train.end(),
                                                      [&](const SkeletonSequence& t) { return t.label == s.label; }));
      (seen < train_per_class ? train : test).push_back(s);
    }
    write_dhg_dataset(data, train, test);
  }
  std::string common() const { return "--data-root '" + data.string() + "' --config '" + config.string() + "'"; }
};

}  // namespace

TEST(Cli, HelpAndUsage) {
  TempDir dir("cli_usage");
  EXPECT_EQ(hgrnet("--help", dir.path()).code, 0);
  EXPECT_EQ(hgrnet("", dir.path()).code, 2);
  EXPECT_EQ(hgrnet("frobnicate", dir.path()).code, 2);
  EXPECT_EQ(hgrnet("train --out x", dir.path()).code, 2);  // --data-root missing
}

TEST(Cli, MissingDataRoot) {
  TempDir dir("cli_missing");
  const std::string root = (dir.path() / "no_such_dataset").string();
  const CliRun r = hgrnet("train --data-root '" + root + "' --out '" + (dir.path() / "o").string() + "'", dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(root), std::string::npos) << r.err;

  // Same through the environment.
  const CliRun e = hgrnet("train --out '" + (dir.path() / "o").string() + "'", dir.path(), "HGRNET_DATA_ROOT='" + root + "'");
  EXPECT_EQ(e.code, 2);
  EXPECT_NE(e.err.find(root), std::string::npos) << e.err;
}

TEST(Cli, GradcheckFaultInjection) {
  TempDir dir("cli_gc");
  const CliRun ok = hgrnet("gradcheck --instances 2 --network-instances 1", dir.path());
  EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
  const CliRun bad = hgrnet("gradcheck --instances 2 --network-instances 0 --inject-fault gauss_agg", dir.path());
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("gauss_agg"), std::string::npos) << bad.err;
  EXPECT_NE(bad.out.find("worst_rel_err="), std::string::npos);
}

TEST(Cli, TrainExtractClassify) {
  Fixture fx;
  const fs::path run = fx.dir.path() / "run";
  const CliRun t = hgrnet("train " + fx.common() + " --epochs 2 --batch-size 4 --deterministic --out '" + run.string() + "'",
                       fx.dir.path());
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(fs::exists(run / "epoch_01.ckpt"));
  EXPECT_TRUE(fs::exists(run / "epoch_02.ckpt"));
  const std::string manifest = slurp(run / "manifest.txt");
  EXPECT_NE(manifest.find("epoch=2 loss="), std::string::npos) << manifest;
  EXPECT_NE(manifest.find("config.conv_dim=2"), std::string::npos);

  const fs::path ckpt = run / "epoch_02.ckpt";
  const fs::path ftrain = fx.dir.path() / "train.feat", ftest = fx.dir.path() / "test.feat";
  const std::string ex = "extract --data-root '" + fx.data.string() + "' --checkpoint '" + ckpt.string() + "'";
  ASSERT_EQ(hgrnet(ex + " --split train --out '" + ftrain.string() + "'", fx.dir.path()).code, 0);
  ASSERT_EQ(hgrnet(ex + " --split test --out '" + ftest.string() + "'", fx.dir.path()).code, 0);
  const FeatureSet tr = read_features(ftrain);
  EXPECT_EQ(tr.size(), 6);
  EXPECT_EQ(tr.X.cols(), tiny_config().feature_length());
  EXPECT_EQ(read_features(ftest).size(), 2);

  // Bitwise-identical rerun.
  const std::string first = slurp(ftrain);
  ASSERT_EQ(hgrnet(ex + " --split train --out '" + ftrain.string() + "'", fx.dir.path()).code, 0);
  EXPECT_EQ(slurp(ftrain), first);

  const fs::path report = fx.dir.path() / "report.txt";
  const CliRun c = hgrnet("classify --train-features '" + ftrain.string() + "' --test-features '" + ftrain.string() +
                           "' --out '" + report.string() + "'",
                       fx.dir.path());
  EXPECT_EQ(c.code, 0) << c.err;
  EXPECT_NE(c.out.find("accuracy: "), std::string::npos);
  EXPECT_EQ(slurp(report).rfind("format hgrnet-report-1\n", 0), 0u);
}

TEST(Cli, ExtractConfigMismatch) {
  Fixture fx;
  const fs::path run = fx.dir.path() / "run";
  ASSERT_EQ(hgrnet("train " + fx.common() + " --epochs 1 --out '" + run.string() + "'", fx.dir.path()).code, 0);
  const fs::path other = fx.dir.path() / "other.cfg";
  std::ofstream(other) << tiny_config().to_text() << "spd_out_dim=5\n";
  const CliRun r = hgrnet("extract --data-root '" + fx.data.string() + "' --checkpoint '" + (run / "epoch_01.ckpt").string() +
                           "' --config '" + other.string() + "' --out '" + (fx.dir.path() / "f").string() + "'",
                       fx.dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("SPDAgg weight"), std::string::npos) << r.err;
}

TEST(Cli, EmptySplitGivesEmptyFile) {
  Fixture fx(3, 0);
  const fs::path run = fx.dir.path() / "run";
  ASSERT_EQ(hgrnet("train " + fx.common() + " --epochs 1 --out '" + run.string() + "'", fx.dir.path()).code, 0);
  const fs::path f = fx.dir.path() / "empty.feat";
  const CliRun r = hgrnet("extract --data-root '" + fx.data.string() + "' --checkpoint '" + (run / "epoch_01.ckpt").string() +
                           "' --split test --out '" + f.string() + "'",
                       fx.dir.path());
  EXPECT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(f));
  EXPECT_EQ(fs::file_size(f), 0u);
}

TEST(Cli, DeterministicManifests) {
  Fixture fx;
  std::string manifests[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path run = fx.dir.path() / ("run" + std::to_string(k));
    const CliRun r = hgrnet("train " + fx.common() + " --epochs 3 --batch-size 2 --workers 2 --deterministic --seed 5 --out '" +
                             run.string() + "'",
                         fx.dir.path());
    ASSERT_EQ(r.code, 0) << r.err;
    manifests[k] = slurp(run / "manifest.txt");
  }
  EXPECT_EQ(manifests[0], manifests[1]);
  EXPECT_NE(manifests[0].find("deterministic=1"), std::string::npos);
  EXPECT_NE(manifests[0].find("seed=5"), std::string::npos);
}

TEST(Cli, ClassifyDimensionMismatch) {
  TempDir dir("cli_cls");
  std::ofstream(dir.path() / "a.txt") << "0 1 0\n1 0 1\n";
  std::ofstream(dir.path() / "b.txt") << "0 1 0 5\n";
  const CliRun r = hgrnet("classify --train-features '" + (dir.path() / "a.txt").string() + "' --test-features '" +
                           (dir.path() / "b.txt").string() + "'",
                       dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("dimension"), std::string::npos) << r.err;
}

TEST(Cli, ClassifySeparable) {
  TempDir dir("cli_sep");
  std::ofstream(dir.path() / "a.txt") << "0 1 0\n1 -1 0\n0 2 0.5\n1 -2 -0.5\n";
  const CliRun r = hgrnet("classify --train-features '" + (dir.path() / "a.txt").string() + "' --test-features '" +
                           (dir.path() / "a.txt").string() + "' --C 1 --tol 0.1",
                       dir.path());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("accuracy: 1.0000"), std::string::npos) << r.out;
}

TEST(Cli, AblationRowsInInputOrder) {
  Fixture fx(3, 1, "n_frames=18\n");
  const fs::path out = fx.dir.path() / "abl";
  const CliRun r = hgrnet("ablate " + fx.common() + " --knob N_S --values 3 2 --epochs 1 --out '" + out.string() + "'",
                       fx.dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream table(slurp(out / "ablation.txt"));
  std::string header, row1, row2;
  std::getline(table, header);
  std::getline(table, row1);
  std::getline(table, row2);
  EXPECT_EQ(header.rfind("N_S", 0), 0u) << header;
  EXPECT_EQ(row1.rfind("3 ", 0), 0u) << row1;
  EXPECT_EQ(row2.rfind("2 ", 0), 0u) << row2;
  EXPECT_TRUE(fs::exists(out / "N_S_3" / "manifest.txt"));

  const CliRun t0 = hgrnet("ablate " + fx.common() + " --knob t0 --values 1 2 --epochs 1", fx.dir.path());
  EXPECT_EQ(t0.code, 0) << t0.err;
  EXPECT_EQ(count_lines(t0.out), 3);
}

TEST(Cli, AblationInvalidKnob) {
  Fixture fx;
  const CliRun r = hgrnet("ablate " + fx.common() + " --knob learning_rate --values 1", fx.dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos) << r.err;
  const CliRun bad_value = hgrnet("ablate " + fx.common() + " --knob t0 --values 1 x", fx.dir.path());
  EXPECT_EQ(bad_value.code, 2);
}
