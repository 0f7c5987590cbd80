#include "hgr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace hgr {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void parse_fail(const fs::path& file, int line_no, const std::string& what) {
  fail(ErrorKind::ParseError, file.string() + ":" + std::to_string(line_no) + ": " + what);
}

double parse_real(std::string_view tok, const fs::path& file, int line_no) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    parse_fail(file, line_no, "'" + std::string(tok) + "' is not a finite number");
  }
  return v;
}

int parse_int(std::string_view tok, const fs::path& file, int line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    parse_fail(file, line_no, "'" + std::string(tok) + "' is not an integer");
  }
  return v;
}

std::ifstream open_or_throw(const fs::path& file, ErrorKind kind) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(kind, "cannot open " + file.string());
  return in;
}

// Reads a skeleton file whose lines hold `skip` leading tokens followed by
// joints * 3 coordinates.
SkeletonSequence read_skeleton(const fs::path& file, int joints, int skip) {
  auto in = open_or_throw(file, ErrorKind::ParseError);
  SkeletonSequence seq;
  seq.joints_per_frame = joints;
  seq.source = file.string();
  const std::size_t expected = static_cast<std::size_t>(skip + 3 * joints);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != expected) {
      parse_fail(file, line_no,
                 "expected " + std::to_string(expected) + " tokens, found " +
                     std::to_string(toks.size()));
    }
    if (skip > 0) parse_int(toks[0], file, line_no);
    Frame frame(joints, 3);
    for (int j = 0; j < joints; ++j) {
      for (int c = 0; c < 3; ++c) frame(j, c) = parse_real(toks[skip + 3 * j + c], file, line_no);
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

struct IndexEntry {
  std::string path;
  std::vector<int> labels;
  std::optional<int> subject;
};

std::vector<IndexEntry> read_index(const fs::path& file, int n_labels, bool subject_required) {
  auto in = open_or_throw(file, ErrorKind::ConfigError);
  std::vector<IndexEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = tokenize(line);
    if (toks.empty() || toks[0].front() == '#') continue;
    const std::size_t min_tokens = 1 + n_labels + (subject_required ? 1 : 0);
    const std::size_t max_tokens = 1 + n_labels + 1;
    if (toks.size() < min_tokens || toks.size() > max_tokens) {
      parse_fail(file, line_no, "malformed split index line");
    }
    IndexEntry e;
    e.path = std::string(toks[0]);
    for (int k = 0; k < n_labels; ++k) {
      const int label = parse_int(toks[1 + k], file, line_no);
      if (label < 1) parse_fail(file, line_no, "labels are 1-based");
      e.labels.push_back(label - 1);
    }
    if (toks.size() == max_tokens) e.subject = parse_int(toks.back(), file, line_no);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<IndexEntry> select_split(const fs::path& root, Split split, int n_labels,
                                     bool subject_required) {
  require(fs::is_directory(root), ErrorKind::ConfigError,
          "dataset root " + root.string() + " does not exist or is not a directory");
  std::vector<IndexEntry> entries;
  switch (split.kind) {
    case SplitKind::Train:
      entries = read_index(root / "train.txt", n_labels, subject_required);
      break;
    case SplitKind::Test:
      entries = read_index(root / "test.txt", n_labels, subject_required);
      break;
    case SplitKind::LosoTrain:
    case SplitKind::LosoTest: {
      auto all = read_index(root / "train.txt", n_labels, true);
      auto rest = read_index(root / "test.txt", n_labels, true);
      all.insert(all.end(), rest.begin(), rest.end());
      const bool want_subject = split.kind == SplitKind::LosoTest;
      for (auto& e : all) {
        if ((e.subject == split.subject) == want_subject) entries.push_back(std::move(e));
      }
      break;
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const IndexEntry& a, const IndexEntry& b) { return a.path < b.path; });
  return entries;
}

}  // namespace

Split Split::parse(const std::string& text) {
  if (text == "train") return train();
  if (text == "test") return test();
  auto subject_of = [&](std::size_t prefix) {
    const std::string rest = text.substr(prefix);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
    if (rest.empty() || ec != std::errc() || ptr != rest.data() + rest.size()) {
      fail(ErrorKind::ConfigError, "bad subject in split '" + text + "'");
    }
    return v;
  };
  if (text.rfind("loso-train:", 0) == 0) return loso_train(subject_of(11));
  if (text.rfind("loso-test:", 0) == 0) return loso_test(subject_of(10));
  fail(ErrorKind::ConfigError, "unknown split '" + text + "'");
}

SkeletonSequence read_dhg_skeleton(const fs::path& file) {
  return read_skeleton(file, kDhgJoints, 0);
}

SkeletonSequence read_fpha_skeleton(const fs::path& file) {
  return read_skeleton(file, kFphaJoints, 1);
}

const std::array<int, kGridNodes>& fpha_grid_joint_order() {
  // FPHA order: wrist, five MCPs (thumb..pinky), then PIP, DIP, TIP per finger.
  static const std::array<int, kGridNodes> order = [] {
    std::array<int, kGridNodes> o{};
    for (int f = 1; f <= kFingers; ++f) {
      const int base = 4 * (f - 1);
      o[base + 0] = f;
      o[base + 1] = 6 + 3 * (f - 1);
      o[base + 2] = 7 + 3 * (f - 1);
      o[base + 3] = 8 + 3 * (f - 1);
    }
    return o;
  }();
  return order;
}

std::vector<SkeletonSequence> load_dhg(const fs::path& root, Split split, DhgLabels labels) {
  const auto entries = select_split(root, split, 2, true);
  std::vector<SkeletonSequence> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    SkeletonSequence seq = read_dhg_skeleton(root / e.path);
    seq.label = labels == DhgLabels::Gestures14 ? e.labels[0] : e.labels[1];
    seq.subject = e.subject;
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<SkeletonSequence> load_fpha(const fs::path& root, Split split) {
  const auto entries = select_split(root, split, 1, false);
  const auto& order = fpha_grid_joint_order();
  std::vector<SkeletonSequence> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    SkeletonSequence raw = read_fpha_skeleton(root / e.path);
    SkeletonSequence seq;
    seq.joints_per_frame = kGridNodes;
    seq.source = raw.source;
    seq.label = e.labels[0];
    seq.subject = e.subject;
    seq.frames.reserve(raw.frames.size());
    for (const auto& frame : raw.frames) {
      Frame remapped(kGridNodes, 3);
      for (int k = 0; k < kGridNodes; ++k) remapped.row(k) = frame.row(order[k]);
      seq.frames.push_back(std::move(remapped));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<SkeletonSequence> synthesize_sequences(const SyntheticOptions& o) {
  require(o.n_classes >= 1 && o.per_class >= 1 && o.min_frames >= 2 && o.max_frames >= o.min_frames,
          ErrorKind::InvalidInput, "bad synthetic dataset options");
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> length(o.min_frames, o.max_frames);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  std::vector<SkeletonSequence> out;
  for (int c = 0; c < o.n_classes; ++c) {
    // Class signature: which fingers flex, how fast and with what phase lag.
    const int lead = c % kFingers;
    const int second = (c + 2) % kFingers;
    const double cycles = 1.0 + (c / kFingers) + 0.5 * (c % 2);
    for (int n = 0; n < o.per_class; ++n) {
      SkeletonSequence seq;
      seq.joints_per_frame = kDhgJoints;
      seq.label = c;
      seq.subject = 1 + n % 5;
      const int frames = length(rng);
      const Eigen::RowVector3d offset(0.05 * gauss(rng), 0.05 * gauss(rng), 0.4 + 0.05 * gauss(rng));
      const double amp = 0.8 + 0.4 * unit(rng);
      const double phase = 0.3 * gauss(rng);
      for (int t = 0; t < frames; ++t) {
        const double u = static_cast<double>(t) / (frames - 1);
        Frame frame(kDhgJoints, 3);
        frame.row(0) = Eigen::RowVector3d(0.0, -0.05, 0.0);
        frame.row(1) = Eigen::RowVector3d(0.0, 0.0, 0.0);
        for (int f = 1; f <= kFingers; ++f) {
          double flex = 0.0;
          if (f - 1 == lead) flex = std::sin(kTwoPi * cycles * u + phase);
          if (f - 1 == second) flex = 0.6 * std::sin(kTwoPi * cycles * u + phase + 1.5);
          for (int l = 1; l <= kLevels; ++l) {
            const Eigen::RowVector3d rest(0.02 * (f - 3), 0.025 * l, 0.0);
            const Eigen::RowVector3d bend(0.0, -0.006 * l, -0.012 * l);
            Eigen::RowVector3d p = rest + amp * flex * bend;
            for (int k = 0; k < 3; ++k) p(k) += o.noise * gauss(rng);
            frame.row(JointGrid::node_id(f, l) - 1) = p;
          }
        }
        frame.rowwise() += offset;
        seq.frames.push_back(std::move(frame));
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

namespace {

void write_sequence_file(const fs::path& file, const SkeletonSequence& seq) {
  std::ofstream out(file);
  if (!out) fail(ErrorKind::ConfigError, "cannot write " + file.string());
  out << std::setprecision(17);
  for (const auto& frame : seq.frames) {
    for (int j = 0; j < frame.rows(); ++j) {
      for (int c = 0; c < 3; ++c) {
        if (j || c) out << ' ';
        out << frame(j, c);
      }
    }
    out << '\n';
  }
}

void write_split(const fs::path& root, const std::string& name,
                 const std::vector<SkeletonSequence>& seqs) {
  std::ofstream index(root / (name + ".txt"));
  if (!index) fail(ErrorKind::ConfigError, "cannot write index in " + root.string());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto& s = seqs[i];
    require(s.joints_per_frame == kDhgJoints, ErrorKind::InvalidInput,
            "DHG datasets need 22 joints per frame");
    std::ostringstream rel;
    rel << "sequences/" << name << '_' << std::setw(4) << std::setfill('0') << i << ".txt";
    write_sequence_file(root / rel.str(), s);
    index << rel.str() << ' ' << s.label + 1 << ' ' << s.label + 1 << ' ' << s.subject.value_or(1)
          << '\n';
  }
}

}  // namespace

void write_dhg_dataset(const fs::path& root, const std::vector<SkeletonSequence>& train,
                       const std::vector<SkeletonSequence>& test) {
  fs::create_directories(root / "sequences");
  write_split(root, "train", train);
  write_split(root, "test", test);
}

}  // namespace hgr
