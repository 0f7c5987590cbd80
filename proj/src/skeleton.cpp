#include "hgr/skeleton.hpp"

#include <cmath>
#include <string>

namespace hgr {

void SkeletonSequence::validate() const {
  require(joints_per_frame >= 1, ErrorKind::InvalidInput, "sequence has no joints");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    require(frames[t].rows() == joints_per_frame, ErrorKind::InvalidInput,
            "frame " + std::to_string(t) + " has " + std::to_string(frames[t].rows()) +
                " joints, expected " + std::to_string(joints_per_frame));
    require(frames[t].allFinite(), ErrorKind::InvalidInput,
            "frame " + std::to_string(t) + " has non-finite coordinates");
  }
}

SkeletonSequence resample(const SkeletonSequence& seq, int n_frames) {
  require(seq.frame_count() >= 2, ErrorKind::InvalidInput,
          "resample: need at least 2 frames, got " + std::to_string(seq.frame_count()));
  require(n_frames >= 2, ErrorKind::InvalidInput, "resample: target length must be >= 2");
  seq.validate();

  SkeletonSequence out = seq;
  out.frames.clear();
  out.frames.reserve(n_frames);
  const int last = seq.frame_count() - 1;
  for (int k = 0; k < n_frames; ++k) {
    const double pos = static_cast<double>(k) * last / (n_frames - 1);
    int i0 = static_cast<int>(std::floor(pos));
    if (i0 >= last) {
      out.frames.push_back(seq.frames[last]);
      continue;
    }
    const double w = pos - i0;
    const Frame& a = seq.frames[i0];
    const Frame& b = seq.frames[i0 + 1];
    out.frames.push_back(a + w * (b - a));
  }
  return out;
}

namespace {

constexpr std::array<int, kFilters> kOffsets = {0, 4, 5, 1, -3, -4, -5, -1, 3};
// (finger step, level step) for each offset above.
constexpr std::array<std::pair<int, int>, kFilters> kSteps = {{
    {0, 0}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
}};

}  // namespace

JointGrid::JointGrid(GridMode mode) : mode_(mode), table_(kGridNodes) {
  for (int f = 1; f <= kFingers; ++f) {
    for (int l = 1; l <= kLevels; ++l) {
      auto& row = table_[index_of(node_id(f, l))];
      for (int k = 0; k < kFilters; ++k) {
        const auto [df, dl] = kSteps[k];
        if (mode == GridMode::Physical && df != 0) continue;
        const int nf = f + df;
        const int nl = l + dl;
        if (nf < 1 || nf > kFingers || nl < 1 || nl > kLevels) continue;
        row.push_back({node_id(nf, nl), k + 1});
      }
    }
  }
}

const std::array<int, kFilters>& JointGrid::offsets() { return kOffsets; }

int JointGrid::label_for_offset(int offset) {
  for (int k = 0; k < kFilters; ++k) {
    if (kOffsets[k] == offset) return k + 1;
  }
  return 0;
}

const std::vector<GridNeighbor>& JointGrid::neighbors(int node) const {
  require(contains(node), ErrorKind::InvalidInput,
          "grid node " + std::to_string(node) + " is not in the finger lattice");
  return table_[index_of(node)];
}

std::vector<GridNeighbor> grid_neighbors(const JointGrid& grid, int node) {
  return grid.neighbors(node);
}

std::array<int, kLevels> finger_joints(int finger) {
  require(finger >= 1 && finger <= kFingers, ErrorKind::InvalidInput,
          "finger index must be in 1..5");
  std::array<int, kLevels> out{};
  for (int l = 1; l <= kLevels; ++l) out[l - 1] = JointGrid::node_id(finger, l);
  return out;
}

std::vector<FrameRange> split_range(FrameRange range, int parts) {
  const int n = range.length();
  require(parts >= 1 && n >= parts, ErrorKind::InvalidInput,
          "cannot split " + std::to_string(n) + " frames into " + std::to_string(parts) + " parts");
  std::vector<FrameRange> out;
  out.reserve(parts);
  int start = 0;
  for (int k = 1; k <= parts; ++k) {
    const int stop = static_cast<int>((static_cast<long long>(k) * n) / parts);
    out.push_back({range.begin + start, range.begin + stop - 1});
    start = stop;
  }
  return out;
}

BranchPlan build_branch_plan(int n_frames) {
  require(n_frames >= kSubSequences, ErrorKind::InvalidInput,
          "branch plan needs at least 6 frames, got " + std::to_string(n_frames));
  const FrameRange whole{1, n_frames};
  std::vector<FrameRange> subsequences{whole};
  for (const auto& r : split_range(whole, 2)) subsequences.push_back(r);
  for (const auto& r : split_range(whole, 3)) subsequences.push_back(r);

  BranchPlan plan;
  plan.n_frames = n_frames;
  for (int s = 1; s <= kSubSequences; ++s) {
    for (int f = 1; f <= kFingers; ++f) {
      plan.entries.push_back({s, f, subsequences[s - 1], finger_joints(f)});
    }
  }
  return plan;
}

}  // namespace hgr
