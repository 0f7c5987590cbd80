#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hgr/error.hpp"

namespace hgr {

/// One frame: joints_per_frame x 3 coordinates.
using Frame = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct SkeletonSequence {
  int joints_per_frame = 0;
  std::vector<Frame> frames;
  int label = 0;
  std::optional<int> subject;
  std::string source;  // file the sequence was read from, empty for synthetic data

  int frame_count() const { return static_cast<int>(frames.size()); }
  /// Throws InvalidInput unless every frame has joints_per_frame finite rows.
  void validate() const;
};

/// Linear interpolation of every joint coordinate at n_frames uniformly spaced
/// instants; the first and last frames are kept exactly.
SkeletonSequence resample(const SkeletonSequence& seq, int n_frames);

// ---------------------------------------------------------------------------
// Finger-joint lattice.
//
// Grid nodes carry DHG joint ids 3..22: finger f in 1..5 (thumb..pinky) and
// level l in 1..4 (base..tip) map to node 2 + 4(f-1) + l. Wrist (1) and palm
// (2) are not part of the lattice.

inline constexpr int kFingers = 5;
inline constexpr int kLevels = 4;
inline constexpr int kGridNodes = kFingers * kLevels;
inline constexpr int kFirstNodeId = 3;
inline constexpr int kFilters = 9;

enum class GridMode { Full, Physical };

struct GridNeighbor {
  int node;   // DHG joint id
  int label;  // filter index 1..9
};

class JointGrid {
 public:
  explicit JointGrid(GridMode mode = GridMode::Full);

  GridMode mode() const { return mode_; }
  /// Offsets j - i indexed by filter label - 1.
  static const std::array<int, kFilters>& offsets();
  /// Filter label for an offset, or 0 when the offset is not in the table.
  static int label_for_offset(int offset);

  static bool contains(int node) { return node >= kFirstNodeId && node < kFirstNodeId + kGridNodes; }
  static int node_id(int finger, int level) { return 2 + 4 * (finger - 1) + level; }
  /// 0-based position of a node among the 20 grid nodes.
  static int index_of(int node) { return node - kFirstNodeId; }

  /// Neighbors of node i with their filter labels, ordered by label.
  const std::vector<GridNeighbor>& neighbors(int node) const;

 private:
  GridMode mode_;
  std::vector<std::vector<GridNeighbor>> table_;
};

std::vector<GridNeighbor> grid_neighbors(const JointGrid& grid, int node);

/// Joint ids of finger f (1..5) from base to tip.
std::array<int, kLevels> finger_joints(int finger);

// ---------------------------------------------------------------------------
// Sub-sequence plan shared by both aggregation sub-networks.

/// Inclusive 1-based frame range.
struct FrameRange {
  int begin = 1;
  int end = 1;
  int length() const { return end - begin + 1; }
  bool operator==(const FrameRange&) const = default;
};

/// Splits [range.begin, range.end] into `parts` contiguous pieces whose
/// boundaries sit at floor(k * length / parts); lengths differ by at most one
/// and the surplus frames land in the later pieces.
std::vector<FrameRange> split_range(FrameRange range, int parts);

inline constexpr int kSubSequences = 6;
inline constexpr int kBranchesPerNet = kSubSequences * kFingers;

struct BranchSpec {
  int subsequence;  // 1..6
  int finger;       // 1..5
  FrameRange frames;
  std::array<int, kLevels> joints;
};

struct BranchPlan {
  int n_frames = 0;
  std::vector<BranchSpec> entries;  // subsequence-major, finger-minor
};

/// Sub-sequence 1 is the whole sequence, 2-3 its halves and 4-6 its thirds.
BranchPlan build_branch_plan(int n_frames);

}  // namespace hgr
