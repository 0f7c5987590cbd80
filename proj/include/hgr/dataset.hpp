#pragma once

// Readers for skeleton datasets laid out as plain-text files plus split
// index files (see docs/formats.md), and a generator for synthetic fixtures
// in the same layout.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hgr/skeleton.hpp"

namespace hgr {

enum class SplitKind { Train, Test, LosoTrain, LosoTest };

struct Split {
  SplitKind kind = SplitKind::Train;
  int subject = 0;  // held-out subject for the leave-one-subject-out kinds

  static Split train() { return {SplitKind::Train, 0}; }
  static Split test() { return {SplitKind::Test, 0}; }
  static Split loso_train(int subject) { return {SplitKind::LosoTrain, subject}; }
  static Split loso_test(int subject) { return {SplitKind::LosoTest, subject}; }

  /// Parses "train", "test", "loso-train:<subject>" or "loso-test:<subject>".
  static Split parse(const std::string& text);
};

enum class DhgLabels { Gestures14, Gestures28 };

inline constexpr int kDhgJoints = 22;
inline constexpr int kFphaJoints = 21;

std::vector<SkeletonSequence> load_dhg(const std::filesystem::path& root, Split split,
                                       DhgLabels labels = DhgLabels::Gestures14);

/// FPHA sequences come back with the 20 finger joints in grid order (wrist dropped).
std::vector<SkeletonSequence> load_fpha(const std::filesystem::path& root, Split split);

/// Parses one DHG skeleton file: one frame per line, 66 reals.
SkeletonSequence read_dhg_skeleton(const std::filesystem::path& file);
/// Parses one FPHA skeleton file: frame index followed by 63 reals per line.
/// Joints are returned in the file's native order (21 joints).
SkeletonSequence read_fpha_skeleton(const std::filesystem::path& file);

/// Native FPHA joint index (0-based) of every grid node, in grid order.
const std::array<int, kGridNodes>& fpha_grid_joint_order();

// ---------------------------------------------------------------------------
// Synthetic data.

struct SyntheticOptions {
  int n_classes = 2;
  int per_class = 10;
  int min_frames = 30;
  int max_frames = 60;
  double noise = 1e-3;
  std::uint64_t seed = 1;
};

/// DHG-layout (22-joint) sequences in which each class flexes a different set
/// of fingers at its own tempo. Labels are 0-based, ordered class-major.
std::vector<SkeletonSequence> synthesize_sequences(const SyntheticOptions& options);

/// Writes sequences as a DHG-style dataset: one skeleton file per sequence
/// under `root/sequences/` plus train.txt and test.txt index files.
void write_dhg_dataset(const std::filesystem::path& root,
                       const std::vector<SkeletonSequence>& train,
                       const std::vector<SkeletonSequence>& test);

}  // namespace hgr
