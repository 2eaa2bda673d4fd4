#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agv/dataset.hpp"

namespace agv {

inline constexpr int kMaxMultiplicity = 8;
inline constexpr double kLowerTolerance = 0.9;
inline constexpr double kUpperTolerance = 1.25;

enum class Direction { over, under, at };

struct TargetCounts {
  ClassCounts targets{};

  /// Direction the planner must move class c, given the original counts.
  Direction direction(const ClassCounts& original, int c) const;
};

/// Throws InvalidArgument unless every target is positive.
void validate(const TargetCounts& targets);

struct PlanEntry {
  std::string id;
  int multiplicity = 1;

  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

struct SamplePlan {
  std::vector<PlanEntry> entries;
  std::uint64_t seed = 0;
  ClassCounts realized{};

  friend bool operator==(const SamplePlan&, const SamplePlan&) = default;
};

/// Realized class counts of `plan` applied to `manifest`, recomputed from scratch.
ClassCounts realized_counts(const Manifest& manifest, const SamplePlan& plan);

/// Greedy deterministic planner:
///  1. every tile starts at multiplicity 1;
///  2. while some class is below target, increment (up to the cap) the tile
///     maximizing sum over its below-target classes of deficit/target; ties
///     go to the tile touching fewer classes already at or above target,
///     then to the lexicographically smallest id;
///  3. visit tiles by descending number of present classes (seeded shuffle
///     within equal counts) and decrement, down to 0, tiles whose present
///     classes are all strictly above target, until none qualifies;
///  4. if some class is still outside [0.9t, 1.25t] or farther from target
///     than it started, move single duplicates between tiles of different
///     presence while that lowers the violation, then fall back to a bounded
///     exhaustive search over per-presence totals.
/// Throws UnreachableTargetError if step 2 leaves a class below 0.9 x target.
/// Step 4 may still fail to find a plan within its budget; the result is
/// then the best plan found and the caller can check it.
SamplePlan plan_resample(const Manifest& manifest, const TargetCounts& targets, std::uint64_t seed);

/// Repeats each record `multiplicity` times (adjacent, original order),
/// tagging occurrences 1..m.
Manifest apply_plan(const Manifest& manifest, const SamplePlan& plan);

/// |realized - target| <= |original - target| for every class.
bool satisfies_monotone_goal(const ClassCounts& original, const ClassCounts& realized, const TargetCounts& targets);

TargetCounts read_targets(const std::filesystem::path& path);
void write_targets(const std::filesystem::path& path, const TargetCounts& targets);
std::string plan_to_json(const SamplePlan& plan);
SamplePlan plan_from_json(const std::string& text);
void write_plan(const std::filesystem::path& path, const SamplePlan& plan);
SamplePlan read_plan(const std::filesystem::path& path);

}  // namespace agv
