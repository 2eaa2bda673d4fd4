#include "agv/resampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "agv/rng.hpp"

namespace agv {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kExactSearchBudget = 2'000'000;

LabelSet signature_of(const TileRecord& rec) {
  LabelSet s = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    if (rec.presence[c]) s |= class_bit(c);
  }
  return s;
}

std::uint64_t abs_diff(std::uint64_t a, std::uint64_t b) { return a > b ? a - b : b - a; }

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << text;
}


// Penalty of a count vector: monotone-goal violations plus distance outside
// the tolerance band, then total distance to target as a tie-break.
std::pair<std::uint64_t, std::uint64_t> plan_penalty(const ClassCounts& realized, const ClassCounts& original,
                                                     const ClassCounts& target) {
  std::uint64_t violation = 0;
  std::uint64_t distance = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const std::uint64_t d = abs_diff(realized[c], target[c]);
    const std::uint64_t allowed = abs_diff(original[c], target[c]);
    if (d > allowed) violation += d - allowed;
    const auto lo = static_cast<std::uint64_t>(std::ceil(kLowerTolerance * static_cast<double>(target[c])));
    const auto hi = static_cast<std::uint64_t>(std::floor(kUpperTolerance * static_cast<double>(target[c])));
    if (realized[c] < lo) violation += lo - realized[c];
    if (realized[c] > hi) violation += realized[c] - hi;
    distance += d;
  }
  return {violation, distance};
}

// Depth-first search for per-signature totals with no violation, trying
// values outward from the current totals. Gives up after `budget` nodes.
bool exact_search(const std::vector<LabelSet>& sigs, const std::vector<int>& sizes, const ClassCounts& original,
                  const ClassCounts& target, std::vector<int>& totals, std::uint64_t budget) {
  const std::size_t g_count = sigs.size();
  ClassCounts lower{};
  ClassCounts upper{};
  for (int c = 0; c < kNumClasses; ++c) {
    const std::uint64_t t = target[c];
    const std::uint64_t slack = abs_diff(original[c], t);
    const auto lo = static_cast<std::uint64_t>(std::ceil(kLowerTolerance * static_cast<double>(t)));
    const auto hi = static_cast<std::uint64_t>(std::floor(kUpperTolerance * static_cast<double>(t)));
    lower[c] = std::max(lo, t > slack ? t - slack : 0);
    upper[c] = std::min(hi, t + slack);
    if (lower[c] > upper[c]) return false;
  }
  std::vector<ClassCounts> reach(g_count + 1, ClassCounts{});
  for (std::size_t g = g_count; g-- > 0;) {
    reach[g] = reach[g + 1];
    for (int c = 0; c < kNumClasses; ++c) {
      if ((sigs[g] >> c) & 1u) reach[g][c] += static_cast<std::uint64_t>(kMaxMultiplicity) * sizes[g];
    }
  }
  const std::vector<int> start = totals;
  ClassCounts counts{};
  std::uint64_t nodes = 0;
  auto dfs = [&](auto&& self, std::size_t g) -> bool {
    if (++nodes > budget) return false;
    for (int c = 0; c < kNumClasses; ++c) {
      if (counts[c] > upper[c] || counts[c] + reach[g][c] < lower[c]) return false;
    }
    if (g == g_count) return true;
    const int max_total = kMaxMultiplicity * sizes[g];
    for (int step = 0; step <= 2 * max_total; ++step) {
      const int v = step % 2 == 0 ? start[g] - step / 2 : start[g] + (step + 1) / 2;
      if (v < 0 || v > max_total) continue;
      for (int c = 0; c < kNumClasses; ++c) {
        if ((sigs[g] >> c) & 1u) counts[c] += static_cast<std::uint64_t>(v);
      }
      totals[g] = v;
      const bool found = self(self, g + 1);
      for (int c = 0; c < kNumClasses; ++c) {
        if ((sigs[g] >> c) & 1u) counts[c] -= static_cast<std::uint64_t>(v);
      }
      if (found) return true;
      if (nodes > budget) return false;
    }
    return false;
  };
  if (dfs(dfs, 0)) return true;
  totals = start;
  return false;
}

// Steepest descent over single and paired multiplicity moves between
// presence signatures. Leaves the plan untouched when it has no violation.
void repair_plan(const Manifest& manifest, const std::vector<LabelSet>& signature, const ClassCounts& original,
                 const ClassCounts& target, std::vector<int>& mult, ClassCounts& realized) {
  if (plan_penalty(realized, original, target).first == 0) return;

  std::map<LabelSet, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < signature.size(); ++i) members[signature[i]].push_back(i);
  std::vector<LabelSet> sigs;
  for (auto& [sig, ids] : members) {
    sigs.push_back(sig);
    std::sort(ids.begin(), ids.end(),
              [&](std::size_t a, std::size_t b) { return manifest.records[a].id < manifest.records[b].id; });
  }
  auto grow_pick = [&](LabelSet sig) -> std::size_t {
    for (std::size_t i : members[sig]) {
      if (mult[i] < kMaxMultiplicity) return i;
    }
    return signature.size();
  };
  auto shrink_pick = [&](LabelSet sig) -> std::size_t {
    std::size_t best = signature.size();
    for (std::size_t i : members[sig]) {
      if (mult[i] > 0 && (best == signature.size() || mult[i] > mult[best])) best = i;
    }
    return best;
  };
  auto shifted = [&](ClassCounts counts, LabelSet sig, int delta) {
    for (int c = 0; c < kNumClasses; ++c) {
      if ((sig >> c) & 1u) counts[c] = static_cast<std::uint64_t>(static_cast<std::int64_t>(counts[c]) + delta);
    }
    return counts;
  };

  auto current = plan_penalty(realized, original, target);
  while (current.first > 0) {
    auto best = current;
    std::size_t best_up = signature.size();
    std::size_t best_down = signature.size();
    const std::size_t none = signature.size();
    for (std::size_t a = 0; a <= sigs.size(); ++a) {
      const std::size_t up = a < sigs.size() ? grow_pick(sigs[a]) : none;
      if (a < sigs.size() && up == none) continue;
      const ClassCounts raised = up == none ? realized : shifted(realized, sigs[a], +1);
      for (std::size_t b = 0; b <= sigs.size(); ++b) {
        if (b == a && up != none) continue;
        const std::size_t down = b < sigs.size() ? shrink_pick(sigs[b]) : none;
        if (b < sigs.size() && down == none) continue;
        if (up == none && down == none) continue;
        const ClassCounts moved = down == none ? raised : shifted(raised, sigs[b], -1);
        const auto penalty = plan_penalty(moved, original, target);
        if (penalty < best) {
          best = penalty;
          best_up = up;
          best_down = down;
        }
      }
    }
    if (best_up == none && best_down == none) break;
    if (best_up != none) {
      ++mult[best_up];
      realized = shifted(realized, signature[best_up], +1);
    }
    if (best_down != none) {
      --mult[best_down];
      realized = shifted(realized, signature[best_down], -1);
    }
    current = best;
  }
  if (current.first == 0) return;

  // Local moves stalled; redistribute multiplicities from exact per-signature
  // totals when a violation-free assignment exists within the search budget.
  std::vector<int> sizes;
  std::vector<int> totals;
  for (LabelSet sig : sigs) {
    sizes.push_back(static_cast<int>(members[sig].size()));
    int total = 0;
    for (std::size_t i : members[sig]) total += mult[i];
    totals.push_back(total);
  }
  if (!exact_search(sigs, sizes, original, target, totals, kExactSearchBudget)) return;
  for (std::size_t g = 0; g < sigs.size(); ++g) {
    const auto& ids = members[sigs[g]];
    const int n = static_cast<int>(ids.size());
    for (int k = 0; k < n; ++k) mult[ids[k]] = totals[g] / n + (k < totals[g] % n ? 1 : 0);
  }
  realized = ClassCounts{};
  for (std::size_t i = 0; i < signature.size(); ++i) {
    for (int c = 0; c < kNumClasses; ++c) {
      if ((signature[i] >> c) & 1u) realized[c] += static_cast<std::uint64_t>(mult[i]);
    }
  }
}

}  // namespace

Direction TargetCounts::direction(const ClassCounts& original, int c) const {
  if (original[c] < targets[c]) return Direction::over;
  if (original[c] > targets[c]) return Direction::under;
  return Direction::at;
}

void validate(const TargetCounts& targets) {
  for (int c = 0; c < kNumClasses; ++c) {
    if (targets.targets[c] == 0) {
      throw Error(ErrorKind::InvalidArgument, "target for class " + std::to_string(c) + " must be positive");
    }
  }
}

ClassCounts realized_counts(const Manifest& manifest, const SamplePlan& plan) {
  std::unordered_map<std::string, const TileRecord*> by_id;
  for (const auto& rec : manifest.records) by_id.emplace(rec.id, &rec);
  ClassCounts counts{};
  for (const auto& entry : plan.entries) {
    auto it = by_id.find(entry.id);
    if (it == by_id.end()) throw Error(ErrorKind::UnknownTileId, entry.id);
    for (int c = 0; c < kNumClasses; ++c) {
      if (it->second->presence[c]) counts[c] += static_cast<std::uint64_t>(entry.multiplicity);
    }
  }
  return counts;
}

SamplePlan plan_resample(const Manifest& manifest, const TargetCounts& targets, std::uint64_t seed) {
  if (manifest.records.empty()) throw Error(ErrorKind::EmptyManifest, "cannot resample an empty manifest");
  validate(targets);
  const auto& target = targets.targets;
  const std::size_t n = manifest.records.size();

  {
    std::vector<std::string_view> ids;
    ids.reserve(n);
    for (const auto& rec : manifest.records) ids.push_back(rec.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw Error(ErrorKind::InvalidArgument, "resampling requires unique tile ids");
    }
  }

  const ClassCounts original = class_counts(manifest);
  for (int c = 0; c < kNumClasses; ++c) {
    if (original[c] == 0) throw UnreachableTargetError(c, 0, target[c]);
  }

  std::vector<int> mult(n, 1);
  std::vector<LabelSet> signature(n);
  for (std::size_t i = 0; i < n; ++i) signature[i] = signature_of(manifest.records[i]);
  ClassCounts realized = original;

  // Tiles with equal presence score identically, so the greedy search runs
  // over signatures. Each signature queue holds its uncapped tiles by id.
  std::map<LabelSet, std::vector<std::size_t>> queues;
  for (std::size_t i = 0; i < n; ++i) queues[signature[i]].push_back(i);
  for (auto& [sig, q] : queues) {
    std::sort(q.begin(), q.end(),
              [&](std::size_t a, std::size_t b) { return manifest.records[a].id < manifest.records[b].id; });
  }
  std::map<LabelSet, std::size_t> head;
  for (const auto& [sig, q] : queues) head[sig] = 0;

  auto below_any = [&] {
    for (int c = 0; c < kNumClasses; ++c) {
      if (realized[c] < target[c]) return true;
    }
    return false;
  };

  // Classes a tile would push further from target (present and not below it).
  auto collateral = [&](LabelSet sig) {
    int n_side = 0;
    for (int c = 0; c < kNumClasses; ++c) {
      if (((sig >> c) & 1u) && realized[c] >= target[c]) ++n_side;
    }
    return n_side;
  };

  while (below_any()) {
    double best_score = 0.0;
    int best_collateral = 0;
    std::size_t best_tile = n;
    for (const auto& [sig, q] : queues) {
      const std::size_t h = head[sig];
      if (h >= q.size()) continue;
      double score = 0.0;
      for (int c = 0; c < kNumClasses; ++c) {
        if (((sig >> c) & 1u) && realized[c] < target[c]) {
          score += static_cast<double>(target[c] - realized[c]) / static_cast<double>(target[c]);
        }
      }
      if (score <= 0.0) continue;
      const std::size_t candidate = q[h];
      const int side = collateral(sig);
      const bool better =
          best_tile == n || score > best_score ||
          (score == best_score &&
           (side < best_collateral ||
            (side == best_collateral && manifest.records[candidate].id < manifest.records[best_tile].id)));
      if (better) {
        best_score = score;
        best_collateral = side;
        best_tile = candidate;
      }
    }
    if (best_tile == n) break;
    ++mult[best_tile];
    for (int c = 0; c < kNumClasses; ++c) {
      if ((signature[best_tile] >> c) & 1u) ++realized[c];
    }
    if (mult[best_tile] >= kMaxMultiplicity) ++head[signature[best_tile]];
  }

  for (int c = 0; c < kNumClasses; ++c) {
    if (static_cast<double>(realized[c]) < kLowerTolerance * static_cast<double>(target[c])) {
      throw UnreachableTargetError(c, original[c] * kMaxMultiplicity, target[c]);
    }
  }

  // Down-sampling visits tiles covering more classes first so that every
  // decrement corrects as many overshooting classes as possible; the seeded
  // shuffle orders tiles of equal coverage.
  std::vector<std::size_t> order = seeded_permutation(n, seed, 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::popcount(static_cast<unsigned>(signature[a])) > std::popcount(static_cast<unsigned>(signature[b]));
  });
  auto all_above = [&](std::size_t i) {
    for (int c = 0; c < kNumClasses; ++c) {
      if (((signature[i] >> c) & 1u) && realized[c] <= target[c]) return false;
    }
    return true;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i : order) {
      if (mult[i] == 0 || !all_above(i)) continue;
      --mult[i];
      for (int c = 0; c < kNumClasses; ++c) {
        if ((signature[i] >> c) & 1u) --realized[c];
      }
      changed = true;
    }
  }

  repair_plan(manifest, signature, original, target, mult, realized);

  SamplePlan plan;
  plan.seed = seed;
  plan.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) plan.entries.push_back({manifest.records[i].id, mult[i]});
  plan.realized = realized;
  return plan;
}

Manifest apply_plan(const Manifest& manifest, const SamplePlan& plan) {
  std::unordered_map<std::string, int> multiplicity;
  std::unordered_map<std::string, bool> known;
  for (const auto& rec : manifest.records) known.emplace(rec.id, true);
  for (const auto& entry : plan.entries) {
    if (!known.count(entry.id)) throw Error(ErrorKind::UnknownTileId, entry.id);
    if (entry.multiplicity < 0) throw Error(ErrorKind::InvalidArgument, "negative multiplicity for " + entry.id);
    multiplicity[entry.id] = entry.multiplicity;
  }
  Manifest out;
  out.split = manifest.split;
  out.provenance = "resampled from [" + manifest.provenance + "] with seed " + std::to_string(plan.seed);
  for (const auto& rec : manifest.records) {
    auto it = multiplicity.find(rec.id);
    const int m = it == multiplicity.end() ? 0 : it->second;
    for (int k = 1; k <= m; ++k) {
      TileRecord copy = rec;
      copy.occurrence = k;
      out.records.push_back(std::move(copy));
    }
  }
  return out;
}

bool satisfies_monotone_goal(const ClassCounts& original, const ClassCounts& realized, const TargetCounts& targets) {
  for (int c = 0; c < kNumClasses; ++c) {
    if (abs_diff(realized[c], targets.targets[c]) > abs_diff(original[c], targets.targets[c])) return false;
  }
  return true;
}

TargetCounts read_targets(const std::filesystem::path& path) {
  TargetCounts t;
  try {
    const auto j = nlohmann::json::parse(slurp(path));
    const auto& arr = j.at("targets");
    if (!arr.is_array() || arr.size() != kNumClasses) {
      throw Error(ErrorKind::BadFormat, path.string() + ": \"targets\" must hold 9 integers");
    }
    for (int c = 0; c < kNumClasses; ++c) {
      if (!arr[c].is_number_integer() || arr[c].get<std::int64_t>() <= 0) {
        throw Error(ErrorKind::BadFormat, path.string() + ": targets must be positive integers");
      }
      t.targets[c] = arr[c].get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadFormat, path.string() + ": " + e.what());
  }
  return t;
}

void write_targets(const std::filesystem::path& path, const TargetCounts& targets) {
  ordered_json j;
  j["targets"] = targets.targets;
  spill(path, j.dump() + "\n");
}

std::string plan_to_json(const SamplePlan& plan) {
  ordered_json j;
  j["seed"] = plan.seed;
  ordered_json entries = ordered_json::array();
  for (const auto& e : plan.entries) entries.push_back(ordered_json::array({e.id, e.multiplicity}));
  j["entries"] = std::move(entries);
  j["realized"] = plan.realized;
  return j.dump() + "\n";
}

SamplePlan plan_from_json(const std::string& text) {
  SamplePlan plan;
  try {
    const auto j = nlohmann::json::parse(text);
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("entries")) {
      plan.entries.push_back({e.at(0).get<std::string>(), e.at(1).get<int>()});
    }
    plan.realized = j.at("realized").get<ClassCounts>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadFormat, std::string("plan: ") + e.what());
  }
  return plan;
}

void write_plan(const std::filesystem::path& path, const SamplePlan& plan) { spill(path, plan_to_json(plan)); }

SamplePlan read_plan(const std::filesystem::path& path) { return plan_from_json(slurp(path)); }

}  // namespace agv
