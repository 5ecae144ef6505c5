#pragma once

// Synthetic layouts and click sampling. Session k draws everything from the
// Philox substream (seed, k), so a simulated log is a pure function of the
// model and the config, independent of the worker count.

#include "clickmodel/core.hpp"
#include "clickmodel/models.hpp"
#include "clickmodel/random.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace clickmodel {

enum class LayoutPolicy { uniform_without_replacement, fixed };

std::string_view to_string(LayoutPolicy p);
LayoutPolicy parse_layout_policy(std::string_view name);

struct SimConfig {
  LayoutShape shape;
  InterfaceKind kind = InterfaceKind::single_list;
  std::int64_t topic_universe = 0;
  std::int64_t item_universe = 0;
  std::int64_t sessions = 1;
  std::uint64_t seed = 0;
  LayoutPolicy layout_policy = LayoutPolicy::uniform_without_replacement;
  /// Names of the universe entries; generated as "i0", "i1", ... / "t0", ...
  /// when empty. When given, their sizes override the universe counts.
  std::vector<std::string> item_names;
  std::vector<std::string> topic_names;
  int threads = 1;
};

/// Throws ValidationError naming the violated constraint.
void validate(const SimConfig& cfg);

/// Universe vocabularies of a config (ids = universe indices).
Vocabulary item_universe(const SimConfig& cfg);
Vocabulary topic_universe(const SimConfig& cfg);

/// Layout with all clicks 0; ids index the universe vocabularies. Items are
/// drawn without replacement (or the first M*N in order for `fixed`), topics
/// likewise for carousels.
SessionRecord sample_layout(const SimConfig& cfg, RandomStream& stream);

/// Positions in topological order of the click graph, ready positions taken
/// row-major. Throws CycleError.
std::vector<Position> sampling_order(const SequentialitySpec& seq, const LayoutShape& shape);

/// Draws every click in sampling order from the model's conditional given the
/// clicks sampled so far. Only already-sampled cells are assigned in the
/// prior, so reading an unsampled one raises.
SessionRecord sample_clicks(const BoundModel& model, const SessionRecord& skeleton, RandomStream& stream);
/// Same, with a precomputed sampling_order.
SessionRecord sample_clicks(const BoundModel& model, const SessionRecord& skeleton, RandomStream& stream,
                            const std::vector<Position>& order);

/// Simulated log with compacted, first-seen vocabularies.
ClickLog simulate_log(const ModelInstance& model, const SimConfig& cfg);

}  // namespace clickmodel
