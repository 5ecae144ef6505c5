#include "clickmodel/simulation.hpp"

#include "clickmodel/error.hpp"
#include "clickmodel/parallel.hpp"

#include <numeric>

namespace clickmodel {

std::string_view to_string(LayoutPolicy p) {
  return p == LayoutPolicy::fixed ? "fixed" : "uniform_without_replacement";
}

LayoutPolicy parse_layout_policy(std::string_view name) {
  if (name == "fixed") return LayoutPolicy::fixed;
  if (name == "uniform" || name == "uniform_without_replacement") return LayoutPolicy::uniform_without_replacement;
  throw ValidationError("unknown layout policy \"" + std::string(name) + "\"");
}

namespace {

std::int64_t item_count(const SimConfig& cfg) {
  return cfg.item_names.empty() ? cfg.item_universe : static_cast<std::int64_t>(cfg.item_names.size());
}
std::int64_t topic_count(const SimConfig& cfg) {
  return cfg.topic_names.empty() ? cfg.topic_universe : static_cast<std::int64_t>(cfg.topic_names.size());
}

// First `k` entries of a Fisher-Yates shuffle of [0, n). Only displaced
// slots are stored, so the cost is O(k^2) rather than O(n).
std::vector<std::int32_t> draw_without_replacement(std::int64_t n, int k, RandomStream& stream) {
  std::vector<std::pair<std::int64_t, std::int64_t>> moved;
  auto slot = [&](std::int64_t idx) {
    for (const auto& [at, value] : moved) {
      if (at == idx) return value;
    }
    return idx;
  };
  auto set = [&](std::int64_t idx, std::int64_t value) {
    for (auto& [at, v] : moved) {
      if (at == idx) {
        v = value;
        return;
      }
    }
    moved.emplace_back(idx, value);
  };
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) {
    const auto pick = t + static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(n - t)));
    const auto a = slot(t);
    const auto b = slot(pick);
    set(pick, a);
    set(t, b);
    out.push_back(static_cast<std::int32_t>(b));
  }
  return out;
}

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.sessions < 1) throw ValidationError("sessions must be ≥ 1");
  if (cfg.shape.m < 1 || cfg.shape.n < 1) throw ValidationError("shape must be at least 1x1");
  if (cfg.kind == InterfaceKind::single_list && cfg.shape.m != 1) {
    throw ValidationError("single_list layouts need exactly one row");
  }
  if (item_count(cfg) < cfg.shape.cells()) {
    throw ValidationError("item universe (" + std::to_string(item_count(cfg)) + ") smaller than M*N = " +
                          std::to_string(cfg.shape.cells()));
  }
  if (cfg.kind == InterfaceKind::carousel && topic_count(cfg) < cfg.shape.m) {
    throw ValidationError("topic universe (" + std::to_string(topic_count(cfg)) + ") smaller than M = " +
                          std::to_string(cfg.shape.m));
  }
}

Vocabulary item_universe(const SimConfig& cfg) {
  Vocabulary v;
  if (!cfg.item_names.empty()) {
    for (const auto& name : cfg.item_names) v.intern(name);
  } else {
    for (std::int64_t k = 0; k < cfg.item_universe; ++k) v.intern("i" + std::to_string(k));
  }
  return v;
}

Vocabulary topic_universe(const SimConfig& cfg) {
  Vocabulary v;
  if (cfg.kind != InterfaceKind::carousel) return v;
  if (!cfg.topic_names.empty()) {
    for (const auto& name : cfg.topic_names) v.intern(name);
  } else {
    for (std::int64_t k = 0; k < cfg.topic_universe; ++k) v.intern("t" + std::to_string(k));
  }
  return v;
}

SessionRecord sample_layout(const SimConfig& cfg, RandomStream& stream) {
  validate(cfg);
  const int cells = cfg.shape.cells();
  SessionRecord s;
  s.kind = cfg.kind;
  s.items.resize(cfg.shape.m, cfg.shape.n);
  s.clicks = ClickMatrix::Zero(cfg.shape.m, cfg.shape.n);
  std::vector<std::int32_t> items;
  std::vector<std::int32_t> topics;
  if (cfg.layout_policy == LayoutPolicy::fixed) {
    items.resize(static_cast<std::size_t>(cells));
    std::iota(items.begin(), items.end(), 0);
    if (cfg.kind == InterfaceKind::carousel) {
      topics.resize(static_cast<std::size_t>(cfg.shape.m));
      std::iota(topics.begin(), topics.end(), 0);
    }
  } else {
    if (cfg.kind == InterfaceKind::carousel) topics = draw_without_replacement(topic_count(cfg), cfg.shape.m, stream);
    items = draw_without_replacement(item_count(cfg), cells, stream);
  }
  for (int k = 0; k < cells; ++k) s.items(k / cfg.shape.n, k % cfg.shape.n) = items[static_cast<std::size_t>(k)];
  s.topics = std::move(topics);
  return s;
}

std::vector<Position> sampling_order(const SequentialitySpec& seq, const LayoutShape& shape) {
  validate_sequentiality(seq, shape);
  const int n = shape.cells();
  std::vector<int> pending(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    for (const auto& q : seq.cond_clicks(shape, from_flat(shape, k))) {
      succ[static_cast<std::size_t>(flat_index(shape, q))].push_back(k);
      ++pending[static_cast<std::size_t>(k)];
    }
  }
  std::vector<Position> order;
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  while (static_cast<int>(order.size()) < n) {
    // Smallest ready position in row-major order.
    int next = -1;
    for (int k = 0; k < n; ++k) {
      if (!done[k] && pending[k] == 0) {
        next = k;
        break;
      }
    }
    if (next < 0) throw InternalFault("no ready position in an acyclic click graph");
    done[next] = true;
    order.push_back(from_flat(shape, next));
    for (int v : succ[next]) --pending[v];
  }
  return order;
}

SessionRecord sample_clicks(const BoundModel& model, const SessionRecord& skeleton, RandomStream& stream) {
  return sample_clicks(model, skeleton, stream, sampling_order(model.model().descriptor().seq, skeleton.shape()));
}

SessionRecord sample_clicks(const BoundModel& model, const SessionRecord& skeleton, RandomStream& stream,
                            const std::vector<Position>& order) {
  const auto shape = skeleton.shape();
  SessionRecord s = skeleton;
  ClickAssignment prior = unassigned(shape);
  for (const auto& p : order) {
    const double q = model.conditional(s, p, prior);
    if (!(q >= 0.0 && q <= 1.0)) {
      throw InternalFault("conditional probability outside [0,1] at " + to_string(p));
    }
    const bool click = stream.uniform() < q;
    prior(p.row, p.col) = click ? 1 : 0;
    s.clicks(p.row, p.col) = click ? 1 : 0;
  }
  return s;
}

ClickLog simulate_log(const ModelInstance& model, const SimConfig& cfg) {
  validate(cfg);
  if (cfg.shape != model.shape()) {
    throw ValidationError("config shape " + to_string(cfg.shape) + " differs from model shape " +
                          to_string(model.shape()));
  }
  if (uses_topics(model.kind()) && cfg.kind != InterfaceKind::carousel) {
    throw ValidationError("model kind " + std::string(to_string(model.kind())) + " needs a carousel layout");
  }
  const auto items = item_universe(cfg);
  const auto topics = topic_universe(cfg);
  const BoundModel bound(model, items, topics);
  const auto order = sampling_order(model.descriptor().seq, cfg.shape);

  const auto total = static_cast<std::size_t>(cfg.sessions);
  std::vector<SessionRecord> sessions(total);
  const auto chunks = chunking_for(total);
  parallel_for(chunks.count, cfg.threads, [&](std::size_t c) {
    const auto end = std::min(total, (c + 1) * chunks.size);
    for (auto k = c * chunks.size; k < end; ++k) {
      RandomStream stream(cfg.seed, k);
      sessions[k] = sample_clicks(bound, sample_layout(cfg, stream), stream, order);
    }
  });

  // Renumber ids in first-seen order so the log equals its own round trip.
  ClickLog log(cfg.shape, cfg.kind);
  std::vector<std::int32_t> item_ids(static_cast<std::size_t>(items.size()), -1);
  std::vector<std::int32_t> topic_ids(static_cast<std::size_t>(topics.size()), -1);
  for (auto& s : sessions) {
    for (auto& t : s.topics) {
      auto& id = topic_ids[static_cast<std::size_t>(t)];
      if (id < 0) id = log.topics().intern(topics.name(t));
      t = id;
    }
    for (Eigen::Index i = 0; i < s.items.rows(); ++i) {
      for (Eigen::Index j = 0; j < s.items.cols(); ++j) {
        auto& id = item_ids[static_cast<std::size_t>(s.items(i, j))];
        if (id < 0) id = log.items().intern(items.name(s.items(i, j)));
        s.items(i, j) = id;
      }
    }
    log.add(std::move(s));
  }
  return log;
}

}  // namespace clickmodel
