#include "clickmodel/taxonomy.hpp"

#include <json.hpp>

#include <algorithm>

namespace clickmodel {

bool GlobalDeps::uses(Variable v) const {
  switch (v) {
    case Variable::topics: return topics;
    case Variable::items: return items;
    case Variable::clicks: return clicks;
  }
  return false;
}

GlobalDeps parse_deps(std::string_view text) {
  GlobalDeps deps;
  if (text.empty() || text == "none") return deps;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto token = text.substr(start, end - start);
    if (token == "topics") {
      deps.topics = true;
    } else if (token == "items") {
      deps.items = true;
    } else if (token == "clicks") {
      deps.clicks = true;
    } else {
      throw ValidationError("unknown dependency \"" + std::string(token) + "\" (expected topics, items or clicks)");
    }
    start = end + 1;
  }
  return deps;
}

std::string to_string(const GlobalDeps& deps) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(deps.topics, "topics");
  add(deps.items, "items");
  add(deps.clicks, "clicks");
  return out.empty() ? "none" : out;
}

std::string_view display_name(TaxonomyCategory c) {
  switch (c) {
    case TaxonomyCategory::Random: return "Random";
    case TaxonomyCategory::ClicksOnly: return "Clicks-Only";
    case TaxonomyCategory::ItemsOnly: return "Items-Only";
    case TaxonomyCategory::ItemsClicks: return "Items-Clicks";
    case TaxonomyCategory::TopicsOnly: return "Topics-Only";
    case TaxonomyCategory::TopicsClicks: return "Topics-Clicks";
    case TaxonomyCategory::TopicsItems: return "Topics-Items";
    case TaxonomyCategory::FullyDependent: return "Fully Dependent";
  }
  return "?";
}

TaxonomyCategory classify(const GlobalDeps& deps) {
  if (deps.topics) {
    if (deps.items) return deps.clicks ? TaxonomyCategory::FullyDependent : TaxonomyCategory::TopicsItems;
    return deps.clicks ? TaxonomyCategory::TopicsClicks : TaxonomyCategory::TopicsOnly;
  }
  if (deps.items) return deps.clicks ? TaxonomyCategory::ItemsClicks : TaxonomyCategory::ItemsOnly;
  return deps.clicks ? TaxonomyCategory::ClicksOnly : TaxonomyCategory::Random;
}

std::string_view to_string(SetBuilder b) {
  switch (b) {
    case SetBuilder::none: return "none";
    case SetBuilder::self: return "self";
    case SetBuilder::same_row_prefix: return "same_row_prefix";
    case SetBuilder::prefix_rows: return "prefix_rows";
    case SetBuilder::prefix_items: return "prefix_items";
    case SetBuilder::prefix_clicks: return "prefix_clicks";
    case SetBuilder::all: return "all";
  }
  return "?";
}

SetBuilder parse_set_builder(std::string_view name) {
  for (auto b : {SetBuilder::none, SetBuilder::self, SetBuilder::same_row_prefix, SetBuilder::prefix_rows,
                 SetBuilder::prefix_items, SetBuilder::prefix_clicks, SetBuilder::all}) {
    if (to_string(b) == name) return b;
  }
  throw ValidationError("unknown sequentiality builder \"" + std::string(name) + "\"");
}

bool builder_allowed(Variable v, SetBuilder b) {
  switch (v) {
    case Variable::topics:
      return b == SetBuilder::none || b == SetBuilder::self || b == SetBuilder::prefix_rows || b == SetBuilder::all;
    case Variable::items:
      return b != SetBuilder::prefix_clicks;
    case Variable::clicks:
      return b != SetBuilder::self && b != SetBuilder::prefix_items;
  }
  return false;
}

SetBuilder SequentialitySpec::builder(Variable v) const {
  switch (v) {
    case Variable::topics: return topics;
    case Variable::items: return items;
    case Variable::clicks: return clicks;
  }
  return SetBuilder::none;
}

bool SequentialitySpec::conditions_on(Variable v) const {
  if (v == Variable::clicks && explicit_clicks) {
    return std::any_of(explicit_clicks->begin(), explicit_clicks->end(),
                       [](const auto& kv) { return !kv.second.empty(); });
  }
  return builder(v) != SetBuilder::none;
}

std::vector<int> SequentialitySpec::cond_topics(const LayoutShape& shape, const Position& p) const {
  std::vector<int> rows;
  switch (topics) {
    case SetBuilder::self: rows.push_back(p.row); break;
    case SetBuilder::prefix_rows:
      for (int k = 0; k <= p.row; ++k) rows.push_back(k);
      break;
    case SetBuilder::all:
      for (int k = 0; k < shape.m; ++k) rows.push_back(k);
      break;
    default: break;
  }
  return rows;
}

std::vector<Position> SequentialitySpec::cond_items(const LayoutShape& shape, const Position& p) const {
  std::vector<Position> out;
  switch (items) {
    case SetBuilder::self: out.push_back(p); break;
    case SetBuilder::same_row_prefix:
      for (int l = 0; l < p.col; ++l) out.push_back({p.row, l});
      break;
    case SetBuilder::prefix_items:
      for (int l = 0; l <= p.col; ++l) out.push_back({p.row, l});
      break;
    case SetBuilder::prefix_rows:
      for (int k = 0; k <= p.row; ++k)
        for (int l = 0; l < shape.n; ++l) out.push_back({k, l});
      break;
    case SetBuilder::all:
      for (int k = 0; k < shape.m; ++k)
        for (int l = 0; l < shape.n; ++l) out.push_back({k, l});
      break;
    default: break;
  }
  return out;
}

std::vector<Position> SequentialitySpec::cond_clicks(const LayoutShape& shape, const Position& p) const {
  if (explicit_clicks) {
    auto it = explicit_clicks->find(p);
    if (it == explicit_clicks->end()) return {};
    auto out = it->second;
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<Position> out;
  switch (clicks) {
    case SetBuilder::same_row_prefix:
      for (int l = 0; l < p.col; ++l) out.push_back({p.row, l});
      break;
    case SetBuilder::prefix_rows:
      for (int k = 0; k < p.row; ++k)
        for (int l = 0; l < shape.n; ++l) out.push_back({k, l});
      break;
    case SetBuilder::prefix_clicks:
      for (int k = 0; k < flat_index(shape, p); ++k) out.push_back(from_flat(shape, k));
      break;
    case SetBuilder::all:
      for (int k = 0; k < shape.cells(); ++k) {
        if (k != flat_index(shape, p)) out.push_back(from_flat(shape, k));
      }
      break;
    default: break;
  }
  return out;
}

std::string_view to_string(ScopeElement e) {
  switch (e) {
    case ScopeElement::position: return "position";
    case ScopeElement::topics: return "topics";
    case ScopeElement::items: return "items";
    case ScopeElement::clicks: return "clicks";
  }
  return "?";
}

ScopeElement parse_scope_element(std::string_view name) {
  if (name == "position") return ScopeElement::position;
  if (name == "topics") return ScopeElement::topics;
  if (name == "items") return ScopeElement::items;
  if (name == "clicks") return ScopeElement::clicks;
  throw ValidationError("unknown factor scope element \"" + std::string(name) + "\"");
}

std::string_view to_string(Combine c) { return c == Combine::product ? "product" : "product_plus_term"; }

Combine parse_combine(std::string_view name) {
  if (name == "product") return Combine::product;
  if (name == "product_plus_term") return Combine::product_plus_term;
  throw ValidationError("unknown combine \"" + std::string(name) + "\"");
}

namespace {

std::string cycle_message(const std::vector<Position>& cycle) {
  std::string msg = "cyclic click dependency:";
  for (const auto& p : cycle) msg += " (" + to_string(p) + ")";
  return msg;
}

}  // namespace

CycleError::CycleError(std::vector<Position> cycle)
    : ValidationError(cycle_message(cycle)), cycle_(std::move(cycle)) {}

std::optional<std::vector<Position>> find_click_cycle(const SequentialitySpec& seq, const LayoutShape& shape) {
  const int n = shape.cells();
  std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto p = from_flat(shape, k);
    for (const auto& q : seq.cond_clicks(shape, p)) {
      if (!contains(shape, q)) {
        throw ValidationError("click condition " + to_string(q) + " outside layout " + to_string(shape));
      }
      succ[static_cast<std::size_t>(flat_index(shape, q))].push_back(k);
    }
  }
  for (auto& s : succ) std::sort(s.begin(), s.end());

  enum Color : char { white, grey, black };
  std::vector<Color> color(static_cast<std::size_t>(n), white);
  std::vector<int> stack;
  std::vector<std::size_t> next;
  for (int root = 0; root < n; ++root) {
    if (color[root] != white) continue;
    stack = {root};
    next = {0};
    color[root] = grey;
    while (!stack.empty()) {
      const int u = stack.back();
      auto& cursor = next.back();
      if (cursor < succ[u].size()) {
        const int v = succ[u][cursor++];
        if (color[v] == grey) {
          auto from = std::find(stack.begin(), stack.end(), v);
          std::vector<Position> cycle;
          for (auto it = from; it != stack.end(); ++it) cycle.push_back(from_flat(shape, *it));
          cycle.push_back(from_flat(shape, v));
          return cycle;
        }
        if (color[v] == white) {
          color[v] = grey;
          stack.push_back(v);
          next.push_back(0);
        }
      } else {
        color[u] = black;
        stack.pop_back();
        next.pop_back();
      }
    }
  }
  return std::nullopt;
}

void validate_sequentiality(const SequentialitySpec& seq, const LayoutShape& shape) {
  if (seq.explicit_clicks) {
    for (const auto& [p, qs] : *seq.explicit_clicks) {
      if (!contains(shape, p)) throw ValidationError("click condition for " + to_string(p) + " outside layout");
      if (std::find(qs.begin(), qs.end(), p) != qs.end()) {
        throw ValidationError("position " + to_string(p) + " conditions on its own click");
      }
    }
  }
  if (auto cycle = find_click_cycle(seq, shape)) throw CycleError(std::move(*cycle));
}

void validate_sequentiality(const SequentialitySpec& seq) {
  LayoutShape shape{1, 2};
  if (seq.explicit_clicks) {
    for (const auto& [p, qs] : *seq.explicit_clicks) {
      shape.m = std::max(shape.m, p.row + 1);
      shape.n = std::max(shape.n, p.col + 1);
      for (const auto& q : qs) {
        shape.m = std::max(shape.m, q.row + 1);
        shape.n = std::max(shape.n, q.col + 1);
      }
    }
  }
  validate_sequentiality(seq, shape);
}

void validate_descriptor(const ModelDescriptor& d) {
  for (auto v : {Variable::topics, Variable::items, Variable::clicks}) {
    const auto b = d.seq.builder(v);
    if (!builder_allowed(v, b)) {
      if (v == Variable::clicks && b == SetBuilder::self) {
        throw ValidationError("a click cannot condition on itself (clicks builder \"self\")");
      }
      throw ValidationError("builder \"" + std::string(to_string(b)) + "\" not allowed here");
    }
    if (!d.deps.uses(v) && d.seq.conditions_on(v)) {
      throw ValidationError("sequentiality conditions on a tuple excluded by the global dependencies");
    }
  }
  if (d.seq.explicit_clicks) {
    for (const auto& [p, qs] : *d.seq.explicit_clicks) {
      if (std::find(qs.begin(), qs.end(), p) != qs.end()) {
        throw ValidationError("position " + to_string(p) + " conditions on its own click");
      }
    }
  }

  FactorScope used;
  for (const auto& f : d.fact.factors) used.insert(f.begin(), f.end());
  used.erase(ScopeElement::position);
  FactorScope conditioned;
  if (d.seq.conditions_on(Variable::topics)) conditioned.insert(ScopeElement::topics);
  if (d.seq.conditions_on(Variable::items)) conditioned.insert(ScopeElement::items);
  if (d.seq.conditions_on(Variable::clicks)) conditioned.insert(ScopeElement::clicks);
  if (used != conditioned) throw ValidationError("factor scopes must cover exactly the conditioned tuples");

  if (d.fact.combine == Combine::product_plus_term && d.fact.factors.size() < 2) {
    throw ValidationError("product_plus_term needs a product part and exactly one additive term");
  }
}

bool equivalent(const ModelDescriptor& a, const ModelDescriptor& b) {
  if (a.deps != b.deps || a.seq != b.seq || a.fact.combine != b.fact.combine) return false;
  auto fa = a.fact.factors;
  auto fb = b.fact.factors;
  if (fa.size() != fb.size()) return false;
  if (a.fact.combine == Combine::product_plus_term) {
    if (fa.empty() || fa.back() != fb.back()) return false;
    fa.pop_back();
    fb.pop_back();
  }
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  return fa == fb;
}

namespace {

using S = ScopeElement;

ModelDescriptor make(GlobalDeps deps, SetBuilder topics, SetBuilder items, SetBuilder clicks,
                     std::vector<FactorScope> factors, Combine combine = Combine::product) {
  ModelDescriptor d;
  d.deps = deps;
  d.seq.topics = topics;
  d.seq.items = items;
  d.seq.clicks = clicks;
  d.fact.factors = std::move(factors);
  d.fact.combine = combine;
  return d;
}

constexpr GlobalDeps kNone{};
constexpr GlobalDeps kY{false, true, false};
constexpr GlobalDeps kYC{false, true, true};
constexpr GlobalDeps kTY{true, true, false};
constexpr GlobalDeps kTYC{true, true, true};

using B = SetBuilder;

const std::map<std::string, ModelDescriptor, std::less<>>& catalog() {
  static const std::map<std::string, ModelDescriptor, std::less<>> table = {
      {"rcm", make(kNone, B::none, B::none, B::none, {{}})},
      {"rctr", make(kNone, B::none, B::none, B::none, {{S::position}})},
      {"dctr", make(kY, B::none, B::self, B::none, {{S::items}})},
      {"pbm", make(kY, B::none, B::self, B::none, {{S::position}, {S::items}})},
      {"trust_bias", make(kY, B::none, B::self, B::none, {{S::position}, {S::items}})},
      {"trust_pbm", make(kY, B::none, B::self, B::none, {{S::position}, {S::items}, {S::position}},
                         Combine::product_plus_term)},
      {"csm", make(kY, B::none, B::all, B::none, {{S::items}})},
      {"xpa", make(kY, B::none, B::all, B::none, {{S::items}, {S::items, S::position}})},
      {"rbnn", make(kY, B::none, B::prefix_items, B::none, {{S::items}})},
      {"cascade", make(kYC, B::none, B::self, B::same_row_prefix, {{S::items}, {S::clicks}})},
      {"ubm", make(kYC, B::none, B::self, B::same_row_prefix, {{S::items}, {S::clicks}})},
      {"dcm", make(kYC, B::none, B::self, B::same_row_prefix, {{S::items}, {S::position, S::clicks}})},
      {"dbn", make(kYC, B::none, B::prefix_items, B::same_row_prefix, {{S::items}, {S::items, S::clicks}})},
      {"ncm", make(kYC, B::none, B::prefix_items, B::same_row_prefix, {{S::items, S::clicks}})},
      {"cacm", make(kTYC, B::prefix_rows, B::self, B::same_row_prefix, {{S::topics}, {S::items}, {S::clicks}})},
      {"topics_items_v1", make(kTY, B::prefix_rows, B::prefix_items, B::none, {{S::topics}, {S::items}})},
      {"topics_items_v2", make(kTY, B::prefix_rows, B::prefix_items, B::none, {{S::items}, {S::topics, S::items}})},
  };
  return table;
}

}  // namespace

ModelDescriptor descriptor_of(std::string_view model_kind) {
  const auto& table = catalog();
  auto it = table.find(model_kind);
  if (it == table.end()) throw ValidationError("unknown model kind \"" + std::string(model_kind) + "\"");
  return it->second;
}

std::vector<std::string> catalog_descriptor_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : catalog()) names.push_back(name);
  return names;
}

std::string descriptor_to_json(const ModelDescriptor& d) {
  nlohmann::ordered_json j;
  auto deps = nlohmann::ordered_json::array();
  if (d.deps.topics) deps.push_back("topics");
  if (d.deps.items) deps.push_back("items");
  if (d.deps.clicks) deps.push_back("clicks");
  j["deps"] = deps;
  nlohmann::ordered_json seq;
  seq["topics"] = std::string(to_string(d.seq.topics));
  seq["items"] = std::string(to_string(d.seq.items));
  if (d.seq.explicit_clicks) {
    nlohmann::ordered_json sets = nlohmann::ordered_json::object();
    for (const auto& [p, qs] : *d.seq.explicit_clicks) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& q : qs) arr.push_back(to_string(q));
      sets[to_string(p)] = arr;
    }
    seq["clicks"] = {{"explicit", sets}};
  } else {
    seq["clicks"] = std::string(to_string(d.seq.clicks));
  }
  j["seq"] = seq;
  auto factors = nlohmann::ordered_json::array();
  for (const auto& f : d.fact.factors) {
    auto scope = nlohmann::ordered_json::array();
    for (auto e : f) scope.push_back(std::string(to_string(e)));
    factors.push_back(scope);
  }
  j["factors"] = factors;
  j["combine"] = std::string(to_string(d.fact.combine));
  return j.dump();
}

ModelDescriptor descriptor_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed descriptor JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("descriptor must be a JSON object");
  ModelDescriptor d;
  try {
    for (const auto& dep : j.at("deps")) {
      const auto name = dep.get<std::string>();
      if (name == "topics") {
        d.deps.topics = true;
      } else if (name == "items") {
        d.deps.items = true;
      } else if (name == "clicks") {
        d.deps.clicks = true;
      } else {
        throw ValidationError("unknown dependency \"" + name + "\"");
      }
    }
    const auto& seq = j.at("seq");
    if (seq.contains("topics")) d.seq.topics = parse_set_builder(seq["topics"].get<std::string>());
    if (seq.contains("items")) d.seq.items = parse_set_builder(seq["items"].get<std::string>());
    if (seq.contains("clicks")) {
      const auto& c = seq["clicks"];
      if (c.is_object()) {
        ExplicitClickSets sets;
        for (const auto& [key, qs] : c.at("explicit").items()) {
          auto& dst = sets[parse_position(key)];
          for (const auto& q : qs) dst.push_back(parse_position(q.get<std::string>()));
        }
        d.seq.explicit_clicks = std::move(sets);
      } else {
        d.seq.clicks = parse_set_builder(c.get<std::string>());
      }
    }
    for (const auto& f : j.at("factors")) {
      FactorScope scope;
      for (const auto& e : f) scope.insert(parse_scope_element(e.get<std::string>()));
      d.fact.factors.push_back(std::move(scope));
    }
    d.fact.combine = parse_combine(j.value("combine", std::string("product")));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid descriptor: ") + e.what());
  }
  validate_descriptor(d);
  return d;
}

}  // namespace clickmodel
