#pragma once

// Model descriptors built from three design choices (global dependencies,
// sequentiality, factorization), click-graph cycle checks, the 8-way
// category classification and shape equivalence between descriptors.

#include "clickmodel/core.hpp"
#include "clickmodel/error.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace clickmodel {

enum class Variable { topics, items, clicks };

/// Which observed tuples click probabilities may depend on.
struct GlobalDeps {
  bool topics = false;
  bool items = false;
  bool clicks = false;

  bool uses(Variable v) const;
  bool operator==(const GlobalDeps&) const = default;
  auto operator<=>(const GlobalDeps&) const = default;
};

/// Parses a comma separated subset of {topics, items, clicks}; "" and "none"
/// give the empty set.
GlobalDeps parse_deps(std::string_view text);
std::string to_string(const GlobalDeps& deps);

enum class TaxonomyCategory {
  Random,
  ClicksOnly,
  ItemsOnly,
  ItemsClicks,
  TopicsOnly,
  TopicsClicks,
  TopicsItems,
  FullyDependent,
};

inline constexpr std::array<TaxonomyCategory, 8> kAllCategories = {
    TaxonomyCategory::Random,       TaxonomyCategory::ClicksOnly,   TaxonomyCategory::ItemsOnly,
    TaxonomyCategory::ItemsClicks,  TaxonomyCategory::TopicsOnly,   TaxonomyCategory::TopicsClicks,
    TaxonomyCategory::TopicsItems,  TaxonomyCategory::FullyDependent,
};

/// Display name, e.g. "Items-Only" or "Fully Dependent".
std::string_view display_name(TaxonomyCategory c);

TaxonomyCategory classify(const GlobalDeps& deps);

/// Intensional position-set rule, resolved against a position p = (i, j):
///
///   builder          topics        items                 clicks
///   none             {}            {}                    {}
///   self             {T_i}         {Y_ij}                (invalid)
///   same_row_prefix  (invalid)     {Y_il : l < j}        {C_il : l < j}
///   prefix_rows      {T_1..T_i}    rows 1..i, all cols   rows 1..i-1, all cols
///   prefix_items     (invalid)     {Y_il : l <= j}       (invalid)
///   prefix_clicks    (invalid)     (invalid)             row-major predecessors of p
///   all              all topics    all items             all clicks except p
enum class SetBuilder { none, self, same_row_prefix, prefix_rows, prefix_items, prefix_clicks, all };

std::string_view to_string(SetBuilder b);
SetBuilder parse_set_builder(std::string_view name);
bool builder_allowed(Variable v, SetBuilder b);

/// Explicit click-conditioning sets; positions not listed condition on nothing.
using ExplicitClickSets = std::map<Position, std::vector<Position>>;

struct SequentialitySpec {
  SetBuilder topics = SetBuilder::none;
  SetBuilder items = SetBuilder::none;
  SetBuilder clicks = SetBuilder::none;
  /// Overrides `clicks` when present.
  std::optional<ExplicitClickSets> explicit_clicks;

  SetBuilder builder(Variable v) const;
  bool conditions_on(Variable v) const;

  /// Topic rows that position p conditions on.
  std::vector<int> cond_topics(const LayoutShape& shape, const Position& p) const;
  std::vector<Position> cond_items(const LayoutShape& shape, const Position& p) const;
  std::vector<Position> cond_clicks(const LayoutShape& shape, const Position& p) const;

  /// The clicks builder is ignored when explicit sets override it.
  bool operator==(const SequentialitySpec& o) const {
    return topics == o.topics && items == o.items && explicit_clicks == o.explicit_clicks &&
           (explicit_clicks || clicks == o.clicks);
  }
};

/// Scope element of one factor. `position` is the rank of the clicked cell
/// itself, which is not an observed tuple.
enum class ScopeElement { position, topics, items, clicks };
using FactorScope = std::set<ScopeElement>;

enum class Combine { product, product_plus_term };

std::string_view to_string(ScopeElement e);
ScopeElement parse_scope_element(std::string_view name);
std::string_view to_string(Combine c);
Combine parse_combine(std::string_view name);

/// With product_plus_term the last factor is the additive term.
struct FactorizationDescriptor {
  std::vector<FactorScope> factors;
  Combine combine = Combine::product;

  bool operator==(const FactorizationDescriptor&) const = default;
};

struct ModelDescriptor {
  GlobalDeps deps;
  SequentialitySpec seq;
  FactorizationDescriptor fact;

  bool operator==(const ModelDescriptor&) const = default;
};

/// Raised when a click-conditioning graph has a directed cycle. The witness
/// starts and ends at the same position and follows dependency -> dependent
/// edges.
class CycleError : public ValidationError {
 public:
  explicit CycleError(std::vector<Position> cycle);
  const std::vector<Position>& cycle() const { return cycle_; }

 private:
  std::vector<Position> cycle_;
};

/// Returns a directed cycle of the click-conditioning graph on `shape`, if
/// any. Edges run q -> p for every q in cond_clicks(p).
std::optional<std::vector<Position>> find_click_cycle(const SequentialitySpec& seq, const LayoutShape& shape);

/// Throws CycleError with a witness when the click graph is cyclic.
void validate_sequentiality(const SequentialitySpec& seq, const LayoutShape& shape);
/// Shape-free form: builders are checked on a 1x2 layout, explicit sets on
/// the smallest layout covering every position they mention.
void validate_sequentiality(const SequentialitySpec& seq);

/// Checks every invariant that does not depend on a layout: allowed builders,
/// no conditioning on excluded tuples, no self-dependency, factor scopes
/// covering exactly the conditioned tuples, and the additive-term rule.
/// Throws ValidationError.
void validate_descriptor(const ModelDescriptor& d);

/// Same deps, same sequentiality, and factors equal as a multiset (the
/// additive term of product_plus_term compared separately).
bool equivalent(const ModelDescriptor& a, const ModelDescriptor& b);

/// Catalog identifiers: the twelve fittable kinds (rcm, rctr, dctr, pbm,
/// trust_pbm, cascade, ubm, dcm, dbn, cacm, topics_items_v1,
/// topics_items_v2) plus descriptor-only entries (trust_bias, csm, xpa, rbnn,
/// ncm). Throws ValidationError for unknown names.
ModelDescriptor descriptor_of(std::string_view model_kind);
std::vector<std::string> catalog_descriptor_names();

// Descriptor exchange format:
//   {"deps":["items"],"seq":{"topics":"none","items":"self","clicks":"none"},
//    "factors":[["position"],["items"]],"combine":"product"}
// "seq.clicks" may instead be {"explicit":{"1,1":["1,3"],"1,2":["1,1"]}}.
std::string descriptor_to_json(const ModelDescriptor& d);
ModelDescriptor descriptor_from_json(std::string_view text);

}  // namespace clickmodel
