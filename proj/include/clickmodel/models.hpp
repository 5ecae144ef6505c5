#pragma once

// Catalog of conditional click models. Each kind pairs its descriptor with
// dense parameter tables; click probabilities are always conditionals
// P(C_p = 1 | conditioning scope), and session likelihoods are chain-rule
// products of those conditionals in row-major order.
//
// Concrete forms (rows are independent lists; position tables are per cell):
//
//   rcm              zeta
//   rctr             f(i,j)
//   dctr             g(y)
//   pbm              f(i,j) * g(y)
//   trust_pbm        f(i,j) * g(y) + h(i,j)
//   cascade          g(y) if no earlier click in the row, else 0
//   ubm              g(y) * gamma(i,j,r), r = rank of the last earlier click in the row (0: none)
//   dcm              g(y) * P(examined | earlier clicks), continuation lambda(i,j) after a click
//   dbn              alpha(y) * P(examined | earlier items and clicks), satisfaction sigma(y),
//                    scalar continuation gamma
//   cacm             tau(T_i) * prod_{k<i} (1 - tau(T_k)) * g(y) * [no earlier click in the row]
//   topics_items_v1  rho(T_i) * prod_{k<i} kappa(T_k) * g(y_ij) * prod_{l<j} (1 - beta * g(y_il))
//   topics_items_v2  g(y_ij) * rho(T_i) * prod_{k<i} kappa(T_k) * prod_{l<j} (1 - beta(T_i) * g(y_il))

#include "clickmodel/core.hpp"
#include "clickmodel/taxonomy.hpp"

#include <Eigen/Core>

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace clickmodel {

class RandomStream;

enum class ModelKind {
  rcm,
  rctr,
  dctr,
  pbm,
  trust_pbm,
  cascade,
  ubm,
  dcm,
  dbn,
  cacm,
  topics_items_v1,
  topics_items_v2,
};

inline constexpr std::array<ModelKind, 12> kAllModelKinds = {
    ModelKind::rcm,     ModelKind::rctr, ModelKind::dctr, ModelKind::pbm,  ModelKind::trust_pbm,
    ModelKind::cascade, ModelKind::ubm,  ModelKind::dcm,  ModelKind::dbn,  ModelKind::cacm,
    ModelKind::topics_items_v1, ModelKind::topics_items_v2,
};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
/// Kinds with topic tables; they only accept carousel sessions.
bool uses_topics(ModelKind kind);

/// How the entries of one table are keyed.
enum class KeyKind {
  scalar,        ///< single entry, external key "value"
  cell,          ///< (i,j), key "i,j"
  continuation,  ///< (i,j) for j < N, key "i,j"
  cell_gap,      ///< (i,j,r) with 0 <= r < j (1-based j), key "i,j,r"
  item,          ///< item id
  topic,         ///< topic id
};

struct TableSpec {
  std::string name;
  KeyKind key = KeyKind::scalar;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

/// Parameter layout of `kind` for a given shape and vocabulary sizes.
std::vector<TableSpec> table_layout(ModelKind kind, const LayoutShape& shape, std::int32_t n_items,
                                    std::int32_t n_topics);

/// External form of parameter tables: table name -> key -> probability.
using ParamTables = std::map<std::string, std::map<std::string, double>>;

class ModelInstance {
 public:
  ModelKind kind() const { return kind_; }
  const ModelDescriptor& descriptor() const { return descriptor_; }
  const LayoutShape& shape() const { return shape_; }
  const Vocabulary& items() const { return items_; }
  const Vocabulary& topics() const { return topics_; }
  double unseen_default() const { return unseen_default_; }

  const std::vector<TableSpec>& tables() const { return tables_; }
  /// Throws ValidationError when the kind has no such table.
  const TableSpec& table(std::string_view name) const;
  bool has_table(std::string_view name) const;

  /// Flat parameter vector; tables are contiguous segments.
  const Eigen::VectorXd& parameters() const { return theta_; }
  /// Copy with a new parameter vector, re-validated.
  ModelInstance with_parameters(Eigen::VectorXd theta) const;

  std::string key_name(const TableSpec& t, Eigen::Index k) const;
  /// Throws ValidationError for an unknown table or key.
  Eigen::Index index_of(std::string_view table, std::string_view key) const;
  double value(std::string_view table, std::string_view key) const { return theta_[index_of(table, key)]; }
  /// Qualified parameter name "table:key" for index k.
  std::string parameter_name(Eigen::Index k) const;

  ParamTables to_tables() const;

  bool operator==(const ModelInstance& other) const;

 private:
  friend ModelInstance make_model_from_vector(ModelKind, LayoutShape, Vocabulary, Vocabulary, Eigen::VectorXd,
                                              double);

  ModelKind kind_ = ModelKind::rcm;
  ModelDescriptor descriptor_;
  LayoutShape shape_;
  Vocabulary items_;
  Vocabulary topics_;
  std::vector<TableSpec> tables_;
  Eigen::VectorXd theta_;
  double unseen_default_ = 0.5;
};

/// Validated construction from external tables. Throws ValidationError on
/// missing or unknown keys, probabilities outside [0,1], and (trust_pbm)
/// f(i,j) * g(y) + h(i,j) > 1 for any cell and item.
ModelInstance make_model(ModelKind kind, LayoutShape shape, Vocabulary items, Vocabulary topics,
                         const ParamTables& tables, double unseen_default = 0.5);

/// Same checks; `theta` follows table_layout order.
ModelInstance make_model_from_vector(ModelKind kind, LayoutShape shape, Vocabulary items, Vocabulary topics,
                                     Eigen::VectorXd theta, double unseen_default = 0.5);

/// Every entry `value`; trust_pbm gets h = 0.1 instead.
ModelInstance constant_model(ModelKind kind, LayoutShape shape, Vocabulary items, Vocabulary topics,
                             double value = 0.5);

/// Entries uniform on (lo, hi); trust_pbm h is drawn inside the remaining
/// headroom so the bound holds.
ModelInstance random_model(ModelKind kind, LayoutShape shape, Vocabulary items, Vocabulary topics,
                           RandomStream& stream, double lo = 0.05, double hi = 0.95);

/// One factor value: a parameter (index >= 0) or a fixed value for unseen ids.
struct Atom {
  Eigen::Index index = -1;
  double value = 0.0;
};

/// Conditional of a product-form kind: prod(positive) * prod_g (1 - prod(group g)).
/// `zero` marks conditionals that are identically 0 (e.g. cascade after a click).
struct ProductEvent {
  bool zero = false;
  std::vector<Atom> positive;
  std::vector<Atom> negative;      ///< concatenated groups
  std::vector<int> group_ends;     ///< exclusive end offsets into `negative`

  void clear() {
    zero = false;
    positive.clear();
    negative.clear();
    group_ends.clear();
  }
  double probability() const;
};

/// Kinds whose conditional is a ProductEvent.
bool is_product_kind(ModelKind kind);

/// A model bound to the vocabularies of a log: log ids are translated to
/// model ids once; ids the model has never seen use its unseen default.
class BoundModel {
 public:
  BoundModel(const ModelInstance& model, const Vocabulary& items, const Vocabulary& topics);
  BoundModel(const ModelInstance& model, const ClickLog& log) : BoundModel(model, log.items(), log.topics()) {}

  const ModelInstance& model() const { return *model_; }

  /// P(C_p = 1 | scope). `prior` must assign every position in the kind's
  /// click-conditioning set of p; other cells are ignored.
  double conditional(const SessionRecord& s, const Position& p, const ClickAssignment& prior) const;

  /// Conditionals of every cell with the observed clicks as prior.
  RowMajorMatrix<double> teacher_forced(const SessionRecord& s) const;

  /// Chain-rule log-probability of the observed click matrix. Throws
  /// InternalFault for a conditional outside [0,1]; returns -inf for
  /// impossible sessions.
  double joint_log_likelihood(const SessionRecord& s) const;

  /// Product decomposition of the conditional at p (product kinds only).
  void product_event(const SessionRecord& s, const Position& p, const ClickAssignment& prior,
                     ProductEvent& out) const;

  Atom item_atom(std::string_view table, std::int32_t log_item) const;
  Atom topic_atom(std::string_view table, std::int32_t log_topic) const;
  double value(const Atom& a) const { return a.index >= 0 ? model_->parameters()[a.index] : a.value; }

  /// Throws ValidationError when the session cannot be scored by this model.
  void check_session(const SessionRecord& s) const;

 private:
  void row_conditionals(const SessionRecord& s, int row, const ClickAssignment& prior, int upto,
                        double* out) const;

  const ModelInstance* model_;
  std::vector<std::int32_t> item_map_;
  std::vector<std::int32_t> topic_map_;
  // Cached table offsets (-1 when absent).
  Eigen::Index zeta_ = -1, position_ = -1, item_ = -1, trust_ = -1, gamma_ = -1, lambda_ = -1, sigma_ = -1,
               tau_ = -1, rho_ = -1, kappa_ = -1, beta_ = -1;
  KeyKind beta_key_ = KeyKind::scalar;
};

// Free-function forms over a bound model.
inline double conditional_click_prob(const BoundModel& m, const SessionRecord& s, const Position& p,
                                     const ClickAssignment& prior) {
  return m.conditional(s, p, prior);
}
inline double joint_log_likelihood(const BoundModel& m, const SessionRecord& s) {
  return m.joint_log_likelihood(s);
}

// Parameter file: {"kind":..., "shape":{"m":M,"n":N}, "unseen_default":0.5,
// "<table>":{"<key>":p, ...}, ...}; tables in layout order, keys in index order.
std::string model_to_json(const ModelInstance& m);
ModelInstance model_from_json(std::string_view text);
ModelInstance read_model_file(const std::string& path);
void write_model_file(const ModelInstance& m, const std::string& path);

}  // namespace clickmodel
