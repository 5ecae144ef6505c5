#include "clickmodel/models.hpp"

#include "clickmodel/error.hpp"
#include "clickmodel/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clickmodel {

namespace {

constexpr std::array<std::string_view, 12> kKindNames = {
    "rcm", "rctr", "dctr", "pbm", "trust_pbm", "cascade", "ubm", "dcm", "dbn", "cacm",
    "topics_items_v1", "topics_items_v2",
};

Eigen::Index key_count(KeyKind key, const LayoutShape& shape, std::int32_t n_items, std::int32_t n_topics) {
  switch (key) {
    case KeyKind::scalar: return 1;
    case KeyKind::cell: return shape.m * shape.n;
    case KeyKind::continuation: return shape.m * (shape.n - 1);
    case KeyKind::cell_gap: return static_cast<Eigen::Index>(shape.m) * shape.n * (shape.n + 1) / 2;
    case KeyKind::item: return n_items;
    case KeyKind::topic: return n_topics;
  }
  return 0;
}

// Offset of (j, r) inside one row block of a cell_gap table, 0-based j.
inline Eigen::Index gap_offset(int j, int r) { return static_cast<Eigen::Index>(j) * (j + 1) / 2 + r; }

}  // namespace

std::string_view to_string(ModelKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

ModelKind parse_model_kind(std::string_view name) {
  for (std::size_t k = 0; k < kKindNames.size(); ++k) {
    if (kKindNames[k] == name) return kAllModelKinds[k];
  }
  throw ValidationError("unknown model kind \"" + std::string(name) + "\"");
}

bool uses_topics(ModelKind kind) {
  return kind == ModelKind::cacm || kind == ModelKind::topics_items_v1 || kind == ModelKind::topics_items_v2;
}

bool is_product_kind(ModelKind kind) {
  return kind != ModelKind::trust_pbm && kind != ModelKind::dcm && kind != ModelKind::dbn;
}

std::vector<TableSpec> table_layout(ModelKind kind, const LayoutShape& shape, std::int32_t n_items,
                                    std::int32_t n_topics) {
  std::vector<std::pair<std::string, KeyKind>> names;
  switch (kind) {
    case ModelKind::rcm: names = {{"zeta", KeyKind::scalar}}; break;
    case ModelKind::rctr: names = {{"position", KeyKind::cell}}; break;
    case ModelKind::dctr: names = {{"item", KeyKind::item}}; break;
    case ModelKind::pbm: names = {{"position", KeyKind::cell}, {"item", KeyKind::item}}; break;
    case ModelKind::trust_pbm:
      names = {{"position", KeyKind::cell}, {"item", KeyKind::item}, {"trust", KeyKind::cell}};
      break;
    case ModelKind::cascade: names = {{"item", KeyKind::item}}; break;
    case ModelKind::ubm: names = {{"item", KeyKind::item}, {"gamma", KeyKind::cell_gap}}; break;
    case ModelKind::dcm: names = {{"item", KeyKind::item}, {"lambda", KeyKind::continuation}}; break;
    case ModelKind::dbn:
      names = {{"item", KeyKind::item}, {"sigma", KeyKind::item}, {"gamma", KeyKind::scalar}};
      break;
    case ModelKind::cacm: names = {{"tau", KeyKind::topic}, {"item", KeyKind::item}}; break;
    case ModelKind::topics_items_v1:
      names = {{"rho", KeyKind::topic}, {"kappa", KeyKind::topic}, {"item", KeyKind::item}, {"beta", KeyKind::scalar}};
      break;
    case ModelKind::topics_items_v2:
      names = {{"rho", KeyKind::topic}, {"kappa", KeyKind::topic}, {"item", KeyKind::item}, {"beta", KeyKind::topic}};
      break;
  }
  std::vector<TableSpec> out;
  Eigen::Index offset = 0;
  for (auto& [name, key] : names) {
    TableSpec t{name, key, offset, key_count(key, shape, n_items, n_topics)};
    offset += t.size;
    out.push_back(std::move(t));
  }
  return out;
}

const TableSpec& ModelInstance::table(std::string_view name) const {
  for (const auto& t : tables_) {
    if (t.name == name) return t;
  }
  throw ValidationError("model kind " + std::string(to_string(kind_)) + " has no table \"" + std::string(name) + "\"");
}

bool ModelInstance::has_table(std::string_view name) const {
  return std::any_of(tables_.begin(), tables_.end(), [&](const auto& t) { return t.name == name; });
}

std::string ModelInstance::key_name(const TableSpec& t, Eigen::Index k) const {
  const int n = shape_.n;
  switch (t.key) {
    case KeyKind::scalar: return "value";
    case KeyKind::cell: return to_string(Position{static_cast<int>(k / n), static_cast<int>(k % n)});
    case KeyKind::continuation:
      return to_string(Position{static_cast<int>(k / (n - 1)), static_cast<int>(k % (n - 1))});
    case KeyKind::cell_gap: {
      const Eigen::Index block = static_cast<Eigen::Index>(n) * (n + 1) / 2;
      const int row = static_cast<int>(k / block);
      Eigen::Index rem = k % block;
      int j = 0;
      while (gap_offset(j + 1, 0) <= rem) ++j;
      const auto r = rem - gap_offset(j, 0);
      return to_string(Position{row, j}) + "," + std::to_string(r);
    }
    case KeyKind::item: return items_.name(static_cast<std::int32_t>(k));
    case KeyKind::topic: return topics_.name(static_cast<std::int32_t>(k));
  }
  return "?";
}

Eigen::Index ModelInstance::index_of(std::string_view table_name, std::string_view key) const {
  const auto& t = table(table_name);
  auto unknown = [&] {
    return ValidationError("unknown key \"" + std::string(key) + "\" in table \"" + t.name + "\"");
  };
  Eigen::Index local = -1;
  switch (t.key) {
    case KeyKind::scalar:
      if (key != "value") throw unknown();
      local = 0;
      break;
    case KeyKind::cell:
    case KeyKind::continuation: {
      Position p;
      try {
        p = parse_position(key);
      } catch (const ValidationError&) {
        throw unknown();
      }
      const int width = t.key == KeyKind::cell ? shape_.n : shape_.n - 1;
      if (p.row >= shape_.m || p.col >= width) throw unknown();
      local = static_cast<Eigen::Index>(p.row) * width + p.col;
      break;
    }
    case KeyKind::cell_gap: {
      auto last = key.rfind(',');
      if (last == std::string_view::npos) throw unknown();
      Position p;
      int r = -1;
      try {
        p = parse_position(key.substr(0, last));
        r = std::stoi(std::string(key.substr(last + 1)));
      } catch (const std::exception&) {
        throw unknown();
      }
      if (p.row >= shape_.m || p.col >= shape_.n || r < 0 || r > p.col) throw unknown();
      local = static_cast<Eigen::Index>(p.row) * shape_.n * (shape_.n + 1) / 2 + gap_offset(p.col, r);
      break;
    }
    case KeyKind::item: {
      auto id = items_.find(key);
      if (!id) throw unknown();
      local = *id;
      break;
    }
    case KeyKind::topic: {
      auto id = topics_.find(key);
      if (!id) throw unknown();
      local = *id;
      break;
    }
  }
  return t.offset + local;
}

std::string ModelInstance::parameter_name(Eigen::Index k) const {
  for (const auto& t : tables_) {
    if (k >= t.offset && k < t.offset + t.size) return t.name + ":" + key_name(t, k - t.offset);
  }
  throw ValidationError("parameter index out of range");
}

ParamTables ModelInstance::to_tables() const {
  ParamTables out;
  for (const auto& t : tables_) {
    auto& dst = out[t.name];
    for (Eigen::Index k = 0; k < t.size; ++k) dst[key_name(t, k)] = theta_[t.offset + k];
  }
  return out;
}

ModelInstance ModelInstance::with_parameters(Eigen::VectorXd theta) const {
  return make_model_from_vector(kind_, shape_, items_, topics_, std::move(theta), unseen_default_);
}

bool ModelInstance::operator==(const ModelInstance& other) const {
  return kind_ == other.kind_ && shape_ == other.shape_ && items_ == other.items_ && topics_ == other.topics_ &&
         unseen_default_ == other.unseen_default_ && theta_.size() == other.theta_.size() &&
         theta_ == other.theta_;
}

ModelInstance make_model_from_vector(ModelKind kind, LayoutShape shape, Vocabulary items, Vocabulary topics,
                                     Eigen::VectorXd theta, double unseen_default) {
  if (shape.m < 1 || shape.n < 1) throw ValidationError("layout shape must be at least 1x1");
  if (!(unseen_default >= 0.0 && unseen_default <= 1.0)) {
    throw ValidationError("unseen default probability out of range [0,1]");
  }
  ModelInstance m;
  m.kind_ = kind;
  m.descriptor_ = descriptor_of(to_string(kind));
  m.shape_ = shape;
  m.tables_ = table_layout(kind, shape, items.size(), topics.size());
  // Only vocabularies that key some table are kept.
  const auto keyed = [&](KeyKind k) {
    return std::any_of(m.tables_.begin(), m.tables_.end(), [&](const TableSpec& t) { return t.key == k; });
  };
  if (keyed(KeyKind::item)) m.items_ = std::move(items);
  if (keyed(KeyKind::topic)) m.topics_ = std::move(topics);
  m.unseen_default_ = unseen_default;
  const Eigen::Index expected = m.tables_.empty() ? 0 : m.tables_.back().offset + m.tables_.back().size;
  if (theta.size() != expected) {
    throw ValidationError("parameter vector has " + std::to_string(theta.size()) + " entries, expected " +
                          std::to_string(expected));
  }
  m.theta_ = std::move(theta);
  for (Eigen::Index k = 0; k < m.theta_.size(); ++k) {
    const double v = m.theta_[k];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("probability out of range [0,1] for " + m.parameter_name(k) + ": " + std::to_string(v));
    }
  }
  if (kind == ModelKind::trust_pbm) {
    const auto& f = m.table("position");
    const auto& g = m.table("item");
    const auto& h = m.table("trust");
    double g_max = m.unseen_default_;
    if (g.size > 0) g_max = std::max(g_max, m.theta_.segment(g.offset, g.size).maxCoeff());
    for (Eigen::Index c = 0; c < f.size; ++c) {
      const double total = m.theta_[f.offset + c] * g_max + m.theta_[h.offset + c];
      if (total > 1.0) {
        throw ValidationError("f*g+h exceeds 1 at position " + m.key_name(f, c) + " (" + std::to_string(total) + ")");
      }
    }
  }
  return m;
}

ModelInstance make_model(ModelKind kind, LayoutShape shape, Vocabulary items, Vocabulary topics,
                         const ParamTables& tables, double unseen_default) {
  const auto layout = table_layout(kind, shape, items.size(), topics.size());
  const Eigen::Index total = layout.empty() ? 0 : layout.back().offset + layout.back().size;
  // Build a placeholder instance to reuse key parsing, then fill it in.
  auto skeleton = make_model_from_vector(kind, shape, items, topics, Eigen::VectorXd::Zero(total), unseen_default);
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(total, std::numeric_limits<double>::quiet_NaN());
  for (const auto& [name, entries] : tables) {
    if (!skeleton.has_table(name)) {
      throw ValidationError("unknown table \"" + name + "\" for model kind " + std::string(to_string(kind)));
    }
    for (const auto& [key, v] : entries) theta[skeleton.index_of(name, key)] = v;
  }
  for (Eigen::Index k = 0; k < total; ++k) {
    if (std::isnan(theta[k])) throw ValidationError("missing parameter " + skeleton.parameter_name(k));
  }
  return make_model_from_vector(kind, shape, std::move(items), std::move(topics), std::move(theta), unseen_default);
}

ModelInstance constant_model(ModelKind kind, LayoutShape shape, Vocabulary items, Vocabulary topics,
                             double value) {
  const auto layout = table_layout(kind, shape, items.size(), topics.size());
  const Eigen::Index total = layout.empty() ? 0 : layout.back().offset + layout.back().size;
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(total, value);
  if (kind == ModelKind::trust_pbm) {
    const auto& h = layout[2];
    theta.segment(h.offset, h.size).setConstant(std::min(0.1, 1.0 - value * std::max(value, 0.5)));
  }
  return make_model_from_vector(kind, shape, std::move(items), std::move(topics), std::move(theta));
}

ModelInstance random_model(ModelKind kind, LayoutShape shape, Vocabulary items, Vocabulary topics,
                           RandomStream& stream, double lo, double hi) {
  const auto layout = table_layout(kind, shape, items.size(), topics.size());
  const Eigen::Index total = layout.empty() ? 0 : layout.back().offset + layout.back().size;
  Eigen::VectorXd theta(total);
  for (Eigen::Index k = 0; k < total; ++k) theta[k] = lo + (hi - lo) * stream.uniform();
  if (kind == ModelKind::trust_pbm) {
    const auto& f = layout[0];
    const auto& g = layout[1];
    const auto& h = layout[2];
    double g_max = 0.5;
    if (g.size > 0) g_max = std::max(g_max, theta.segment(g.offset, g.size).maxCoeff());
    for (Eigen::Index c = 0; c < h.size; ++c) {
      theta[h.offset + c] = stream.uniform() * (1.0 - theta[f.offset + c] * g_max);
    }
  }
  return make_model_from_vector(kind, shape, std::move(items), std::move(topics), std::move(theta));
}

double ProductEvent::probability() const {
  if (zero) return 0.0;
  double p = 1.0;
  for (const auto& a : positive) p *= a.value;
  int start = 0;
  for (int end : group_ends) {
    double q = 1.0;
    for (int k = start; k < end; ++k) q *= negative[static_cast<std::size_t>(k)].value;
    p *= 1.0 - q;
    start = end;
  }
  return p;
}

BoundModel::BoundModel(const ModelInstance& model, const Vocabulary& items, const Vocabulary& topics)
    : model_(&model) {
  item_map_.resize(static_cast<std::size_t>(items.size()));
  for (std::int32_t k = 0; k < items.size(); ++k) item_map_[k] = model.items().find(items.name(k)).value_or(-1);
  topic_map_.resize(static_cast<std::size_t>(topics.size()));
  for (std::int32_t k = 0; k < topics.size(); ++k) topic_map_[k] = model.topics().find(topics.name(k)).value_or(-1);
  for (const auto& t : model.tables()) {
    if (t.name == "zeta") zeta_ = t.offset;
    if (t.name == "position") position_ = t.offset;
    if (t.name == "item") item_ = t.offset;
    if (t.name == "trust") trust_ = t.offset;
    if (t.name == "gamma") gamma_ = t.offset;
    if (t.name == "lambda") lambda_ = t.offset;
    if (t.name == "sigma") sigma_ = t.offset;
    if (t.name == "tau") tau_ = t.offset;
    if (t.name == "rho") rho_ = t.offset;
    if (t.name == "kappa") kappa_ = t.offset;
    if (t.name == "beta") {
      beta_ = t.offset;
      beta_key_ = t.key;
    }
  }
}

Atom BoundModel::item_atom(std::string_view table, std::int32_t log_item) const {
  const auto mapped = item_map_[static_cast<std::size_t>(log_item)];
  if (mapped < 0) return {-1, model_->unseen_default()};
  const auto idx = model_->table(table).offset + mapped;
  return {idx, model_->parameters()[idx]};
}

Atom BoundModel::topic_atom(std::string_view table, std::int32_t log_topic) const {
  const auto mapped = topic_map_[static_cast<std::size_t>(log_topic)];
  if (mapped < 0) return {-1, model_->unseen_default()};
  const auto idx = model_->table(table).offset + mapped;
  return {idx, model_->parameters()[idx]};
}

void BoundModel::check_session(const SessionRecord& s) const {
  if (s.shape() != model_->shape()) {
    throw ValidationError("session shape " + to_string(s.shape()) + " differs from model shape " +
                          to_string(model_->shape()));
  }
  if (uses_topics(model_->kind()) && s.kind != InterfaceKind::carousel) {
    throw ValidationError("model kind " + std::string(to_string(model_->kind())) + " needs carousel sessions, got " +
                          std::string(to_string(s.kind)));
  }
}

void BoundModel::product_event(const SessionRecord& s, const Position& p, const ClickAssignment& prior,
                               ProductEvent& out) const {
  out.clear();
  const auto& theta = model_->parameters();
  const double fallback = model_->unseen_default();
  auto param = [&](Eigen::Index idx) { return Atom{idx, theta[idx]}; };
  auto item = [&](std::int32_t log_item) {
    const auto mapped = item_map_[static_cast<std::size_t>(log_item)];
    return mapped < 0 ? Atom{-1, fallback} : param(item_ + mapped);
  };
  auto topic = [&](Eigen::Index table, std::int32_t log_topic) {
    const auto mapped = topic_map_[static_cast<std::size_t>(log_topic)];
    return mapped < 0 ? Atom{-1, fallback} : param(table + mapped);
  };
  auto last_click_before = [&]() {
    int last = -1;
    for (int l = 0; l < p.col; ++l) {
      if (prior(p.row, l) == 1) last = l;
    }
    return last;
  };
  const int n = model_->shape().n;
  const auto y = s.items(p.row, p.col);

  switch (model_->kind()) {
    case ModelKind::rcm: out.positive.push_back(param(zeta_)); break;
    case ModelKind::rctr: out.positive.push_back(param(position_ + p.row * n + p.col)); break;
    case ModelKind::dctr: out.positive.push_back(item(y)); break;
    case ModelKind::pbm:
      out.positive.push_back(param(position_ + p.row * n + p.col));
      out.positive.push_back(item(y));
      break;
    case ModelKind::cascade:
      if (last_click_before() >= 0) {
        out.zero = true;
      } else {
        out.positive.push_back(item(y));
      }
      break;
    case ModelKind::ubm: {
      const int r = last_click_before() + 1;
      out.positive.push_back(item(y));
      out.positive.push_back(param(gamma_ + static_cast<Eigen::Index>(p.row) * n * (n + 1) / 2 + gap_offset(p.col, r)));
      break;
    }
    case ModelKind::cacm:
      if (last_click_before() >= 0) {
        out.zero = true;
        break;
      }
      out.positive.push_back(topic(tau_, s.topics[p.row]));
      out.positive.push_back(item(y));
      for (int k = 0; k < p.row; ++k) {
        out.negative.push_back(topic(tau_, s.topics[k]));
        out.group_ends.push_back(static_cast<int>(out.negative.size()));
      }
      break;
    case ModelKind::topics_items_v1:
    case ModelKind::topics_items_v2: {
      const bool v1 = model_->kind() == ModelKind::topics_items_v1;
      if (!v1) out.positive.push_back(item(y));
      out.positive.push_back(topic(rho_, s.topics[p.row]));
      for (int k = 0; k < p.row; ++k) out.positive.push_back(topic(kappa_, s.topics[k]));
      if (v1) out.positive.push_back(item(y));
      const Atom beta = beta_key_ == KeyKind::scalar ? param(beta_) : topic(beta_, s.topics[p.row]);
      for (int l = 0; l < p.col; ++l) {
        out.negative.push_back(beta);
        out.negative.push_back(item(s.items(p.row, l)));
        out.group_ends.push_back(static_cast<int>(out.negative.size()));
      }
      break;
    }
    default: throw ValidationError("model kind " + std::string(to_string(model_->kind())) + " is not product-form");
  }
}

void BoundModel::row_conditionals(const SessionRecord& s, int row, const ClickAssignment& prior, int upto,
                                  double* out) const {
  const auto& theta = model_->parameters();
  const int n = model_->shape().n;
  auto item_value = [&](Eigen::Index table, int col) {
    const auto mapped = item_map_[static_cast<std::size_t>(s.items(row, col))];
    return mapped < 0 ? model_->unseen_default() : theta[table + mapped];
  };
  switch (model_->kind()) {
    case ModelKind::trust_pbm:
      for (int j = 0; j <= upto; ++j) {
        out[j] = theta[position_ + row * n + j] * item_value(item_, j) + theta[trust_ + row * n + j];
      }
      return;
    case ModelKind::dcm: {
      // Last click at `last`; the user went on with probability lambda(last),
      // and every examined item since was skipped.
      int last = -1;
      double skipped = 1.0;
      for (int j = 0; j <= upto; ++j) {
        const double alpha = item_value(item_, j);
        if (last < 0) {
          out[j] = alpha;
        } else {
          const double lambda = theta[lambda_ + static_cast<Eigen::Index>(row) * (n - 1) + last];
          const double cont = lambda * skipped;
          const double denom = (1.0 - lambda) + cont;
          out[j] = denom > 0.0 ? alpha * cont / denom : 0.0;
        }
        if (j == upto) break;
        if (prior(row, j) == 1) {
          last = j;
          skipped = 1.0;
        } else {
          skipped *= 1.0 - alpha;
        }
      }
      return;
    }
    case ModelKind::dbn: {
      const double gamma = theta[gamma_];
      double examined = 1.0;
      for (int j = 0; j <= upto; ++j) {
        const double alpha = item_value(item_, j);
        out[j] = alpha * examined;
        if (j == upto) break;
        if (prior(row, j) == 1) {
          examined = gamma * (1.0 - item_value(sigma_, j));
        } else {
          const double denom = 1.0 - examined * alpha;
          examined = denom > 0.0 ? gamma * examined * (1.0 - alpha) / denom : 0.0;
        }
      }
      return;
    }
    default: {
      ProductEvent ev;
      for (int j = 0; j <= upto; ++j) {
        product_event(s, {row, j}, prior, ev);
        out[j] = ev.probability();
      }
      return;
    }
  }
}

double BoundModel::conditional(const SessionRecord& s, const Position& p, const ClickAssignment& prior) const {
  check_session(s);
  if (!contains(s.shape(), p)) throw ValidationError("position " + to_string(p) + " outside layout");
  if (prior.rows() != s.items.rows() || prior.cols() != s.items.cols()) {
    throw ValidationError("prior assignment shape differs from the session layout");
  }
  for (const auto& q : model_->descriptor().seq.cond_clicks(s.shape(), p)) {
    if (prior(q.row, q.col) == kUnassigned) {
      throw ValidationError("incomplete prior assignment: click at " + to_string(q) + " is required for " +
                            to_string(p));
    }
  }
  std::vector<double> row(static_cast<std::size_t>(p.col + 1));
  row_conditionals(s, p.row, prior, p.col, row.data());
  return row.back();
}

RowMajorMatrix<double> BoundModel::teacher_forced(const SessionRecord& s) const {
  check_session(s);
  const auto prior = to_assignment(s.clicks);
  RowMajorMatrix<double> q(s.items.rows(), s.items.cols());
  for (int i = 0; i < q.rows(); ++i) row_conditionals(s, i, prior, static_cast<int>(q.cols()) - 1, q.row(i).data());
  return q;
}

double BoundModel::joint_log_likelihood(const SessionRecord& s) const {
  const auto q = teacher_forced(s);
  double ll = 0.0;
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) {
      const double v = q(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw InternalFault("conditional probability " + std::to_string(v) + " outside [0,1] at " +
                            to_string(Position{i, j}));
      }
      ll += std::log(s.clicks(i, j) ? v : 1.0 - v);
    }
  }
  return ll;
}

}  // namespace clickmodel
