#include "clickmodel/core.hpp"

#include "clickmodel/error.hpp"

#include <charconv>
#include <unordered_set>

namespace clickmodel {

std::string_view to_string(InterfaceKind kind) {
  switch (kind) {
    case InterfaceKind::single_list: return "single_list";
    case InterfaceKind::grid: return "grid";
    case InterfaceKind::carousel: return "carousel";
  }
  return "?";
}

InterfaceKind parse_interface_kind(std::string_view name) {
  if (name == "single_list") return InterfaceKind::single_list;
  if (name == "grid") return InterfaceKind::grid;
  if (name == "carousel") return InterfaceKind::carousel;
  throw ValidationError("unknown interface kind \"" + std::string(name) + "\"");
}

namespace {

int parse_positive_int(std::string_view text, std::string_view what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
    throw ValidationError("invalid " + std::string(what) + " \"" + std::string(text) + "\"");
  }
  return value;
}

}  // namespace

LayoutShape parse_shape(std::string_view text) {
  auto x = text.find('x');
  if (x == std::string_view::npos) throw ValidationError("shape must be MxN, got \"" + std::string(text) + "\"");
  return {parse_positive_int(text.substr(0, x), "shape"), parse_positive_int(text.substr(x + 1), "shape")};
}

std::string to_string(const LayoutShape& shape) {
  return std::to_string(shape.m) + "x" + std::to_string(shape.n);
}

std::string to_string(const Position& p) {
  return std::to_string(p.row + 1) + "," + std::to_string(p.col + 1);
}

Position parse_position(std::string_view text) {
  auto comma = text.find(',');
  if (comma == std::string_view::npos) throw ValidationError("position must be \"i,j\", got \"" + std::string(text) + "\"");
  return {parse_positive_int(text.substr(0, comma), "position") - 1,
          parse_positive_int(text.substr(comma + 1), "position") - 1};
}

ClickAssignment unassigned(const LayoutShape& shape) {
  return ClickAssignment::Constant(shape.m, shape.n, kUnassigned);
}

ClickAssignment to_assignment(const ClickMatrix& clicks) { return clicks.cast<std::int8_t>(); }

std::int32_t Vocabulary::intern(std::string_view name) {
  std::string key(name);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  auto id = static_cast<std::int32_t>(names_.size());
  names_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

void Vocabulary::truncate(std::int32_t size) {
  while (this->size() > size) {
    index_.erase(names_.back());
    names_.pop_back();
  }
}

std::optional<std::int32_t> Vocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool SessionRecord::operator==(const SessionRecord& other) const {
  return kind == other.kind && topics == other.topics && items.rows() == other.items.rows() &&
         items.cols() == other.items.cols() && items == other.items && clicks == other.clicks;
}

void validate_session(const SessionRecord& s, std::int32_t n_items, std::int32_t n_topics) {
  const auto shape = s.shape();
  if (shape.m < 1 || shape.n < 1) throw ValidationError("session layout must have at least one row and column");
  if (s.clicks.rows() != s.items.rows() || s.clicks.cols() != s.items.cols()) {
    throw ValidationError("clicks shape " + std::to_string(s.clicks.rows()) + "x" + std::to_string(s.clicks.cols()) +
                          " differs from items shape " + to_string(shape));
  }
  if (s.kind == InterfaceKind::single_list && shape.m != 1) {
    throw ValidationError("single_list sessions must have exactly one row");
  }
  if (s.kind == InterfaceKind::carousel) {
    if (static_cast<int>(s.topics.size()) != shape.m) {
      throw ValidationError("carousel needs one topic per row: expected " + std::to_string(shape.m) + ", got " +
                            std::to_string(s.topics.size()));
    }
  } else if (!s.topics.empty()) {
    throw ValidationError("topics forbidden for " + std::string(to_string(s.kind)));
  }
  for (auto t : s.topics) {
    if (t < 0 || t >= n_topics) throw ValidationError("topic id out of vocabulary");
  }
  std::unordered_set<std::int32_t> seen;
  for (int i = 0; i < shape.m; ++i) {
    for (int j = 0; j < shape.n; ++j) {
      auto y = s.items(i, j);
      if (y < 0 || y >= n_items) throw ValidationError("item id out of vocabulary");
      if (!seen.insert(y).second) throw ValidationError("duplicate item within session at " + to_string(Position{i, j}));
      if (s.clicks(i, j) > 1) throw ValidationError("click value outside {0,1} at " + to_string(Position{i, j}));
    }
  }
}

ClickAssignment complement_view(const SessionRecord& s, const Position& p) {
  if (!contains(s.shape(), p)) {
    throw ValidationError("position " + to_string(p) + " outside layout " + to_string(s.shape()));
  }
  ClickAssignment view = to_assignment(s.clicks);
  view(p.row, p.col) = kUnassigned;
  return view;
}

void ClickLog::add(InterfaceKind kind, const std::vector<std::string>& topics,
                   const std::vector<std::vector<std::string>>& items,
                   const std::vector<std::vector<int>>& clicks) {
  if (items.empty() || items.front().empty()) throw ValidationError("items must be a non-empty matrix");
  const int m = static_cast<int>(items.size());
  const int n = static_cast<int>(items.front().size());
  if (static_cast<int>(clicks.size()) != m) throw ValidationError("clicks must have one row per item row");

  SessionRecord s;
  s.kind = kind;
  s.items.resize(m, n);
  s.clicks.resize(m, n);
  // A rejected session must not leave stray vocabulary entries behind.
  const auto items_before = items_.size();
  const auto topics_before = topics_.size();
  try {
    for (int i = 0; i < m; ++i) {
      if (static_cast<int>(items[i].size()) != n) throw ValidationError("ragged item rows are not supported");
      if (static_cast<int>(clicks[i].size()) != n) throw ValidationError("clicks row length differs from items row");
      for (int j = 0; j < n; ++j) {
        s.items(i, j) = items_.intern(items[i][j]);
        const int c = clicks[i][j];
        if (c != 0 && c != 1) throw ValidationError("click value outside {0,1} at " + to_string(Position{i, j}));
        s.clicks(i, j) = static_cast<std::uint8_t>(c);
      }
    }
    for (const auto& t : topics) s.topics.push_back(topics_.intern(t));
    add(std::move(s));
  } catch (...) {
    items_.truncate(items_before);
    topics_.truncate(topics_before);
    throw;
  }
}

void ClickLog::add(SessionRecord session) {
  validate_session(session, items_.size(), topics_.size());
  if (shape_ && *shape_ != session.shape()) {
    throw ValidationError("shape mismatch: log is " + to_string(*shape_) + ", session is " +
                          to_string(session.shape()));
  }
  if (kind_ && *kind_ != session.kind) {
    throw ValidationError("interface kind mismatch: log is " + std::string(to_string(*kind_)) + ", session is " +
                          std::string(to_string(session.kind)));
  }
  shape_ = session.shape();
  kind_ = session.kind;
  sessions_.push_back(std::move(session));
}

LayoutShape ClickLog::shape() const {
  if (!shape_) throw ValidationError("empty click log has no layout shape");
  return *shape_;
}

InterfaceKind ClickLog::kind() const {
  if (!kind_) throw ValidationError("empty click log has no interface kind");
  return *kind_;
}

bool ClickLog::operator==(const ClickLog& other) const {
  if (sessions_ != other.sessions_ || items_ != other.items_ || topics_ != other.topics_) return false;
  if (sessions_.empty()) return true;
  return shape_ == other.shape_ && kind_ == other.kind_;
}

}  // namespace clickmodel
