#pragma once

// Observed-variable data model: layouts, sessions and click logs.
//
// A session shows M lists of N items each. Single lists are stored as M = 1
// and grids as carousels without topics. Positions are 0-based internally;
// every external representation (files, CLI output) is 1-based.

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clickmodel {

enum class InterfaceKind { single_list, grid, carousel };

std::string_view to_string(InterfaceKind kind);
/// Throws ValidationError on an unknown name.
InterfaceKind parse_interface_kind(std::string_view name);

struct LayoutShape {
  int m = 1;  ///< number of lists (rows)
  int n = 1;  ///< items per list

  int cells() const { return m * n; }
  bool operator==(const LayoutShape&) const = default;
};

/// Parses "MxN", e.g. "2x3".
LayoutShape parse_shape(std::string_view text);
std::string to_string(const LayoutShape& shape);

struct Position {
  int row = 0;
  int col = 0;

  auto operator<=>(const Position&) const = default;
  bool operator==(const Position&) const = default;
};

/// "i,j", 1-based.
std::string to_string(const Position& p);
Position parse_position(std::string_view text);

inline bool contains(const LayoutShape& shape, const Position& p) {
  return p.row >= 0 && p.row < shape.m && p.col >= 0 && p.col < shape.n;
}
inline int flat_index(const LayoutShape& shape, const Position& p) { return p.row * shape.n + p.col; }
inline Position from_flat(const LayoutShape& shape, int k) { return {k / shape.n, k % shape.n}; }

template <typename T>
using RowMajorMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ItemMatrix = RowMajorMatrix<std::int32_t>;
using ClickMatrix = RowMajorMatrix<std::uint8_t>;

/// Partial click assignment over a layout; kUnassigned marks absent cells.
using ClickAssignment = RowMajorMatrix<std::int8_t>;
inline constexpr std::int8_t kUnassigned = -1;

ClickAssignment unassigned(const LayoutShape& shape);
ClickAssignment to_assignment(const ClickMatrix& clicks);

/// Dense id space for opaque external identifiers, in first-seen order.
class Vocabulary {
 public:
  std::int32_t intern(std::string_view name);
  std::optional<std::int32_t> find(std::string_view name) const;
  const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }
  /// Drops every id >= size.
  void truncate(std::int32_t size);
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const Vocabulary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// One impression. Item and topic entries index the owning log's vocabularies.
struct SessionRecord {
  InterfaceKind kind = InterfaceKind::single_list;
  std::vector<std::int32_t> topics;  ///< length M for carousels, empty otherwise
  ItemMatrix items;
  ClickMatrix clicks;

  LayoutShape shape() const { return {static_cast<int>(items.rows()), static_cast<int>(items.cols())}; }
  bool operator==(const SessionRecord& other) const;
};

/// Throws ValidationError naming the first violated session invariant.
void validate_session(const SessionRecord& s, std::int32_t n_items, std::int32_t n_topics);

/// C' for position p: every click of the session except p, which is left
/// unassigned. Throws ValidationError when p lies outside the layout.
ClickAssignment complement_view(const SessionRecord& s, const Position& p);

/// A fixed-shape collection of sessions plus the vocabularies they index.
/// Shape and interface kind are fixed by the first session added.
class ClickLog {
 public:
  ClickLog() = default;
  ClickLog(LayoutShape shape, InterfaceKind kind) : shape_(shape), kind_(kind) {}

  /// Appends a session given by external identifiers.
  void add(InterfaceKind kind, const std::vector<std::string>& topics,
           const std::vector<std::vector<std::string>>& items,
           const std::vector<std::vector<int>>& clicks);
  /// Appends a session whose ids already index this log's vocabularies.
  void add(SessionRecord session);

  bool empty() const { return sessions_.empty(); }
  std::size_t size() const { return sessions_.size(); }
  const std::vector<SessionRecord>& sessions() const { return sessions_; }
  const SessionRecord& operator[](std::size_t k) const { return sessions_[k]; }

  /// Throws ValidationError when the log has neither sessions nor a declared shape.
  LayoutShape shape() const;
  InterfaceKind kind() const;
  bool has_shape() const { return shape_.has_value(); }

  const Vocabulary& items() const { return items_; }
  const Vocabulary& topics() const { return topics_; }
  Vocabulary& items() { return items_; }
  Vocabulary& topics() { return topics_; }

  bool operator==(const ClickLog& other) const;

 private:
  std::optional<LayoutShape> shape_;
  std::optional<InterfaceKind> kind_;
  std::vector<SessionRecord> sessions_;
  Vocabulary items_;
  Vocabulary topics_;
};

}  // namespace clickmodel
