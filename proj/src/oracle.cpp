#include "clickmodel/error.hpp"
#include "clickmodel/estimation.hpp"
#include "clickmodel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace clickmodel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kBudget = 2e5;

using Point = std::vector<int>;

struct Candidate {
  double ll = kNegInf;
  Point point;
};

// a beats b: higher likelihood, or a tie and a lexicographically smaller vector.
bool beats(const Candidate& a, const Candidate& b) {
  if (a.point.empty()) return false;
  if (b.point.empty()) return true;
  if (a.ll == kNegInf && b.ll == kNegInf) return a.point < b.point;
  if (b.ll == kNegInf) return true;
  if (a.ll == kNegInf) return false;
  const double tol = 1e-12 * std::max(1.0, std::abs(b.ll));
  if (a.ll > b.ll + tol) return true;
  if (a.ll < b.ll - tol) return false;
  return a.point < b.point;
}

class Objective {
 public:
  Objective(ModelKind kind, const ClickLog& log, double step)
      : kind_(kind), log_(log), step_(step),
        items_(log.items()), topics_(uses_topics(kind) ? log.topics() : Vocabulary{}) {
    std::map<std::string, std::size_t> seen;
    for (std::size_t k = 0; k < log.size(); ++k) {
      const auto& s = log[k];
      std::string key;
      for (auto t : s.topics) key += std::to_string(t) + ",";
      key += "|";
      for (Eigen::Index c = 0; c < s.items.size(); ++c) {
        key += std::to_string(s.items.data()[c]) + ":" + std::to_string(int(s.clicks.data()[c])) + ",";
      }
      auto [it, fresh] = seen.emplace(key, unique_.size());
      if (fresh) {
        unique_.push_back(k);
        weight_.push_back(0.0);
      }
      weight_[it->second] += 1.0;
    }
  }

  double operator()(const Point& p) const {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(p.size()));
    for (std::size_t d = 0; d < p.size(); ++d) theta[static_cast<Eigen::Index>(d)] = std::min(1.0, p[d] * step_);
    ModelInstance model;
    try {
      model = make_model_from_vector(kind_, log_.shape(), items_, topics_, std::move(theta));
    } catch (const ValidationError&) {
      return kNegInf;
    }
    const BoundModel bm(model, log_);
    double total = 0.0;
    for (std::size_t u = 0; u < unique_.size(); ++u) {
      const double ll = bm.joint_log_likelihood(log_[unique_[u]]);
      if (ll == kNegInf) return kNegInf;
      total += weight_[u] * ll;
    }
    return total;
  }

 private:
  ModelKind kind_;
  const ClickLog& log_;
  double step_;
  Vocabulary items_;
  Vocabulary topics_;
  std::vector<std::size_t> unique_;
  std::vector<double> weight_;
};

// Best point of the box product of `axes`, enumerated lexicographically.
Candidate search_box(const Objective& f, const std::vector<std::vector<int>>& axes, int threads) {
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  const auto chunks = chunking_for(total);
  std::vector<Candidate> best(chunks.count);
  parallel_for(chunks.count, threads, [&](std::size_t c) {
    const std::size_t end = std::min(total, (c + 1) * chunks.size);
    Point p(axes.size());
    for (std::size_t k = c * chunks.size; k < end; ++k) {
      std::size_t rem = k;
      for (std::size_t d = axes.size(); d-- > 0;) {
        p[d] = axes[d][rem % axes[d].size()];
        rem /= axes[d].size();
      }
      Candidate cand{f(p), p};
      if (beats(cand, best[c])) best[c] = std::move(cand);
    }
  });
  Candidate out;
  for (auto& b : best) {
    if (beats(b, out)) out = std::move(b);
  }
  return out;
}

}  // namespace

ModelInstance brute_force_mle(ModelKind kind, const ClickLog& log, double grid_step, int threads) {
  if (!(grid_step > 0.0 && grid_step < 1.0)) throw ValidationError("grid_step must lie in (0,1)");
  if (log.empty()) throw ValidationError("cannot search a likelihood surface over an empty log");
  if (uses_topics(kind) && log.kind() != InterfaceKind::carousel) {
    throw ValidationError("model kind " + std::string(to_string(kind)) + " needs a carousel log");
  }
  const auto layout =
      table_layout(kind, log.shape(), log.items().size(), uses_topics(kind) ? log.topics().size() : 0);
  const auto dim = layout.empty() ? 0 : static_cast<std::size_t>(layout.back().offset + layout.back().size);
  if (dim > 6) {
    throw ValidationError("parameter dimension too large for brute force: " + std::to_string(dim) + " > 6");
  }
  const Objective f(kind, log, grid_step);
  const int top = static_cast<int>(std::floor(1.0 / grid_step + 1e-9));

  // Coarse pass.
  const int per_dim = std::max(2, static_cast<int>(std::floor(std::pow(kBudget, 1.0 / dim) + 1e-9)) - 1);
  int spacing = std::max(1, (top + per_dim - 2) / (per_dim - 1));
  std::vector<std::vector<int>> axes(dim);
  for (auto& a : axes) {
    for (int k = 0; k <= top; k += spacing) a.push_back(k);
    if (a.back() != top) a.push_back(top);
  }
  Candidate best = search_box(f, axes, threads);

  // Shrinking windows around the incumbent.
  while (spacing > 1) {
    const int finer = std::max(1, (spacing + 3) / 4);
    for (std::size_t d = 0; d < dim; ++d) {
      axes[d].clear();
      for (int k = best.point[d] - spacing; k <= best.point[d] + spacing; k += finer) {
        if (k >= 0 && k <= top) axes[d].push_back(k);
      }
    }
    auto cand = search_box(f, axes, threads);
    if (beats(cand, best)) best = std::move(cand);
    spacing = finer;
  }

  // Steepest ascent over the full lattice neighbourhood.
  for (;;) {
    for (std::size_t d = 0; d < dim; ++d) {
      axes[d].clear();
      for (int k = best.point[d] - 1; k <= best.point[d] + 1; ++k) {
        if (k >= 0 && k <= top) axes[d].push_back(k);
      }
    }
    auto cand = search_box(f, axes, threads);
    const bool better = best.ll == kNegInf ? cand.ll > kNegInf
                                           : cand.ll > best.ll + 1e-12 * std::max(1.0, std::abs(best.ll));
    if (!better) break;
    best = std::move(cand);
  }

  Eigen::VectorXd theta(static_cast<Eigen::Index>(dim));
  for (std::size_t d = 0; d < dim; ++d) theta[static_cast<Eigen::Index>(d)] = std::min(1.0, best.point[d] * grid_step);
  return make_model_from_vector(kind, log.shape(), log.items(), uses_topics(kind) ? log.topics() : Vocabulary{},
                                std::move(theta));
}

}  // namespace clickmodel
