#include "clickmodel/evaluation.hpp"

#include "clickmodel/error.hpp"
#include "clickmodel/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace clickmodel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kFracBits = 40;

// Fixed-point accumulator: integer addition is associative, so the total is
// independent of summation order.
struct FixedSum {
  __int128 value = 0;
  std::uint64_t infinite = 0;

  void add(double x) {
    if (std::isinf(x)) {
      ++infinite;
      return;
    }
    value += static_cast<__int128>(std::llround(std::ldexp(x, kFracBits)));
  }
  void merge(const FixedSum& o) {
    value += o.value;
    infinite += o.infinite;
  }
  double get() const {
    if (infinite) return -kInf;
    return std::ldexp(static_cast<double>(value), -kFracBits);
  }
};

std::string cell_name(int i, int j) { return to_string(Position{i, j}); }

}  // namespace

EvalReport evaluate(const ModelInstance& model, const ClickLog& log, int threads) {
  if (log.empty()) throw ValidationError("cannot evaluate on an empty log");
  const BoundModel bm(model, log);
  const auto shape = log.shape();
  const auto cells = static_cast<std::size_t>(shape.m) * shape.n;
  const auto chunks = chunking_for(log.size());
  // Per chunk: one log2 accumulator per cell plus the natural-log total.
  std::vector<std::vector<FixedSum>> parts(chunks.count, std::vector<FixedSum>(cells + 1));
  parallel_for(chunks.count, threads, [&](std::size_t c) {
    auto& acc = parts[c];
    const std::size_t end = std::min(log.size(), (c + 1) * chunks.size);
    for (std::size_t k = c * chunks.size; k < end; ++k) {
      const auto& s = log[k];
      const auto q = bm.teacher_forced(s);
      for (int i = 0; i < shape.m; ++i) {
        for (int j = 0; j < shape.n; ++j) {
          const double v = q(i, j);
          if (!(v >= 0.0 && v <= 1.0)) {
            throw InternalFault("conditional probability " + std::to_string(v) + " outside [0,1] at " +
                                cell_name(i, j));
          }
          const double p = s.clicks(i, j) ? v : 1.0 - v;
          acc[static_cast<std::size_t>(i) * shape.n + j].add(std::log2(p));
          acc[cells].add(std::log(p));
        }
      }
    }
  });
  std::vector<FixedSum> total(cells + 1);
  for (const auto& p : parts) {
    for (std::size_t k = 0; k <= cells; ++k) total[k].merge(p[k]);
  }

  EvalReport r;
  r.n_sessions = log.size();
  r.total_ll = total[cells].get();
  r.per_rank_perplexity.resize(shape.m, shape.n);
  FixedSum log_ppl;
  const double n = static_cast<double>(log.size());
  for (int i = 0; i < shape.m; ++i) {
    for (int j = 0; j < shape.n; ++j) {
      const auto& acc = total[static_cast<std::size_t>(i) * shape.n + j];
      double v;
      if (acc.infinite) {
        v = kInf;
        r.infinite.push_back(cell_name(i, j));
      } else {
        const double mean = acc.get() / n;
        v = std::max(1.0, std::exp2(-mean));
      }
      r.per_rank_perplexity(i, j) = v;
      log_ppl.add(v == kInf ? -kInf : std::log2(v));
    }
  }
  r.overall_perplexity = log_ppl.infinite ? kInf : std::max(1.0, std::exp2(log_ppl.get() / static_cast<double>(cells)));
  return r;
}

RecoveryError recovery_error(const ModelInstance& truth, const ModelInstance& fitted) {
  if (truth.kind() != fitted.kind()) {
    throw ValidationError("model kinds differ: " + std::string(to_string(truth.kind())) + " vs " +
                          std::string(to_string(fitted.kind())));
  }
  if (truth.shape() != fitted.shape()) {
    throw ValidationError("model shapes differ: " + to_string(truth.shape()) + " vs " + to_string(fitted.shape()));
  }
  const auto shape = truth.shape();
  const bool topics = uses_topics(truth.kind());
  const BoundModel a(truth, truth.items(), truth.topics());
  const BoundModel b(fitted, truth.items(), truth.topics());
  const std::int32_t u = truth.items().size();
  const std::int32_t t = truth.topics().size();
  if (topics && t == 0) throw ValidationError("true model has no topics");

  SessionRecord s;
  s.kind = topics ? InterfaceKind::carousel : (shape.m == 1 ? InterfaceKind::single_list : InterfaceKind::grid);
  s.items = ItemMatrix::Zero(shape.m, shape.n);
  s.clicks = ClickMatrix::Zero(shape.m, shape.n);
  if (topics) s.topics.assign(static_cast<std::size_t>(shape.m), 0);
  const auto prior = to_assignment(s.clicks);

  RecoveryError out;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::int32_t k = 0; k < std::max<std::int32_t>(1, u); ++k) {
    for (int r = 0; r < shape.m * shape.n; ++r) s.items.data()[r] = u > 0 ? (k + r) % u : 0;
    if (topics) {
      for (int i = 0; i < shape.m; ++i) s.topics[static_cast<std::size_t>(i)] = (k + i) % t;
    }
    for (int i = 0; i < shape.m; ++i) {
      for (int j = 0; j < shape.n; ++j) {
        const double e = std::abs(a.conditional(s, {i, j}, prior) - b.conditional(s, {i, j}, prior));
        out.max_abs = std::max(out.max_abs, e);
        sum += e;
        ++count;
      }
    }
  }
  out.mean_abs = count ? sum / static_cast<double>(count) : 0.0;
  return out;
}

std::string eval_report_to_json(const EvalReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  nlohmann::ordered_json j;
  j["total_ll"] = num(r.total_ll);
  j["n_sessions"] = r.n_sessions;
  j["overall_perplexity"] = num(r.overall_perplexity);
  nlohmann::ordered_json cells = nlohmann::ordered_json::object();
  for (int i = 0; i < r.per_rank_perplexity.rows(); ++i) {
    for (int k = 0; k < r.per_rank_perplexity.cols(); ++k) cells[cell_name(i, k)] = num(r.per_rank_perplexity(i, k));
  }
  j["per_rank_perplexity"] = std::move(cells);
  j["infinite"] = r.infinite;
  return j.dump();
}

std::string eval_report_to_text(const EvalReport& r) {
  auto fmt = [](double v) {
    if (!std::isfinite(v)) return std::string("inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  std::vector<std::pair<std::string, std::string>> rows;
  for (int i = 0; i < r.per_rank_perplexity.rows(); ++i) {
    for (int k = 0; k < r.per_rank_perplexity.cols(); ++k) {
      rows.emplace_back(cell_name(i, k), fmt(r.per_rank_perplexity(i, k)));
    }
  }
  rows.emplace_back("overall", fmt(r.overall_perplexity));
  std::size_t w0 = std::string("position").size();
  std::size_t w1 = std::string("perplexity").size();
  for (const auto& [a, b] : rows) {
    w0 = std::max(w0, a.size());
    w1 = std::max(w1, b.size());
  }
  std::ostringstream out;
  auto line = [&](const std::string& a, const std::string& b) {
    out << a << std::string(w0 - a.size() + 2, ' ') << std::string(w1 - b.size(), ' ') << b << '\n';
  };
  line("position", "perplexity");
  out << std::string(w0 + 2 + w1, '-') << '\n';
  for (const auto& [a, b] : rows) line(a, b);
  out << "sessions: " << r.n_sessions << "  total log-likelihood: " << fmt(r.total_ll) << '\n';
  return out.str();
}

}  // namespace clickmodel
