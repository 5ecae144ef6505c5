#include "clickmodel/estimation.hpp"

#include "clickmodel/error.hpp"
#include "clickmodel/parallel.hpp"
#include "clickmodel/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace clickmodel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Stats {
  Eigen::ArrayXd succ;
  Eigen::ArrayXd trials;
  double ll = 0.0;
  std::size_t first_impossible = static_cast<std::size_t>(-1);
  ProductEvent scratch;

  void reset(Eigen::Index n) {
    succ = Eigen::ArrayXd::Zero(n);
    trials = Eigen::ArrayXd::Zero(n);
    ll = 0.0;
    first_impossible = static_cast<std::size_t>(-1);
  }
  void add(Eigen::Index idx, double s, double t) {
    if (idx < 0) return;
    succ[idx] += s;
    trials[idx] += t;
  }
};

using Kernel = std::function<void(const BoundModel&, const SessionRecord&, Stats&)>;

// Runs `kernel` over every session and reduces the chunk statistics in chunk
// order. Session log-likelihoods come from the model itself so the reported
// trajectory is the exact objective.
Stats run_estep(const BoundModel& bm, const ClickLog& log, int threads, const Kernel& kernel) {
  const auto n = bm.model().parameters().size();
  const auto chunks = chunking_for(log.size());
  std::vector<Stats> parts(chunks.count);
  parallel_for(chunks.count, threads, [&](std::size_t c) {
    auto& st = parts[c];
    st.reset(n);
    const std::size_t end = std::min(log.size(), (c + 1) * chunks.size);
    for (std::size_t k = c * chunks.size; k < end; ++k) {
      const auto& s = log[k];
      const double ll = bm.joint_log_likelihood(s);
      if (ll == kNegInf && st.first_impossible == static_cast<std::size_t>(-1)) st.first_impossible = k;
      st.ll += ll;
      if (ll != kNegInf) kernel(bm, s, st);
    }
  });
  Stats total;
  total.reset(n);
  for (const auto& p : parts) {
    total.succ += p.succ;
    total.trials += p.trials;
    total.ll += p.ll;
    if (total.first_impossible == static_cast<std::size_t>(-1)) total.first_impossible = p.first_impossible;
  }
  return total;
}

void product_kernel(const BoundModel& bm, const SessionRecord& s, Stats& st) {
  const auto prior = to_assignment(s.clicks);
  auto& ev = st.scratch;
  for (int i = 0; i < s.items.rows(); ++i) {
    for (int j = 0; j < s.items.cols(); ++j) {
      bm.product_event(s, {i, j}, prior, ev);
      if (ev.zero) continue;
      const bool click = s.clicks(i, j) != 0;
      const double p = ev.probability();
      if (click ? p <= 0.0 : p >= 1.0) continue;
      for (const auto& a : ev.positive) st.add(a.index, click ? 1.0 : (a.value - p) / (1.0 - p), 1.0);
      int start = 0;
      for (std::size_t g = 0; g < ev.group_ends.size(); ++g) {
        const int end = ev.group_ends[g];
        double q = 1.0;
        for (int k = start; k < end; ++k) q *= ev.negative[static_cast<std::size_t>(k)].value;
        double rest = 1.0;
        if (!click) {
          if (1.0 - q > 1e-12) {
            rest = p / (1.0 - q);
          } else {
            for (const auto& a : ev.positive) rest *= a.value;
            int s2 = 0;
            for (std::size_t h = 0; h < ev.group_ends.size(); ++h) {
              double qh = 1.0;
              for (int k = s2; k < ev.group_ends[h]; ++k) qh *= ev.negative[static_cast<std::size_t>(k)].value;
              if (h != g) rest *= 1.0 - qh;
              s2 = ev.group_ends[h];
            }
          }
        }
        for (int k = start; k < end; ++k) {
          const auto& a = ev.negative[static_cast<std::size_t>(k)];
          const double post = click ? (a.value - q) / (1.0 - q) : (a.value - rest * (a.value - q)) / (1.0 - p);
          st.add(a.index, post, 1.0);
        }
        start = end;
      }
    }
  }
}

// Offsets of the tables a kernel needs. Fitted models share the log's
// vocabularies, so log ids index the tables directly.
struct Offsets {
  Eigen::Index position = -1, item = -1, trust = -1, lambda = -1, sigma = -1, gamma = -1;
  explicit Offsets(const ModelInstance& m) {
    for (const auto& t : m.tables()) {
      if (t.name == "position") position = t.offset;
      if (t.name == "item") item = t.offset;
      if (t.name == "trust") trust = t.offset;
      if (t.name == "lambda") lambda = t.offset;
      if (t.name == "sigma") sigma = t.offset;
      if (t.name == "gamma") gamma = t.offset;
    }
  }
};

// Mixture form: with probability h the click is a trust click; otherwise it
// needs examination (f' = f / (1 - h)) and attraction g.
void trust_kernel(const BoundModel& bm, const SessionRecord& s, Stats& st) {
  const Offsets o(bm.model());
  const auto& theta = bm.model().parameters();
  const int n = static_cast<int>(s.items.cols());
  for (int i = 0; i < s.items.rows(); ++i) {
    for (int j = 0; j < n; ++j) {
      const Eigen::Index fi = o.position + i * n + j;
      const Eigen::Index hi = o.trust + i * n + j;
      const Eigen::Index gi = o.item + s.items(i, j);
      const double h = theta[hi];
      const double f = h < 1.0 ? std::min(1.0, theta[fi] / (1.0 - h)) : 0.0;
      const double g = theta[gi];
      if (s.clicks(i, j)) {
        const double p = h + (1.0 - h) * f * g;
        if (p <= 0.0) continue;
        const double w = (1.0 - h) * f * g / p;
        st.add(hi, h / p, 1.0);
        st.add(fi, w, w);
        st.add(gi, w, w);
      } else {
        const double miss = 1.0 - f * g;
        if (miss <= 0.0) continue;
        st.add(hi, 0.0, 1.0);
        st.add(fi, f * (1.0 - g) / miss, 1.0);
        st.add(gi, g * (1.0 - f) / miss, 1.0);
      }
    }
  }
}

int last_click(const SessionRecord& s, int row) {
  int last = -1;
  for (int j = 0; j < s.clicks.cols(); ++j) {
    if (s.clicks(row, j)) last = j;
  }
  return last;
}

// Only latent variable: whether the user went on after the last click.
void dcm_kernel(const BoundModel& bm, const SessionRecord& s, Stats& st) {
  const Offsets o(bm.model());
  const auto& theta = bm.model().parameters();
  const int n = static_cast<int>(s.items.cols());
  for (int i = 0; i < s.items.rows(); ++i) {
    auto alpha = [&](int j) { return o.item + s.items(i, j); };
    auto lambda = [&](int j) { return o.lambda + static_cast<Eigen::Index>(i) * (n - 1) + j; };
    const int l = last_click(s, i);
    if (l < 0) {
      for (int j = 0; j < n; ++j) st.add(alpha(j), 0.0, 1.0);
      continue;
    }
    for (int j = 0; j <= l; ++j) {
      st.add(alpha(j), s.clicks(i, j), 1.0);
      if (j < l && s.clicks(i, j)) st.add(lambda(j), 1.0, 1.0);
    }
    if (l == n - 1) continue;
    double skipped = 1.0;
    for (int m = l + 1; m < n; ++m) skipped *= 1.0 - theta[alpha(m)];
    const double lam = theta[lambda(l)];
    const double denom = 1.0 - lam + lam * skipped;
    const double w = denom > 0.0 ? lam * skipped / denom : 0.0;
    st.add(lambda(l), w, 1.0);
    for (int m = l + 1; m < n; ++m) st.add(alpha(m), 0.0, w);
  }
}

// Enumerates where the user stopped after the last click of each row.
void dbn_kernel(const BoundModel& bm, const SessionRecord& s, Stats& st) {
  const Offsets o(bm.model());
  const auto& theta = bm.model().parameters();
  const int n = static_cast<int>(s.items.cols());
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < s.items.rows(); ++i) {
    auto alpha = [&](int j) { return o.item + s.items(i, j); };
    auto sigma = [&](int j) { return o.sigma + s.items(i, j); };
    const double gamma = theta[o.gamma];
    const int l = last_click(s, i);
    for (int j = 0; j < l; ++j) {
      st.add(alpha(j), s.clicks(i, j), 1.0);
      if (s.clicks(i, j)) st.add(sigma(j), 0.0, 1.0);
      st.add(o.gamma, 1.0, 1.0);
    }
    // w[k]: the user examined positions up to k and went no further, for k
    // from the first position not fixed by the clicks.
    const int first = std::max(l, 0);
    double satisfied = 0.0;
    double run;
    if (l >= 0) {
      st.add(alpha(l), 1.0, 1.0);
      satisfied = theta[sigma(l)];
      run = 1.0 - satisfied;
    } else {
      run = 1.0 - theta[alpha(0)];
    }
    for (int k = first; k < n; ++k) {
      if (k > first) run *= gamma * (1.0 - theta[alpha(k)]);
      w[static_cast<std::size_t>(k)] = run * (k < n - 1 ? 1.0 - gamma : 1.0);
    }
    double z = satisfied;
    for (int k = first; k < n; ++k) z += w[static_cast<std::size_t>(k)];
    if (!(z > 0.0)) continue;
    if (l >= 0) st.add(sigma(l), satisfied / z, 1.0);
    double tail = 0.0;
    for (int k = n - 1; k >= first; --k) {
      const double pk = w[static_cast<std::size_t>(k)] / z;
      st.add(o.gamma, pk * (k - first), pk * (k - first + (k < n - 1 ? 1 : 0)));
      tail += pk;
      if (k > first || l < 0) st.add(alpha(k), 0.0, tail);
    }
  }
}

Kernel kernel_for(ModelKind kind) {
  switch (kind) {
    case ModelKind::trust_pbm: return trust_kernel;
    case ModelKind::dcm: return dcm_kernel;
    case ModelKind::dbn: return dbn_kernel;
    default: return product_kernel;
  }
}

// EM runs on an internal vector; only trust_pbm differs (f' = f / (1 - h)).
Eigen::VectorXd to_internal(const ModelInstance& m) {
  Eigen::VectorXd phi = m.parameters();
  if (m.kind() == ModelKind::trust_pbm) {
    const auto& f = m.table("position");
    const auto& h = m.table("trust");
    for (Eigen::Index c = 0; c < f.size; ++c) {
      const double hv = phi[h.offset + c];
      phi[f.offset + c] = hv < 1.0 ? std::min(1.0, phi[f.offset + c] / (1.0 - hv)) : 0.0;
    }
  }
  return phi;
}

Eigen::VectorXd to_natural(const ModelInstance& m, Eigen::VectorXd phi) {
  if (m.kind() == ModelKind::trust_pbm) {
    const auto& f = m.table("position");
    const auto& h = m.table("trust");
    for (Eigen::Index c = 0; c < f.size; ++c) phi[f.offset + c] *= 1.0 - phi[h.offset + c];
  }
  return phi;
}

std::vector<bool> frozen_mask(const ModelInstance& m, const std::set<std::string>& frozen) {
  std::vector<bool> mask(static_cast<std::size_t>(m.parameters().size()), false);
  for (const auto& name : frozen) {
    const auto& t = m.table(name);
    for (Eigen::Index k = 0; k < t.size; ++k) mask[static_cast<std::size_t>(t.offset + k)] = true;
  }
  return mask;
}

ModelInstance blank_model(ModelKind kind, const ClickLog& log, double value) {
  return constant_model(kind, log.shape(), log.items(), uses_topics(kind) ? log.topics() : Vocabulary{}, value);
}

void check_log(ModelKind kind, const ClickLog& log) {
  if (log.empty()) throw ValidationError("cannot fit a model to an empty log");
  if (uses_topics(kind) && log.kind() != InterfaceKind::carousel) {
    throw ValidationError("model kind " + std::string(to_string(kind)) + " needs a carousel log");
  }
}

ModelInstance initial_model(ModelKind kind, const ClickLog& log, const FitOptions& opts) {
  const auto base = blank_model(kind, log, 0.5);
  ModelInstance start = base;
  if (opts.initial) {
    const auto& init = *opts.initial;
    if (init.kind() != kind || init.shape() != base.shape() || init.items() != base.items() ||
        init.topics() != base.topics()) {
      throw ValidationError("initial model does not match the model kind, shape or vocabularies of the log");
    }
    start = init;
  } else if (opts.init == InitPolicy::seeded_random) {
    RandomStream stream(opts.seed, 0x9e3779b97f4a7c15ULL);
    start = random_model(kind, base.shape(), base.items(), base.topics(), stream);
  }
  return make_model_from_vector(kind, start.shape(), start.items(), start.topics(), start.parameters(),
                                opts.unseen_default);
}

// Fills zero-trial entries with the unseen default and lists them.
void settle_undetermined(const ModelInstance& m, Eigen::VectorXd& theta, const Eigen::ArrayXd& trials,
                         const std::vector<bool>& frozen, std::vector<std::string>& names) {
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    if (trials[k] > 0.0 || frozen[static_cast<std::size_t>(k)]) continue;
    theta[k] = m.unseen_default();
    names.push_back(m.parameter_name(k));
  }
}

// Rescales a multiplicative pair (a scaled down, b scaled up) so the largest
// informative entry of `a` is 1.
// `floor` bounds the divisor from below (trust_pbm keeps f*u + h <= 1 for the
// unseen default u).
void normalize_pair(const ModelInstance& m, Eigen::VectorXd& theta, const Eigen::ArrayXd& trials,
                    const std::vector<bool>& frozen, std::string_view a, std::string_view b, double floor = 0.0) {
  const auto& ta = m.table(a);
  const auto& tb = m.table(b);
  for (Eigen::Index k = 0; k < ta.size; ++k) {
    if (frozen[static_cast<std::size_t>(ta.offset + k)]) return;
  }
  for (Eigen::Index k = 0; k < tb.size; ++k) {
    if (frozen[static_cast<std::size_t>(tb.offset + k)]) return;
  }
  double top = 0.0;
  for (Eigen::Index k = 0; k < ta.size; ++k) {
    if (trials[ta.offset + k] > 0.0) top = std::max(top, theta[ta.offset + k]);
  }
  top = std::max(top, floor);
  if (!(top > 0.0) || top == 1.0) return;
  for (Eigen::Index k = 0; k < ta.size; ++k) {
    if (trials[ta.offset + k] > 0.0) theta[ta.offset + k] = std::min(1.0, theta[ta.offset + k] / top);
  }
  for (Eigen::Index k = 0; k < tb.size; ++k) {
    if (trials[tb.offset + k] > 0.0) theta[tb.offset + k] *= top;
  }
}

std::string normalize(ModelKind kind, const ModelInstance& m, Eigen::VectorXd& theta, const Eigen::ArrayXd& trials,
                      const std::vector<bool>& frozen) {
  switch (kind) {
    case ModelKind::pbm:
      normalize_pair(m, theta, trials, frozen, "position", "item");
      return "max(position) = 1";
    case ModelKind::ubm:
      normalize_pair(m, theta, trials, frozen, "gamma", "item");
      return "max(gamma) = 1";
    case ModelKind::trust_pbm: {
      const auto& f = m.table("position");
      const auto& h = m.table("trust");
      double floor = 0.0;
      for (Eigen::Index c = 0; c < f.size; ++c) {
        const double room = 1.0 - theta[h.offset + c];
        if (room > 0.0) floor = std::max(floor, m.unseen_default() * theta[f.offset + c] / room);
      }
      normalize_pair(m, theta, trials, frozen, "position", "item", floor);
      return "max(position) = 1 unless the trust bound at the unseen default needs less";
    }
    default: return "none";
  }
}

double ratio(double s, double t, double eps) { return (s + eps) / (t + 2.0 * eps); }

}  // namespace

std::string_view to_string(InitPolicy p) {
  return p == InitPolicy::uniform_half ? "uniform_half" : "seeded_random";
}

InitPolicy parse_init_policy(std::string_view name) {
  if (name == "uniform_half") return InitPolicy::uniform_half;
  if (name == "seeded_random") return InitPolicy::seeded_random;
  throw ValidationError("unknown init policy \"" + std::string(name) + "\" (expected uniform_half or seeded_random)");
}

void validate(const FitOptions& opts) {
  if (opts.max_iters < 1) throw ValidationError("max_iters must be >= 1");
  if (!(opts.rel_tol > 0.0)) throw ValidationError("rel_tol must be > 0");
  if (!(opts.smoothing_epsilon >= 0.0) || !std::isfinite(opts.smoothing_epsilon)) {
    throw ValidationError("smoothing_epsilon must be finite and >= 0");
  }
  if (!(opts.unseen_default >= 0.0 && opts.unseen_default <= 1.0)) {
    throw ValidationError("unseen_default must lie in [0,1]");
  }
}

double log_likelihood(const ModelInstance& model, const ClickLog& log, int threads) {
  const BoundModel bm(model, log);
  const auto chunks = chunking_for(log.size());
  std::vector<double> parts(chunks.count, 0.0);
  parallel_for(chunks.count, threads, [&](std::size_t c) {
    const std::size_t end = std::min(log.size(), (c + 1) * chunks.size);
    double sum = 0.0;
    for (std::size_t k = c * chunks.size; k < end; ++k) sum += bm.joint_log_likelihood(log[k]);
    parts[c] = sum;
  });
  double total = 0.0;
  for (double p : parts) total += p;
  return total;
}

FitReport fit_counting(ModelKind kind, const ClickLog& log, const FitOptions& opts) {
  validate(opts);
  check_log(kind, log);
  if (kind != ModelKind::rcm && kind != ModelKind::rctr && kind != ModelKind::dctr && kind != ModelKind::cascade &&
      kind != ModelKind::dcm) {
    throw ValidationError("no closed-form estimator for model kind " + std::string(to_string(kind)) + "; use EM");
  }
  const auto base = blank_model(kind, log, opts.unseen_default);
  const Offsets o(base);
  const auto n_params = base.parameters().size();
  Eigen::ArrayXd succ = Eigen::ArrayXd::Zero(n_params);
  Eigen::ArrayXd trials = Eigen::ArrayXd::Zero(n_params);
  const int n = base.shape().n;
  for (const auto& s : log.sessions()) {
    for (int i = 0; i < s.items.rows(); ++i) {
      const int l = last_click(s, i);
      int first = -1;
      for (int j = 0; j < n && first < 0; ++j) {
        if (s.clicks(i, j)) first = j;
      }
      for (int j = 0; j < n; ++j) {
        const double c = s.clicks(i, j);
        Eigen::Index idx = -1;
        switch (kind) {
          case ModelKind::rcm: idx = 0; break;
          case ModelKind::rctr: idx = o.position + i * n + j; break;
          case ModelKind::dctr: idx = o.item + s.items(i, j); break;
          case ModelKind::cascade:
            if (first < 0 || j <= first) idx = o.item + s.items(i, j);
            break;
          case ModelKind::dcm:
            if (l < 0 || j <= l) idx = o.item + s.items(i, j);
            if (c && j < n - 1) {
              const Eigen::Index lam = o.lambda + static_cast<Eigen::Index>(i) * (n - 1) + j;
              succ[lam] += j < l ? 1.0 : 0.0;
              trials[lam] += 1.0;
            }
            break;
          default: break;
        }
        if (idx >= 0) {
          succ[idx] += c;
          trials[idx] += 1.0;
        }
      }
    }
  }
  FitReport report;
  Eigen::VectorXd theta(n_params);
  for (Eigen::Index k = 0; k < n_params; ++k) theta[k] = ratio(succ[k], trials[k], opts.smoothing_epsilon);
  settle_undetermined(base, theta, trials, std::vector<bool>(static_cast<std::size_t>(n_params), false),
                      report.undetermined);
  report.model = base.with_parameters(std::move(theta));
  report.ll_trajectory = {log_likelihood(report.model, log, opts.threads)};
  report.iterations = 0;
  report.converged = true;
  report.method = "counting";
  report.normalization = "none";
  return report;
}

FitReport fit_em(ModelKind kind, const ClickLog& log, const FitOptions& opts) {
  validate(opts);
  check_log(kind, log);
  const auto kernel = kernel_for(kind);
  ModelInstance model = initial_model(kind, log, opts);
  const auto frozen = frozen_mask(model, opts.frozen_tables);
  const auto n_params = model.parameters().size();

  FitReport report;
  report.method = "em";
  Stats st = run_estep(BoundModel(model, log), log, opts.threads, kernel);
  if (st.ll == kNegInf) {
    throw ValidationError("session " + std::to_string(st.first_impossible + 1) +
                          " has probability 0 under model kind " + std::string(to_string(kind)) +
                          " for every parameter setting");
  }
  if (!std::isfinite(st.ll)) throw InternalFault("non-finite log-likelihood at the starting point");
  report.ll_trajectory.push_back(st.ll);

  for (int it = 1; it <= opts.max_iters; ++it) {
    Eigen::VectorXd phi = to_internal(model);
    for (Eigen::Index k = 0; k < n_params; ++k) {
      if (frozen[static_cast<std::size_t>(k)] || !(st.trials[k] > 0.0)) continue;
      phi[k] = std::clamp(ratio(st.succ[k], st.trials[k], opts.smoothing_epsilon), 0.0, 1.0);
    }
    model = model.with_parameters(to_natural(model, std::move(phi)));
    const double prev = report.ll_trajectory.back();
    st = run_estep(BoundModel(model, log), log, opts.threads, kernel);
    if (!std::isfinite(st.ll)) {
      throw InternalFault("non-finite log-likelihood after EM iteration " + std::to_string(it));
    }
    report.ll_trajectory.push_back(st.ll);
    report.iterations = it;
    const double scale = std::max(1.0, std::abs(prev));
    // Pseudo-counts turn EM into a posterior-mode search, which need not
    // increase the plain log-likelihood.
    if (opts.smoothing_epsilon == 0.0 && st.ll < prev - 1e-9 * scale) {
      throw InternalFault("EM log-likelihood decreased from " + std::to_string(prev) + " to " +
                          std::to_string(st.ll) + " at iteration " + std::to_string(it));
    }
    if (std::abs(st.ll - prev) <= opts.rel_tol * scale) {
      report.converged = true;
      break;
    }
  }

  Eigen::VectorXd theta = model.parameters();
  settle_undetermined(model, theta, st.trials, frozen, report.undetermined);
  report.normalization = normalize(kind, model, theta, st.trials, frozen);
  report.model = model.with_parameters(std::move(theta));
  return report;
}

FitReport fit(ModelKind kind, const ClickLog& log, const FitOptions& opts) {
  switch (kind) {
    case ModelKind::rcm:
    case ModelKind::rctr:
    case ModelKind::dctr:
    case ModelKind::cascade: return fit_counting(kind, log, opts);
    default: return fit_em(kind, log, opts);
  }
}

std::string fit_report_to_json(const FitReport& report) {
  auto j = nlohmann::ordered_json::parse(model_to_json(report.model));
  nlohmann::ordered_json traj = nlohmann::ordered_json::array();
  for (double v : report.ll_trajectory) {
    if (std::isfinite(v)) {
      traj.push_back(v);
    } else {
      traj.push_back(nullptr);
    }
  }
  j["ll_trajectory"] = std::move(traj);
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["method"] = report.method;
  j["normalization"] = report.normalization;
  j["undetermined"] = report.undetermined;
  return j.dump();
}

}  // namespace clickmodel
