#include "clickmodel/cli.hpp"

#include "clickmodel/error.hpp"
#include "clickmodel/estimation.hpp"
#include "clickmodel/evaluation.hpp"
#include "clickmodel/log_io.hpp"
#include "clickmodel/parallel.hpp"
#include "clickmodel/simulation.hpp"
#include "clickmodel/taxonomy.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace clickmodel {

namespace {

constexpr const char* kVersion = "1.0.0";

// Flag misuse detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("write failure on " + path);
}

// Flags as given, in declaration order; nothing environment-dependent.
nlohmann::ordered_json flags_of(const CLI::App& cmd) {
  nlohmann::ordered_json flags = nlohmann::ordered_json::object();
  for (const auto* opt : cmd.get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    const auto& results = opt->results();
    std::string name = opt->get_name();
    if (results.size() == 1) {
      flags[name] = results.front();
    } else {
      flags[name] = results;
    }
  }
  return flags;
}

void write_manifest(const std::string& out_path, const CLI::App& cmd, nlohmann::ordered_json decisions,
                    std::vector<std::string> outputs) {
  nlohmann::ordered_json j;
  j["tool"] = "clickmodel";
  j["version"] = kVersion;
  j["command"] = cmd.get_name();
  j["flags"] = flags_of(cmd);
  j["outputs"] = std::move(outputs);
  j["decisions"] = std::move(decisions);
  write_text(out_path + ".manifest.json", j.dump(2) + "\n");
}

InterfaceKind default_interface(ModelKind kind, const LayoutShape& shape) {
  if (uses_topics(kind)) return InterfaceKind::carousel;
  return shape.m == 1 ? InterfaceKind::single_list : InterfaceKind::grid;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

struct Flags {
  std::string model, params, log, out, shape, init = "uniform_half", deps, kind, layout = "uniform", method = "auto";
  std::vector<std::string> models, specs;
  std::string spec;
  std::int64_t sessions = 0, items = 0, topics = 0;
  std::uint64_t seed = 0;
  double tol = 1e-7, epsilon = 0.0, grid_step = 0.01, zeta = 0.0;
  int max_iter = 500;
};

int do_simulate(const CLI::App& cmd, const Flags& f, std::ostream& out) {
  const auto kind = parse_model_kind(f.model);
  const auto have = [&](const char* name) { return cmd.get_option(name)->count() > 0; };
  SimConfig cfg;
  cfg.sessions = f.sessions;
  cfg.seed = f.seed;
  cfg.threads = default_threads();
  cfg.layout_policy = parse_layout_policy(f.layout);

  std::optional<ModelInstance> truth;
  if (have("--params")) {
    if (have("--zeta")) throw UsageError("--zeta cannot be combined with --params");
    if (have("--items") || have("--topics")) throw UsageError("--items/--topics come from --params when it is given");
    truth = read_model_file(f.params);
    if (truth->kind() != kind) {
      throw ValidationError("--params holds a " + std::string(to_string(truth->kind())) + " model but --model is " +
                            f.model);
    }
    if (have("--shape") && parse_shape(f.shape) != truth->shape()) {
      throw ValidationError("--shape " + f.shape + " differs from the parameter file shape " +
                            to_string(truth->shape()));
    }
    cfg.shape = truth->shape();
    cfg.item_names = truth->items().names();
    if (uses_topics(kind)) cfg.topic_names = truth->topics().names();
  } else {
    if (!have("--shape")) throw UsageError("--shape is required when --params is absent");
    if (have("--zeta") && kind != ModelKind::rcm) throw UsageError("--zeta applies to --model rcm only");
    cfg.shape = parse_shape(f.shape);
  }
  cfg.kind = have("--kind") ? parse_interface_kind(f.kind) : default_interface(kind, cfg.shape);
  if (cfg.item_names.empty()) {
    cfg.item_universe = have("--items") ? f.items : 2LL * cfg.shape.m * cfg.shape.n;
  }
  if (cfg.topic_names.empty() && cfg.kind == InterfaceKind::carousel) {
    cfg.topic_universe = have("--topics") ? f.topics : 2LL * cfg.shape.m;
  }
  validate(cfg);

  bool generated = false;
  if (!truth) {
    const Vocabulary topics = uses_topics(kind) ? topic_universe(cfg) : Vocabulary{};
    if (have("--zeta")) {
      truth = constant_model(kind, cfg.shape, item_universe(cfg), topics, f.zeta);
    } else {
      RandomStream stream(cfg.seed, std::uint64_t{1} << 63);
      truth = random_model(kind, cfg.shape, item_universe(cfg), topics, stream);
      generated = true;
    }
  }
  const auto log = simulate_log(*truth, cfg);
  std::ostringstream text;
  write_log(log, text);
  if (f.out.empty()) {
    out << text.str();
    return 0;
  }
  write_text(f.out, text.str());
  std::vector<std::string> outputs{f.out};
  if (!have("--params")) {
    write_model_file(*truth, f.out + ".params.json");
    outputs.push_back(f.out + ".params.json");
  }
  nlohmann::ordered_json decisions;
  decisions["interface"] = std::string(to_string(cfg.kind));
  decisions["layout_policy"] = std::string(to_string(cfg.layout_policy));
  decisions["ground_truth"] = have("--params") ? "parameter file" : generated ? "random (seeded)" : "constant";
  write_manifest(f.out, cmd, std::move(decisions), outputs);
  out << "wrote " << log.size() << " sessions to " << f.out << '\n';
  return 0;
}

int do_fit(const CLI::App& cmd, const Flags& f, std::ostream& out) {
  const auto kind = parse_model_kind(f.model);
  const auto log = read_log_file(f.log);
  FitOptions opts;
  opts.max_iters = f.max_iter;
  opts.rel_tol = f.tol;
  opts.init = parse_init_policy(f.init);
  opts.seed = f.seed;
  opts.smoothing_epsilon = f.epsilon;
  opts.threads = default_threads();
  FitReport report;
  if (f.method == "auto") {
    report = fit(kind, log, opts);
  } else if (f.method == "counting") {
    report = fit_counting(kind, log, opts);
  } else if (f.method == "em") {
    report = fit_em(kind, log, opts);
  } else {
    throw UsageError("--method must be auto, counting or em");
  }
  const auto json = fit_report_to_json(report) + "\n";
  if (f.out.empty()) {
    out << json;
    return 0;
  }
  write_text(f.out, json);
  nlohmann::ordered_json decisions;
  decisions["method"] = report.method;
  decisions["normalization"] = report.normalization;
  decisions["iterations"] = report.iterations;
  decisions["converged"] = report.converged;
  write_manifest(f.out, cmd, std::move(decisions), {f.out});
  out << "fit " << f.model << ": log-likelihood " << fmt(report.ll_trajectory.back()) << ", " << report.iterations
      << " iterations, " << (report.converged ? "converged" : "not converged") << '\n';
  return 0;
}

int do_evaluate(const CLI::App& cmd, const Flags& f, std::ostream& out) {
  const auto model = read_model_file(f.params);
  const auto log = read_log_file(f.log);
  const auto report = evaluate(model, log, default_threads());
  out << eval_report_to_text(report);
  if (!f.out.empty()) {
    write_text(f.out, eval_report_to_json(report) + "\n");
    nlohmann::ordered_json decisions;
    decisions["conditioning"] = "teacher forcing on observed clicks";
    write_manifest(f.out, cmd, std::move(decisions), {f.out});
  }
  return 0;
}

ModelDescriptor descriptor_from_file(const std::string& path) {
  auto d = descriptor_from_json(read_text(path));
  validate_descriptor(d);
  return d;
}

int do_classify(const CLI::App& cmd, const Flags& f, std::ostream& out) {
  const int given = static_cast<int>(cmd.get_option("--deps")->count() > 0) +
                    static_cast<int>(cmd.get_option("--model")->count() > 0) +
                    static_cast<int>(cmd.get_option("--spec")->count() > 0);
  if (given != 1) throw UsageError("classify needs exactly one of --deps, --model or --spec");
  GlobalDeps deps;
  if (cmd.get_option("--deps")->count()) {
    deps = parse_deps(f.deps);
  } else if (cmd.get_option("--model")->count()) {
    deps = descriptor_of(f.model).deps;
  } else {
    deps = descriptor_from_file(f.spec).deps;
  }
  out << display_name(classify(deps)) << '\n';
  return 0;
}

int do_compare(const CLI::App&, const Flags& f, std::ostream& out) {
  if (f.models.size() + f.specs.size() != 2) {
    throw UsageError("compare needs exactly two descriptors (any mix of --model and --spec)");
  }
  std::vector<ModelDescriptor> ds;
  for (const auto& m : f.models) ds.push_back(descriptor_of(m));
  for (const auto& s : f.specs) ds.push_back(descriptor_from_file(s));
  out << (equivalent(ds[0], ds[1]) ? "equivalent" : "not equivalent") << '\n';
  return 0;
}

int do_oracle(const CLI::App& cmd, const Flags& f, std::ostream& out) {
  const auto kind = parse_model_kind(f.model);
  const auto log = read_log_file(f.log);
  const auto model = brute_force_mle(kind, log, f.grid_step, default_threads());
  const double ll = log_likelihood(model, log, default_threads());
  auto j = nlohmann::ordered_json::parse(model_to_json(model));
  j["log_likelihood"] = ll;
  j["grid_step"] = f.grid_step;
  const auto text = j.dump() + "\n";
  if (f.out.empty()) {
    out << text;
    return 0;
  }
  write_text(f.out, text);
  nlohmann::ordered_json decisions;
  decisions["search"] = "coarse grid, shrinking windows, lattice ascent; ties to the lexicographically smallest vector";
  write_manifest(f.out, cmd, std::move(decisions), {f.out});
  out << "oracle " << f.model << ": log-likelihood " << fmt(ll) << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Click-model workbench: simulate, fit, evaluate and classify click models.", "clickmodel"};
  app.set_version_flag("--version", std::string("clickmodel ") + kVersion);
  app.require_subcommand(1);
  Flags f;

  auto* sim = app.add_subcommand("simulate", "Simulate a click log from a model");
  sim->add_option("--model", f.model, "Model kind")->required();
  sim->add_option("--params", f.params, "Ground-truth parameter file (random when absent)");
  sim->add_option("--shape", f.shape, "Layout shape MxN");
  sim->add_option("--sessions", f.sessions, "Number of sessions")->required();
  sim->add_option("--seed", f.seed, "Random seed");
  sim->add_option("--out", f.out, "Output log (stdout when absent)");
  sim->add_option("--zeta", f.zeta, "Click probability of a constant rcm")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--kind", f.kind, "Interface kind: single_list, grid or carousel");
  sim->add_option("--items", f.items, "Item universe size");
  sim->add_option("--topics", f.topics, "Topic universe size");
  sim->add_option("--layout", f.layout, "Layout policy: uniform or fixed");

  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a click log");
  fit_cmd->add_option("--model", f.model, "Model kind")->required();
  fit_cmd->add_option("--log", f.log, "Click log")->required();
  fit_cmd->add_option("--out", f.out, "Fit report (stdout when absent)");
  fit_cmd->add_option("--tol", f.tol, "Relative log-likelihood improvement threshold");
  fit_cmd->add_option("--max-iter", f.max_iter, "Maximum EM iterations");
  fit_cmd->add_option("--init", f.init, "uniform_half or seeded_random");
  fit_cmd->add_option("--seed", f.seed, "Seed for seeded_random");
  fit_cmd->add_option("--epsilon", f.epsilon, "Pseudo-count added to numerators and denominators");
  fit_cmd->add_option("--method", f.method, "auto, counting or em");

  auto* eval = app.add_subcommand("evaluate", "Score a fitted model on a click log");
  eval->add_option("--params", f.params, "Parameter or fit report file")->required();
  eval->add_option("--log", f.log, "Click log")->required();
  eval->add_option("--out", f.out, "JSON report");

  auto* cls = app.add_subcommand("classify", "Print the taxonomy category of a dependency set");
  cls->add_option("--deps", f.deps, "Comma-separated subset of topics,items,clicks");
  cls->add_option("--model", f.model, "Catalog model name");
  cls->add_option("--spec", f.spec, "Descriptor file");

  auto* cmp = app.add_subcommand("compare", "Test two descriptors for equivalence");
  cmp->add_option("--model", f.models, "Catalog model name (repeatable)");
  cmp->add_option("--spec", f.specs, "Descriptor file (repeatable)");

  auto* orc = app.add_subcommand("oracle", "Brute-force maximum likelihood on a small problem");
  orc->add_option("--model", f.model, "Model kind")->required();
  orc->add_option("--log", f.log, "Click log")->required();
  orc->add_option("--grid-step", f.grid_step, "Grid step in (0,1)");
  orc->add_option("--out", f.out, "Parameter file (stdout when absent)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "clickmodel " << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    if (sim->parsed()) return do_simulate(*sim, f, out);
    if (fit_cmd->parsed()) return do_fit(*fit_cmd, f, out);
    if (eval->parsed()) return do_evaluate(*eval, f, out);
    if (cls->parsed()) return do_classify(*cls, f, out);
    if (cmp->parsed()) return do_compare(*cmp, f, out);
    if (orc->parsed()) return do_oracle(*orc, f, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const InternalFault& e) {
    err << "internal fault: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args, std::cout, std::cerr);
}

}  // namespace clickmodel
