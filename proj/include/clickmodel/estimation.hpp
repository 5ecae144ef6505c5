#pragma once

// Parameter estimation from click logs.
//
// fit_counting: closed-form count ratios for kinds whose every conditional is
// a single parameter (rcm, rctr, dctr, cascade), plus the classic DCM count
// estimator (an approximation; fit_em gives the exact DCM MLE).
//
// fit_em: exact EM for every kind. Product-form conditionals are treated as
// AND/NOT-AND combinations of independent Bernoulli factors; trust_pbm as a
// trust/examination mixture; dcm and dbn by enumerating the latent stopping
// point after the last click of each row.
//
// brute_force_mle: grid search oracle for problems with at most 6 parameters.

#include "clickmodel/core.hpp"
#include "clickmodel/models.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace clickmodel {

enum class InitPolicy { uniform_half, seeded_random };

std::string_view to_string(InitPolicy p);
InitPolicy parse_init_policy(std::string_view name);

struct FitOptions {
  int max_iters = 500;
  double rel_tol = 1e-7;
  InitPolicy init = InitPolicy::uniform_half;
  /// Pseudo-counts: each ratio becomes (successes + eps) / (trials + 2 eps).
  double smoothing_epsilon = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
  double unseen_default = 0.5;
  /// Starting point overriding `init`; must match the log's vocabularies.
  std::optional<ModelInstance> initial;
  /// Tables kept at their initial values.
  std::set<std::string> frozen_tables;
};

/// Throws ValidationError naming the offending field.
void validate(const FitOptions& opts);

struct FitReport {
  ModelInstance model;
  std::vector<double> ll_trajectory;
  int iterations = 0;
  bool converged = false;
  std::string method;
  /// Identifiability convention applied before returning.
  std::string normalization;
  /// "table:key" of parameters the log carries no information about; they
  /// are set to the unseen default.
  std::vector<std::string> undetermined;
};

FitReport fit_counting(ModelKind kind, const ClickLog& log, const FitOptions& opts = {});
FitReport fit_em(ModelKind kind, const ClickLog& log, const FitOptions& opts = {});
/// Counting for rcm, rctr, dctr and cascade; EM for everything else.
FitReport fit(ModelKind kind, const ClickLog& log, const FitOptions& opts = {});

/// Exhaustive search over the lattice {0, step, 2 step, ...}^d: a coarse
/// pass, successively finer windows around the incumbent, then steepest
/// ascent over lattice neighbours until no neighbour improves. Ties keep the
/// lexicographically smallest vector. Throws ValidationError when d > 6 or
/// step is outside (0,1).
ModelInstance brute_force_mle(ModelKind kind, const ClickLog& log, double grid_step, int threads = 1);

/// Sum of session log-likelihoods, reduced in fixed session order.
double log_likelihood(const ModelInstance& model, const ClickLog& log, int threads = 1);

/// Parameter file fields plus ll_trajectory, iterations, converged, method,
/// normalization and undetermined.
std::string fit_report_to_json(const FitReport& report);

}  // namespace clickmodel
