#pragma once

// Held-out scoring and parameter recovery.

#include "clickmodel/core.hpp"
#include "clickmodel/models.hpp"

#include <string>
#include <vector>

namespace clickmodel {

struct EvalReport {
  double total_ll = 0.0;
  /// Perplexity per cell under teacher forcing; +inf where the model gave
  /// probability 0 to an observed outcome.
  RowMajorMatrix<double> per_rank_perplexity;
  /// Geometric mean of the per-cell values (+inf if any cell is infinite).
  double overall_perplexity = 1.0;
  std::size_t n_sessions = 0;
  /// Cells ("i,j") whose perplexity is infinite.
  std::vector<std::string> infinite;
};

/// Sums are accumulated in fixed point, so the report does not depend on
/// session order or worker count. Throws ValidationError on an empty log.
EvalReport evaluate(const ModelInstance& model, const ClickLog& log, int threads = 1);

struct RecoveryError {
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

/// Compares per-cell conditionals under an all-zero click prior, over the
/// canonical layouts that put item (k + r) mod U at the r-th cell (row-major)
/// for k = 0..U-1, U the true model's item count (topics likewise by row).
/// These conditionals are the identified quantities (factor products for
/// pbm-like kinds). Throws ValidationError on kind or shape mismatch.
RecoveryError recovery_error(const ModelInstance& truth, const ModelInstance& fitted);

/// {"total_ll", "n_sessions", "overall_perplexity", "per_rank_perplexity":{"i,j":v},
/// "infinite":[...]}; infinite values are written as null.
std::string eval_report_to_json(const EvalReport& report);
/// Aligned text table, one row per cell plus the overall value.
std::string eval_report_to_text(const EvalReport& report);

}  // namespace clickmodel
