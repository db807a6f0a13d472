#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rankrobust/attack/pgd.hpp"
#include "rankrobust/explain/saliency.hpp"

namespace rankrobust {

/// |top_k(a) intersect top_k(b)| / k.
double precision_at_k(const Vector& a, const Vector& b, std::size_t k);
double precision_at_k(const SaliencyMap& a, const SaliencyMap& b, std::size_t k);

/// Mann-Whitney AUC of scores against binary labels, ties counted 1/2.
double auc_scores(const std::vector<double>& scores, const std::vector<std::size_t>& labels);

/// AUC of P(y = 1 | x) over the rows of xs.
double auc(const Mlp& m, const Matrix& xs, const std::vector<std::size_t>& ys);

/// AUC on perturbed rows, dropping pairs whose prediction changed.
double adversarial_auc(const Mlp& m, const Matrix& originals, const Matrix& perturbed,
                       const std::vector<std::size_t>& ys);

/// Fraction of row pairs whose predicted class differs.
double sensitivity(const Mlp& m, const Matrix& originals, const Matrix& perturbed);

/// How a removed feature is filled in.
struct Masking {
  enum class Kind { zero, mean } kind = Kind::zero;
  Vector mean;  // used when kind == mean

  double value(std::size_t i) const { return kind == Kind::zero ? 0.0 : mean[static_cast<Eigen::Index>(i)]; }
};

/// Smallest k / n such that removing the k most salient features changes the
/// prediction; 1 if no prefix does.
double dffot(const Mlp& m, const Vector& x, const SaliencyMap& s, const Masking& mask = {});

/// Mean over k = 1..n of |f_c(x) - f_c(x without its top-k)|.
double comp(const Mlp& m, const Vector& x, const SaliencyMap& s, const Masking& mask = {});

/// Mean over k = 1..n of |f_c(x) - f_c(x with only its top-k kept)|.
double suff(const Mlp& m, const Vector& x, const SaliencyMap& s, const Masking& mask = {});

struct ManipulationCriterion {
  enum class Kind { first_flip, patk_below } kind = Kind::first_flip;
  double threshold = 0.8;
};

/// First recorded iteration meeting the criterion, if any.
std::optional<std::size_t> manipulation_epoch(const AttackTrace& tr, const ManipulationCriterion& c = {});

enum class CorrelationKind { pearson, spearman };

/// Needs at least three points and nonzero variance on both sides.
double correlation(const std::vector<double>& xs, const std::vector<double>& ys,
                   CorrelationKind kind = CorrelationKind::pearson);

/// Average ranks, ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& v);

struct EvalRow {
  std::string method;
  double patk_er = 0.0, patk_mse = 0.0;
  double cauc = 0.0, aauc = 0.0;
  double sensitivity = 0.0;
  double dffot = 0.0, comp = 0.0, suff = 0.0;
  double model_thickness = 0.0;
  double hessian_norm_mean = 0.0;
};

struct CorrelationSummary {
  std::string method;
  double flip_vs_thickness = 0.0;
  double flip_vs_hessian = 0.0;
  std::size_t samples = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<CorrelationSummary> correlations;
};

/// Column headers in table order.
std::vector<std::string> report_columns();
std::vector<double> row_values(const EvalRow& r);

/// Per column: sensitivity, DFFOT and SUFF are better when lower.
std::vector<bool> lower_is_better();

/// Row indices holding the best value of each column (ties all win).
std::vector<std::vector<std::size_t>> column_winners(const EvalReport& rep);

/// Method x metric grid, P@k in percent, winners in bold, then the
/// correlation block.
std::string render_markdown(const EvalReport& rep);
std::string render_csv(const EvalReport& rep);

}  // namespace rankrobust
