#include "rankrobust/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace rankrobust {

double precision_at_k(const Vector& a, const Vector& b, std::size_t k) {
  if (a.size() != b.size()) throw std::invalid_argument("precision_at_k: length mismatch");
  const std::vector<std::size_t> ta = top_k(a, k), tb = top_k(b, k);
  std::size_t hit = 0;
  for (std::size_t i : ta)
    if (std::find(tb.begin(), tb.end(), i) != tb.end()) ++hit;
  return static_cast<double>(hit) / static_cast<double>(k);
}

double precision_at_k(const SaliencyMap& a, const SaliencyMap& b, std::size_t k) {
  return precision_at_k(a.scores, b.scores, k);
}

double auc_scores(const std::vector<double>& scores, const std::vector<std::size_t>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: length mismatch");
  const std::vector<double> r = average_ranks(scores);
  double rank_pos = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      rank_pos += r[i];
      ++pos;
    }
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("auc: both classes must be present");
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (rank_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double auc(const Mlp& m, const Matrix& xs, const std::vector<std::size_t>& ys) {
  std::vector<double> s(static_cast<std::size_t>(xs.rows()));
  for (Eigen::Index r = 0; r < xs.rows(); ++r)
    s[static_cast<std::size_t>(r)] = m.class_probabilities(xs.row(r).transpose())[1];
  return auc_scores(s, ys);
}

double adversarial_auc(const Mlp& m, const Matrix& originals, const Matrix& perturbed,
                       const std::vector<std::size_t>& ys) {
  if (originals.rows() != perturbed.rows() || static_cast<std::size_t>(originals.rows()) != ys.size())
    throw std::invalid_argument("adversarial_auc: length mismatch");
  std::vector<double> s;
  std::vector<std::size_t> y;
  for (Eigen::Index r = 0; r < originals.rows(); ++r) {
    const Vector xo = originals.row(r).transpose(), xp = perturbed.row(r).transpose();
    if (m.predict(xo) != m.predict(xp)) continue;
    s.push_back(m.class_probabilities(xp)[1]);
    y.push_back(ys[static_cast<std::size_t>(r)]);
  }
  return auc_scores(s, y);
}

double sensitivity(const Mlp& m, const Matrix& originals, const Matrix& perturbed) {
  if (originals.rows() != perturbed.rows()) throw std::invalid_argument("sensitivity: length mismatch");
  if (originals.rows() == 0) return 0.0;
  std::size_t changed = 0;
  for (Eigen::Index r = 0; r < originals.rows(); ++r)
    if (m.predict(originals.row(r).transpose()) != m.predict(perturbed.row(r).transpose())) ++changed;
  return static_cast<double>(changed) / static_cast<double>(originals.rows());
}

double dffot(const Mlp& m, const Vector& x, const SaliencyMap& s, const Masking& mask) {
  const std::size_t n = static_cast<std::size_t>(x.size());
  const std::vector<std::size_t> order = ranking(s.scores);
  const std::size_t base = m.predict(x);
  Vector xm = x;
  for (std::size_t k = 1; k <= n; ++k) {
    xm[static_cast<Eigen::Index>(order[k - 1])] = mask.value(order[k - 1]);
    if (m.predict(xm) != base) return static_cast<double>(k) / static_cast<double>(n);
  }
  return 1.0;
}

double comp(const Mlp& m, const Vector& x, const SaliencyMap& s, const Masking& mask) {
  const std::size_t n = static_cast<std::size_t>(x.size());
  const std::vector<std::size_t> order = ranking(s.scores);
  const double f0 = m.output(x, s.class_index);
  Vector xm = x;
  double total = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    xm[static_cast<Eigen::Index>(order[k - 1])] = mask.value(order[k - 1]);
    total += std::abs(f0 - m.output(xm, s.class_index));
  }
  return total / static_cast<double>(n);
}

double suff(const Mlp& m, const Vector& x, const SaliencyMap& s, const Masking& mask) {
  const std::size_t n = static_cast<std::size_t>(x.size());
  const std::vector<std::size_t> order = ranking(s.scores);
  const double f0 = m.output(x, s.class_index);
  Vector xm(x.size());
  for (std::size_t i = 0; i < n; ++i) xm[static_cast<Eigen::Index>(i)] = mask.value(i);
  double total = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    xm[static_cast<Eigen::Index>(order[k - 1])] = x[static_cast<Eigen::Index>(order[k - 1])];
    total += std::abs(f0 - m.output(xm, s.class_index));
  }
  return total / static_cast<double>(n);
}

std::optional<std::size_t> manipulation_epoch(const AttackTrace& tr, const ManipulationCriterion& c) {
  if (tr.records.empty()) throw std::invalid_argument("manipulation_epoch: empty trace");
  for (const auto& r : tr.records) {
    const bool hit = c.kind == ManipulationCriterion::Kind::first_flip ? r.flipped_pairs > 0 : r.patk < c.threshold;
    if (hit) return r.iter;
  }
  return std::nullopt;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t q = i; q <= j; ++q) r[idx[q]] = mean_rank;
    i = j + 1;
  }
  return r;
}

double correlation(const std::vector<double>& xs, const std::vector<double>& ys, CorrelationKind kind) {
  if (xs.size() != ys.size()) throw std::invalid_argument("correlation: length mismatch");
  if (xs.size() < 3) throw std::invalid_argument("correlation: need at least three points");
  if (kind == CorrelationKind::spearman) return correlation(average_ranks(xs), average_ranks(ys));
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw std::invalid_argument("correlation: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::string> report_columns() {
  return {"P@k ER (%)", "P@k MSE (%)", "cAUC", "aAUC", "sensitivity", "DFFOT", "COMP", "SUFF", "thickness"};
}

std::vector<double> row_values(const EvalRow& r) {
  return {100.0 * r.patk_er, 100.0 * r.patk_mse, r.cauc, r.aauc, r.sensitivity,
          r.dffot, r.comp, r.suff, r.model_thickness};
}

std::vector<bool> lower_is_better() {
  return {false, false, false, false, true, true, false, true, false};
}

std::vector<std::vector<std::size_t>> column_winners(const EvalReport& rep) {
  const std::size_t cols = report_columns().size();
  const std::vector<bool> lower = lower_is_better();
  std::vector<std::vector<std::size_t>> win(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double best = lower[c] ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    for (const auto& row : rep.rows)
      best = lower[c] ? std::min(best, row_values(row)[c]) : std::max(best, row_values(row)[c]);
    for (std::size_t r = 0; r < rep.rows.size(); ++r)
      if (row_values(rep.rows[r])[c] == best) win[c].push_back(r);
  }
  return win;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

int digits_for(std::size_t col) { return col < 2 ? 1 : 4; }

}  // namespace

std::string render_markdown(const EvalReport& rep) {
  const auto cols = report_columns();
  const auto win = column_winners(rep);
  std::ostringstream out;
  out << "| method |";
  for (const auto& c : cols) out << ' ' << c << " |";
  out << "\n|---|";
  for (std::size_t c = 0; c < cols.size(); ++c) out << "---|";
  out << '\n';
  for (std::size_t r = 0; r < rep.rows.size(); ++r) {
    out << "| " << rep.rows[r].method << " |";
    const auto vals = row_values(rep.rows[r]);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::string cell = fixed(vals[c], digits_for(c));
      const bool bold = std::find(win[c].begin(), win[c].end(), r) != win[c].end();
      out << ' ' << (bold ? "**" + cell + "**" : cell) << " |";
    }
    out << '\n';
  }
  if (!rep.correlations.empty()) {
    out << "\n| method | pearson(first flip, thickness) | pearson(first flip, Hessian norm) | samples |\n"
        << "|---|---|---|---|\n";
    for (const auto& c : rep.correlations)
      out << "| " << c.method << " | " << fixed(c.flip_vs_thickness, 4) << " | " << fixed(c.flip_vs_hessian, 4)
          << " | " << c.samples << " |\n";
  }
  return out.str();
}

std::string render_csv(const EvalReport& rep) {
  std::ostringstream out;
  out << "method,patk_er,patk_mse,cauc,aauc,sensitivity,dffot,comp,suff,model_thickness,hessian_norm_mean\n";
  out << std::setprecision(10);
  for (const auto& r : rep.rows)
    out << r.method << ',' << r.patk_er << ',' << r.patk_mse << ',' << r.cauc << ',' << r.aauc << ','
        << r.sensitivity << ',' << r.dffot << ',' << r.comp << ',' << r.suff << ',' << r.model_thickness << ','
        << r.hessian_norm_mean << '\n';
  return out.str();
}

}  // namespace rankrobust
