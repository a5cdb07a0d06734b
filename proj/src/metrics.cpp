#include "icdt/metrics.hpp"

#include "icdt/error.hpp"

namespace icdt {

Metrics compute_metrics(const std::vector<std::uint32_t>& y_true,
                        const std::vector<std::uint32_t>& y_pred, std::size_t class_count) {
  if (y_true.size() != y_pred.size()) throw Error("metrics: label vectors differ in length");
  if (y_true.empty()) throw Error("metrics: empty label vectors");

  std::size_t n = y_true.size();
  std::vector<double> tp(class_count, 0.0), fp(class_count, 0.0), fn(class_count, 0.0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t t = y_true[i], p = y_pred[i];
    if (t >= class_count || p >= class_count) throw Error("metrics: label out of range");
    if (t == p) {
      ++hits;
      tp[t] += 1.0;
    } else {
      fp[p] += 1.0;
      fn[t] += 1.0;
    }
  }

  double f1_sum = 0.0;
  for (std::size_t c = 0; c < class_count; ++c) {
    double prec_den = tp[c] + fp[c];
    double rec_den = tp[c] + fn[c];
    double prec = prec_den > 0.0 ? tp[c] / prec_den : 0.0;
    double rec = rec_den > 0.0 ? tp[c] / rec_den : 0.0;
    f1_sum += (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }

  Metrics m;
  m.accuracy = static_cast<double>(hits) / static_cast<double>(n);
  m.macro_f1 = f1_sum / static_cast<double>(class_count);
  m.support = n;
  return m;
}

Metrics two_level_mean(const std::vector<std::vector<Metrics>>& per_client_per_fold) {
  if (per_client_per_fold.empty()) throw Error("two_level_mean: no clients");
  Metrics out;
  double acc = 0.0, f1 = 0.0;
  std::size_t clients = 0;
  for (const auto& folds : per_client_per_fold) {
    if (folds.empty()) throw Error("two_level_mean: client with no folds");
    double a = 0.0, f = 0.0;
    for (const auto& m : folds) {
      a += m.accuracy;
      f += m.macro_f1;
      out.support += m.support;
    }
    acc += a / static_cast<double>(folds.size());
    f1 += f / static_cast<double>(folds.size());
    ++clients;
  }
  out.accuracy = acc / static_cast<double>(clients);
  out.macro_f1 = f1 / static_cast<double>(clients);
  return out;
}

}  // namespace icdt
