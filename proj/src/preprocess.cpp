#include "icdt/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "icdt/error.hpp"

namespace icdt {

namespace {

std::string number_text(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

Dataset discretize_numeric(const Dataset& d, int bins) {
  if (bins < 2) throw ConfigError("discretize_numeric needs bins >= 2");
  const Schema& s = d.schema();
  bool any_numeric = false;
  for (const auto& f : s.features) any_numeric |= f.kind == FeatureKind::Numeric;
  if (!any_numeric) return Dataset(d.schema_ptr(), [&] {
    std::vector<double> cells(d.row_count() * s.feature_count());
    for (std::size_t r = 0; r < d.row_count(); ++r)
      for (std::size_t f = 0; f < s.feature_count(); ++f) cells[r * s.feature_count() + f] = d.value(r, f);
    return cells;
  }(), [&] {
    std::vector<std::uint32_t> classes(d.row_count());
    for (std::size_t r = 0; r < d.row_count(); ++r) classes[r] = d.label(r);
    return classes;
  }());

  auto schema = std::make_shared<Schema>();
  schema->class_names = s.class_names;
  std::size_t nf = s.feature_count();
  std::size_t n = d.row_count();

  // per-feature upper-inclusive cut values; empty for untouched features
  std::vector<std::vector<double>> cuts(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    Feature feat;
    feat.name = s.features[f].name;
    if (s.features[f].kind == FeatureKind::Categorical) {
      feat.kind = FeatureKind::Categorical;
      feat.symbols = s.features[f].symbols;
      schema->features.push_back(std::move(feat));
      continue;
    }
    std::vector<double> sorted(n);
    for (std::size_t r = 0; r < n; ++r) sorted[r] = d.value(r, f);
    std::sort(sorted.begin(), sorted.end());
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < n; ++i)
      if (sorted[i] != sorted[i - 1]) ++distinct;
    std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(bins), distinct);
    std::vector<double>& edges = cuts[f];
    for (std::size_t i = 1; i < b; ++i) {
      double edge = sorted[i * n / b == 0 ? 0 : i * n / b - 1];
      if (edges.empty() || edge > edges.back()) edges.push_back(edge);
    }
    feat.kind = FeatureKind::Categorical;
    for (std::size_t i = 0; i <= edges.size(); ++i) {
      std::string label;
      if (i == 0 && edges.empty())
        label = "all";
      else if (i == 0)
        label = "(-inf," + number_text(edges[0]) + "]";
      else if (i == edges.size())
        label = "(" + number_text(edges[i - 1]) + ",+inf)";
      else
        label = "(" + number_text(edges[i - 1]) + "," + number_text(edges[i]) + "]";
      feat.symbols.push_back(label);
    }
    schema->features.push_back(std::move(feat));
  }

  std::vector<double> cells(n * nf);
  std::vector<std::uint32_t> classes(n);
  for (std::size_t r = 0; r < n; ++r) {
    classes[r] = d.label(r);
    for (std::size_t f = 0; f < nf; ++f) {
      double v = d.value(r, f);
      if (s.features[f].kind == FeatureKind::Categorical) {
        cells[r * nf + f] = v;
      } else {
        const auto& edges = cuts[f];
        std::size_t bin = edges.size();
        for (std::size_t i = 0; i < edges.size(); ++i) {
          if (v <= edges[i]) {
            bin = i;
            break;
          }
        }
        cells[r * nf + f] = static_cast<double>(bin);
      }
    }
  }
  validate_schema(*schema);
  return Dataset(std::move(schema), std::move(cells), std::move(classes));
}

Dataset encode_ordinal(const Dataset& d) {
  const Schema& s = d.schema();
  auto schema = std::make_shared<Schema>();
  schema->class_names = s.class_names;
  for (const auto& f : s.features) {
    Feature feat;
    feat.name = f.name;
    feat.kind = FeatureKind::Numeric;
    schema->features.push_back(std::move(feat));
  }
  std::size_t nf = s.feature_count();
  std::vector<double> cells(d.row_count() * nf);
  std::vector<std::uint32_t> classes(d.row_count());
  for (std::size_t r = 0; r < d.row_count(); ++r) {
    classes[r] = d.label(r);
    for (std::size_t f = 0; f < nf; ++f) cells[r * nf + f] = d.value(r, f);
  }
  validate_schema(*schema);
  return Dataset(std::move(schema), std::move(cells), std::move(classes));
}

}  // namespace icdt
