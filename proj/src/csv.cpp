#include "icdt/csv.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "icdt/error.hpp"

namespace icdt {

namespace {

using nlohmann::json;

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  out.push_back(cell);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::string resolve_csv_path(const std::string& manifest_path, const std::string& csv) {
  namespace fs = std::filesystem;
  fs::path p(csv);
  if (p.is_absolute()) return p.string();
  fs::path next_to_manifest = fs::path(manifest_path).parent_path() / p;
  if (fs::exists(next_to_manifest)) return next_to_manifest.string();
  if (const char* root = std::getenv("ICDT_DATA_DIR")) {
    fs::path under_root = fs::path(root) / p;
    if (fs::exists(under_root)) return under_root.string();
  }
  // nothing found: fail later with the most likely intended location
  return next_to_manifest.string();
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open manifest: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw LoadError("manifest " + path + ": " + e.what());
  }
  DatasetManifest m;
  if (!doc.contains("path") || !doc.contains("features"))
    throw LoadError("manifest " + path + ": needs \"path\" and \"features\"");
  m.csv_path = resolve_csv_path(path, doc["path"].get<std::string>());
  for (const auto& f : doc["features"]) {
    Feature feat;
    feat.name = f.at("name").get<std::string>();
    std::string kind = f.at("kind").get<std::string>();
    if (kind == "categorical")
      feat.kind = FeatureKind::Categorical;
    else if (kind == "numeric")
      feat.kind = FeatureKind::Numeric;
    else
      throw LoadError("manifest " + path + ": unknown feature kind \"" + kind + "\"");
    m.features.push_back(std::move(feat));
  }
  if (doc.contains("class_column")) m.class_column = doc["class_column"].get<std::string>();
  if (doc.contains("class_names"))
    m.class_names = doc["class_names"].get<std::vector<std::string>>();
  if (doc.contains("header")) m.header = doc["header"].get<bool>();
  return m;
}

namespace {

struct Interner {
  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<std::string> names;
  bool frozen = false;

  std::uint32_t intern(const std::string& name, bool& unknown) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    if (frozen) {
      unknown = true;
      return 0;
    }
    std::uint32_t id = static_cast<std::uint32_t>(names.size());
    index.emplace(name, id);
    names.push_back(name);
    return id;
  }
};

Dataset load_csv_impl(const std::string& path, const std::vector<Feature>& feature_hint,
                      const std::string& class_column,
                      const std::vector<std::string>& class_hint, bool header) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open CSV: " + path);

  std::vector<Feature> features = feature_hint;
  std::size_t nf = features.size();
  // column index of each feature, and of the class
  std::vector<std::size_t> col_of(nf);
  std::size_t class_col = nf;
  std::size_t total_cols = nf + 1;

  std::string line;
  int line_no = 0;
  if (header) {
    if (!std::getline(in, line)) throw LoadError(path + ": no rows");
    ++line_no;
    auto cols = split_line(line);
    total_cols = cols.size();
    if (total_cols != nf + 1)
      throw LoadError(path + ": header has " + std::to_string(total_cols) +
                      " columns, expected " + std::to_string(nf + 1));
    std::unordered_map<std::string, std::size_t> by_name;
    for (std::size_t c = 0; c < cols.size(); ++c) by_name[trim(cols[c])] = c;
    auto class_it = by_name.find(class_column);
    class_col = class_it == by_name.end() ? total_cols - 1 : class_it->second;
    for (std::size_t f = 0; f < nf; ++f) {
      auto it = by_name.find(features[f].name);
      if (it == by_name.end())
        throw LoadError(path + ": header is missing feature \"" + features[f].name + "\"");
      if (it->second == class_col)
        throw LoadError(path + ": feature \"" + features[f].name + "\" collides with the class column");
      col_of[f] = it->second;
    }
  } else {
    // headerless layout: manifest feature order, class last
    for (std::size_t f = 0; f < nf; ++f) col_of[f] = f;
    class_col = nf;
  }

  std::vector<Interner> interners(nf);
  Interner class_interner;
  if (!class_hint.empty()) {
    for (const auto& name : class_hint) {
      bool dummy = false;
      class_interner.intern(name, dummy);
    }
    class_interner.frozen = true;
  }

  std::vector<double> cells;
  std::vector<std::uint32_t> classes;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split_line(line);
    if (cols.size() != total_cols)
      throw LoadError(path + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cols.size()) + " fields, expected " +
                      std::to_string(total_cols));
    for (std::size_t f = 0; f < nf; ++f) {
      std::string cell = trim(cols[col_of[f]]);
      if (cell.empty())
        throw LoadError(path + ": line " + std::to_string(line_no) + ": missing value for \"" +
                        features[f].name + "\"");
      if (features[f].kind == FeatureKind::Numeric) {
        double v = 0.0;
        if (!parse_number(cell, v))
          throw LoadError(path + ": line " + std::to_string(line_no) + ": \"" + cell +
                          "\" is not numeric for \"" + features[f].name + "\"");
        cells.push_back(v);
      } else {
        bool unknown = false;
        cells.push_back(static_cast<double>(interners[f].intern(cell, unknown)));
      }
    }
    std::string label = trim(cols[class_col]);
    bool unknown = false;
    std::uint32_t cls = class_interner.intern(label, unknown);
    if (unknown)
      throw LoadError(path + ": line " + std::to_string(line_no) + ": unknown class label \"" +
                      label + "\"");
    classes.push_back(cls);
  }
  if (classes.empty()) throw LoadError(path + ": no rows");

  auto schema = std::make_shared<Schema>();
  for (std::size_t f = 0; f < nf; ++f) {
    Feature feat = features[f];
    if (feat.kind == FeatureKind::Categorical) feat.symbols = interners[f].names;
    schema->features.push_back(std::move(feat));
  }
  schema->class_names = class_interner.names;
  validate_schema(*schema);
  return Dataset(std::move(schema), std::move(cells), std::move(classes));
}

}  // namespace

Dataset load_dataset(const DatasetManifest& manifest) {
  return load_csv_impl(manifest.csv_path, manifest.features,
                       manifest.class_column.value_or(""), manifest.class_names,
                       manifest.header);
}

Dataset load_csv(const std::string& path, const Schema& schema_hint,
                 const std::string& class_column, bool header) {
  return load_csv_impl(path, schema_hint.features, class_column, schema_hint.class_names,
                       header);
}

void write_csv(const Dataset& d, const std::string& path, const std::string& class_column) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write CSV: " + path);
  const Schema& s = d.schema();
  for (const auto& f : s.features) out << f.name << ',';
  out << class_column << '\n';
  std::ostringstream row;
  for (std::size_t r = 0; r < d.row_count(); ++r) {
    row.str("");
    for (std::size_t f = 0; f < s.feature_count(); ++f) {
      if (s.features[f].kind == FeatureKind::Categorical) {
        row << s.features[f].symbols[d.symbol(r, f)];
      } else {
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d.value(r, f));
        row.write(buf, ptr - buf);
        (void)ec;
      }
      row << ',';
    }
    row << s.class_names[d.label(r)];
    out << row.str() << '\n';
  }
}

}  // namespace icdt
