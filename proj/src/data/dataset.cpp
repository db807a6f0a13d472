#include "rankrobust/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rankrobust {

Matrix Dataset::rows(const std::vector<std::size_t>& idx) const {
  Matrix out(static_cast<Eigen::Index>(idx.size()), features.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

std::vector<std::size_t> Dataset::labels_of(const std::vector<std::size_t>& idx) const {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels.at(i));
  return out;
}

void Dataset::validate() const {
  if (labels.size() != size()) throw ConfigError("dataset: label count does not match rows");
  if (!feature_names.empty() && feature_names.size() != dim())
    throw ConfigError("dataset: feature name count does not match columns");
  for (std::size_t y : labels)
    if (y > 1) throw ConfigError("dataset: labels must be 0 or 1");
  if (!features.allFinite()) throw ConfigError("dataset: non-finite feature value");
  const std::size_t parts = split.train.size() + split.val.size() + split.test.size();
  if (parts == 0) return;
  if (parts != size()) throw ConfigError("dataset: splits do not cover every sample");
  std::vector<char> seen(size(), 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (std::size_t i : *part) {
      if (i >= size() || seen[i]) throw ConfigError("dataset: splits overlap or index out of range");
      seen[i] = 1;
    }
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("csv line " + std::to_string(line) + ": column '" + column +
                      "' is not a finite number: '" + s + "'");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ConfigError("csv '" + path + "' is empty");
  const std::vector<std::string> header = split_line(line);
  const auto lab = std::find(header.begin(), header.end(), label_column);
  if (lab == header.end()) throw ConfigError("csv '" + path + "' has no label column '" + label_column + "'");
  const auto li = static_cast<std::size_t>(lab - header.begin());

  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != li) ds.feature_names.push_back(header[c]);
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw ConfigError("csv line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " cells, got " + std::to_string(cells.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_number(cells[c], lineno, header[c]);
      if (c == li) {
        if (v != 0.0 && v != 1.0) throw ConfigError("csv line " + std::to_string(lineno) + ": label must be 0 or 1");
        ds.labels.push_back(v == 1.0 ? 1 : 0);
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("csv '" + path + "' has no data rows");
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ds.feature_names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  ds.provenance = path;
  ds.validate();
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path, const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  for (std::size_t c = 0; c < ds.dim(); ++c)
    out << (ds.feature_names.empty() ? "x" + std::to_string(c) : ds.feature_names[c]) << ',';
  out << label_column << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < ds.dim(); ++c)
      out << format_number(ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) << ',';
    out << ds.labels[r] << '\n';
  }
}

Dataset split(const Dataset& ds, const std::array<double, 3>& ratios, std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9 || *std::min_element(ratios.begin(), ratios.end()) < 0.0)
    throw ConfigError("split ratios must be non-negative and sum to 1");
  const std::size_t n = ds.size();
  std::array<std::size_t, 3> sizes{};
  for (int p = 0; p < 3; ++p)
    sizes[static_cast<std::size_t>(p)] = static_cast<std::size_t>(std::floor(ratios[static_cast<std::size_t>(p)] * static_cast<double>(n) + 1e-9));
  std::size_t rest = n - sizes[0] - sizes[1] - sizes[2];
  for (std::size_t p = 0; rest > 0; p = (p + 1) % 3) {
    if (ratios[p] > 0.0) {
      ++sizes[p];
      --rest;
    }
  }
  Rng rng(seed);
  const std::vector<std::size_t> perm = rng.permutation(n);
  Dataset out = ds;
  out.split.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sizes[0]));
  out.split.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(sizes[0]),
                       perm.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]));
  out.split.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]), perm.end());
  return out;
}

Dataset standardize(const Dataset& ds) {
  std::vector<std::size_t> fit = ds.split.train;
  if (fit.empty()) {
    fit.resize(ds.size());
    std::iota(fit.begin(), fit.end(), 0);
  }
  const Matrix x = ds.rows(fit);
  Standardization st;
  st.mean = x.colwise().mean().transpose();
  st.scale = ((x.rowwise() - st.mean.transpose()).array().square().colwise().sum() / static_cast<double>(x.rows()))
                 .sqrt()
                 .transpose();
  for (Eigen::Index c = 0; c < st.scale.size(); ++c)
    if (!(st.scale[c] > 0.0)) st.scale[c] = 1.0;  // constant column
  Dataset out = ds;
  out.features = (ds.features.rowwise() - st.mean.transpose()).array().rowwise() / st.scale.transpose().array();
  out.standardization = st;
  return out;
}

Dataset synth_gaussian(std::size_t n_features, std::size_t n_samples, double separation, std::uint64_t seed,
                       const SynthOptions& opt) {
  if (n_features < 2) throw ConfigError("synth_gaussian: need at least two features");
  if (!(separation >= 0.0)) throw ConfigError("synth_gaussian: separation must be non-negative");
  if (opt.signal_features < 1) throw ConfigError("synth_gaussian: need at least one signal feature");
  const std::size_t n_signal = std::min(opt.signal_features, n_features);
  if (!(opt.noise > 0.0)) throw ConfigError("synth_gaussian: noise must be positive");
  Rng rng(seed);
  std::vector<std::size_t> perm = rng.permutation(n_features);
  std::vector<std::size_t> signal(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_signal));
  std::sort(signal.begin(), signal.end());
  Vector u = Vector::Zero(static_cast<Eigen::Index>(n_features));
  const Vector dir = rng.normal_vector(n_signal);
  for (std::size_t s = 0; s < signal.size(); ++s) u[static_cast<Eigen::Index>(signal[s])] = dir[static_cast<Eigen::Index>(s)];
  u /= u.norm();

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(n_features));
  const std::vector<std::size_t> order = rng.permutation(n_samples);
  ds.labels.assign(n_samples, 0);
  for (std::size_t r = 0; r < n_samples; ++r) ds.labels[order[r]] = r % 2;
  for (std::size_t r = 0; r < n_samples; ++r) {
    const double side = ds.labels[r] == 1 ? 0.5 : -0.5;
    ds.features.row(static_cast<Eigen::Index>(r)) =
        (side * separation * u + opt.noise * rng.normal_vector(n_features)).transpose();
  }
  for (std::size_t c = 0; c < n_features; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  ds.signal_features = signal;
  std::ostringstream tag;
  tag << "synth_gaussian(n_features=" << n_features << ",n_samples=" << n_samples
      << ",separation=" << format_number(separation) << ",seed=" << seed << ",signal=" << n_signal << ")";
  ds.provenance = tag.str();
  return ds;
}

nlohmann::json sidecar_json(const Dataset& ds) {
  nlohmann::json j;
  j["provenance"] = ds.provenance;
  j["split"] = {{"train", ds.split.train}, {"val", ds.split.val}, {"test", ds.split.test}};
  j["signal_features"] = ds.signal_features;
  if (ds.standardization) {
    const auto& st = *ds.standardization;
    j["standardization"] = {{"mean", std::vector<double>(st.mean.data(), st.mean.data() + st.mean.size())},
                            {"scale", std::vector<double>(st.scale.data(), st.scale.data() + st.scale.size())}};
  } else {
    j["standardization"] = nullptr;
  }
  return j;
}

void apply_sidecar(Dataset& ds, const nlohmann::json& j) {
  try {
    ds.split.train = j.at("split").at("train").get<std::vector<std::size_t>>();
    ds.split.val = j.at("split").at("val").get<std::vector<std::size_t>>();
    ds.split.test = j.at("split").at("test").get<std::vector<std::size_t>>();
    ds.signal_features = j.value("signal_features", std::vector<std::size_t>{});
    if (j.contains("standardization") && !j["standardization"].is_null()) {
      const auto mean = j["standardization"].at("mean").get<std::vector<double>>();
      const auto scale = j["standardization"].at("scale").get<std::vector<double>>();
      if (mean.size() != ds.dim() || scale.size() != ds.dim())
        throw ConfigError("sidecar standardization does not match the feature count");
      Standardization st{Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size())),
                         Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()))};
      ds.features = (ds.features.rowwise() - st.mean.transpose()).array().rowwise() / st.scale.transpose().array();
      ds.standardization = st;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed dataset sidecar: ") + e.what());
  }
  ds.validate();
}

void save_sidecar(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << sidecar_json(ds).dump(1) << '\n';
}

void load_sidecar(Dataset& ds, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open sidecar '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed sidecar '" + path + "': " + e.what());
  }
  apply_sidecar(ds, j);
}

}  // namespace rankrobust
