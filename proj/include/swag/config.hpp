#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "swag/crossval.hpp"
#include "swag/error.hpp"
#include "swag/learners.hpp"
#include "swag/postprocess.hpp"
#include "swag/swag.hpp"

namespace swag {

// Run configuration file: INI sections with a fixed schema of typed keys.
//
//   [dataset]      path (string), response_column (string),
//                  test_fraction (real in [0,1), default 0), split_seed (uint, default 0)
//   [swag]         p_max, m (uint), alpha (real in (0,1)), r, k (uint), seed (uint),
//                  max_generation_attempts_factor (uint, default 100)
//   [mechanism]    kind = logistic | linear_svm | knn, plus that kind's keys:
//                  logistic: lambda (real), max_iters (uint), tol (real)
//                  linear_svm: lambda (real), epochs (uint)
//                  knn: k_neighbors (uint)
//   [loss]         kind = misclassification | cost_matrix
//                  classes = A,B   cost = 0,1;5,0   (rows ';'-separated, row-major)
//   [postprocess]  delta (real in (0,1), default 0.01), dimension_filter = a..b
//   [output]       directory (string), formats = json,dot,csv
//
// Unknown sections or keys, and keys that do not belong to the declared
// mechanism kind, are rejected.

struct DatasetBlock {
  std::string path;
  std::string response_column;
  double test_fraction = 0.0;
  std::uint64_t split_seed = 0;
  friend bool operator==(const DatasetBlock&, const DatasetBlock&) = default;
};

/// Cost matrix as written in the file (class_order decides the row order).
struct LossBlock {
  LossKind kind = LossKind::Misclassification;
  std::vector<std::string> classes;
  std::vector<std::vector<double>> cost;
  friend bool operator==(const LossBlock&, const LossBlock&) = default;
};

struct PostprocessBlock {
  double delta = 0.01;
  std::optional<DimensionFilter> dimension_filter;
  friend bool operator==(const PostprocessBlock&, const PostprocessBlock&) = default;
};

struct OutputBlock {
  std::string directory = "swag_out";
  std::vector<std::string> formats{"json", "dot", "csv"};

  bool wants(const std::string& f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
  friend bool operator==(const OutputBlock&, const OutputBlock&) = default;
};

struct RunConfig {
  DatasetBlock dataset;
  SwagConfig swag;  // loss is resolved against the dataset's classes at run time
  LossBlock loss;
  PostprocessBlock postprocess;
  OutputBlock output;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string trim_copy(std::string_view s) { return std::string(trim(s)); }

inline std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, sep)) {
    auto t = trim_copy(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& field, const std::string& text) {
  std::uint64_t v = 0;
  auto s = trim(text);
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
  return v;
}

inline double parse_real(const std::string& field, const std::string& text) {
  double v = 0.0;
  auto s = trim(text);
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(field, "expected a real number, got '" + text + "'");
  return v;
}

inline int parse_int_bounded(const std::string& field, const std::string& text) {
  auto v = parse_uint(field, text);
  if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
    throw ConfigError(field, "value too large");
  return static_cast<int>(v);
}

class Section {
 public:
  Section(std::string name, const boost::property_tree::ptree* tree)
      : name_(std::move(name)), tree_(tree) {}

  bool present() const { return tree_ != nullptr; }
  std::string field(const std::string& key) const { return name_ + "." + key; }

  std::optional<std::string> get(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    auto child = tree_->get_child_optional(key);
    if (!child) return std::nullopt;
    return trim_copy(child->data());
  }

  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v || v->empty()) throw ConfigError(field(key), "required");
    return *v;
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_)
      if (!used_.count(key)) throw ConfigError(field(key), "unknown key");
  }

 private:
  std::string name_;
  const boost::property_tree::ptree* tree_;
  std::set<std::string> used_;
};

inline std::optional<DimensionFilter> parse_dimension_range(const std::string& field, const std::string& text) {
  auto pos = text.find("..");
  if (pos == std::string::npos) {
    auto d = parse_uint(field, text);
    return DimensionFilter{d, d};
  }
  auto lo = parse_uint(field, text.substr(0, pos));
  auto hi = parse_uint(field, text.substr(pos + 2));
  if (lo < 1 || hi < lo) throw ConfigError(field, "expected a..b with 1 <= a <= b");
  return DimensionFilter{lo, hi};
}

}  // namespace detail

/// Parses and validates (dataset-independent) a run configuration.
inline RunConfig parse_run_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", std::string("malformed: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  static const std::set<std::string> known{"dataset", "swag", "mechanism", "loss", "postprocess", "output"};
  for (const auto& [name, child] : tree)
    if (!known.count(name)) throw ConfigError(name, "unknown section");

  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return detail::Section(name, child ? &*child : nullptr);
  };

  RunConfig cfg;

  auto ds = section("dataset");
  cfg.dataset.path = ds.require("path");
  cfg.dataset.response_column = ds.require("response_column");
  if (auto v = ds.get("test_fraction")) cfg.dataset.test_fraction = detail::parse_real(ds.field("test_fraction"), *v);
  if (!(cfg.dataset.test_fraction >= 0.0 && cfg.dataset.test_fraction < 1.0))
    throw ConfigError("dataset.test_fraction", "must lie in [0, 1)");
  if (auto v = ds.get("split_seed")) cfg.dataset.split_seed = detail::parse_uint(ds.field("split_seed"), *v);
  ds.reject_unknown();

  auto sw = section("swag");
  cfg.swag.p_max = detail::parse_uint(sw.field("p_max"), sw.require("p_max"));
  cfg.swag.m = detail::parse_uint(sw.field("m"), sw.require("m"));
  cfg.swag.alpha = detail::parse_real(sw.field("alpha"), sw.require("alpha"));
  if (auto v = sw.get("r")) cfg.swag.r = detail::parse_int_bounded(sw.field("r"), *v);
  if (auto v = sw.get("k")) cfg.swag.k = detail::parse_int_bounded(sw.field("k"), *v);
  if (auto v = sw.get("seed")) cfg.swag.seed = detail::parse_uint(sw.field("seed"), *v);
  if (auto v = sw.get("max_generation_attempts_factor"))
    cfg.swag.max_generation_attempts_factor = detail::parse_uint(sw.field("max_generation_attempts_factor"), *v);
  sw.reject_unknown();

  auto mech = section("mechanism");
  const auto kind = parse_mechanism_kind(mech.require("kind"));
  switch (kind) {
    case MechanismKind::Logistic: {
      LogisticParams p;
      if (auto v = mech.get("lambda")) p.lambda = detail::parse_real(mech.field("lambda"), *v);
      if (auto v = mech.get("max_iters")) p.max_iters = detail::parse_int_bounded(mech.field("max_iters"), *v);
      if (auto v = mech.get("tol")) p.tol = detail::parse_real(mech.field("tol"), *v);
      cfg.swag.mechanism = MechanismConfig(p);
      break;
    }
    case MechanismKind::LinearSvm: {
      LinearSvmParams p;
      if (auto v = mech.get("lambda")) p.lambda = detail::parse_real(mech.field("lambda"), *v);
      if (auto v = mech.get("epochs")) p.epochs = detail::parse_int_bounded(mech.field("epochs"), *v);
      cfg.swag.mechanism = MechanismConfig(p);
      break;
    }
    case MechanismKind::Knn: {
      KnnParams p;
      if (auto v = mech.get("k_neighbors")) p.k_neighbors = detail::parse_int_bounded(mech.field("k_neighbors"), *v);
      cfg.swag.mechanism = MechanismConfig(p);
      break;
    }
  }
  mech.reject_unknown();

  auto ls = section("loss");
  if (auto v = ls.get("kind")) {
    if (*v == "misclassification") cfg.loss.kind = LossKind::Misclassification;
    else if (*v == "cost_matrix") cfg.loss.kind = LossKind::CostMatrix;
    else throw ConfigError("loss.kind", "expected misclassification or cost_matrix, got '" + *v + "'");
  }
  auto classes = ls.get("classes");
  auto cost = ls.get("cost");
  if (cfg.loss.kind == LossKind::CostMatrix) {
    if (!classes || !cost) throw ConfigError("loss.cost", "cost_matrix needs classes and cost");
    cfg.loss.classes = detail::split_list(*classes, ',');
    for (const auto& row : detail::split_list(*cost, ';')) {
      std::vector<double> values;
      for (const auto& cell : detail::split_list(row, ',')) values.push_back(detail::parse_real("loss.cost", cell));
      cfg.loss.cost.push_back(std::move(values));
    }
    if (cfg.loss.cost.size() != cfg.loss.classes.size())
      throw ConfigError("loss.cost", "row count differs from the class list");
    LossSpec::cost_matrix(cfg.loss.cost).validate();
  } else if (classes || cost) {
    throw ConfigError("loss.cost", "only allowed with kind = cost_matrix");
  }
  ls.reject_unknown();

  auto pp = section("postprocess");
  if (auto v = pp.get("delta")) cfg.postprocess.delta = detail::parse_real(pp.field("delta"), *v);
  if (!(cfg.postprocess.delta > 0.0 && cfg.postprocess.delta < 1.0))
    throw ConfigError("postprocess.delta", "must lie in (0, 1)");
  if (auto v = pp.get("dimension_filter"); v && !v->empty())
    cfg.postprocess.dimension_filter = detail::parse_dimension_range(pp.field("dimension_filter"), *v);
  pp.reject_unknown();

  auto out = section("output");
  if (auto v = out.get("directory"); v && !v->empty()) cfg.output.directory = *v;
  if (auto v = out.get("formats")) {
    cfg.output.formats = detail::split_list(*v, ',');
    for (const auto& f : cfg.output.formats)
      if (f != "json" && f != "dot" && f != "csv")
        throw ConfigError("output.formats", "unknown format '" + f + "' (expected json, dot, csv)");
  }
  out.reject_unknown();

  cfg.swag.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open config '" + path.string() + "'");
  return parse_run_config(in);
}

/// The SwagConfig with its loss resolved to the dataset's class coding.
inline SwagConfig resolve_swag_config(const RunConfig& cfg, const Dataset& data) {
  SwagConfig out = cfg.swag;
  if (cfg.loss.kind == LossKind::CostMatrix)
    out.loss = LossSpec::cost_matrix(cfg.loss.cost, cfg.loss.classes, data.class_names());
  else
    out.loss = LossSpec::misclassification();
  return out;
}

}  // namespace swag
