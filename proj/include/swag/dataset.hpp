#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "swag/error.hpp"
#include "swag/learner_spec.hpp"
#include "swag/rng.hpp"

namespace swag {

using Index = Eigen::Index;

/// Immutable classification dataset: an n x p feature matrix, dense class
/// codes (first-appearance order) and the names of attributes and classes.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd features, std::vector<int> labels,
          std::vector<std::string> class_names, std::vector<std::string> attribute_names,
          std::string response_name = "y")
      : features_(std::move(features)),
        labels_(std::move(labels)),
        class_names_(std::move(class_names)),
        attribute_names_(std::move(attribute_names)),
        response_name_(std::move(response_name)) {
    validate();
  }

  std::size_t n() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(features_.cols()); }
  std::size_t class_count() const noexcept { return class_names_.size(); }

  const Eigen::MatrixXd& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  const std::vector<std::string>& attribute_names() const noexcept { return attribute_names_; }
  const std::string& response_name() const noexcept { return response_name_; }

  /// Column index of a named attribute, or p() if absent.
  std::size_t attribute_index(std::string_view name) const {
    auto it = std::find(attribute_names_.begin(), attribute_names_.end(), name);
    return static_cast<std::size_t>(it - attribute_names_.begin());
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(class_names_.size(), 0);
    for (int c : labels_) ++counts[static_cast<std::size_t>(c)];
    return counts;
  }

  /// Rows restricted to `rows`, all columns, same class coding.
  Dataset select_rows(const std::vector<std::size_t>& rows) const {
    Eigen::MatrixXd x(static_cast<Index>(rows.size()), features_.cols());
    std::vector<int> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(static_cast<Index>(i)) = features_.row(static_cast<Index>(rows[i]));
      y[i] = labels_[rows[i]];
    }
    return Dataset(std::move(x), std::move(y), class_names_, attribute_names_, response_name_,
                   Unchecked{});
  }

 private:
  struct Unchecked {};
  Dataset(Eigen::MatrixXd features, std::vector<int> labels,
          std::vector<std::string> class_names, std::vector<std::string> attribute_names,
          std::string response_name, Unchecked)
      : features_(std::move(features)),
        labels_(std::move(labels)),
        class_names_(std::move(class_names)),
        attribute_names_(std::move(attribute_names)),
        response_name_(std::move(response_name)) {}

  void validate() const {
    if (features_.rows() < 2 || features_.cols() < 1)
      throw Error(ErrorCode::MalformedCsv, "dataset needs n >= 2 and p >= 1");
    if (labels_.size() != n())
      throw Error(ErrorCode::LengthMismatch, "response length differs from instance count");
    if (attribute_names_.size() != p())
      throw Error(ErrorCode::LengthMismatch, "attribute name count differs from p");
    if (class_names_.size() < 2)
      throw Error(ErrorCode::SingleClassResponse, "response has fewer than two classes");
    std::unordered_set<std::string> seen;
    for (const auto& name : attribute_names_) {
      if (name.empty()) throw Error(ErrorCode::MalformedCsv, "empty attribute name");
      if (!seen.insert(name).second)
        throw Error(ErrorCode::MalformedCsv, "duplicate attribute name '" + name + "'");
    }
    if (!features_.allFinite())
      throw Error(ErrorCode::NonNumericFeature, "feature matrix contains non-finite values");
    std::vector<bool> present(class_names_.size(), false);
    for (int c : labels_) {
      if (c < 0 || static_cast<std::size_t>(c) >= class_names_.size())
        throw Error(ErrorCode::LabelOutOfRange, "class code out of range");
      present[static_cast<std::size_t>(c)] = true;
    }
    if (std::find(present.begin(), present.end(), false) != present.end())
      throw Error(ErrorCode::MalformedCsv, "a declared class never occurs");
  }

  Eigen::MatrixXd features_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
  std::vector<std::string> attribute_names_;
  std::string response_name_;
};

/// Rows x columns projection of a dataset. Cheap to copy; the dataset must
/// outlive the view.
class DatasetView {
 public:
  DatasetView(const Dataset& data, std::vector<std::size_t> rows, std::vector<std::size_t> cols)
      : data_(&data), rows_(std::move(rows)), cols_(std::move(cols)) {}

  const Dataset& dataset() const noexcept { return *data_; }
  const std::vector<std::size_t>& rows() const noexcept { return rows_; }
  const std::vector<std::size_t>& cols() const noexcept { return cols_; }
  std::size_t n() const noexcept { return rows_.size(); }
  std::size_t p() const noexcept { return cols_.size(); }

  double operator()(std::size_t i, std::size_t j) const {
    return data_->features()(static_cast<Index>(rows_[i]), static_cast<Index>(cols_[j]));
  }
  int label(std::size_t i) const { return data_->labels()[rows_[i]]; }

  Eigen::MatrixXd matrix() const {
    Eigen::MatrixXd out(static_cast<Index>(rows_.size()), static_cast<Index>(cols_.size()));
    for (std::size_t j = 0; j < cols_.size(); ++j)
      for (std::size_t i = 0; i < rows_.size(); ++i)
        out(static_cast<Index>(i), static_cast<Index>(j)) = (*this)(i, j);
    return out;
  }

  std::vector<int> labels() const {
    std::vector<int> out(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) out[i] = label(i);
    return out;
  }

  /// Same columns, rows restricted to positions `subset` of this view.
  DatasetView with_rows(const std::vector<std::size_t>& subset) const {
    std::vector<std::size_t> r(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) r[i] = rows_[subset[i]];
    return DatasetView(*data_, std::move(r), cols_);
  }

 private:
  const Dataset* data_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> cols_;
};

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

inline DatasetView full_view(const Dataset& data) {
  return DatasetView(data, iota_indices(data.n()), iota_indices(data.p()));
}

/// All rows, restricted to the spec's attributes in sorted index order.
inline DatasetView subset_columns(const Dataset& data, const LearnerSpec& spec) {
  for (std::size_t a : spec) {
    if (a >= data.p())
      throw Error(ErrorCode::IndexOutOfRange,
                  "attribute index " + std::to_string(a) + " out of range for p=" +
                      std::to_string(data.p()));
  }
  return DatasetView(data, iota_indices(data.n()), spec.attributes());
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "?";
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parses comma-separated text with a header row. Class labels are taken
/// verbatim from the response column and coded in first-appearance order.
inline Dataset parse_csv(std::istream& in, const std::string& response_column) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedCsv, "CSV has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header;
  for (auto cell : detail::split_commas(line)) header.emplace_back(detail::trim(cell));

  auto response_it = std::find(header.begin(), header.end(), response_column);
  if (response_it == header.end())
    throw Error(ErrorCode::MissingResponseColumn,
                "response column '" + response_column + "' not found in header");
  const std::size_t response_col = static_cast<std::size_t>(response_it - header.begin());

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != response_col) names.push_back(header[c]);
  const std::size_t p = names.size();
  if (p == 0) throw Error(ErrorCode::MalformedCsv, "CSV has no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::unordered_map<std::string, int> class_code;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    auto cells = detail::split_commas(line);
    if (cells.size() != header.size())
      throw CellError(ErrorCode::MalformedCsv, row, cells.size(),
                      "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                          " cells, expected " + std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto cell = detail::trim(cells[c]);
      if (c == response_col) {
        if (cell.empty())
          throw CellError(ErrorCode::MissingValue, row, c,
                          "missing response at row " + std::to_string(row));
        std::string label(cell);
        auto [it, inserted] = class_code.emplace(label, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(label);
        labels.push_back(it->second);
        continue;
      }
      if (detail::is_missing_token(cell))
        throw CellError(ErrorCode::MissingValue, row, c,
                        "missing value at row " + std::to_string(row) + ", column '" +
                            header[c] + "'");
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
        throw CellError(ErrorCode::NonNumericFeature, row, c,
                        "non-numeric value '" + std::string(cell) + "' at row " +
                            std::to_string(row) + ", column '" + header[c] + "'");
      values.push_back(v);
    }
  }
  if (row < 2) throw Error(ErrorCode::MalformedCsv, "CSV needs at least two data rows");
  if (class_names.size() < 2)
    throw Error(ErrorCode::SingleClassResponse,
                "response column '" + response_column + "' has a single class");

  Eigen::MatrixXd x(static_cast<Index>(row), static_cast<Index>(p));
  for (std::size_t i = 0; i < row; ++i)
    for (std::size_t j = 0; j < p; ++j)
      x(static_cast<Index>(i), static_cast<Index>(j)) = values[i * p + j];
  return Dataset(std::move(x), std::move(labels), std::move(class_names), std::move(names),
                 response_column);
}

inline Dataset load_csv(const std::filesystem::path& path, const std::string& response_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");
  return parse_csv(in, response_column);
}

/// Canonical CSV: features in column order, response last, shortest
/// round-trip float formatting.
inline void write_csv(std::ostream& out, const Dataset& data) {
  for (const auto& name : data.attribute_names()) out << name << ',';
  out << data.response_name() << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j)
      out << detail::format_double(data.features()(static_cast<Index>(i), static_cast<Index>(j)))
          << ',';
    out << data.class_names()[static_cast<std::size_t>(data.labels()[i])] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Fold assignment

struct FoldAssignment {
  std::vector<int> fold_of;
  int k = 0;

  /// Row positions belonging to fold f, ascending.
  std::vector<std::size_t> held_out(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == f) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> training(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] != f) out.push_back(i);
    return out;
  }
};

/// Stratified k-fold assignment over a label vector. Each class is shuffled
/// and the classes are concatenated, then positions are dealt round-robin, so
/// both overall fold sizes and per-class fold counts differ by at most one.
inline FoldAssignment stratified_folds(const std::vector<int>& labels, int k, Rng& rng) {
  const std::size_t n = labels.size();
  if (k < 2 || static_cast<std::size_t>(k) > n)
    throw Error(ErrorCode::InvalidFoldCount,
                "fold count " + std::to_string(k) + " outside [2, " + std::to_string(n) + "]");
  int classes = 0;
  for (int c : labels) classes = std::max(classes, c + 1);
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);

  FoldAssignment out{std::vector<int>(n, 0), k};
  std::size_t position = 0;
  for (auto& group : members) {
    std::shuffle(group.begin(), group.end(), rng);
    for (std::size_t row : group) out.fold_of[row] = static_cast<int>(position++ % static_cast<std::size_t>(k));
  }
  return out;
}

inline FoldAssignment stratified_folds(const Dataset& data, int k, Rng& rng) {
  return stratified_folds(data.labels(), k, rng);
}

/// Stratified train/test partition; each class contributes
/// round(test_fraction * count) rows to the test part, keeping at least one
/// row of every class in training.
struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline TrainTestSplit stratified_split(const Dataset& data, double test_fraction,
                                       std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ConfigError("dataset.test_fraction", "must lie in [0, 1)");
  TrainTestSplit out;
  if (test_fraction == 0.0) {
    out.train = iota_indices(data.n());
    return out;
  }
  Rng rng(derive_seed(seed, kSplitStreamTag));
  std::vector<std::vector<std::size_t>> members(data.class_count());
  for (std::size_t i = 0; i < data.n(); ++i)
    members[static_cast<std::size_t>(data.labels()[i])].push_back(i);
  for (auto& group : members) {
    std::shuffle(group.begin(), group.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(group.size())));
    n_test = std::min(n_test, group.size() - 1);
    out.test.insert(out.test.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), group.begin() + static_cast<std::ptrdiff_t>(n_test), group.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace swag
