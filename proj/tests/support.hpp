#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "swag/dataset.hpp"

namespace swag::fixtures {

/// Balanced binary data: `planted` columns have class means `separation`
/// standard deviations apart, every other column is N(0, 1) noise.
inline Dataset make_planted(std::size_t n, std::size_t p, const std::vector<std::size_t>& planted,
                            double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
  std::shuffle(labels.begin(), labels.end(), rng);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = normal(rng);
  for (std::size_t j : planted)
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == 1) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += separation;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  // Relabel so that class codes follow first appearance.
  std::vector<std::string> class_names;
  std::vector<int> coded(n);
  int first = labels[0];
  for (std::size_t i = 0; i < n; ++i) coded[i] = labels[i] == first ? 0 : 1;
  class_names = first == 0 ? std::vector<std::string>{"neg", "pos"} : std::vector<std::string>{"pos", "neg"};
  return Dataset(std::move(x), std::move(coded), std::move(class_names), std::move(names));
}

/// Labels drawn independently of N(0,1) features (balanced binary).
inline Dataset make_noise(std::size_t n, std::size_t p, std::uint64_t seed) {
  return make_planted(n, p, {}, 0.0, seed);
}

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("swag_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    auto p = path / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }
};

}  // namespace swag::fixtures
