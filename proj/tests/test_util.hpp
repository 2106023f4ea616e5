#pragma once

// Helpers shared by the test binaries. The oracles here are deliberately
// naive: full pairwise scans over materialised matrices, written without
// calling the library routine they check.

#include "mlop/core.hpp"
#include "mlop/sketch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mlop_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline mlop::Matrix random_matrix(mlop::Index rows, mlop::Index cols, unsigned seed, double scale = 1.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  mlop::Matrix m(rows, cols);
  for (mlop::Index r = 0; r < rows; ++r) {
    for (mlop::Index c = 0; c < cols; ++c) m(r, c) = u(gen);
  }
  return m;
}

// |S^T (x - y)| from an explicitly materialised S.
inline double oracle_dist(const Eigen::MatrixXd& s, const mlop::Vector& x, const mlop::Vector& y) {
  const Eigen::VectorXd diff = x - y;
  double acc = 0.0;
  for (Eigen::Index c = 0; c < s.cols(); ++c) {
    double dot = 0.0;
    for (Eigen::Index r = 0; r < s.rows(); ++r) dot += s(r, c) * diff(r);
    acc += dot * dot;
  }
  return std::sqrt(acc);
}

inline double oracle_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Median over points of the distance to the nearest other point.
inline double oracle_fill(const mlop::Matrix& x, const Eigen::MatrixXd& s) {
  std::vector<double> nn;
  for (mlop::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (mlop::Index j = 0; j < x.rows(); ++j) {
      if (i != j) best = std::min(best, oracle_dist(s, x.row(i).transpose(), x.row(j).transpose()));
    }
    nn.push_back(best);
  }
  return oracle_median(nn);
}

inline Eigen::MatrixXd eye(mlop::Index n) { return Eigen::MatrixXd::Identity(n, n); }

}  // namespace testutil
