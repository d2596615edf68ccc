#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace vlgen::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // same shape as value
  bool trainable = true;
};

// Named parameters with stable addresses, in creation order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  // Throws InvalidArgument on a duplicate name.
  Parameter& add(const std::string& name, Matrix init, bool trainable = true);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> trainable();

  void zero_grad();
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count(bool trainable_only = false) const;

  // FNV-1a over names, shapes and value bytes of parameters whose name
  // starts with prefix ("" = all).
  std::uint64_t checksum(const std::string& prefix = "") const;

  // Copies values from another set with identical names and shapes.
  void copy_values_from(const ParameterSet& other);

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);

}  // namespace vlgen::nn
