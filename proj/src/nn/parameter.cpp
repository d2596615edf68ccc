#include "vlgen/nn/parameter.hpp"

#include <cstring>

#include "vlgen/error.hpp"

namespace vlgen::nn {

Parameter& ParameterSet::add(const std::string& name, Matrix init, bool trainable) {
  if (index_.contains(name)) throw InvalidArgument("duplicate parameter name " + name);
  index_[name] = params_.size();
  Parameter& p = params_.emplace_back();
  p.name = name;
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  p.trainable = trainable;
  return p;
}

Parameter& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("no parameter named " + name);
  return params_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<Parameter*> ParameterSet::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_)
    if (p.trainable) out.push_back(&p);
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

std::size_t ParameterSet::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (!trainable_only || p.trainable) n += std::size_t(p.value.size());
  return n;
}

std::uint64_t ParameterSet::checksum(const std::string& prefix) const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : params_) {
    if (p.name.compare(0, prefix.size(), prefix) != 0) continue;
    mix(p.name.data(), p.name.size());
    const std::int64_t shape[2] = {p.value.rows(), p.value.cols()};
    mix(shape, sizeof shape);
    mix(p.value.data(), sizeof(double) * std::size_t(p.value.size()));
  }
  return h;
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.size() != size()) throw InvalidArgument("parameter sets differ in size");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& src = other.params_[i];
    auto& dst = params_[i];
    if (src.name != dst.name || src.value.rows() != dst.value.rows() || src.value.cols() != dst.value.cols())
      throw InvalidArgument("parameter mismatch at " + dst.name);
    dst.value = src.value;
  }
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace vlgen::nn
