#include "vlgen/nn/ops.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "vlgen/error.hpp"

namespace vlgen::nn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows())
    throw InvalidArgument("matmul: inner dimensions " + std::to_string(a.cols()) + " and " + std::to_string(b.rows()));
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia).noalias() += g * t.value(ib).transpose();
    if (t.requires_grad(ib)) t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g;
    if (t.requires_grad(ib)) t.grad(ib) += g;
  });
}

Var add_row(Var a, Var b) {
  if (b.rows() != 1 || b.cols() != a.cols()) throw InvalidArgument("add_row: bias must be 1 x cols");
  const int ia = a.id(), ib = b.id();
  Matrix v = a.value();
  v.rowwise() += b.value().row(0);
  return a.tape().record(std::move(v), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g;
    if (t.requires_grad(ib)) t.grad(ib) += g.colwise().sum();
  });
}

Var add_n(const std::vector<Var>& xs) {
  if (xs.empty()) throw InvalidArgument("add_n: no inputs");
  Matrix v = xs[0].value();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    require_same_shape(v, xs[i].value(), "add_n");
    v += xs[i].value();
  }
  std::vector<int> ids;
  for (const auto& x : xs) ids.push_back(x.id());
  return xs[0].tape().record(std::move(v), xs, [ids](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    for (int id : ids)
      if (t.requires_grad(id)) t.grad(id) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g;
    if (t.requires_grad(ib)) t.grad(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g.cwiseProduct(t.value(ib));
    if (t.requires_grad(ib)) t.grad(ib) += g.cwiseProduct(t.value(ia));
  });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  return a.tape().record(a.value() * s, {a}, [ia, s](Tape& t, int self) { t.grad(ia) += t.grad(self) * s; });
}

Var scale_by(Var a, Var s) {
  if (s.value().size() != 1) throw InvalidArgument("scale_by: factor must be 1x1");
  const int ia = a.id(), is = s.id();
  return a.tape().record(a.value() * s.scalar(), {a, s}, [ia, is](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g * t.value(is)(0, 0);
    if (t.requires_grad(is)) t.grad(is)(0, 0) += g.cwiseProduct(t.value(ia)).sum();
  });
}

Var exp(Var a) {
  const int ia = a.id();
  Matrix v = a.value().array().exp().matrix();
  return a.tape().record(std::move(v), {a}, [ia](Tape& t, int self) {
    t.grad(ia) += t.grad(self).cwiseProduct(t.value(self));
  });
}

Var tanh(Var a) {
  const int ia = a.id();
  Matrix v = a.value().array().tanh().matrix();
  return a.tape().record(std::move(v), {a}, [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.grad(ia).array() += t.grad(self).array() * (1.0 - y.array().square());
  });
}

Var sigmoid(Var a) {
  const int ia = a.id();
  Matrix v = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape().record(std::move(v), {a}, [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.grad(ia).array() += t.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Var gelu(Var a) {
  static constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  static constexpr double k = 0.044715;
  const int ia = a.id();
  const auto& x = a.value().array();
  Matrix v = (0.5 * x * (1.0 + (c * (x + k * x.cube())).tanh())).matrix();
  return a.tape().record(std::move(v), {a}, [ia](Tape& t, int self) {
    const auto x = t.value(ia).array();
    const auto th = (c * (x + k * x.cube())).tanh();
    const auto d = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th.square()) * c * (1.0 + 3.0 * k * x.square());
    t.grad(ia).array() += t.grad(self).array() * d;
  });
}

Var transpose(Var a) {
  const int ia = a.id();
  return a.tape().record(a.value().transpose(), {a},
                         [ia](Tape& t, int self) { t.grad(ia) += t.grad(self).transpose(); });
}

Var concat_rows(const std::vector<Var>& xs) {
  if (xs.empty()) throw InvalidArgument("concat_rows: no inputs");
  const Eigen::Index cols = xs[0].cols();
  Eigen::Index rows = 0;
  for (const auto& x : xs) {
    if (x.cols() != cols) throw InvalidArgument("concat_rows: column mismatch");
    rows += x.rows();
  }
  Matrix v(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> parts;
  Eigen::Index r = 0;
  for (const auto& x : xs) {
    v.middleRows(r, x.rows()) = x.value();
    parts.emplace_back(x.id(), r);
    r += x.rows();
  }
  return xs[0].tape().record(std::move(v), xs, [parts](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    for (auto [id, start] : parts)
      if (t.requires_grad(id)) t.grad(id) += g.middleRows(start, t.value(id).rows());
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw InvalidArgument("slice_rows: out of range");
  const int ia = a.id();
  return a.tape().record(a.value().middleRows(start, count), {a}, [ia, start, count](Tape& t, int self) {
    t.grad(ia).middleRows(start, count) += t.grad(self);
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw InvalidArgument("slice_cols: out of range");
  const int ia = a.id();
  return a.tape().record(a.value().middleCols(start, count), {a}, [ia, start, count](Tape& t, int self) {
    t.grad(ia).middleCols(start, count) += t.grad(self);
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw InvalidArgument("mean_rows: no rows");
  const int ia = a.id();
  const double n = double(a.rows());
  return a.tape().record(a.value().colwise().mean(), {a}, [ia, n](Tape& t, int self) {
    t.grad(ia).rowwise() += t.grad(self).row(0) / n;
  });
}

Var sum_all(Var a) {
  const int ia = a.id();
  return a.tape().record(Matrix::Constant(1, 1, a.value().sum()), {a}, [ia](Tape& t, int self) {
    t.grad(ia).array() += t.grad(self)(0, 0);
  });
}

Var gather_rows(Var table, const std::vector<int>& indices) {
  const Matrix& tv = table.value();
  Matrix v(Eigen::Index(indices.size()), tv.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= tv.rows())
      throw InvalidArgument("gather_rows: index " + std::to_string(indices[i]) + " out of range");
    v.row(Eigen::Index(i)) = tv.row(indices[i]);
  }
  const int it = table.id();
  return table.tape().record(std::move(v), {table}, [it, indices](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& gt = t.grad(it);
    for (std::size_t i = 0; i < indices.size(); ++i) gt.row(indices[i]) += g.row(Eigen::Index(i));
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Eigen::Index n = x.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n)
    throw InvalidArgument("layer_norm: gain and bias must be 1 x cols");
  const Matrix& xv = x.value();
  auto xhat = std::make_shared<Matrix>(xv.rows(), n);
  auto inv_std = std::make_shared<Eigen::VectorXd>(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    (*inv_std)(r) = 1.0 / std::sqrt(var + eps);
    xhat->row(r) = (xv.row(r).array() - mu) * (*inv_std)(r);
  }
  Matrix y = xhat->array().rowwise() * gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return x.tape().record(std::move(y), {x, gain, bias}, [ix, ig, ib, xhat, inv_std](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ig)) t.grad(ig) += g.cwiseProduct(*xhat).colwise().sum();
    if (t.requires_grad(ib)) t.grad(ib) += g.colwise().sum();
    if (t.requires_grad(ix)) {
      const Matrix dxhat = g.array().rowwise() * t.value(ig).row(0).array();
      Matrix& gx = t.grad(ix);
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double m1 = dxhat.row(r).mean();
        const double m2 = dxhat.row(r).cwiseProduct(xhat->row(r)).mean();
        gx.row(r).array() += (*inv_std)(r) * (dxhat.row(r).array() - m1 - xhat->row(r).array() * m2);
      }
    }
  });
}

Var attention(Var q, Var k, Var v, int heads, bool causal) {
  const Eigen::Index n = q.rows(), m = k.rows(), d = q.cols();
  if (k.cols() != d || v.cols() != d || v.rows() != m) throw InvalidArgument("attention: q/k/v shape mismatch");
  if (heads < 1 || d % heads != 0) throw InvalidArgument("attention: width must divide into heads");
  if (causal && n != m) throw InvalidArgument("attention: causal mode needs as many keys as queries");
  const Eigen::Index dh = d / heads;
  const double sc = 1.0 / std::sqrt(double(dh));
  auto probs = std::make_shared<std::vector<Matrix>>(heads);
  Matrix out(n, d);
  for (int h = 0; h < heads; ++h) {
    Matrix s = (q.value().middleCols(h * dh, dh) * k.value().middleCols(h * dh, dh).transpose()) * sc;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index visible = causal ? i + 1 : m;
      auto row = s.row(i);
      const double mx = row.head(visible).maxCoeff();
      row.head(visible) = (row.head(visible).array() - mx).exp();
      row.head(visible) /= row.head(visible).sum();
      if (visible < m) row.tail(m - visible).setZero();
    }
    out.middleCols(h * dh, dh).noalias() = s * v.value().middleCols(h * dh, dh);
    (*probs)[h] = std::move(s);
  }
  const int iq = q.id(), ik = k.id(), iv = v.id();
  return q.tape().record(std::move(out), {q, k, v}, [iq, ik, iv, heads, dh, sc, probs](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const bool gq = t.requires_grad(iq), gk = t.requires_grad(ik), gv = t.requires_grad(iv);
    for (int h = 0; h < heads; ++h) {
      const Matrix& p = (*probs)[h];
      const auto go = g.middleCols(h * dh, dh);
      if (gv) t.grad(iv).middleCols(h * dh, dh).noalias() += p.transpose() * go;
      if (!gq && !gk) continue;
      const Matrix dp = go * t.value(iv).middleCols(h * dh, dh).transpose();
      const Eigen::VectorXd rowdot = dp.cwiseProduct(p).rowwise().sum();
      const Matrix ds = (p.array() * (dp.colwise() - rowdot).array()).matrix() * sc;
      if (gq) t.grad(iq).middleCols(h * dh, dh).noalias() += ds * t.value(ik).middleCols(h * dh, dh);
      if (gk) t.grad(ik).middleCols(h * dh, dh).noalias() += ds.transpose() * t.value(iq).middleCols(h * dh, dh);
    }
  });
}

Var cross_entropy(Var logits, const std::vector<int>& targets) {
  const Matrix& z = logits.value();
  if (Eigen::Index(targets.size()) != z.rows()) throw InvalidArgument("cross_entropy: one target per row required");
  auto probs = std::make_shared<Matrix>(z.rows(), z.cols());
  double total = 0;
  int count = 0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(r).array() - mx).exp();
    const double sum = e.sum();
    probs->row(r) = e / sum;
    const int tgt = targets[std::size_t(r)];
    if (tgt < 0) continue;
    if (tgt >= z.cols()) throw InvalidArgument("cross_entropy: target " + std::to_string(tgt) + " out of range");
    total += std::log(sum) - (z(r, tgt) - mx);
    ++count;
  }
  const double loss = count ? total / count : 0.0;
  const int il = logits.id();
  return logits.tape().record(Matrix::Constant(1, 1, loss), {logits}, [il, targets, probs, count](Tape& t, int self) {
    if (!count) return;
    const double g = t.grad(self)(0, 0) / count;
    Matrix& gz = t.grad(il);
    for (Eigen::Index r = 0; r < gz.rows(); ++r) {
      const int tgt = targets[std::size_t(r)];
      if (tgt < 0) continue;
      gz.row(r) += g * probs->row(r);
      gz(r, tgt) -= g;
    }
  });
}

Var l2_normalize_rows(Var x) {
  const Matrix& xv = x.value();
  auto norms = std::make_shared<Eigen::VectorXd>(xv.rowwise().norm());
  for (Eigen::Index r = 0; r < xv.rows(); ++r)
    if (!((*norms)(r) > 0)) throw InvalidArgument("l2_normalize_rows: row " + std::to_string(r) + " has zero norm");
  Matrix y = xv.array().colwise() / norms->array();
  const int ix = x.id();
  return x.tape().record(std::move(y), {x}, [ix, norms](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    t.grad(ix).array() += ((g - (y.array().colwise() * dot.array()).matrix()).array().colwise() / norms->array());
  });
}

Var sparse_patch_embed(const Matrix& patches, const std::vector<int>& rows, Eigen::Index n_patches, Var weight,
                       Var bias) {
  if (Eigen::Index(rows.size()) != patches.rows()) throw InvalidArgument("sparse_patch_embed: one row index per patch");
  if (patches.cols() != weight.rows()) throw InvalidArgument("sparse_patch_embed: patch width does not match weight");
  if (bias.rows() != 1 || bias.cols() != weight.cols()) throw InvalidArgument("sparse_patch_embed: bias shape");
  Matrix out(n_patches, weight.cols());
  out.rowwise() = bias.value().row(0);
  auto dense = std::make_shared<Matrix>(patches);
  if (!rows.empty()) {
    const Matrix emb = patches * weight.value();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] < 0 || rows[i] >= n_patches) throw InvalidArgument("sparse_patch_embed: row out of range");
      out.row(rows[i]) += emb.row(Eigen::Index(i));
    }
  }
  const int iw = weight.id(), ib = bias.id();
  return weight.tape().record(std::move(out), {weight, bias}, [iw, ib, rows, dense](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ib)) t.grad(ib) += g.colwise().sum();
    if (t.requires_grad(iw) && !rows.empty()) {
      Matrix gr(Eigen::Index(rows.size()), g.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) gr.row(Eigen::Index(i)) = g.row(rows[i]);
      t.grad(iw).noalias() += dense->transpose() * gr;
    }
  });
}

}  // namespace vlgen::nn
