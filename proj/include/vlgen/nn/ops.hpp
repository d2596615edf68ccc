#pragma once

#include <vector>

#include "vlgen/nn/tape.hpp"

namespace vlgen::nn {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
// a (m x n) plus the row vector b (1 x n) on every row.
Var add_row(Var a, Var b);
Var add_n(const std::vector<Var>& xs);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
// a times the 1x1 value s.
Var scale_by(Var a, Var s);
Var exp(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
// tanh approximation.
Var gelu(Var a);
Var transpose(Var a);

Var concat_rows(const std::vector<Var>& xs);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var mean_rows(Var a);  // 1 x n
Var sum_all(Var a);    // 1 x 1

// Rows of `table` picked by index.
Var gather_rows(Var table, const std::vector<int>& indices);

// Row-wise layer normalization with per-column gain and bias (1 x n).
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

// Scaled dot-product attention over `heads` column groups. q is n x d,
// k and v are m x d. With causal, query i sees keys 0..i (requires n == m).
Var attention(Var q, Var k, Var v, int heads, bool causal);

// Mean token cross-entropy of row-wise softmax(logits) against targets;
// entries < 0 are ignored. Returns 0 when nothing is scored.
Var cross_entropy(Var logits, const std::vector<int>& targets);

// Rows scaled to unit L2 norm. Throws InvalidArgument on a zero row.
Var l2_normalize_rows(Var x);

// Patch embedding for images that are mostly zero: rows of the (implicit)
// patch matrix listed in `rows` hold `patches` (one row each); every other
// patch is zero, so its output is the bias alone. Result: n_patches x d.
Var sparse_patch_embed(const Matrix& patches, const std::vector<int>& rows, Eigen::Index n_patches, Var weight,
                       Var bias);

}  // namespace vlgen::nn
