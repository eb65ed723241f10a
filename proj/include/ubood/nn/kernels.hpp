#pragma once

// Dense-layer kernels. Each kernel has a serial reference and an OpenMP
// version; both accumulate in the same order, so results are bit-identical
// regardless of thread count.

#include <span>

#include "ubood/nn/matrix.hpp"

namespace ubood::nn::kernels {

/// y[r, :] = b + sum_i x[r, i] * W[i, :]. W is in_width x out_width row-major.
/// Zero inputs are skipped, which makes one-hot inputs cheap.
void dense_forward_serial(const Matrix& x, std::span<const double> w, std::span<const double> b, Matrix& y);
void dense_forward(const Matrix& x, std::span<const double> w, std::span<const double> b, Matrix& y);

/// dx[r, i] = sum_j dy[r, j] * W[i, j]
void dense_backward_input_serial(const Matrix& dy, std::span<const double> w, Matrix& dx);
void dense_backward_input(const Matrix& dy, std::span<const double> w, Matrix& dx);

/// dW[i, j] += sum_r x[r, i] * dy[r, j];  db[j] += sum_r dy[r, j]
void dense_backward_params_serial(const Matrix& x, const Matrix& dy, std::span<double> dw, std::span<double> db);
void dense_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dw, std::span<double> db);

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

} // namespace ubood::nn::kernels
