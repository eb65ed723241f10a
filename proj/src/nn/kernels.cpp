#include "ubood/nn/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ubood::nn::kernels {

namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr long kParallelWork = 1L << 15;

inline void forward_row(const double* x, int in, int out, const double* w, const double* b, double* y) {
    for (int j = 0; j < out; ++j) y[j] = b[j];
    for (int i = 0; i < in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* wi = w + static_cast<std::size_t>(i) * out;
        for (int j = 0; j < out; ++j) y[j] += xi * wi[j];
    }
}

inline void backward_input_row(const double* dy, int in, int out, const double* w, double* dx) {
    for (int i = 0; i < in; ++i) {
        const double* wi = w + static_cast<std::size_t>(i) * out;
        double acc = 0.0;
        for (int j = 0; j < out; ++j) acc += dy[j] * wi[j];
        dx[i] = acc;
    }
}

inline void backward_weight_row(const Matrix& x, const Matrix& dy, int i, double* dwi) {
    const int out = dy.cols();
    for (int r = 0; r < x.rows(); ++r) {
        const double xi = x(r, i);
        if (xi == 0.0) continue;
        const double* dyr = dy.row(r).data();
        for (int j = 0; j < out; ++j) dwi[j] += xi * dyr[j];
    }
}

inline void backward_bias(const Matrix& dy, std::span<double> db) {
    for (int r = 0; r < dy.rows(); ++r)
        for (int j = 0; j < dy.cols(); ++j) db[j] += dy(r, j);
}

} // namespace

void dense_forward_serial(const Matrix& x, std::span<const double> w, std::span<const double> b, Matrix& y) {
    const int in = x.cols(), out = y.cols();
    for (int r = 0; r < x.rows(); ++r) forward_row(x.row(r).data(), in, out, w.data(), b.data(), y.row(r).data());
}

void dense_forward(const Matrix& x, std::span<const double> w, std::span<const double> b, Matrix& y) {
    const int in = x.cols(), out = y.cols(), rows = x.rows();
    const long work = static_cast<long>(rows) * in * out;
#pragma omp parallel for schedule(static) if (work > kParallelWork && rows > 1)
    for (int r = 0; r < rows; ++r) forward_row(x.row(r).data(), in, out, w.data(), b.data(), y.row(r).data());
}

void dense_backward_input_serial(const Matrix& dy, std::span<const double> w, Matrix& dx) {
    const int in = dx.cols(), out = dy.cols();
    for (int r = 0; r < dy.rows(); ++r) backward_input_row(dy.row(r).data(), in, out, w.data(), dx.row(r).data());
}

void dense_backward_input(const Matrix& dy, std::span<const double> w, Matrix& dx) {
    const int in = dx.cols(), out = dy.cols(), rows = dy.rows();
    const long work = static_cast<long>(rows) * in * out;
#pragma omp parallel for schedule(static) if (work > kParallelWork && rows > 1)
    for (int r = 0; r < rows; ++r) backward_input_row(dy.row(r).data(), in, out, w.data(), dx.row(r).data());
}

void dense_backward_params_serial(const Matrix& x, const Matrix& dy, std::span<double> dw, std::span<double> db) {
    const int in = x.cols(), out = dy.cols();
    for (int i = 0; i < in; ++i) backward_weight_row(x, dy, i, dw.data() + static_cast<std::size_t>(i) * out);
    backward_bias(dy, db);
}

void dense_backward_params(const Matrix& x, const Matrix& dy, std::span<double> dw, std::span<double> db) {
    const int in = x.cols(), out = dy.cols();
    const long work = static_cast<long>(x.rows()) * in * out;
    // each thread owns whole rows of dW, so the sum over the batch keeps its order
#pragma omp parallel for schedule(static) if (work > kParallelWork && in > 1)
    for (int i = 0; i < in; ++i) backward_weight_row(x, dy, i, dw.data() + static_cast<std::size_t>(i) * out);
    backward_bias(dy, db);
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace ubood::nn::kernels
