#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "pn/error.hpp"

namespace pn::learn {

// Dense row-major tensor of doubles. Images are NCHW, feature batches (N, F).
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> dims) : shape(std::move(dims)), data(count(shape), 0.0) {}

    static std::size_t count(const std::vector<int>& dims) {
        std::size_t n = 1;
        for (int d : dims) n *= static_cast<std::size_t>(d);
        return n;
    }

    std::size_t size() const { return data.size(); }
    int dim(std::size_t i) const { return shape.at(i); }
    int batch() const { return shape.empty() ? 0 : shape[0]; }
    // Elements per sample.
    std::size_t stride() const { return shape.empty() ? 0 : data.size() / static_cast<std::size_t>(shape[0]); }

    double* sample(int n) { return data.data() + static_cast<std::size_t>(n) * stride(); }
    const double* sample(int n) const { return data.data() + static_cast<std::size_t>(n) * stride(); }

    void resize(std::vector<int> dims) {
        shape = std::move(dims);
        data.assign(count(shape), 0.0);
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Tensor&) const = default;
};

inline std::string shape_string(const std::vector<int>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + ")";
}

// Row-major kernels; all accumulate into C.

// C[M,N] += A[M,K] * B[K,N]
inline void gemm_nn(int M, int N, int K, const double* A, const double* B, double* C) {
    for (int i = 0; i < M; ++i) {
        double* c = C + static_cast<std::size_t>(i) * N;
        for (int k = 0; k < K; ++k) {
            const double a = A[static_cast<std::size_t>(i) * K + k];
            if (a == 0.0) continue;
            const double* b = B + static_cast<std::size_t>(k) * N;
#pragma omp simd
            for (int j = 0; j < N; ++j) c[j] += a * b[j];
        }
    }
}

// C[M,N] += A[M,K] * B[N,K]^T
inline void gemm_nt(int M, int N, int K, const double* A, const double* B, double* C) {
    for (int i = 0; i < M; ++i) {
        const double* a = A + static_cast<std::size_t>(i) * K;
        for (int j = 0; j < N; ++j) {
            const double* b = B + static_cast<std::size_t>(j) * K;
            double s = 0;
#pragma omp simd reduction(+ : s)
            for (int k = 0; k < K; ++k) s += a[k] * b[k];
            C[static_cast<std::size_t>(i) * N + j] += s;
        }
    }
}

// C[M,N] += A[K,M]^T * B[K,N]
inline void gemm_tn(int M, int N, int K, const double* A, const double* B, double* C) {
    for (int k = 0; k < K; ++k) {
        const double* b = B + static_cast<std::size_t>(k) * N;
        for (int i = 0; i < M; ++i) {
            const double a = A[static_cast<std::size_t>(k) * M + i];
            if (a == 0.0) continue;
            double* c = C + static_cast<std::size_t>(i) * N;
#pragma omp simd
            for (int j = 0; j < N; ++j) c[j] += a * b[j];
        }
    }
}

} // namespace pn::learn
