#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "sparsedit/common.hpp"

namespace sparsedit {

enum class Dtype { f32, f64 };

const char* dtype_name(Dtype d);
Dtype dtype_from_name(const std::string& name);

// Dense row-major numeric array. Values are held in f64; the dtype tag
// selects the on-disk width when the tensor is serialized.
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<double> data;
    Dtype dtype = Dtype::f64;

    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> s);
    Tensor(std::vector<std::int64_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::int64_t> s);
    static Tensor full(std::vector<std::int64_t> s, double v);
    static Tensor identity(std::int64_t n);
    // 2-D convenience constructor from nested lists.
    static Tensor of2d(std::initializer_list<std::initializer_list<double>> rows);

    std::int64_t numel() const;
    int ndim() const { return static_cast<int>(shape.size()); }
    std::int64_t dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    // 2-D accessors (row r, column c).
    double& at(std::int64_t r, std::int64_t c) { return data[static_cast<std::size_t>(r * shape[1] + c)]; }
    double at(std::int64_t r, std::int64_t c) const { return data[static_cast<std::size_t>(r * shape[1] + c)]; }
    // 3-D accessors (row-major h, w, c).
    double& at(std::int64_t i, std::int64_t j, std::int64_t k) {
        return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
    }
    double at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
    }

    std::string shape_str() const;
};

std::int64_t numel_of(const std::vector<std::int64_t>& shape);

// ---- kernels -------------------------------------------------------------
// All binary ops throw ShapeError naming both shapes on disagreement.

Tensor matmul(const Tensor& a, const Tensor& b);     // (M,K)x(K,N)
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a b^T
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// Row broadcasts: x is (N,C), r is (1,C).
Tensor add_rows(const Tensor& x, const Tensor& r);
Tensor mul_rows(const Tensor& x, const Tensor& r);

Tensor mean_rows(const Tensor& x);                     // (N,C) -> (1,C)
Tensor colsum(const Tensor& x);                        // (N,C) -> (1,C)
Tensor broadcast_rows(const Tensor& r, std::int64_t n);  // (1,C) -> (N,C)
Tensor slice_cols(const Tensor& x, std::int64_t c0, std::int64_t c1);

double sum(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
double mse(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& a);
bool bit_equal(const Tensor& a, const Tensor& b);

}  // namespace sparsedit
