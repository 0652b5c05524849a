#include "sparsedit/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <sstream>

#include "sparsedit/opcost.hpp"

namespace sparsedit {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

ECMap as_mat(const Tensor& t) {
    return ECMap(t.data.data(), t.shape[0], t.shape[1]);
}

EMap as_mat(Tensor& t) {
    return EMap(t.data.data(), t.shape[0], t.shape[1]);
}

void require_2d(const Tensor& t, const char* op) {
    if (t.ndim() != 2) {
        throw ShapeError(std::string(op) + ": expected 2-D tensor, got " + t.shape_str());
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

void require_row_vector(const Tensor& x, const Tensor& r, const char* op) {
    require_2d(x, op);
    require_2d(r, op);
    if (r.shape[0] != 1 || r.shape[1] != x.shape[1]) {
        throw ShapeError(std::string(op) + ": row operand must be [1x" + std::to_string(x.shape[1]) +
                         "], got " + r.shape_str() + " against " + x.shape_str());
    }
}

}  // namespace

const char* dtype_name(Dtype d) {
    return d == Dtype::f32 ? "f32" : "f64";
}

Dtype dtype_from_name(const std::string& name) {
    if (name == "f32") return Dtype::f32;
    if (name == "f64") return Dtype::f64;
    throw ConfigError("dtype: unknown name '" + name + "'");
}

std::int64_t numel_of(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::int64_t> s)
    : shape(std::move(s)), data(static_cast<std::size_t>(numel_of(shape)), 0.0) {}

Tensor::Tensor(std::vector<std::int64_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel_of(shape) != static_cast<std::int64_t>(data.size())) {
        throw ShapeError("Tensor: data length " + std::to_string(data.size()) + " does not match shape " +
                         shape_str());
    }
}

Tensor Tensor::zeros(std::vector<std::int64_t> s) {
    return Tensor(std::move(s));
}

Tensor Tensor::full(std::vector<std::int64_t> s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
}

Tensor Tensor::identity(std::int64_t n) {
    Tensor t({n, n});
    for (std::int64_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::of2d(std::initializer_list<std::initializer_list<double>> rows) {
    const std::int64_t r = static_cast<std::int64_t>(rows.size());
    const std::int64_t c = r > 0 ? static_cast<std::int64_t>(rows.begin()->size()) : 0;
    Tensor t({r, c});
    std::int64_t i = 0;
    for (const auto& row : rows) {
        if (static_cast<std::int64_t>(row.size()) != c) {
            throw ShapeError("of2d: ragged rows");
        }
        std::int64_t j = 0;
        for (double v : row) t.at(i, j++) = v;
        ++i;
    }
    return t;
}

std::int64_t Tensor::numel() const {
    return numel_of(shape);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    if (a.shape[1] != b.shape[0]) {
        throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " x " + b.shape_str());
    }
    Tensor out({a.shape[0], b.shape[1]});
    as_mat(out).noalias() = as_mat(a) * as_mat(b);
    opcost::charge(2 * a.shape[0] * a.shape[1] * b.shape[1]);
    return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_tn");
    require_2d(b, "matmul_tn");
    if (a.shape[0] != b.shape[0]) {
        throw ShapeError("matmul_tn: inner dimensions disagree, " + a.shape_str() + "^T x " + b.shape_str());
    }
    Tensor out({a.shape[1], b.shape[1]});
    as_mat(out).noalias() = as_mat(a).transpose() * as_mat(b);
    opcost::charge(2 * a.shape[1] * a.shape[0] * b.shape[1]);
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_nt");
    require_2d(b, "matmul_nt");
    if (a.shape[1] != b.shape[1]) {
        throw ShapeError("matmul_nt: inner dimensions disagree, " + a.shape_str() + " x " + b.shape_str() + "^T");
    }
    Tensor out({a.shape[0], b.shape[0]});
    as_mat(out).noalias() = as_mat(a) * as_mat(b).transpose();
    opcost::charge(2 * a.shape[0] * a.shape[1] * b.shape[0]);
    return out;
}

Tensor transpose(const Tensor& a) {
    require_2d(a, "transpose");
    Tensor out({a.shape[1], a.shape[0]});
    as_mat(out) = as_mat(a).transpose();
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    opcost::charge(opcost::kElementwise * a.numel());
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    opcost::charge(opcost::kElementwise * a.numel());
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    opcost::charge(opcost::kElementwise * a.numel());
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (auto& v : out.data) v *= s;
    opcost::charge(opcost::kElementwise * a.numel());
    return out;
}

Tensor add_scalar(const Tensor& a, double s) {
    Tensor out = a;
    for (auto& v : out.data) v += s;
    opcost::charge(opcost::kElementwise * a.numel());
    return out;
}

Tensor add_rows(const Tensor& x, const Tensor& r) {
    require_row_vector(x, r, "add_rows");
    Tensor out = x;
    const std::int64_t n = x.shape[0], c = x.shape[1];
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < c; ++j) out.at(i, j) += r.at(0, j);
    }
    opcost::charge(opcost::kElementwise * x.numel());
    return out;
}

Tensor mul_rows(const Tensor& x, const Tensor& r) {
    require_row_vector(x, r, "mul_rows");
    Tensor out = x;
    const std::int64_t n = x.shape[0], c = x.shape[1];
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < c; ++j) out.at(i, j) *= r.at(0, j);
    }
    opcost::charge(opcost::kElementwise * x.numel());
    return out;
}

Tensor mean_rows(const Tensor& x) {
    require_2d(x, "mean_rows");
    const std::int64_t n = x.shape[0], c = x.shape[1];
    Tensor out({1, c});
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < c; ++j) out.at(0, j) += x.at(i, j);
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::int64_t j = 0; j < c; ++j) out.at(0, j) *= inv;
    opcost::charge(opcost::kElementwise * (n * c + c));
    return out;
}

Tensor colsum(const Tensor& x) {
    require_2d(x, "colsum");
    const std::int64_t n = x.shape[0], c = x.shape[1];
    Tensor out({1, c});
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < c; ++j) out.at(0, j) += x.at(i, j);
    }
    opcost::charge(opcost::kElementwise * n * c);
    return out;
}

Tensor broadcast_rows(const Tensor& r, std::int64_t n) {
    require_2d(r, "broadcast_rows");
    if (r.shape[0] != 1) {
        throw ShapeError("broadcast_rows: expected [1xC], got " + r.shape_str());
    }
    const std::int64_t c = r.shape[1];
    Tensor out({n, c});
    for (std::int64_t i = 0; i < n; ++i) {
        std::memcpy(&out.data[static_cast<std::size_t>(i * c)], r.data.data(), sizeof(double) * static_cast<std::size_t>(c));
    }
    return out;
}

Tensor slice_cols(const Tensor& x, std::int64_t c0, std::int64_t c1) {
    require_2d(x, "slice_cols");
    if (c0 < 0 || c1 > x.shape[1] || c0 >= c1) {
        throw ShapeError("slice_cols: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                         ") out of bounds for " + x.shape_str());
    }
    const std::int64_t n = x.shape[0], w = c1 - c0;
    Tensor out({n, w});
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < w; ++j) out.at(i, j) = x.at(i, c0 + j);
    }
    return out;
}

double sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s;
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

double mse(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data.size());
}

bool all_finite(const Tensor& a) {
    for (double v : a.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

}  // namespace sparsedit
