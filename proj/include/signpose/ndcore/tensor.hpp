// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "signpose/error.hpp"

namespace signpose::nd {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ')';
    return os.str();
}

/// Dense row-major tensor. Value semantics; copies are deep.
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
        for (auto d : shape_)
            if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_size(shape_))
            throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_string(shape_));
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    T& at(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * shape_[1] + j) * shape_[2] + k]; }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    /// Row `i` of the tensor viewed as [dim(0), size/dim(0)].
    std::span<T> row(std::size_t i) {
        const std::size_t w = size() / shape_[0];
        return {data_.data() + i * w, w};
    }
    std::span<const T> row(std::size_t i) const {
        const std::size_t w = size() / shape_[0];
        return {data_.data() + i * w, w};
    }

    Tensor reshaped(Shape shape) const& {
        Tensor out = *this;
        out.reshape(std::move(shape));
        return out;
    }
    Tensor reshaped(Shape shape) && {
        reshape(std::move(shape));
        return std::move(*this);
    }
    void reshape(Shape shape) {
        if (shape_size(shape) != data_.size())
            throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        shape_ = std::move(shape);
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    Tensor& operator+=(const Tensor& other) {
        require_same_shape(other, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    template <class U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    bool operator==(const Tensor& other) const = default;

    void require_same_shape(const Tensor& other, const char* op) const {
        if (shape_ != other.shape_)
            throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(shape_) + " vs " +
                             shape_string(other.shape_));
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

template <class T>
using RowMajorMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class T>
using ConstRowMajorMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// View a contiguous buffer as a rows × cols row-major matrix.
template <class T>
RowMajorMap<T> as_matrix(T* p, std::size_t rows, std::size_t cols) {
    return RowMajorMap<T>(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
template <class T>
ConstRowMajorMap<T> as_matrix(const T* p, std::size_t rows, std::size_t cols) {
    return ConstRowMajorMap<T>(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

/// 1-D tensor as an Eigen row vector.
template <class T>
auto as_row(const Tensor<T>& t) {
    return Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(t.data(), static_cast<Eigen::Index>(t.size()));
}

template <class T>
auto as_row(Tensor<T>& t) {
    return Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(t.data(), static_cast<Eigen::Index>(t.size()));
}

/// The tensor viewed as [dim(0) * ... * dim(r-2), dim(r-1)].
template <class T>
auto as_matrix(Tensor<T>& t) {
    const std::size_t cols = t.shape().back();
    return as_matrix(t.data(), t.size() / cols, cols);
}
template <class T>
auto as_matrix(const Tensor<T>& t) {
    const std::size_t cols = t.shape().back();
    return as_matrix(t.data(), t.size() / cols, cols);
}

/// acc += column sums of m viewed as a matrix. Rows are added in order;
/// Eigen's colwise().sum() orders its sums by buffer alignment, which is not
/// reproducible across runs.
template <class T>
void add_column_sums(const Tensor<T>& m, Tensor<T>& acc) {
    const std::size_t cols = m.shape().back(), rows = m.size() / cols;
    if (acc.size() != cols) throw ShapeError("add_column_sums: accumulator width mismatch");
    T* out = acc.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = m.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) out[c] += row[c];
    }
}

enum class Accumulate { No, Yes };

/// out = a · b (or out += a · b). a is viewed as [m, k] via its last axis.
template <class T>
void matmul_into(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out, Accumulate acc = Accumulate::No) {
    auto am = as_matrix(a);
    auto bm = as_matrix(b);
    if (am.cols() != bm.rows())
        throw ShapeError("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    auto om = as_matrix(out);
    if (om.rows() != am.rows() || om.cols() != bm.cols()) throw ShapeError("matmul: bad output shape");
    if (acc == Accumulate::Yes)
        om.noalias() += am * bm;
    else
        om.noalias() = am * bm;
}

/// out (+)= aᵀ · b, both viewed as matrices with equal row counts.
template <class T>
void matmul_tn_into(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out, Accumulate acc = Accumulate::No) {
    auto am = as_matrix(a);
    auto bm = as_matrix(b);
    if (am.rows() != bm.rows()) throw ShapeError("matmul_tn: row counts differ");
    auto om = as_matrix(out);
    if (om.rows() != am.cols() || om.cols() != bm.cols()) throw ShapeError("matmul_tn: bad output shape");
    if (acc == Accumulate::Yes)
        om.noalias() += am.transpose() * bm;
    else
        om.noalias() = am.transpose() * bm;
}

/// out (+)= a · bᵀ.
template <class T>
void matmul_nt_into(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out, Accumulate acc = Accumulate::No) {
    auto am = as_matrix(a);
    auto bm = as_matrix(b);
    if (am.cols() != bm.cols()) throw ShapeError("matmul_nt: column counts differ");
    auto om = as_matrix(out);
    if (om.rows() != am.rows() || om.cols() != bm.rows()) throw ShapeError("matmul_nt: bad output shape");
    if (acc == Accumulate::Yes)
        om.noalias() += am * bm.transpose();
    else
        om.noalias() = am * bm.transpose();
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    Shape s = a.shape();
    s.back() = b.shape().back();
    Tensor<T> out(s);
    matmul_into(a, b, out);
    return out;
}

}  // namespace signpose::nd
