#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csod/common.hpp"

namespace csod {

// (batch, channel, height, width)
struct Shape {
    int n{0}, c{0}, h{0}, w{0};

    std::int64_t numel() const {
        return static_cast<std::int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape&) const = default;
    std::string str() const { return cat("(", n, ",", c, ",", h, ",", w, ")"); }
};

// Dense rank-4 array of doubles, row-major (n,c,h,w).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(const Shape& s, double fill = 0.0) : shape_(s) {
        check(s.n >= 0 && s.c >= 0 && s.h >= 0 && s.w >= 0,
              "tensor shape has a negative dimension: ", s.str());
        data_.assign(static_cast<std::size_t>(s.numel()), fill);
    }
    static Tensor zeros(int n, int c, int h, int w) { return Tensor(Shape{n, c, h, w}); }
    static Tensor full(int n, int c, int h, int w, double v) {
        return Tensor(Shape{n, c, h, w}, v);
    }

    const Shape& shape() const { return shape_; }
    int n() const { return shape_.n; }
    int c() const { return shape_.c; }
    int h() const { return shape_.h; }
    int w() const { return shape_.w; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    std::int64_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::int64_t>(in) * shape_.c + ic) * shape_.h + iy) * shape_.w + ix;
    }
    double& at(int in, int ic, int iy, int ix) { return data_[static_cast<std::size_t>(index(in, ic, iy, ix))]; }
    double at(int in, int ic, int iy, int ix) const { return data_[static_cast<std::size_t>(index(in, ic, iy, ix))]; }

    // pointer to the start of one (n,c) spatial plane
    double* plane(int in, int ic) { return data_.data() + index(in, ic, 0, 0); }
    const double* plane(int in, int ic) const { return data_.data() + index(in, ic, 0, 0); }

    bool all_finite() const;
    void fill(double v) { data_.assign(data_.size(), v); }

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

private:
    Shape shape_{};
    std::vector<double> data_;
};

// A trainable tensor with paired gradient storage.
struct Param {
    Tensor value;
    Tensor grad;
    int id{-1};
    bool is_bias{false};

    Param() = default;
    explicit Param(const Shape& s) : value(s), grad(s) {}
    void zero_grad() { grad.fill(0.0); }
};

}  // namespace csod
