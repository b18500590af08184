// Copyright (C) 2026 The gpm-detect Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace gpm {

using Shape = std::vector<std::size_t>;

/// Cache-line aligned allocation so vectorized kernels take the same code path
/// regardless of where the heap places a buffer.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient buffer of the
/// same shape. Video activations use the N x C x T x H x W layout.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    AlignedBuffer& storage() { return data_; }
    const AlignedBuffer& storage() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Element access for rank-2 tensors.
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    bool has_grad() const { return !grad_.empty() && grad_.size() == data_.size(); }
    /// Allocates a zeroed gradient buffer if none exists.
    std::span<double> grad();
    std::span<const double> grad() const { return grad_; }
    void zero_grad();
    void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

    /// Same data, new shape. Throws if element counts differ.
    Tensor reshaped(Shape shape) const;
    void reshape(Shape shape);

    void fill(double value);

private:
    Shape shape_;
    AlignedBuffer data_;
    AlignedBuffer grad_;
};

/// Named learned tensor; the gradient lives in the tensor's grad slot.
struct Parameter {
    std::string name;
    Tensor value;
};

} // namespace gpm
