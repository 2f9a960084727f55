#pragma once
// Dense row-major tensor with 64-byte aligned storage. Float for training,
// double for the finite-difference test instantiations.

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <initializer_list>
#include <new>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace uslab {

template <class T>
struct AlignedAlloc {
    using value_type = T;
    AlignedAlloc() = default;
    template <class U>
    AlignedAlloc(const AlignedAlloc<U>&) {}
    T* allocate(std::size_t n) {
        void* p = std::aligned_alloc(64, ((n * sizeof(T) + 63) / 64) * 64);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { std::free(p); }
    template <class U>
    bool operator==(const AlignedAlloc<U>&) const { return true; }
};

template <class T>
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        storage_.assign(count(shape_), T(0));
    }
    Tensor(std::initializer_list<int> shape)
        : Tensor(std::vector<int>(shape)) {}

    static Tensor zeros_like(const Tensor& o) { return Tensor(o.shape_); }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int64_t numel() const { return static_cast<int64_t>(storage_.size()); }
    bool empty() const { return storage_.empty(); }

    T* data() { return storage_.data(); }
    const T* data() const { return storage_.data(); }
    T& operator[](int64_t i) { return storage_[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const {
        return storage_[static_cast<size_t>(i)];
    }

    // CHW accessor for the common 3-d case.
    T& at(int c, int y, int x) {
        return storage_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] +
                        x];
    }
    const T& at(int c, int y, int x) const {
        return storage_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] +
                        x];
    }

    void fill(T v) { std::fill(storage_.begin(), storage_.end(), v); }
    void zero() { fill(T(0)); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }

  private:
    std::vector<int> shape_;
    std::vector<T, AlignedAlloc<T>> storage_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// Contract checks that stay active in release builds.
inline void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace uslab
