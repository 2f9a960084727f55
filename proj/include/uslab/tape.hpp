#pragma once
// Eager operation tape: ops execute on emission, backward walks the record in
// reverse. Multiple forward passes over shared parameters coexist on one tape
// (translation, identity, cycle), and gradients can be injected at any set of
// nodes (loss roots are computed outside the tape).

#include <array>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uslab/ops.hpp"
#include "uslab/rng.hpp"
#include "uslab/tensor.hpp"

namespace uslab {

template <class T>
struct ParamStore {
    struct Entry {
        std::string name;
        Tensor<T> value;
        Tensor<T> grad;
    };
    std::vector<Entry> entries;
    std::unordered_map<std::string, int> by_name;

    int add(const std::string& name, Tensor<T> init) {
        check(!by_name.count(name), "duplicate parameter name");
        Entry e;
        e.name = name;
        e.grad = Tensor<T>(init.shape());
        e.value = std::move(init);
        entries.push_back(std::move(e));
        by_name[name] = static_cast<int>(entries.size()) - 1;
        return static_cast<int>(entries.size()) - 1;
    }
    Entry& at(int i) { return entries[static_cast<size_t>(i)]; }
    const Entry& at(int i) const { return entries[static_cast<size_t>(i)]; }
    int find(const std::string& name) const {
        auto it = by_name.find(name);
        return it == by_name.end() ? -1 : it->second;
    }
    void zero_grads() {
        for (auto& e : entries) e.grad.zero();
    }
    int64_t total_params() const {
        int64_t n = 0;
        for (const auto& e : entries) n += e.value.numel();
        return n;
    }
};

// Gaussian init, std 0.02, derived from the parameter name so creation order
// (lazy projection heads) cannot change the draw.
template <class T>
Tensor<T> gaussian_init(std::vector<int> shape, uint64_t seed,
                        const std::string& name, T stddev = T(0.02)) {
    Tensor<T> t(std::move(shape));
    Pcg32 rng = make_rng(seed, std::string("init:") + name);
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = stddev * static_cast<T>(rng.gauss());
    return t;
}

template <class T>
class Tape {
  public:
    explicit Tape(ParamStore<T>* params) : params_(params) {}

    int input(Tensor<T> v, bool needs_grad = false) {
        Node n;
        n.kind = Kind::kInput;
        n.out = std::move(v);
        n.needs_grad = needs_grad;
        return push(std::move(n));
    }

    int conv2d(int x, int w, int b, int stride, int pad, bool train) {
        const auto& in = out(x);
        const auto& wt = params_->at(w).value;
        Node n;
        n.kind = Kind::kConv;
        n.in0 = x;
        n.w = w;
        n.b = b;
        n.stride = stride;
        n.pad = pad;
        n.train_params = train;
        n.out = Tensor<T>({wt.dim(0),
                           ops::conv_out_dim(in.dim(1), wt.dim(2), stride, pad),
                           ops::conv_out_dim(in.dim(2), wt.dim(3), stride,
                                             pad)});
        ops::conv2d_fwd(in, wt, b >= 0 ? params_->at(b).value.data() : nullptr,
                        stride, pad, n.out);
        n.needs_grad = node(x).needs_grad || train;
        return push(std::move(n));
    }

    int instnorm(int x) {
        const auto& in = out(x);
        Node n;
        n.kind = Kind::kInstNorm;
        n.in0 = x;
        n.out = Tensor<T>(in.shape());
        ops::instnorm_fwd(in, T(1e-5), n.out, n.cache_a, n.cache_b);
        n.needs_grad = node(x).needs_grad;
        return push(std::move(n));
    }

    int lrelu(int x, T alpha) {
        const auto& in = out(x);
        Node n;
        n.kind = Kind::kLRelu;
        n.in0 = x;
        n.alpha = alpha;
        n.out = Tensor<T>(in.shape());
        ops::lrelu_fwd(in, alpha, n.out);
        n.needs_grad = node(x).needs_grad;
        return push(std::move(n));
    }

    int relu(int x) { return lrelu(x, T(0)); }

    int tanh_(int x) {
        const auto& in = out(x);
        Node n;
        n.kind = Kind::kTanh;
        n.in0 = x;
        n.out = Tensor<T>(in.shape());
        ops::tanh_fwd(in, n.out);
        n.needs_grad = node(x).needs_grad;
        return push(std::move(n));
    }

    int upsample2x(int x) {
        const auto& in = out(x);
        Node n;
        n.kind = Kind::kUpsample;
        n.in0 = x;
        n.out = Tensor<T>({in.dim(0), 2 * in.dim(1), 2 * in.dim(2)});
        ops::upsample2x_fwd(in, n.out);
        n.needs_grad = node(x).needs_grad;
        return push(std::move(n));
    }

    int reflect_pad(int x, ops::PadSpec p) {
        const auto& in = out(x);
        Node n;
        n.kind = Kind::kPad;
        n.in0 = x;
        n.pad_spec = p;
        n.out = Tensor<T>({in.dim(0), in.dim(1) + p.top + p.bottom,
                           in.dim(2) + p.left + p.right});
        ops::reflect_pad_fwd(in, p, n.out);
        n.needs_grad = node(x).needs_grad;
        return push(std::move(n));
    }

    int crop(int x, int top, int left, int h, int w) {
        const auto& in = out(x);
        Node n;
        n.kind = Kind::kCrop;
        n.in0 = x;
        n.top = top;
        n.left = left;
        n.out = Tensor<T>({in.dim(0), h, w});
        ops::crop_fwd(in, top, left, h, w, n.out);
        n.needs_grad = node(x).needs_grad;
        return push(std::move(n));
    }

    int concat_vec(int x, std::vector<T> vec) {
        const auto& in = out(x);
        const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
        const int E = static_cast<int>(vec.size());
        Node n;
        n.kind = Kind::kConcatVec;
        n.in0 = x;
        n.out = Tensor<T>({C + E, H, W});
        std::copy_n(in.data(), in.numel(), n.out.data());
        for (int e = 0; e < E; ++e)
            std::fill_n(n.out.data() + static_cast<int64_t>(C + e) * H * W,
                        static_cast<int64_t>(H) * W, vec[static_cast<size_t>(e)]);
        n.needs_grad = node(x).needs_grad;
        return push(std::move(n));
    }

    int add(int a, int b) {
        const auto& ta = out(a);
        const auto& tb = out(b);
        check(ta.same_shape(tb), "add: shape mismatch");
        Node n;
        n.kind = Kind::kAdd;
        n.in0 = a;
        n.in1 = b;
        n.out = Tensor<T>(ta.shape());
        if constexpr (std::is_same_v<T, float>)
            kern::ops().vadd(ta.numel(), ta.data(), tb.data(), n.out.data());
        else
            for (int64_t i = 0; i < ta.numel(); ++i)
                n.out[i] = ta[i] + tb[i];
        n.needs_grad = node(a).needs_grad || node(b).needs_grad;
        return push(std::move(n));
    }

    int linear(int x, int w, int b, bool train) {
        const auto& in = out(x);
        const auto& wt = params_->at(w).value;
        Node n;
        n.kind = Kind::kLinear;
        n.in0 = x;
        n.w = w;
        n.b = b;
        n.train_params = train;
        n.out = Tensor<T>({in.dim(0), wt.dim(0)});
        ops::linear_fwd(in, wt, b >= 0 ? params_->at(b).value.data() : nullptr,
                        n.out);
        n.needs_grad = node(x).needs_grad || train;
        return push(std::move(n));
    }

    int l2norm_rows(int x) {
        const auto& in = out(x);
        Node n;
        n.kind = Kind::kL2Norm;
        n.in0 = x;
        n.out = Tensor<T>(in.shape());
        ops::l2norm_rows_fwd(in, n.out, n.cache_a);
        n.needs_grad = node(x).needs_grad;
        return push(std::move(n));
    }

    int gather_rows(int x, std::vector<int> locs) {
        const auto& in = out(x);
        Node n;
        n.kind = Kind::kGather;
        n.in0 = x;
        n.locs = std::move(locs);
        n.out = Tensor<T>({static_cast<int>(n.locs.size()), in.dim(0)});
        ops::gather_rows_fwd(in, n.locs, n.out);
        n.needs_grad = node(x).needs_grad;
        return push(std::move(n));
    }

    const Tensor<T>& out(int i) const { return node(i).out; }
    const Tensor<T>& grad(int i) const { return node(i).grad; }
    bool needs_grad(int i) const { return node(i).needs_grad; }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Injects gradients at root nodes and propagates back to parameters.
    void backward(const std::vector<std::pair<int, const Tensor<T>*>>& roots) {
        for (const auto& [idx, g] : roots) {
            check(node(idx).needs_grad, "backward root does not need grad");
            check(g->same_shape(node(idx).out), "root gradient shape");
            accumulate(idx, *g);
        }
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.grad.empty()) continue;
            step_backward(n);
        }
    }

  private:
    enum class Kind {
        kInput, kConv, kInstNorm, kLRelu, kTanh, kUpsample, kPad, kCrop,
        kConcatVec, kAdd, kLinear, kL2Norm, kGather,
    };

    struct Node {
        Kind kind;
        int in0 = -1, in1 = -1;
        int w = -1, b = -1;
        int stride = 1, pad = 0, top = 0, left = 0;
        T alpha = T(0);
        ops::PadSpec pad_spec;
        std::vector<int> locs;
        std::vector<T> cache_a, cache_b;  // instnorm mean/invstd, l2 norms
        Tensor<T> out;
        Tensor<T> grad;
        bool needs_grad = false;
        bool train_params = false;
    };

    Node& node(int i) { return nodes_[static_cast<size_t>(i)]; }
    const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }

    int push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    void accumulate(int idx, const Tensor<T>& g) {
        Node& n = node(idx);
        if (!n.needs_grad) return;
        if (n.grad.empty()) n.grad = Tensor<T>(n.out.shape());
        if constexpr (std::is_same_v<T, float>)
            kern::ops().axpy(g.numel(), 1.0f, g.data(), n.grad.data());
        else
            for (int64_t i = 0; i < g.numel(); ++i) n.grad[i] += g[i];
    }

    Tensor<T>* input_grad(int idx) {
        if (idx < 0) return nullptr;
        Node& n = node(idx);
        if (!n.needs_grad) return nullptr;
        if (n.grad.empty()) n.grad = Tensor<T>(n.out.shape());
        return &n.grad;
    }

    void step_backward(Node& n) {
        switch (n.kind) {
            case Kind::kInput:
                break;
            case Kind::kConv: {
                Tensor<T>* din = input_grad(n.in0);
                Tensor<T>* dw =
                    n.train_params ? &params_->at(n.w).grad : nullptr;
                T* db = (n.train_params && n.b >= 0)
                            ? params_->at(n.b).grad.data()
                            : nullptr;
                ops::conv2d_bwd(out(n.in0), params_->at(n.w).value, n.grad,
                                n.stride, n.pad, din, dw, db);
                break;
            }
            case Kind::kInstNorm:
                if (Tensor<T>* din = input_grad(n.in0))
                    ops::instnorm_bwd(out(n.in0), n.cache_a, n.cache_b, n.grad,
                                      *din);
                break;
            case Kind::kLRelu:
                if (Tensor<T>* din = input_grad(n.in0))
                    ops::lrelu_bwd(out(n.in0), n.alpha, n.grad, *din);
                break;
            case Kind::kTanh:
                if (Tensor<T>* din = input_grad(n.in0))
                    ops::tanh_bwd(n.out, n.grad, *din);
                break;
            case Kind::kUpsample:
                if (Tensor<T>* din = input_grad(n.in0))
                    ops::upsample2x_bwd(n.grad, out(n.in0).dim(1),
                                        out(n.in0).dim(2), *din);
                break;
            case Kind::kPad:
                if (Tensor<T>* din = input_grad(n.in0))
                    ops::reflect_pad_bwd(n.grad, n.pad_spec, *din);
                break;
            case Kind::kCrop:
                if (Tensor<T>* din = input_grad(n.in0))
                    ops::crop_bwd(n.grad, n.top, n.left, *din);
                break;
            case Kind::kConcatVec:
                if (Tensor<T>* din = input_grad(n.in0)) {
                    const int64_t c = din->numel();
                    if constexpr (std::is_same_v<T, float>)
                        kern::ops().axpy(c, 1.0f, n.grad.data(), din->data());
                    else
                        for (int64_t i = 0; i < c; ++i)
                            (*din)[i] += n.grad[i];
                }
                break;
            case Kind::kAdd:
                if (Tensor<T>* din = input_grad(n.in0)) {
                    if constexpr (std::is_same_v<T, float>)
                        kern::ops().axpy(n.grad.numel(), 1.0f, n.grad.data(),
                                         din->data());
                    else
                        for (int64_t i = 0; i < n.grad.numel(); ++i)
                            (*din)[i] += n.grad[i];
                }
                if (Tensor<T>* din = input_grad(n.in1)) {
                    if constexpr (std::is_same_v<T, float>)
                        kern::ops().axpy(n.grad.numel(), 1.0f, n.grad.data(),
                                         din->data());
                    else
                        for (int64_t i = 0; i < n.grad.numel(); ++i)
                            (*din)[i] += n.grad[i];
                }
                break;
            case Kind::kLinear: {
                Tensor<T>* din = input_grad(n.in0);
                Tensor<T>* dw =
                    n.train_params ? &params_->at(n.w).grad : nullptr;
                T* db = (n.train_params && n.b >= 0)
                            ? params_->at(n.b).grad.data()
                            : nullptr;
                ops::linear_bwd(out(n.in0), params_->at(n.w).value, n.grad,
                                din, dw, db);
                break;
            }
            case Kind::kL2Norm:
                if (Tensor<T>* din = input_grad(n.in0))
                    ops::l2norm_rows_bwd(n.out, n.cache_a, n.grad, *din);
                break;
            case Kind::kGather:
                if (Tensor<T>* din = input_grad(n.in0))
                    ops::gather_rows_bwd(n.grad, n.locs, *din);
                break;
        }
    }

    ParamStore<T>* params_;
    std::vector<Node> nodes_;
};

}  // namespace uslab
