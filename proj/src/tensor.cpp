// SPDX-License-Identifier: Apache-2.0

#include "sptrain/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace sptrain {

DataBuffer::DataBuffer(Dtype dtype, std::size_t n, MemTag tag)
    : dtype_(dtype), n_(n), reg_(current_ledger(), Tier::kDevice, tag, n * dtype_bytes(dtype)) {
    if (dtype_ == Dtype::kF64) {
        v64_.assign(n, 0.0);
    } else {
        v32_.assign(n, 0.0f);
    }
}

void DataBuffer::fill(double v) {
    if (dtype_ == Dtype::kF64) {
        std::fill(v64_.begin(), v64_.end(), v);
    } else {
        std::fill(v32_.begin(), v32_.end(), static_cast<float>(v));
    }
}

void DataBuffer::release_storage() {
    if (released_) {
        return;
    }
    v64_.clear();
    v64_.shrink_to_fit();
    v32_.clear();
    v32_.shrink_to_fit();
    reg_.release();
    released_ = true;
}

void TensorNode::ensure_grad() {
    if (!grad) {
        grad = std::make_shared<DataBuffer>(dtype, static_cast<std::size_t>(numel), grad_tag());
    }
}

void TensorNode::accumulate_grad(std::span<const double> g) {
    ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
        grad->add(i, g[i]);
    }
}

namespace {
thread_local int g_no_grad_depth = 0;
thread_local uint64_t g_seq_counter = 0;
} // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

bool grad_enabled() { return g_no_grad_depth == 0; }

namespace detail {

uint64_t next_seq() { return ++g_seq_counter; }

int64_t shape_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d < 0) {
            throw ShapeError("negative dimension in shape " + shape_str(shape));
        }
        n *= d;
    }
    return n;
}

std::string shape_str(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << shape[i] << (i + 1 < shape.size() ? "," : "");
    }
    os << "]";
    return os.str();
}

NodePtr make_leaf(std::vector<int64_t> shape, TensorOpts opts) {
    auto node = std::make_shared<TensorNode>();
    node->numel = shape_numel(shape);
    node->shape = std::move(shape);
    node->dtype = opts.dtype;
    node->tag = current_mem_tag();
    node->value = std::make_shared<DataBuffer>(opts.dtype, static_cast<std::size_t>(node->numel),
                                               node->tag);
    node->requires_grad = opts.requires_grad;
    node->is_leaf = true;
    node->seq = next_seq();
    return node;
}

NodePtr make_op(const char* op_name, std::vector<int64_t> shape, Dtype dtype,
                std::vector<NodePtr> inputs, std::function<void(TensorNode&)> backward_fn) {
    auto node = std::make_shared<TensorNode>();
    node->numel = shape_numel(shape);
    node->shape = std::move(shape);
    node->dtype = dtype;
    node->tag = current_mem_tag();
    node->value = std::make_shared<DataBuffer>(dtype, static_cast<std::size_t>(node->numel),
                                               node->tag);
    node->op_name = op_name;
    node->seq = next_seq();

    bool needs_grad = false;
    if (grad_enabled()) {
        for (const NodePtr& in : inputs) {
            if (in && in->requires_grad) {
                needs_grad = true;
                break;
            }
        }
    }
    if (needs_grad) {
        node->requires_grad = true;
        node->is_leaf = false;
        node->inputs = std::move(inputs);
        node->backward_fn = std::move(backward_fn);
    }
    return node;
}

} // namespace detail

Tensor Tensor::zeros(std::vector<int64_t> shape, TensorOpts opts) {
    return Tensor(detail::make_leaf(std::move(shape), opts));
}

Tensor Tensor::full(std::vector<int64_t> shape, double v, TensorOpts opts) {
    Tensor t = zeros(std::move(shape), opts);
    t.node()->value->fill(v);
    return t;
}

Tensor Tensor::from_values(std::vector<int64_t> shape, const std::vector<double>& v,
                           TensorOpts opts) {
    Tensor t = zeros(std::move(shape), opts);
    if (static_cast<int64_t>(v.size()) != t.numel()) {
        throw ShapeError("value count " + std::to_string(v.size()) + " does not match shape " +
                         detail::shape_str(t.shape()));
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        t.node()->value->set(i, v[i]);
    }
    return t;
}

Tensor Tensor::randn(std::vector<int64_t> shape, std::mt19937_64& rng, double stddev,
                     TensorOpts opts) {
    Tensor t = zeros(std::move(shape), opts);
    std::normal_distribution<double> dist(0.0, stddev);
    for (int64_t i = 0; i < t.numel(); ++i) {
        t.node()->value->set(static_cast<std::size_t>(i), dist(rng));
    }
    return t;
}

Tensor Tensor::alias_leaf(const Tensor& src, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->shape = src.shape();
    node->numel = src.numel();
    node->dtype = src.dtype();
    node->tag = src.node()->tag;
    node->value = src.node()->value; // shared storage, no new allocation
    node->requires_grad = requires_grad;
    node->is_leaf = true;
    node->seq = detail::next_seq();
    return Tensor(node);
}

double Tensor::item() const {
    if (numel() != 1) {
        throw ShapeError("item() on tensor with " + std::to_string(numel()) + " elements");
    }
    return node_->value->get(0);
}

std::vector<double> Tensor::to_vector() const {
    std::vector<double> out(static_cast<std::size_t>(numel()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = node_->value->get(i);
    }
    return out;
}

std::vector<double> Tensor::grad_vector() const {
    if (!has_grad()) {
        return std::vector<double>(static_cast<std::size_t>(numel()), 0.0);
    }
    std::vector<double> out(static_cast<std::size_t>(numel()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = node_->grad->get(i);
    }
    return out;
}

void Tensor::zero_grad() {
    if (has_grad()) {
        node_->grad->fill(0.0);
    }
}

} // namespace sptrain
