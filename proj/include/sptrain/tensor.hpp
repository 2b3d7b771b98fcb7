// SPDX-License-Identifier: Apache-2.0
//
// Dense reverse-mode autodiff tensor. Values are 64-bit by default with an
// optional 32-bit storage mode; the recorded graph is an implicit DAG of
// shared nodes, replayed in reverse creation order by backward().

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sptrain/errors.hpp"
#include "sptrain/ledger.hpp"

namespace sptrain {

enum class Dtype : uint8_t { kF64 = 0, kF32 = 1 };

inline std::size_t dtype_bytes(Dtype dt) { return dt == Dtype::kF64 ? 8 : 4; }
inline const char* dtype_name(Dtype dt) { return dt == Dtype::kF64 ? "f64" : "f32"; }

// Typed, ledger-registered flat buffer. Exactly one of the two vectors is in
// use, selected by dtype. Buffers can be shared between graph nodes (leaf
// aliasing during checkpoint replay) without double accounting.
class DataBuffer {
public:
    DataBuffer(Dtype dtype, std::size_t n, MemTag tag);
    ~DataBuffer() = default;
    DataBuffer(const DataBuffer&) = delete;
    DataBuffer& operator=(const DataBuffer&) = delete;

    Dtype dtype() const { return dtype_; }
    std::size_t size() const { return n_; }
    bool released() const { return released_; }

    std::span<double> f64() { return {v64_.data(), v64_.size()}; }
    std::span<const double> f64() const { return {v64_.data(), v64_.size()}; }
    std::span<float> f32() { return {v32_.data(), v32_.size()}; }
    std::span<const float> f32() const { return {v32_.data(), v32_.size()}; }

    double get(std::size_t i) const { return dtype_ == Dtype::kF64 ? v64_[i] : static_cast<double>(v32_[i]); }
    void set(std::size_t i, double v) {
        if (dtype_ == Dtype::kF64) v64_[i] = v; else v32_[i] = static_cast<float>(v);
    }
    void add(std::size_t i, double v) {
        if (dtype_ == Dtype::kF64) v64_[i] += v; else v32_[i] += static_cast<float>(v);
    }
    void fill(double v);

    void move_tier(Tier to) { reg_.move_tier(to); }
    void retag(MemTag tag) { reg_.retag(tag); }
    // Frees the storage and its ledger registration; the buffer object stays.
    void release_storage();

private:
    Dtype dtype_;
    std::size_t n_;
    std::vector<double> v64_;
    std::vector<float> v32_;
    LedgerReg reg_;
    bool released_ = false;
};

using BufferPtr = std::shared_ptr<DataBuffer>;

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One recorded operation (or leaf). backward_fn reads self.grad and
// accumulates into the grads of this node's inputs.
struct TensorNode {
    std::vector<int64_t> shape;
    int64_t numel = 0;
    Dtype dtype = Dtype::kF64;
    BufferPtr value;
    BufferPtr grad; // lazily allocated, zero-initialised
    bool requires_grad = false;
    bool is_leaf = true;
    uint64_t seq = 0;
    MemTag tag = MemTag::kWorkspace;
    const char* op_name = "leaf";
    std::vector<NodePtr> inputs;
    std::function<void(TensorNode&)> backward_fn;

    void ensure_grad();
    void accumulate_grad(std::span<const double> g);
    MemTag grad_tag() const { return (is_leaf && requires_grad) ? MemTag::kGrads : tag; }
};

struct TensorOpts {
    Dtype dtype = Dtype::kF64;
    bool requires_grad = false;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor zeros(std::vector<int64_t> shape, TensorOpts opts = {});
    static Tensor full(std::vector<int64_t> shape, double v, TensorOpts opts = {});
    static Tensor from_values(std::vector<int64_t> shape, const std::vector<double>& v,
                              TensorOpts opts = {});
    static Tensor randn(std::vector<int64_t> shape, std::mt19937_64& rng, double stddev = 1.0,
                        TensorOpts opts = {});
    // New leaf sharing the same storage (no allocation); used for replaying
    // recorded regions without walking back into their producer's history.
    static Tensor alias_leaf(const Tensor& src, bool requires_grad);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int64_t>& shape() const { return node_->shape; }
    int64_t numel() const { return node_ ? node_->numel : 0; }
    int64_t dim(std::size_t i) const { return node_->shape.at(i); }
    int64_t rows() const { return node_->shape.size() == 2 ? node_->shape[0] : numel(); }
    int64_t cols() const { return node_->shape.size() == 2 ? node_->shape[1] : 1; }
    Dtype dtype() const { return node_->dtype; }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    double at(std::size_t flat) const { return node_->value->get(flat); }
    void set(std::size_t flat, double v) { node_->value->set(flat, v); }
    double item() const;
    std::vector<double> to_vector() const;

    bool has_grad() const { return node_ && node_->grad != nullptr; }
    std::vector<double> grad_vector() const;
    void zero_grad();

    NodePtr node() const { return node_; }
    DataBuffer& buffer() const { return *node_->value; }

private:
    NodePtr node_;
};

// While alive, newly created ops are not recorded on the graph (outputs are
// plain leaves that do not require grad). Nestable.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

namespace detail {
NodePtr make_leaf(std::vector<int64_t> shape, TensorOpts opts);
// Builds an op node: allocates the output buffer, wires inputs and the
// backward rule, honouring NoGradGuard and input requires_grad flags.
NodePtr make_op(const char* op_name, std::vector<int64_t> shape, Dtype dtype,
                std::vector<NodePtr> inputs, std::function<void(TensorNode&)> backward_fn);
int64_t shape_numel(const std::vector<int64_t>& shape);
std::string shape_str(const std::vector<int64_t>& shape);
uint64_t next_seq();
} // namespace detail

} // namespace sptrain
