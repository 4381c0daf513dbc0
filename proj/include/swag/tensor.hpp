#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "swag/common.hpp"

namespace swag {

template <typename S>
class Tape;

namespace detail {

template <typename S>
struct TapeState;

// One node of the computation graph. Plain tensors (parameters, constants)
// are nodes that never join a tape; they carry no grad and no backward rule.
template <typename S>
struct TensorNode {
    std::vector<std::int64_t> shape;
    std::vector<S> data;
    std::vector<S> grad;  // sized lazily during backward
    bool on_tape = false;
    std::weak_ptr<TapeState<S>> tape;
    std::vector<std::shared_ptr<TensorNode<S>>> parents;
    std::function<void(TensorNode<S>&)> backward;
    const char* op = "";

    std::int64_t numel() const {
        return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                               std::multiplies<>());
    }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), S(0));
    }
};

template <typename S>
struct TapeState {
    std::vector<std::shared_ptr<TensorNode<S>>> record;  // creation order
};

}  // namespace detail

// Dense N-dimensional array with value semantics on the handle (copies share
// the underlying node). Feature maps use NCHW with N == 1.
template <typename S>
class Tensor {
public:
    using Node = detail::TensorNode<S>;

    Tensor() = default;

    explicit Tensor(std::vector<std::int64_t> shape) : node_(std::make_shared<Node>()) {
        node_->shape = std::move(shape);
        check_shape();
        node_->data.assign(static_cast<std::size_t>(node_->numel()), S(0));
    }

    Tensor(std::vector<std::int64_t> shape, std::vector<S> data)
        : node_(std::make_shared<Node>()) {
        node_->shape = std::move(shape);
        check_shape();
        if (static_cast<std::int64_t>(data.size()) != node_->numel())
            throw ConfigError("tensor data length does not match shape");
        node_->data = std::move(data);
    }

    static Tensor full(std::vector<std::int64_t> shape, S value) {
        Tensor t(std::move(shape));
        for (auto& v : t.data()) v = value;
        return t;
    }

    static Tensor scalar(S value) { return Tensor({1}, {value}); }

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::int64_t>& shape() const { return node_->shape; }
    std::int64_t dim(std::size_t i) const { return node_->shape.at(i); }
    std::int64_t ndim() const { return static_cast<std::int64_t>(node_->shape.size()); }
    std::int64_t numel() const { return node_->numel(); }

    std::vector<S>& data() { return node_->data; }
    const std::vector<S>& data() const { return node_->data; }

    S item() const {
        if (numel() != 1) throw ConfigError("item() requires a scalar tensor");
        return node_->data[0];
    }

    bool requires_grad() const { return node_ && node_->on_tape; }

    // Gradient accumulated by the owning tape's backward pass.
    const std::vector<S>& grad() const {
        if (!node_ || node_->grad.size() != node_->data.size())
            throw ConfigError("tensor has no gradient (not on a tape or backward not run)");
        return node_->grad;
    }

    bool has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }

    // Deep copy detached from any tape.
    Tensor clone() const {
        Tensor t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = node_->shape;
        t.node_->data = node_->data;
        return t;
    }

    bool all_finite() const {
        for (S v : node_->data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::shared_ptr<Node> node() const { return node_; }

    static Tensor from_node(std::shared_ptr<Node> n) {
        Tensor t;
        t.node_ = std::move(n);
        return t;
    }

private:
    void check_shape() const {
        if (node_->shape.empty()) throw ConfigError("tensor rank must be >= 1");
        for (auto d : node_->shape)
            if (d < 1) throw ConfigError("tensor dimensions must be >= 1");
    }

    std::shared_ptr<Node> node_;
};

// Records operations in execution order; backward replays them in reverse.
// Inputs of every recorded op precede it, so the record is already a
// topological order. One tape is single-threaded; independent tapes may run
// concurrently.
template <typename S>
class Tape {
public:
    Tape() : state_(std::make_shared<detail::TapeState<S>>()) {}

    // Marks a tensor as a differentiable input and registers it. A node whose
    // previous tape has been destroyed can be watched again; its stale
    // gradient is dropped.
    Tensor<S> watch(const Tensor<S>& t) {
        auto node = t.node();
        if (!node) throw ConfigError("cannot watch an undefined tensor");
        auto current = node->tape.lock();
        if (current == state_) return t;
        if (node->on_tape && current)
            throw ConfigError("tensor is already recorded on another live tape");
        node->on_tape = true;
        node->tape = state_;
        node->grad.clear();
        node->backward = nullptr;
        node->parents.clear();
        state_->record.push_back(node);
        return t;
    }

    // Accumulates d(loss)/d(node) into every watched leaf's grad. Each call
    // is a fresh reverse sweep (interior gradients are reset), so repeated
    // calls without zero_grad() sum their contributions on the leaves.
    void backward(const Tensor<S>& loss) {
        if (loss.numel() != 1) throw ConfigError("backward requires a scalar loss");
        auto root = loss.node();
        if (!root || !root->on_tape || root->tape.lock() != state_)
            throw ConfigError("loss is not recorded on this tape");
        if (state_->record.empty()) throw ConfigError("backward on an empty tape");
        for (auto& n : state_->record)
            if (n->backward) n->grad.clear();
        root->ensure_grad();
        root->grad[0] += S(1);
        for (auto it = state_->record.rbegin(); it != state_->record.rend(); ++it) {
            auto& node = **it;
            if (!node.backward) continue;
            if (node.grad.size() != node.data.size()) continue;  // no incoming gradient
            node.backward(node);
        }
    }

    void zero_grad() {
        for (auto& n : state_->record) n->grad.clear();
    }

    std::size_t size() const { return state_->record.size(); }

    std::shared_ptr<detail::TapeState<S>> state() const { return state_; }

private:
    std::shared_ptr<detail::TapeState<S>> state_;
};

namespace detail {

// Tape shared by any of the inputs, or null when none is being traced.
template <typename S>
std::shared_ptr<TapeState<S>> tape_of(std::initializer_list<const Tensor<S>*> inputs) {
    for (const auto* t : inputs) {
        if (t->defined() && t->node()->on_tape) {
            if (auto st = t->node()->tape.lock()) return st;
        }
    }
    return nullptr;
}

template <typename S>
void record_op(const std::shared_ptr<TapeState<S>>& st, Tensor<S>& out,
               std::vector<Tensor<S>> parents, const char* op,
               std::function<void(TensorNode<S>&)> backward) {
    auto node = out.node();
    node->on_tape = true;
    node->tape = st;
    node->op = op;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
    st->record.push_back(node);
}

// Adds `delta` into the parent's grad buffer if that parent is being traced.
template <typename S>
void accumulate(const std::shared_ptr<TensorNode<S>>& parent, const S* delta) {
    if (!parent->on_tape) return;
    parent->ensure_grad();
    S* g = parent->grad.data();
    const std::size_t n = parent->data.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += delta[i];
}

template <typename S>
void check_finite(const Tensor<S>& t, const std::string& context) {
    if (!t.all_finite())
        throw NumericError("non-finite value in " + context);
}

}  // namespace detail
}  // namespace swag
