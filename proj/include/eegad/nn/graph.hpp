#pragma once

// Minimal reverse-mode differentiation over dense tensors. Ops record a DAG
// of shared_ptr nodes; backward() topologically sorts from the loss, seeds a
// unit gradient, runs each node's backprop closure in reverse order and then
// frees the graph. A second backward through the same graph is a usage error.

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "eegad/nn/kernels.hpp"
#include "eegad/nn/tensor.hpp"

namespace eegad::nn {

template <typename T>
struct Node {
    Tensor<T> val;
    Tensor<T> grad;
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void(Node<T>&)> backprop;
    bool needs_grad = false;
    bool consumed = false;
};

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
NodePtr<T> make_input(Tensor<T> value, bool needs_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->val = std::move(value);
    n->needs_grad = needs_grad;
    return n;
}

template <typename T>
void ensure_grad(Node<T>& n) {
    if (n.grad.v.empty()) n.grad = Tensor<T>::zeros_like(n.val);
}

namespace detail {

template <typename T>
bool any_needs_grad(const std::vector<NodePtr<T>>& parents) {
    for (const auto& p : parents) {
        if (p && p->needs_grad) return true;
    }
    return false;
}

template <typename T>
std::vector<Node<T>*> topo_order(Node<T>* root) {
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    // Iterative post-order DFS.
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node<T>* p = node->parents[next++].get();
            if (p && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;  // parents before children
}

}  // namespace detail

// Populates gradient buffers of every node reachable from loss, then frees
// the recorded graph.
template <typename T>
void backward(const NodePtr<T>& loss) {
    if (!loss) throw ConfigError("backward: null node");
    if (loss->consumed) {
        throw ConfigError("backward called twice without re-running forward");
    }
    if (loss->val.numel() != 1) throw ConfigError("backward: loss must be scalar");

    auto order = detail::topo_order(loss.get());
    ensure_grad(*loss);
    loss->grad.v[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backprop && n->needs_grad && !n->grad.v.empty()) {
            n->backprop(*n);
        }
    }
    for (Node<T>* n : order) {
        n->parents.clear();
        n->backprop = nullptr;
        n->consumed = true;
    }
}

// ---------------------------------------------------------------------------
// Ops
// ---------------------------------------------------------------------------

// x: B x C x H x W,  w: OC x C x KH x KW,  b: OC (optional).
template <typename T>
NodePtr<T> conv2d(const NodePtr<T>& x, const NodePtr<T>& w, const NodePtr<T>& b, std::size_t sh,
                  std::size_t sw, std::size_t ph, std::size_t pw) {
    if (x->val.ndim() != 4 || w->val.ndim() != 4) throw ConfigError("conv2d: expects 4-d tensors");
    if (w->val.dim(1) != x->val.dim(1)) throw DataError("conv2d: channel mismatch");
    const auto d = kern::ConvDims::make(x->val.dim(0), x->val.dim(1), x->val.dim(2), x->val.dim(3),
                                        w->val.dim(0), w->val.dim(2), w->val.dim(3), sh, sw, ph, pw);

    auto padded = std::make_shared<std::vector<T>>(kern::pad_input(x->val.v.data(), d));
    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>({d.B, d.OC, d.OH, d.OW});
    kern::conv2d_forward(padded->data(), w->val.v.data(), b ? b->val.v.data() : nullptr,
                         out->val.v.data(), d);
    out->parents = {x, w};
    if (b) out->parents.push_back(b);
    out->needs_grad = detail::any_needs_grad(out->parents);
    if (out->needs_grad) {
        out->backprop = [x, w, b, padded, d](Node<T>& n) {
            if (w->needs_grad || (b && b->needs_grad)) {
                ensure_grad(*w);
                if (b) ensure_grad(*b);
                kern::conv2d_backward_weights(padded->data(), n.grad.v.data(), w->grad.v.data(),
                                              b && b->needs_grad ? b->grad.v.data() : nullptr, d);
            }
            if (x->needs_grad) {
                ensure_grad(*x);
                std::vector<T> dpad(d.B * d.C * d.HP * d.WP, T(0));
                kern::conv2d_backward_data(n.grad.v.data(), w->val.v.data(), dpad.data(), d);
                kern::unpad_accum(dpad.data(), x->grad.v.data(), d);
            }
        };
    }
    return out;
}

template <typename T>
struct BnState {
    Tensor<T> running_mean;
    Tensor<T> running_var;
};

// Batch normalization over (B, H, W) per channel. In training mode batch
// statistics normalize and the running statistics are updated in place
// (biased variance normalizes, unbiased updates the running variance); in
// eval mode the running statistics normalize and the op is elementwise.
template <typename T>
NodePtr<T> batchnorm(const NodePtr<T>& x, const NodePtr<T>& gamma, const NodePtr<T>& beta,
                     BnState<T>* state, bool train, T momentum = T(0.1), T eps = T(1e-5)) {
    if (x->val.ndim() != 4) throw ConfigError("batchnorm: expects 4-d input");
    const std::size_t B = x->val.dim(0), C = x->val.dim(1);
    const std::size_t HW = x->val.dim(2) * x->val.dim(3);
    if (gamma->val.numel() != C || beta->val.numel() != C) {
        throw DataError("batchnorm: gamma/beta size mismatch");
    }

    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>(x->val.shape);
    out->parents = {x, gamma, beta};
    out->needs_grad = detail::any_needs_grad(out->parents);

    if (train) {
        auto mean = std::make_shared<std::vector<T>>(C);
        auto var = std::make_shared<std::vector<T>>(C);
        kern::bn_stats(x->val.v.data(), B, C, HW, mean->data(), var->data());
        auto invstd = std::make_shared<std::vector<T>>(C);
        for (std::size_t c = 0; c < C; ++c) {
            (*invstd)[c] = T(1) / std::sqrt((*var)[c] + eps);
        }
        kern::bn_apply(x->val.v.data(), mean->data(), invstd->data(), gamma->val.v.data(),
                       beta->val.v.data(), out->val.v.data(), B, C, HW);
        if (state) {
            const T n = static_cast<T>(B * HW);
            const T unbias = n > T(1) ? n / (n - T(1)) : T(1);
            for (std::size_t c = 0; c < C; ++c) {
                state->running_mean.v[c] =
                    (T(1) - momentum) * state->running_mean.v[c] + momentum * (*mean)[c];
                state->running_var.v[c] =
                    (T(1) - momentum) * state->running_var.v[c] + momentum * (*var)[c] * unbias;
            }
        }
        if (out->needs_grad) {
            out->backprop = [x, gamma, beta, mean, invstd, B, C, HW](Node<T>& n) {
                ensure_grad(*x);
                ensure_grad(*gamma);
                ensure_grad(*beta);
                kern::bn_backward(x->val.v.data(), n.grad.v.data(), mean->data(), invstd->data(),
                                  gamma->val.v.data(), x->grad.v.data(), gamma->grad.v.data(),
                                  beta->grad.v.data(), B, C, HW);
            };
        }
    } else {
        if (!state) throw ConfigError("batchnorm: eval mode requires running statistics");
        auto invstd = std::make_shared<std::vector<T>>(C);
        auto mean = std::make_shared<std::vector<T>>(C);
        for (std::size_t c = 0; c < C; ++c) {
            (*mean)[c] = state->running_mean.v[c];
            (*invstd)[c] = T(1) / std::sqrt(state->running_var.v[c] + eps);
        }
        kern::bn_apply(x->val.v.data(), mean->data(), invstd->data(), gamma->val.v.data(),
                       beta->val.v.data(), out->val.v.data(), B, C, HW);
        if (out->needs_grad) {
            out->backprop = [x, gamma, beta, mean, invstd, B, C, HW](Node<T>& n) {
                ensure_grad(*x);
                ensure_grad(*gamma);
                ensure_grad(*beta);
                for (std::size_t b = 0; b < B; ++b) {
                    for (std::size_t c = 0; c < C; ++c) {
                        const T g = gamma->val.v[c], is = (*invstd)[c], m = (*mean)[c];
                        const T* xp = x->val.v.data() + (b * C + c) * HW;
                        const T* dy = n.grad.v.data() + (b * C + c) * HW;
                        T* dx = x->grad.v.data() + (b * C + c) * HW;
                        for (std::size_t i = 0; i < HW; ++i) {
                            dx[i] += dy[i] * g * is;
                            gamma->grad.v[c] += dy[i] * (xp[i] - m) * is;
                            beta->grad.v[c] += dy[i];
                        }
                    }
                }
            };
        }
    }
    return out;
}

template <typename T>
NodePtr<T> relu(const NodePtr<T>& x) {
    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>(x->val.shape);
    kern::relu_forward(x->val.v.data(), out->val.v.data(), x->val.numel());
    out->parents = {x};
    out->needs_grad = x->needs_grad;
    if (out->needs_grad) {
        out->backprop = [x](Node<T>& n) {
            ensure_grad(*x);
            kern::relu_backward(x->val.v.data(), n.grad.v.data(), x->grad.v.data(),
                                x->val.numel());
        };
    }
    return out;
}

template <typename T>
NodePtr<T> add(const NodePtr<T>& a, const NodePtr<T>& b) {
    if (!a->val.same_shape(b->val)) throw DataError("add: shape mismatch");
    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>(a->val.shape);
    const std::size_t n = a->val.numel();
    const auto work = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < work; ++i) out->val.v[i] = a->val.v[i] + b->val.v[i];
    out->parents = {a, b};
    out->needs_grad = detail::any_needs_grad(out->parents);
    if (out->needs_grad) {
        out->backprop = [a, b, n](Node<T>& nd) {
            if (a->needs_grad) {
                ensure_grad(*a);
                for (std::size_t i = 0; i < n; ++i) a->grad.v[i] += nd.grad.v[i];
            }
            if (b->needs_grad) {
                ensure_grad(*b);
                for (std::size_t i = 0; i < n; ++i) b->grad.v[i] += nd.grad.v[i];
            }
        };
    }
    return out;
}

// Elementwise product; kept general for small-scale tests.
template <typename T>
NodePtr<T> mul(const NodePtr<T>& a, const NodePtr<T>& b) {
    if (!a->val.same_shape(b->val)) throw DataError("mul: shape mismatch");
    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>(a->val.shape);
    const std::size_t n = a->val.numel();
    for (std::size_t i = 0; i < n; ++i) out->val.v[i] = a->val.v[i] * b->val.v[i];
    out->parents = {a, b};
    out->needs_grad = detail::any_needs_grad(out->parents);
    if (out->needs_grad) {
        out->backprop = [a, b, n](Node<T>& nd) {
            if (a->needs_grad) {
                ensure_grad(*a);
                for (std::size_t i = 0; i < n; ++i) a->grad.v[i] += nd.grad.v[i] * b->val.v[i];
            }
            if (b->needs_grad) {
                ensure_grad(*b);
                for (std::size_t i = 0; i < n; ++i) b->grad.v[i] += nd.grad.v[i] * a->val.v[i];
            }
        };
    }
    return out;
}

template <typename T>
NodePtr<T> sum(const NodePtr<T>& x) {
    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>({1});
    T acc = T(0);
    for (const T& v : x->val.v) acc += v;
    out->val.v[0] = acc;
    out->parents = {x};
    out->needs_grad = x->needs_grad;
    if (out->needs_grad) {
        out->backprop = [x](Node<T>& n) {
            ensure_grad(*x);
            const T g = n.grad.v[0];
            for (T& v : x->grad.v) v += g;
        };
    }
    return out;
}

// B x C x H x W -> B x C mean over the spatial axes.
template <typename T>
NodePtr<T> global_avg_pool(const NodePtr<T>& x) {
    if (x->val.ndim() != 4) throw ConfigError("global_avg_pool: expects 4-d input");
    const std::size_t B = x->val.dim(0), C = x->val.dim(1);
    const std::size_t HW = x->val.dim(2) * x->val.dim(3);
    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>({B, C});
    const auto work = static_cast<std::int64_t>(B * C);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < work; ++t) {
        const T* src = x->val.v.data() + static_cast<std::size_t>(t) * HW;
        T acc = T(0);
        for (std::size_t i = 0; i < HW; ++i) acc += src[i];
        out->val.v[static_cast<std::size_t>(t)] = acc / static_cast<T>(HW);
    }
    out->parents = {x};
    out->needs_grad = x->needs_grad;
    if (out->needs_grad) {
        out->backprop = [x, B, C, HW](Node<T>& n) {
            ensure_grad(*x);
            for (std::size_t t = 0; t < B * C; ++t) {
                const T g = n.grad.v[t] / static_cast<T>(HW);
                T* dst = x->grad.v.data() + t * HW;
                for (std::size_t i = 0; i < HW; ++i) dst[i] += g;
            }
        };
    }
    return out;
}

// Concatenate B x C1 and B x C2 feature rows into B x (C1 + C2).
template <typename T>
NodePtr<T> concat_features(const NodePtr<T>& a, const NodePtr<T>& b) {
    if (a->val.ndim() != 2 || b->val.ndim() != 2 || a->val.dim(0) != b->val.dim(0)) {
        throw DataError("concat_features: expects 2-d tensors with equal batch");
    }
    const std::size_t B = a->val.dim(0), C1 = a->val.dim(1), C2 = b->val.dim(1);
    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>({B, C1 + C2});
    for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t c = 0; c < C1; ++c) out->val.v[r * (C1 + C2) + c] = a->val.v[r * C1 + c];
        for (std::size_t c = 0; c < C2; ++c) {
            out->val.v[r * (C1 + C2) + C1 + c] = b->val.v[r * C2 + c];
        }
    }
    out->parents = {a, b};
    out->needs_grad = detail::any_needs_grad(out->parents);
    if (out->needs_grad) {
        out->backprop = [a, b, B, C1, C2](Node<T>& n) {
            if (a->needs_grad) {
                ensure_grad(*a);
                for (std::size_t r = 0; r < B; ++r)
                    for (std::size_t c = 0; c < C1; ++c)
                        a->grad.v[r * C1 + c] += n.grad.v[r * (C1 + C2) + c];
            }
            if (b->needs_grad) {
                ensure_grad(*b);
                for (std::size_t r = 0; r < B; ++r)
                    for (std::size_t c = 0; c < C2; ++c)
                        b->grad.v[r * C2 + c] += n.grad.v[r * (C1 + C2) + C1 + c];
            }
        };
    }
    return out;
}

// x: B x D,  w: O x D,  b: O.
template <typename T>
NodePtr<T> linear(const NodePtr<T>& x, const NodePtr<T>& w, const NodePtr<T>& b) {
    if (x->val.ndim() != 2 || w->val.ndim() != 2 || x->val.dim(1) != w->val.dim(1)) {
        throw DataError("linear: shape mismatch");
    }
    const std::size_t B = x->val.dim(0), D = x->val.dim(1), O = w->val.dim(0);
    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>({B, O});
    kern::linear_forward(x->val.v.data(), w->val.v.data(), b ? b->val.v.data() : nullptr,
                         out->val.v.data(), B, D, O);
    out->parents = {x, w};
    if (b) out->parents.push_back(b);
    out->needs_grad = detail::any_needs_grad(out->parents);
    if (out->needs_grad) {
        out->backprop = [x, w, b, B, D, O](Node<T>& n) {
            if (w->needs_grad || (b && b->needs_grad)) {
                ensure_grad(*w);
                if (b) ensure_grad(*b);
                kern::linear_backward_weights(x->val.v.data(), n.grad.v.data(), w->grad.v.data(),
                                              b && b->needs_grad ? b->grad.v.data() : nullptr, B,
                                              D, O);
            }
            if (x->needs_grad) {
                ensure_grad(*x);
                kern::linear_backward_data(n.grad.v.data(), w->val.v.data(), x->grad.v.data(), B,
                                           D, O);
            }
        };
    }
    return out;
}

// Mean over the batch of -log softmax(logits)[label]; max-subtraction keeps
// large margins finite.
template <typename T>
NodePtr<T> cross_entropy(const NodePtr<T>& logits, const std::vector<int>& labels) {
    if (logits->val.ndim() != 2) throw ConfigError("cross_entropy: expects B x C logits");
    const std::size_t B = logits->val.dim(0), C = logits->val.dim(1);
    if (labels.size() != B) throw DataError("cross_entropy: label count mismatch");
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= C) {
            throw DataError("cross_entropy: label out of range");
        }
    }

    auto probs = std::make_shared<std::vector<T>>(B * C);
    T loss = T(0);
    for (std::size_t r = 0; r < B; ++r) {
        const T* row = logits->val.v.data() + r * C;
        T mx = row[0];
        for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        T denom = T(0);
        for (std::size_t c = 0; c < C; ++c) denom += std::exp(row[c] - mx);
        const T lse = mx + std::log(denom);
        loss += lse - row[static_cast<std::size_t>(labels[r])];
        for (std::size_t c = 0; c < C; ++c) {
            (*probs)[r * C + c] = std::exp(row[c] - lse);
        }
    }
    loss /= static_cast<T>(B);

    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>({1});
    out->val.v[0] = loss;
    out->parents = {logits};
    out->needs_grad = logits->needs_grad;
    if (out->needs_grad) {
        auto labels_copy = std::make_shared<std::vector<int>>(labels);
        out->backprop = [logits, probs, labels_copy, B, C](Node<T>& n) {
            ensure_grad(*logits);
            const T g = n.grad.v[0] / static_cast<T>(B);
            for (std::size_t r = 0; r < B; ++r) {
                for (std::size_t c = 0; c < C; ++c) {
                    const T onehot =
                        (static_cast<std::size_t>((*labels_copy)[r]) == c) ? T(1) : T(0);
                    logits->grad.v[r * C + c] += g * ((*probs)[r * C + c] - onehot);
                }
            }
        };
    }
    return out;
}

}  // namespace eegad::nn
