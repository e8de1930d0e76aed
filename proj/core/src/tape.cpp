#include "cmpl/tape.hpp"

#include <cmath>

#include "cmpl/errors.hpp"

namespace cmpl {

Tape::Node& Tape::node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
const Tape::Node& Tape::node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }

Tape::NodeId Tape::push(Node n) {
    n.grad.assign(n.value.size(), 0.0);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::constant(std::vector<double> value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Tape::NodeId Tape::scalar(double value) { return constant({value}); }

Tape::NodeId Tape::parameter(ParamStore& store, const std::string& entry_name) {
    auto& entry = store.at(entry_name);
    Node n;
    n.value = entry.value;
    ParamStore::Entry* target = &entry;
    n.pull = [target](Tape&, Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) target->grad[i] += self.grad[i];
    };
    return push(std::move(n));
}

Tape::NodeId Tape::frames_affine(NodeId x, NodeId w, NodeId b, int frames, int in_dim,
                                 int out_dim) {
    Node n;
    n.value.resize(static_cast<std::size_t>(frames) * out_dim);
    kernels::frames_affine(node(x).value, node(w).value, node(b).value, frames, in_dim, out_dim,
                           n.value);
    n.pull = [x, w, b, frames, in_dim, out_dim](Tape& tape, Node& self) {
        auto& xn = tape.node(x);
        auto& wn = tape.node(w);
        auto& bn = tape.node(b);
        for (int t = 0; t < frames; ++t) {
            const double* g_t = self.grad.data() + static_cast<std::size_t>(t) * out_dim;
            const double* x_t = xn.value.data() + static_cast<std::size_t>(t) * in_dim;
            double* gx_t = xn.grad.data() + static_cast<std::size_t>(t) * in_dim;
            for (int i = 0; i < in_dim; ++i) {
                const double* w_row = wn.value.data() + static_cast<std::size_t>(i) * out_dim;
                double* gw_row = wn.grad.data() + static_cast<std::size_t>(i) * out_dim;
                const double xv = x_t[i];
                double acc = 0.0;
                for (int o = 0; o < out_dim; ++o) {
                    acc += g_t[o] * w_row[o];
                    gw_row[o] += xv * g_t[o];
                }
                gx_t[i] += acc;
            }
            for (int o = 0; o < out_dim; ++o) bn.grad[static_cast<std::size_t>(o)] += g_t[o];
        }
    };
    return push(std::move(n));
}

Tape::NodeId Tape::conv1d_time(NodeId x, NodeId w, NodeId b, int frames, int channels) {
    Node n;
    n.value.resize(static_cast<std::size_t>(frames) * channels);
    kernels::conv1d_time(node(x).value, node(w).value, node(b).value, frames, channels, n.value);
    n.pull = [x, w, b, frames, channels](Tape& tape, Node& self) {
        auto& xn = tape.node(x);
        auto& wn = tape.node(w);
        auto& bn = tape.node(b);
        const auto c = static_cast<std::size_t>(channels);
        for (int t = 0; t < frames; ++t) {
            const double* g_t = self.grad.data() + static_cast<std::size_t>(t) * c;
            for (int k = 0; k < 3; ++k) {
                const int src = t + k - 1;
                if (src < 0 || src >= frames) continue;
                const double* x_s = xn.value.data() + static_cast<std::size_t>(src) * c;
                double* gx_s = xn.grad.data() + static_cast<std::size_t>(src) * c;
                const double* w_k = wn.value.data() + static_cast<std::size_t>(k) * c * c;
                double* gw_k = wn.grad.data() + static_cast<std::size_t>(k) * c * c;
                for (std::size_t ci = 0; ci < c; ++ci) {
                    const double xv = x_s[ci];
                    const double* w_row = w_k + ci * c;
                    double* gw_row = gw_k + ci * c;
                    double acc = 0.0;
                    for (std::size_t co = 0; co < c; ++co) {
                        acc += g_t[co] * w_row[co];
                        gw_row[co] += xv * g_t[co];
                    }
                    gx_s[ci] += acc;
                }
            }
            for (std::size_t co = 0; co < c; ++co) bn.grad[co] += g_t[co];
        }
    };
    return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId x) {
    Node n;
    n.value.resize(node(x).value.size());
    kernels::relu(node(x).value, n.value);
    n.pull = [x](Tape& tape, Node& self) {
        auto& xn = tape.node(x);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (xn.value[i] > 0.0) xn.grad[i] += self.grad[i];
        }
    };
    return push(std::move(n));
}

Tape::NodeId Tape::time_mean(NodeId x, int frames, int channels) {
    Node n;
    n.value.resize(static_cast<std::size_t>(channels));
    kernels::time_mean(node(x).value, frames, channels, n.value);
    n.pull = [x, frames, channels](Tape& tape, Node& self) {
        auto& xn = tape.node(x);
        const double inv = 1.0 / frames;
        for (int t = 0; t < frames; ++t) {
            double* gx_t = xn.grad.data() + static_cast<std::size_t>(t) * channels;
            for (int c = 0; c < channels; ++c) gx_t[c] += self.grad[static_cast<std::size_t>(c)] * inv;
        }
    };
    return push(std::move(n));
}

Tape::NodeId Tape::softmax_cross_entropy(NodeId logits, int target_class) {
    const auto& lv = node(logits).value;
    if (target_class < 0 || target_class >= static_cast<int>(lv.size()))
        throw PreconditionError("softmax_cross_entropy: target class out of range");
    std::vector<double> probs = softmax(lv);
    Node n;
    n.value = {-std::log(probs[static_cast<std::size_t>(target_class)])};
    n.pull = [logits, target_class, probs = std::move(probs)](Tape& tape, Node& self) {
        auto& ln = tape.node(logits);
        const double g = self.grad[0];
        for (std::size_t i = 0; i < probs.size(); ++i) {
            const double onehot = static_cast<int>(i) == target_class ? 1.0 : 0.0;
            ln.grad[i] += g * (probs[i] - onehot);
        }
    };
    return push(std::move(n));
}

Tape::NodeId Tape::sum_scaled(std::span<const NodeId> terms, std::span<const double> coeffs) {
    if (terms.size() != coeffs.size())
        throw PreconditionError("sum_scaled: terms/coeffs length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& v = node(terms[i]).value;
        if (v.size() != 1) throw PreconditionError("sum_scaled: all terms must be scalar nodes");
        total += coeffs[i] * v[0];
    }
    Node n;
    n.value = {total};
    std::vector<NodeId> term_ids(terms.begin(), terms.end());
    std::vector<double> cs(coeffs.begin(), coeffs.end());
    n.pull = [term_ids = std::move(term_ids), cs = std::move(cs)](Tape& tape, Node& self) {
        for (std::size_t i = 0; i < term_ids.size(); ++i) {
            tape.node(term_ids[i]).grad[0] += cs[i] * self.grad[0];
        }
    };
    return push(std::move(n));
}

const std::vector<double>& Tape::value(NodeId id) const { return node(id).value; }
const std::vector<double>& Tape::grad(NodeId id) const { return node(id).grad; }

double Tape::scalar_value(NodeId id) const {
    const auto& v = node(id).value;
    if (v.size() != 1) throw UsageError("scalar_value: node is not scalar");
    return v[0];
}

void Tape::backward(NodeId root) {
    if (nodes_.empty()) throw UsageError("backward: no forward pass has been recorded");
    if (root < 0 || root >= static_cast<NodeId>(nodes_.size()))
        throw UsageError("backward: invalid root node");
    if (node(root).value.size() != 1) throw UsageError("backward: root must be a scalar node");

    node(root).grad[0] = 1.0;
    for (NodeId id = root; id >= 0; --id) {
        auto& n = node(id);
        if (n.pull) n.pull(*this, n);
    }
}

}  // namespace cmpl
