#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cmpl/netcore.hpp"

namespace cmpl {

// Reverse-mode autodiff tape over dense double arrays. Nodes are appended in
// forward order, so reverse tape order is a valid topological order for the
// backward sweep. Parameter leaves pull their gradient into the ParamStore
// entry they were registered from; constants absorb nothing.
class Tape {
  public:
    using NodeId = int;
    static constexpr NodeId kInvalid = -1;

    NodeId constant(std::vector<double> value);
    NodeId scalar(double value);
    // Registers a parameter entry as a leaf. The value is snapshotted; the
    // backward sweep accumulates into entry.grad. The store must outlive the
    // tape.
    NodeId parameter(ParamStore& store, const std::string& entry_name);

    NodeId frames_affine(NodeId x, NodeId w, NodeId b, int frames, int in_dim, int out_dim);
    NodeId conv1d_time(NodeId x, NodeId w, NodeId b, int frames, int channels);
    NodeId relu(NodeId x);
    NodeId time_mean(NodeId x, int frames, int channels);
    // Scalar node: stable softmax + cross-entropy against a hard target.
    NodeId softmax_cross_entropy(NodeId logits, int target_class);
    // Scalar node: sum of coeffs[i] * scalar node terms[i].
    NodeId sum_scaled(std::span<const NodeId> terms, std::span<const double> coeffs);

    const std::vector<double>& value(NodeId id) const;
    const std::vector<double>& grad(NodeId id) const;
    double scalar_value(NodeId id) const;

    // Seeds d(root)/d(root) = 1 and sweeps the tape in reverse, accumulating
    // parameter gradients into their stores. root must be a scalar node.
    void backward(NodeId root);

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        std::vector<double> value;
        std::vector<double> grad;
        std::function<void(Tape&, Node&)> pull;  // empty for leaves
    };

    Node& node(NodeId id);
    const Node& node(NodeId id) const;
    NodeId push(Node node);

    std::vector<Node> nodes_;
};

}  // namespace cmpl
