#pragma once

#include <span>
#include <string>
#include <vector>

namespace cmpl {

// Probability vector over classes from a weak-view forward pass.
struct Prediction {
    std::vector<double> probs;

    int argmax() const;
    double max() const;
    void validate() const;  // throws PreconditionError
};

enum class DecisionSource { Primary, Auxiliary, Fused };

// Outcome of a fusion scheme for one network on one sample. target_class is
// meaningful only when confident. Decisions are computed on detached
// predictions; no gradient ever flows through them.
struct PseudoLabelDecision {
    bool confident = false;
    int target_class = 0;
    DecisionSource source = DecisionSource::Primary;
    double confidence = 0.0;
};

struct DecisionPair {
    PseudoLabelDecision for_primary;
    PseudoLabelDecision for_aux;
};

enum class SchemeId { Cross, SelfFirst, OppositeFirst, Maximum, Average, FixMatchSingle };

std::string to_string(SchemeId scheme);
SchemeId scheme_from_string(const std::string& name);

// Applies one fusion scheme to a pair of weak-view predictions. Under
// FixMatchSingle the auxiliary decision is always unconfident (there is no
// second network in that mode).
DecisionPair decide(SchemeId scheme, const Prediction& p_primary, const Prediction& p_aux,
                    double tau);

std::vector<DecisionPair> batch_decide(SchemeId scheme, std::span<const Prediction> preds_primary,
                                       std::span<const Prediction> preds_aux, double tau);

}  // namespace cmpl
