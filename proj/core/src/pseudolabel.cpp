#include "cmpl/pseudolabel.hpp"

#include <cmath>

#include "cmpl/errors.hpp"

namespace cmpl {

namespace {

PseudoLabelDecision make_decision(const std::vector<double>& q, DecisionSource source, double tau) {
    PseudoLabelDecision d;
    d.source = source;
    int best = 0;
    for (std::size_t i = 1; i < q.size(); ++i) {
        if (q[i] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    d.target_class = best;
    d.confidence = q[static_cast<std::size_t>(best)];
    d.confident = d.confidence >= tau;
    return d;
}

}  // namespace

int Prediction::argmax() const {
    int best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

double Prediction::max() const { return probs[static_cast<std::size_t>(argmax())]; }

void Prediction::validate() const {
    if (probs.empty()) throw PreconditionError("prediction: empty probability vector");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw PreconditionError("prediction: entries must be finite and non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw PreconditionError("prediction: probabilities must sum to 1 within 1e-6");
}

std::string to_string(SchemeId scheme) {
    switch (scheme) {
        case SchemeId::Cross: return "cross";
        case SchemeId::SelfFirst: return "self_first";
        case SchemeId::OppositeFirst: return "opposite_first";
        case SchemeId::Maximum: return "maximum";
        case SchemeId::Average: return "average";
        case SchemeId::FixMatchSingle: return "fixmatch";
    }
    return "cross";
}

SchemeId scheme_from_string(const std::string& name) {
    if (name == "cross") return SchemeId::Cross;
    if (name == "self_first") return SchemeId::SelfFirst;
    if (name == "opposite_first") return SchemeId::OppositeFirst;
    if (name == "maximum") return SchemeId::Maximum;
    if (name == "average") return SchemeId::Average;
    if (name == "fixmatch") return SchemeId::FixMatchSingle;
    throw ConfigError("unknown pseudo-label scheme: " + name);
}

DecisionPair decide(SchemeId scheme, const Prediction& p_primary, const Prediction& p_aux,
                    double tau) {
    p_primary.validate();
    p_aux.validate();
    if (p_primary.probs.size() != p_aux.probs.size())
        throw PreconditionError("decide: prediction lengths differ");
    if (!(tau > 0.0 && tau <= 1.0)) throw PreconditionError("decide: tau must lie in (0, 1]");

    const double max_f = p_primary.max();
    const double max_a = p_aux.max();

    DecisionPair pair;
    switch (scheme) {
        case SchemeId::Cross:
            pair.for_primary = make_decision(p_aux.probs, DecisionSource::Auxiliary, tau);
            pair.for_aux = make_decision(p_primary.probs, DecisionSource::Primary, tau);
            break;
        case SchemeId::SelfFirst:
            pair.for_primary = max_f >= tau
                                   ? make_decision(p_primary.probs, DecisionSource::Primary, tau)
                                   : make_decision(p_aux.probs, DecisionSource::Auxiliary, tau);
            pair.for_aux = max_a >= tau
                               ? make_decision(p_aux.probs, DecisionSource::Auxiliary, tau)
                               : make_decision(p_primary.probs, DecisionSource::Primary, tau);
            break;
        case SchemeId::OppositeFirst:
            pair.for_primary = max_a >= tau
                                   ? make_decision(p_aux.probs, DecisionSource::Auxiliary, tau)
                                   : make_decision(p_primary.probs, DecisionSource::Primary, tau);
            pair.for_aux = max_f >= tau
                               ? make_decision(p_primary.probs, DecisionSource::Primary, tau)
                               : make_decision(p_aux.probs, DecisionSource::Auxiliary, tau);
            break;
        case SchemeId::Maximum: {
            // The >= comparison deliberately favours the primary on ties.
            const auto& q = max_f >= max_a ? p_primary.probs : p_aux.probs;
            const auto source = max_f >= max_a ? DecisionSource::Primary : DecisionSource::Auxiliary;
            pair.for_primary = make_decision(q, source, tau);
            pair.for_aux = pair.for_primary;
            break;
        }
        case SchemeId::Average: {
            std::vector<double> fused(p_primary.probs.size());
            for (std::size_t i = 0; i < fused.size(); ++i) {
                fused[i] = 0.5 * (p_primary.probs[i] + p_aux.probs[i]);
            }
            pair.for_primary = make_decision(fused, DecisionSource::Fused, tau);
            pair.for_aux = pair.for_primary;
            break;
        }
        case SchemeId::FixMatchSingle:
            pair.for_primary = make_decision(p_primary.probs, DecisionSource::Primary, tau);
            pair.for_aux = PseudoLabelDecision{};  // single-model mode: nothing supervises A
            break;
    }
    return pair;
}

std::vector<DecisionPair> batch_decide(SchemeId scheme, std::span<const Prediction> preds_primary,
                                       std::span<const Prediction> preds_aux, double tau) {
    if (preds_primary.size() != preds_aux.size())
        throw PreconditionError("batch_decide: batch lengths differ");
    std::vector<DecisionPair> decisions;
    decisions.reserve(preds_primary.size());
    for (std::size_t i = 0; i < preds_primary.size(); ++i) {
        decisions.push_back(decide(scheme, preds_primary[i], preds_aux[i], tau));
    }
    return decisions;
}

}  // namespace cmpl
