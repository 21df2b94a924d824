#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "m2rl/engine.hpp"
#include "m2rl/error.hpp"
#include "m2rl/nn.hpp"
#include "m2rl/rng.hpp"

namespace m2rl {

enum class MaskMode { None, Hard, Soft, SoftEpsilon };

inline const char* mask_mode_name(MaskMode mode) {
    switch (mode) {
        case MaskMode::None: return "none";
        case MaskMode::Hard: return "hard";
        case MaskMode::Soft: return "soft";
        case MaskMode::SoftEpsilon: return "soft-epsilon";
    }
    return "?";
}

// Probability floor of the soft-epsilon mask variant.
constexpr double kMaskEpsilon = 1e-8;

// Categorical distribution over the action space, with the mask baked into
// "effective" logits:
//   none / soft     : effective = raw (the soft mask lives in the observation)
//   hard            : effective = raw + (0 | -inf)
//   soft-epsilon    : effective = log(softmax(raw) * mask + eps)
// Sampling, log-probs and entropy all read the effective logits, so training
// and acting stay consistent for every mode.
template <typename S>
struct ActionDistribution {
    Vec<S> logits;  // raw network outputs
    MaskMode mode = MaskMode::None;
    ActionMask mask;  // meaningful for hard / soft-epsilon

    int size() const { return static_cast<int>(logits.size()); }

    bool degenerate_mask() const {
        return (mode == MaskMode::Hard || mode == MaskMode::SoftEpsilon) && mask.none();
    }

    Vec<S> effective_logits() const {
        switch (mode) {
            case MaskMode::None:
            case MaskMode::Soft: return logits;
            case MaskMode::Hard: {
                Vec<S> eff = logits;
                for (int i = 0; i < size(); ++i)
                    if (!mask.test(i))
                        eff[i] = -std::numeric_limits<S>::infinity();
                return eff;
            }
            case MaskMode::SoftEpsilon: {
                const Vec<S> p = softmax(logits);
                Vec<S> eff(size());
                for (int i = 0; i < size(); ++i)
                    eff[i] = std::log((mask.test(i) ? p[i] : S(0)) + static_cast<S>(kMaskEpsilon));
                return eff;
            }
        }
        return logits;
    }

    // d(loss)/d(raw logits) from d(loss)/d(effective logits).
    Vec<S> backprop_mask(const Vec<S>& deff) const {
        switch (mode) {
            case MaskMode::None:
            case MaskMode::Soft: return deff;
            case MaskMode::Hard: {
                Vec<S> draw = deff;
                for (int i = 0; i < size(); ++i)
                    if (!mask.test(i))
                        draw[i] = S(0);
                return draw;
            }
            case MaskMode::SoftEpsilon: {
                // eff_i = log(q_i + eps), q_i = mask_i * softmax(raw)_i.
                const Vec<S> p = softmax(logits);
                Vec<S> w(size());
                S weighted = S(0);
                for (int i = 0; i < size(); ++i) {
                    const S q = mask.test(i) ? p[i] : S(0);
                    w[i] = deff[i] * q / (q + static_cast<S>(kMaskEpsilon));
                    weighted += w[i];
                }
                Vec<S> draw(size());
                for (int i = 0; i < size(); ++i)
                    draw[i] = w[i] - p[i] * weighted;
                return draw;
            }
        }
        return deff;
    }

    static Vec<S> softmax(const Vec<S>& z) {
        S zmax = -std::numeric_limits<S>::infinity();
        for (int i = 0; i < z.size(); ++i)
            zmax = std::max(zmax, z[i]);
        Vec<S> p(z.size());
        if (!(zmax > -std::numeric_limits<S>::infinity())) {
            p.setZero();
            return p;  // fully masked; callers check degenerate_mask()
        }
        S total = S(0);
        for (int i = 0; i < z.size(); ++i) {
            p[i] = std::exp(z[i] - zmax);
            total += p[i];
        }
        return p / total;
    }
};

// Hard mask as a logits transform: valid entries keep their logit, invalid
// ones go to -inf. A mask with no valid action is reported "degenerate" so
// callers can surface it instead of sampling garbage.
template <typename S>
ActionDistribution<S> apply_hard_mask(const Vec<S>& logits, const ActionMask& mask,
                                      bool* degenerate = nullptr) {
    ActionDistribution<S> dist;
    dist.logits = logits;
    dist.mode = MaskMode::Hard;
    dist.mask = mask;
    if (degenerate != nullptr)
        *degenerate = mask.none();
    return dist;
}

// Gumbel-max sampling: argmax_i(effective_i + g_i), g = -log(-log(u)).
// The marginal equals softmax(effective logits). When every effective logit
// is -inf there is nothing to sample and MaskedAllActionsError is raised.
template <typename S>
int sample_gumbel(const ActionDistribution<S>& dist, Rng& rng) {
    const Vec<S> eff = dist.effective_logits();
    int best = -1;
    S best_score = -std::numeric_limits<S>::infinity();
    for (int i = 0; i < eff.size(); ++i) {
        const S noise = static_cast<S>(-std::log(-std::log(rng.uniform01())));
        if (std::isinf(eff[i]) && eff[i] < S(0))
            continue;
        const S score = eff[i] + noise;
        if (score > best_score || best < 0) {
            best_score = score;
            best = i;
        }
    }
    if (best < 0)
        throw MaskedAllActionsError(
            "all actions masked: the effective logits vector is entirely -inf");
    return best;
}

// log softmax(effective)[action], max-subtraction stabilized.
template <typename S>
S log_prob(const ActionDistribution<S>& dist, int action) {
    const Vec<S> eff = dist.effective_logits();
    S zmax = -std::numeric_limits<S>::infinity();
    for (int i = 0; i < eff.size(); ++i)
        zmax = std::max(zmax, eff[i]);
    if (std::isinf(eff[action]) && eff[action] < S(0))
        throw std::domain_error("log_prob of a masked action (probability zero)");
    S total = S(0);
    for (int i = 0; i < eff.size(); ++i)
        total += std::exp(eff[i] - zmax);
    return eff[action] - zmax - std::log(total);
}

// Shannon entropy over nonzero-probability entries.
template <typename S>
S entropy(const ActionDistribution<S>& dist) {
    const Vec<S> p = ActionDistribution<S>::softmax(dist.effective_logits());
    S h = S(0);
    for (int i = 0; i < p.size(); ++i)
        if (p[i] > S(0))
            h -= p[i] * std::log(p[i]);
    return h;
}

namespace detail {

// d log p(a) / d effective_i  =  [i == a] - p_i
template <typename S>
Vec<S> log_prob_grad(const Vec<S>& probs, int action) {
    Vec<S> g = -probs;
    g[action] += S(1);
    return g;
}

// d H / d effective_i  =  -p_i (log p_i + H)
template <typename S>
Vec<S> entropy_grad(const Vec<S>& probs) {
    S h = S(0);
    for (int i = 0; i < probs.size(); ++i)
        if (probs[i] > S(0))
            h -= probs[i] * std::log(probs[i]);
    Vec<S> g(probs.size());
    for (int i = 0; i < probs.size(); ++i)
        g[i] = probs[i] > S(0) ? -probs[i] * (std::log(probs[i]) + h) : S(0);
    return g;
}

}  // namespace detail

}  // namespace m2rl
