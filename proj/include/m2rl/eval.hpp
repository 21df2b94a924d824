#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "m2rl/config.hpp"
#include "m2rl/encoder.hpp"
#include "m2rl/engine.hpp"
#include "m2rl/nn.hpp"
#include "m2rl/policy.hpp"

namespace m2rl {

// Post-training evaluation. Episodes ignore the in-game move limit (the
// board is given an effectively unlimited budget and a 2000-total-step cap);
// the limit re-enters only when scoring: an episode counts as completed iff
// the goals were cleared within move_limit valid moves. Colors are shuffled
// every episode regardless of how the model was trained, and no action mask
// constrains sampling.

struct LevelEval {
    int level_id = 0;
    bool seen = false;
    int episodes = 0;
    double competence = 0;      // 1 / mean(first-valid sample index)
    double completion_rate = 0; // completed within move_limit valid moves
    int completed_in_limit = 0;
    int completed_any = 0;      // goals cleared within the 2000-step cap
    int zero_valid_states = 0;  // competence states skipped (none valid)
    std::vector<int> moves_completed;  // valid moves used, completed episodes
    std::vector<int> moves_all;        // valid moves used, every episode
};

namespace detail {

// One step of the sampling-without-replacement procedure: order all actions
// by logit+Gumbel noise (equivalent to sequential renormalized draws) and
// return the 1-based position of the first valid action.
template <typename S>
int first_valid_sample_index(const ActionDistribution<S>& dist, const ActionMask& valid, Rng& rng,
                             int* chosen_action) {
    const Vec<S> eff = dist.effective_logits();
    const int n = static_cast<int>(eff.size());
    std::vector<std::pair<S, int>> scored(n);
    for (int i = 0; i < n; ++i) {
        const S noise = static_cast<S>(-std::log(-std::log(rng.uniform01())));
        scored[i] = {eff[i] + noise, i};
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int pos = 0; pos < n; ++pos) {
        if (valid.test(scored[pos].second)) {
            if (chosen_action != nullptr)
                *chosen_action = scored[pos].second;
            return pos + 1;
        }
    }
    return 0;  // no valid action at all
}

inline Vec<float> policy_logits(const PolicyNet<float>* net, const Board& board,
                                const ColorPermutation& perm, ForwardCache<float>& cache,
                                Mat<float>& row) {
    if (net == nullptr)
        return Vec<float>::Zero(kActionCount);  // uniform random baseline
    const bool soft = net->cfg.in_channels == kSoftMaskChannels;
    const Observation obs = encode(board, perm, soft);
    row.resize(1, static_cast<Eigen::Index>(obs.data.size()));
    std::copy(obs.data.begin(), obs.data.end(), row.data());
    forward(*net, row, cache);
    return cache.logits.row(0).transpose();
}

}  // namespace detail

// Reciprocal average 1-based index of the first valid action when sampling
// without replacement from the (unmasked) policy. net == nullptr evaluates
// the uniform random baseline.
inline double competence(const PolicyNet<float>* net, const LevelSpec& spec, int episodes,
                         uint64_t seed, int* zero_valid_states = nullptr) {
    ForwardCache<float> cache;
    Mat<float> row;
    int64_t index_sum = 0;
    int64_t steps = 0;
    int skipped = 0;
    for (int ep = 0; ep < episodes; ++ep) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(spec.id) * 2 + 0, ep));
        Board board = load_level(spec, rng.next_u64());
        board.moves_left = EvalConfig::kMaxTotalSteps + 1;  // limit applied at scoring only
        ColorPermutation perm = sample_permutation(rng);
        while (terminal_state(board) == TerminalState::Running &&
               board.step_count < EvalConfig::kMaxTotalSteps) {
            const ActionMask valid = valid_actions(board);
            if (valid.none()) {
                ++skipped;
                break;
            }
            ActionDistribution<float> dist;
            dist.logits = detail::policy_logits(net, board, perm, cache, row);
            int action = -1;
            index_sum += detail::first_valid_sample_index(dist, valid, rng, &action);
            ++steps;
            apply_move(board, action);
        }
    }
    if (zero_valid_states != nullptr)
        *zero_valid_states = skipped;
    if (steps == 0)
        return 1.0;
    return static_cast<double>(steps) / static_cast<double>(index_sum);
}

// Completion episodes: free Gumbel-max sampling (invalid clicks allowed and
// penalized by the engine), hard stop after 2000 total steps.
struct CompletionResult {
    int completed_in_limit = 0;
    int completed_any = 0;
    std::vector<int> moves_completed;
    std::vector<int> moves_all;
};

inline CompletionResult completion_episodes(const PolicyNet<float>* net, const LevelSpec& spec,
                                            int episodes, uint64_t seed) {
    ForwardCache<float> cache;
    Mat<float> row;
    CompletionResult result;
    for (int ep = 0; ep < episodes; ++ep) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(spec.id) * 2 + 1, ep));
        Board board = load_level(spec, rng.next_u64());
        board.moves_left = EvalConfig::kMaxTotalSteps + 1;
        ColorPermutation perm = sample_permutation(rng);
        int valid_moves = 0;
        while (terminal_state(board) == TerminalState::Running &&
               board.step_count < EvalConfig::kMaxTotalSteps) {
            ActionDistribution<float> dist;
            dist.logits = detail::policy_logits(net, board, perm, cache, row);
            const int action = sample_gumbel(dist, rng);
            const MoveResult move = apply_move(board, action);
            if (move.valid)
                ++valid_moves;
        }
        result.moves_all.push_back(valid_moves);
        if (terminal_state(board) == TerminalState::Completed) {
            ++result.completed_any;
            result.moves_completed.push_back(valid_moves);
            if (valid_moves <= spec.move_limit)
                ++result.completed_in_limit;
        }
    }
    return result;
}

inline LevelEval evaluate_level(const PolicyNet<float>* net, const LevelSpec& spec,
                                const EvalConfig& cfg, bool seen) {
    LevelEval out;
    out.level_id = spec.id;
    out.seen = seen;
    out.episodes = cfg.episodes_per_level;
    out.competence =
        competence(net, spec, cfg.episodes_per_level, cfg.seed, &out.zero_valid_states);
    CompletionResult completion =
        completion_episodes(net, spec, cfg.episodes_per_level, cfg.seed);
    out.completed_in_limit = completion.completed_in_limit;
    out.completed_any = completion.completed_any;
    out.completion_rate =
        static_cast<double>(completion.completed_in_limit) / cfg.episodes_per_level;
    out.moves_completed = std::move(completion.moves_completed);
    out.moves_all = std::move(completion.moves_all);
    return out;
}

// Re-scores recorded trajectories under a different move limit; used to
// check monotonicity and for what-if curves. Trajectories do not depend on
// the limit, so no re-simulation is needed.
inline double completion_rate_at_limit(const LevelEval& eval, int move_limit) {
    int completed = 0;
    for (int moves : eval.moves_completed)
        completed += moves <= move_limit;
    return static_cast<double>(completed) / eval.episodes;
}

}  // namespace m2rl
