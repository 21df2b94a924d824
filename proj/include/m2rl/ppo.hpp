#pragma once

#include <chrono>
#include <type_traits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "m2rl/binio.hpp"
#include "m2rl/config.hpp"
#include "m2rl/encoder.hpp"
#include "m2rl/engine.hpp"
#include "m2rl/error.hpp"
#include "m2rl/level_io.hpp"
#include "m2rl/nn.hpp"
#include "m2rl/policy.hpp"

namespace m2rl {

// One update's worth of transitions, step-major: index = step * n_actors + actor.
struct RolloutBuffer {
    int n_steps = 0;
    int n_actors = 0;
    Mat<float> obs;  // [n_steps*n_actors, channels*9*13]
    std::vector<int> actions;
    Vec<float> logp_old;
    Vec<float> value_old;
    Vec<float> rewards;
    std::vector<uint8_t> dones;
    std::vector<uint8_t> valids;      // executed action was valid (stats)
    std::vector<ActionMask> masks;    // per-transition validity (hard/soft-eps)
    Vec<float> advantages;
    Vec<float> returns;
    Vec<float> bootstrap;  // V(s_{T}) per actor, for the truncated tail

    int size() const { return n_steps * n_actors; }
};

// delta_t = r_t + gamma*V(s_{t+1})*(1-done) - V(s_t), accumulated with the
// (gamma*lambda) recursion, truncated at episode and rollout boundaries.
// Fills raw (unnormalized) advantages and returns = advantages + values.
inline void compute_gae(RolloutBuffer& buffer, double gamma, double lambda) {
    const int n_steps = buffer.n_steps;
    const int n_actors = buffer.n_actors;
    buffer.advantages.resize(buffer.size());
    buffer.returns.resize(buffer.size());
    for (int a = 0; a < n_actors; ++a) {
        double carry = 0.0;
        for (int t = n_steps - 1; t >= 0; --t) {
            const int idx = t * n_actors + a;
            const double nonterminal = buffer.dones[idx] ? 0.0 : 1.0;
            const double next_value =
                t == n_steps - 1 ? buffer.bootstrap[a] : buffer.value_old[idx + n_actors];
            const double delta = buffer.rewards[idx] + gamma * next_value * nonterminal -
                                 buffer.value_old[idx];
            carry = delta + gamma * lambda * nonterminal * carry;
            buffer.advantages[idx] = static_cast<float>(carry);
            buffer.returns[idx] = static_cast<float>(carry + buffer.value_old[idx]);
        }
    }
}

// Batch-wide normalization to zero mean / unit deviation (eps 1e-8).
inline void normalize_advantages(RolloutBuffer& buffer) {
    const double mean = buffer.advantages.cast<double>().mean();
    const double var =
        (buffer.advantages.cast<double>().array() - mean).square().sum() / buffer.size();
    const double scale = 1.0 / (std::sqrt(var) + 1e-8);
    buffer.advantages =
        ((buffer.advantages.cast<double>().array() - mean) * scale).cast<float>().matrix();
}

// ---------------------------------------------------------------- loss

template <typename S>
struct Minibatch {
    Mat<S> obs;
    std::vector<int> actions;
    Vec<S> logp_old;
    Vec<S> advantages;
    Vec<S> returns;
    MaskMode mode = MaskMode::None;
    std::vector<ActionMask> masks;  // used by hard / soft-epsilon modes
};

struct LossComponents {
    double total = 0;    // -clip + c1*value - c2*entropy (minimized)
    double clip = 0;     // clipped surrogate objective (maximized)
    double value = 0;    // value-function MSE
    double entropy = 0;  // mean policy entropy
};

// Eq: loss = -E[min(rho*A, clip(rho, 1-eps, 1+eps)*A)] + c1*E[(V-R)^2] - c2*E[H].
// When grads != nullptr the analytic gradient of that scalar is written there.
template <typename S>
LossComponents ppo_loss(const PolicyNet<S>& net, const Minibatch<S>& mb, double clip_range,
                        double value_coef, double entropy_coef,
                        PolicyNet<std::type_identity_t<S>>* grads,
                        ForwardCache<std::type_identity_t<S>>* scratch = nullptr) {
    ForwardCache<S> local;
    ForwardCache<S>& cache = scratch ? *scratch : local;
    forward(net, mb.obs, cache);
    const int batch = static_cast<int>(mb.obs.rows());

    Mat<S> dlogits;
    Vec<S> dvalues;
    if (grads != nullptr) {
        dlogits = Mat<S>::Zero(batch, net.cfg.actions);
        dvalues = Vec<S>::Zero(batch);
    }

    double clip_sum = 0;
    double entropy_sum = 0;
    double value_sum = 0;
    const S lo = static_cast<S>(1.0 - clip_range);
    const S hi = static_cast<S>(1.0 + clip_range);

    for (int b = 0; b < batch; ++b) {
        ActionDistribution<S> dist;
        dist.logits = cache.logits.row(b).transpose();
        dist.mode = mb.mode;
        if (mb.mode == MaskMode::Hard || mb.mode == MaskMode::SoftEpsilon)
            dist.mask = mb.masks[b];

        const Vec<S> eff = dist.effective_logits();
        const Vec<S> probs = ActionDistribution<S>::softmax(eff);
        const int action = mb.actions[b];

        const S logp_new = log_prob(dist, action);
        const S ratio = std::exp(logp_new - mb.logp_old[b]);
        const S advantage = mb.advantages[b];
        const S surr1 = ratio * advantage;
        const S surr2 = std::clamp(ratio, lo, hi) * advantage;
        clip_sum += static_cast<double>(std::min(surr1, surr2));

        S h = S(0);
        for (int i = 0; i < probs.size(); ++i)
            if (probs[i] > S(0))
                h -= probs[i] * std::log(probs[i]);
        entropy_sum += static_cast<double>(h);

        const S verr = cache.values[b] - mb.returns[b];
        value_sum += static_cast<double>(verr * verr);

        if (grads != nullptr) {
            // d(-min)/d(logp_new): the unclipped branch carries the gradient;
            // when the clipped branch is active the ratio saturated, so 0.
            const S dlogp = surr1 <= surr2 ? -(ratio * advantage) / static_cast<S>(batch) : S(0);
            Vec<S> deff = detail::log_prob_grad(probs, action) * dlogp;
            deff += detail::entropy_grad(probs) * static_cast<S>(-entropy_coef / batch);
            dlogits.row(b) = dist.backprop_mask(deff).transpose();
            dvalues[b] = static_cast<S>(value_coef * 2.0 / batch) * verr;
        }
    }

    LossComponents out;
    out.clip = clip_sum / batch;
    out.entropy = entropy_sum / batch;
    out.value = value_sum / batch;
    out.total = -out.clip + value_coef * out.value - entropy_coef * out.entropy;

    if (grads != nullptr)
        backward(net, cache, dlogits, dvalues, *grads);
    return out;
}

// ---------------------------------------------------------------- trainer

struct EpisodeStat {
    double reward = 0;
    int64_t length = 0;  // total steps, valid and invalid
    bool completed = false;
};

struct TrainRow {
    int64_t update = 0;
    int64_t global_step = 0;
    int episodes = 0;
    double ep_reward_mean = 0;  // over episodes that ended this update
    double ep_len_mean = 0;
    int64_t ep_len_max = 0;
    double completion_rate = 0;
    double entropy = 0;  // mean policy entropy over the rollout
    double loss_total = 0;
    double loss_clip = 0;
    double loss_value = 0;
    double loss_entropy = 0;
    double invalid_rate = 0;  // fraction of executed actions that were invalid
    std::string event;        // "", entropy_collapse, nonfinite_loss, masked_all_actions
};

inline std::string train_row_csv(const TrainRow& row) {
    char buf[512];
    auto fmt6 = [](double v) {
        char tmp[48];
        std::snprintf(tmp, sizeof(tmp), "%.6f", v);
        return std::string(tmp);
    };
    std::string ep_reward = row.episodes > 0 ? fmt6(row.ep_reward_mean) : "";
    std::string ep_len = row.episodes > 0 ? fmt6(row.ep_len_mean) : "";
    std::string completion = row.episodes > 0 ? fmt6(row.completion_rate) : "";
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%d,%s,%s,%lld,%s,%s,%s,%s,%s,%s,%s,%s",
                  static_cast<long long>(row.update), static_cast<long long>(row.global_step),
                  row.episodes, ep_reward.c_str(), ep_len.c_str(),
                  static_cast<long long>(row.ep_len_max), completion.c_str(),
                  fmt6(row.entropy).c_str(), fmt6(row.loss_total).c_str(),
                  fmt6(row.loss_clip).c_str(), fmt6(row.loss_value).c_str(),
                  fmt6(row.loss_entropy).c_str(), fmt6(row.invalid_rate).c_str(),
                  row.event.c_str());
    return buf;
}

constexpr const char* kTrainLogHeader =
    "update,global_step,episodes,ep_reward_mean,ep_len_mean,ep_len_max,completion_rate,"
    "entropy,loss_total,loss_clip,loss_value,loss_entropy,invalid_action_rate,event";

// Thresholds for flagging the degenerate "same bad action" loop in the log.
constexpr double kCollapseEntropy = 0.1;
constexpr double kCollapseInvalidRate = 0.5;

constexpr uint32_t kTrainerMagic = 0x4d325452u;  // "M2TR"
constexpr uint32_t kTrainerVersion = 1;

class Trainer {
public:
    Trainer(PpoConfig cfg, std::map<int, LevelSpec> pack)
        : cfg_(std::move(cfg)), pack_(std::move(pack)) {
        cfg_.validate();
        for (int id : cfg_.train_levels)
            if (!pack_.count(id))
                throw ValidationError("train level " + std::to_string(id) + " not in level pack");

        NetConfig net_cfg;
        net_cfg.in_channels = observation_channels(cfg_.mask_mode == MaskMode::Soft);
        net_ = init_net<float>(net_cfg, cfg_.seed);
        adam_ = AdamState<float>::zeros(net_cfg);
        trainer_rng_ = Rng(derive_seed(cfg_.seed, 0x7472u));

        actors_.resize(cfg_.n_actors);
        for (int a = 0; a < cfg_.n_actors; ++a) {
            actors_[a].rng = Rng(derive_seed(cfg_.seed, 0xac0000u + a));
            start_episode(actors_[a]);
        }
    }

    // Resumes a run from a checkpoint. The level pack defaults to the
    // levels_dir recorded in the checkpointed config.
    static Trainer resume(const std::filesystem::path& checkpoint,
                          std::optional<std::map<int, LevelSpec>> pack = std::nullopt) {
        std::ifstream in(checkpoint, std::ios::binary);
        if (!in)
            throw ValidationError("cannot open checkpoint: " + checkpoint.string());
        if (binio::read_pod<uint32_t>(in) != kTrainerMagic)
            throw ValidationError("not a trainer checkpoint: " + checkpoint.string());
        if (binio::read_pod<uint32_t>(in) != kTrainerVersion)
            throw ValidationError("unsupported trainer checkpoint version");
        const PpoConfig cfg = parse_ppo_config(binio::read_string(in));
        Trainer trainer(cfg, pack ? std::move(*pack) : load_level_pack(cfg.levels_dir));
        trainer.restore_state(in);
        return trainer;
    }

    const PpoConfig& config() const { return cfg_; }
    const PolicyNet<float>& net() const { return net_; }
    int64_t global_step() const { return global_step_; }
    int64_t update_index() const { return update_index_; }
    const std::vector<TrainRow>& rows() const { return rows_; }

    // Full training loop: collect -> GAE -> minibatch epochs -> Adam, with a
    // checkpoint every cfg.checkpoint_every updates and one at the end (also
    // on halting errors). The callback can stop the run early.
    void train(const std::function<bool(const TrainRow&)>& callback = {}) {
        std::filesystem::create_directories(cfg_.out_dir);
        open_log();
        while (global_step_ < cfg_.total_steps) {
            RolloutBuffer buffer;
            TrainRow row;
            try {
                buffer = collect_rollouts();
            } catch (const MaskedAllActionsError&) {
                row.update = update_index_ + 1;
                row.global_step = global_step_;
                row.event = "masked_all_actions";
                emit(row);
                save_checkpoint(checkpoint_path("final"));
                throw;
            }
            try {
                row = train_update(buffer);
            } catch (const NonFiniteError&) {
                row.update = update_index_;
                row.global_step = global_step_;
                row.event = "nonfinite_loss";
                emit(row);
                save_checkpoint(checkpoint_path("final"));
                throw;
            }
            emit(row);
            if (cfg_.checkpoint_every > 0 && update_index_ % cfg_.checkpoint_every == 0)
                save_checkpoint(checkpoint_path(std::to_string(update_index_)));
            if (callback && !callback(row))
                break;
        }
        save_checkpoint(checkpoint_path("final"));
    }

    // One rollout of n_steps per actor against the current parameter snapshot.
    RolloutBuffer collect_rollouts() {
        const bool soft = cfg_.mask_mode == MaskMode::Soft;
        const bool store_masks =
            cfg_.mask_mode == MaskMode::Hard || cfg_.mask_mode == MaskMode::SoftEpsilon;
        const int channels = observation_channels(soft);
        const int obs_dim = channels * kActionCount;

        RolloutBuffer buffer;
        buffer.n_steps = cfg_.n_steps;
        buffer.n_actors = cfg_.n_actors;
        buffer.obs.resize(buffer.size(), obs_dim);
        buffer.actions.resize(buffer.size());
        buffer.logp_old.resize(buffer.size());
        buffer.value_old.resize(buffer.size());
        buffer.rewards.resize(buffer.size());
        buffer.dones.resize(buffer.size());
        buffer.valids.resize(buffer.size());
        buffer.masks.resize(store_masks ? buffer.size() : 0);

        entropy_accum_ = 0;
        Mat<float> step_obs(cfg_.n_actors, obs_dim);
        ForwardCache<float> cache;

        for (int t = 0; t < cfg_.n_steps; ++t) {
            for (int a = 0; a < cfg_.n_actors; ++a) {
                const Observation obs = encode(actors_[a].board, actors_[a].perm, soft);
                std::copy(obs.data.begin(), obs.data.end(), step_obs.row(a).data());
            }
            forward(net_, step_obs, cache);

            for (int a = 0; a < cfg_.n_actors; ++a) {
                ActorState& actor = actors_[a];
                const int idx = t * cfg_.n_actors + a;

                ActionDistribution<float> dist;
                dist.logits = cache.logits.row(a).transpose();
                dist.mode = cfg_.mask_mode;
                if (store_masks) {
                    dist.mask = valid_actions(actor.board);
                    buffer.masks[idx] = dist.mask;
                }

                int action;
                try {
                    action = sample_gumbel(dist, actor.rng);
                } catch (const MaskedAllActionsError&) {
                    std::ostringstream dump;
                    dump << "hard action mask eliminated every action\n"
                         << "level=" << actor.board.level_id << " update=" << (update_index_ + 1)
                         << " global_step=" << global_step_ + idx << "\n"
                         << render_board(actor.board);
                    throw MaskedAllActionsError(dump.str());
                }

                entropy_accum_ += entropy(dist);
                const MoveResult result = apply_move(actor.board, action);
                actor.episode_reward += result.reward;

                const bool terminal = terminal_state(actor.board) != TerminalState::Running;
                const bool reset_cap =
                    cfg_.reset_after > 0 && actor.board.step_count >= cfg_.reset_after;
                const bool done = terminal || reset_cap;

                buffer.obs.row(idx) = step_obs.row(a);
                buffer.actions[idx] = action;
                buffer.logp_old[idx] = log_prob(dist, action);
                buffer.value_old[idx] = cache.values[a];
                buffer.rewards[idx] = static_cast<float>(result.reward);
                buffer.dones[idx] = done ? 1 : 0;
                buffer.valids[idx] = result.valid ? 1 : 0;

                if (done) {
                    ended_episodes_.push_back({actor.episode_reward, actor.board.step_count,
                                               terminal_state(actor.board) ==
                                                   TerminalState::Completed});
                    start_episode(actor);
                }
            }
        }

        // Bootstrap values for the truncated rollout tail.
        for (int a = 0; a < cfg_.n_actors; ++a) {
            const Observation obs = encode(actors_[a].board, actors_[a].perm, soft);
            std::copy(obs.data.begin(), obs.data.end(), step_obs.row(a).data());
        }
        forward(net_, step_obs, cache);
        buffer.bootstrap = cache.values;
        return buffer;
    }

    // GAE, minibatch epochs, Adam steps; returns the log row.
    TrainRow train_update(RolloutBuffer& buffer) {
        compute_gae(buffer, cfg_.discount, cfg_.gae_lambda);
        normalize_advantages(buffer);

        const int batch = buffer.size();
        const int mb_size = batch / cfg_.n_minibatches;
        std::vector<int> order(batch);
        std::iota(order.begin(), order.end(), 0);

        LossComponents mean{};
        PolicyNet<float> grads = PolicyNet<float>::zeros(net_.cfg);
        ForwardCache<float> scratch;
        Minibatch<float> mb;
        mb.mode = cfg_.mask_mode;
        const bool store_masks = !buffer.masks.empty();
        mb.obs.resize(mb_size, buffer.obs.cols());
        mb.actions.resize(mb_size);
        mb.logp_old.resize(mb_size);
        mb.advantages.resize(mb_size);
        mb.returns.resize(mb_size);
        mb.masks.resize(store_masks ? mb_size : 0);

        AdamConfig adam_cfg;
        adam_cfg.lr = cfg_.learning_rate;

        int minibatches_done = 0;
        for (int epoch = 0; epoch < cfg_.epochs_per_update; ++epoch) {
            // Fisher-Yates with the trainer stream, then contiguous slices:
            // every transition appears in exactly one minibatch per epoch.
            for (int i = batch - 1; i > 0; --i)
                std::swap(order[i], order[trainer_rng_.bounded(static_cast<uint64_t>(i) + 1)]);
            for (int m = 0; m < cfg_.n_minibatches; ++m) {
                for (int j = 0; j < mb_size; ++j) {
                    const int src = order[m * mb_size + j];
                    mb.obs.row(j) = buffer.obs.row(src);
                    mb.actions[j] = buffer.actions[src];
                    mb.logp_old[j] = buffer.logp_old[src];
                    mb.advantages[j] = buffer.advantages[src];
                    mb.returns[j] = buffer.returns[src];
                    if (store_masks)
                        mb.masks[j] = buffer.masks[src];
                }
                const LossComponents loss = ppo_loss(net_, mb, cfg_.clip_range, cfg_.value_coef,
                                                     cfg_.entropy_coef, &grads, &scratch);
                if (!std::isfinite(loss.total))
                    throw NonFiniteError("non-finite loss at update " +
                                         std::to_string(update_index_ + 1));
                adam_step(net_, adam_, grads, adam_cfg);
                mean.total += loss.total;
                mean.clip += loss.clip;
                mean.value += loss.value;
                mean.entropy += loss.entropy;
                ++minibatches_done;
            }
        }

        global_step_ += batch;
        ++update_index_;

        TrainRow row;
        row.update = update_index_;
        row.global_step = global_step_;
        row.episodes = static_cast<int>(ended_episodes_.size());
        for (const EpisodeStat& ep : ended_episodes_) {
            row.ep_reward_mean += ep.reward;
            row.ep_len_mean += static_cast<double>(ep.length);
            row.ep_len_max = std::max(row.ep_len_max, ep.length);
            row.completion_rate += ep.completed ? 1 : 0;
        }
        if (row.episodes > 0) {
            row.ep_reward_mean /= row.episodes;
            row.ep_len_mean /= row.episodes;
            row.completion_rate /= row.episodes;
        }
        ended_episodes_.clear();

        row.entropy = entropy_accum_ / batch;
        row.loss_total = mean.total / minibatches_done;
        row.loss_clip = mean.clip / minibatches_done;
        row.loss_value = mean.value / minibatches_done;
        row.loss_entropy = mean.entropy / minibatches_done;
        int invalid = 0;
        for (uint8_t v : buffer.valids)
            invalid += v == 0;
        row.invalid_rate = static_cast<double>(invalid) / batch;
        if (row.entropy < kCollapseEntropy && row.invalid_rate > kCollapseInvalidRate)
            row.event = "entropy_collapse";
        return row;
    }

    void save_checkpoint(const std::filesystem::path& path) const {
        std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw ValidationError("cannot write checkpoint: " + path.string());
        binio::write_pod<uint32_t>(out, kTrainerMagic);
        binio::write_pod<uint32_t>(out, kTrainerVersion);
        binio::write_string(out, serialize_ppo_config(cfg_));
        binio::write_pod<int64_t>(out, global_step_);
        binio::write_pod<int64_t>(out, update_index_);
        for (uint64_t word : trainer_rng_.save())
            binio::write_pod<uint64_t>(out, word);
        binio::write_pod<int32_t>(out, cfg_.n_actors);
        for (const ActorState& actor : actors_) {
            for (uint64_t word : actor.rng.save())
                binio::write_pod<uint64_t>(out, word);
            for (int i = 0; i < kColorCount; ++i)
                binio::write_pod<int8_t>(out, actor.perm.map[i]);
            binio::write_pod<double>(out, actor.episode_reward);
            binio::write_board(out, actor.board);
        }
        save_net(out, net_, adam_);
    }

    std::filesystem::path checkpoint_path(const std::string& tag) const {
        return std::filesystem::path(cfg_.out_dir) / ("ckpt_" + tag + ".bin");
    }

private:
    struct ActorState {
        Board board;
        Rng rng;
        ColorPermutation perm;
        double episode_reward = 0;
    };

    void start_episode(ActorState& actor) {
        const int level =
            cfg_.train_levels[actor.rng.bounded(cfg_.train_levels.size())];
        actor.board = load_level(pack_.at(level), actor.rng.next_u64());
        actor.perm = cfg_.color_shuffle ? sample_permutation(actor.rng) : ColorPermutation{};
        actor.episode_reward = 0;
    }

    void restore_state(std::istream& in) {
        global_step_ = binio::read_pod<int64_t>(in);
        update_index_ = binio::read_pod<int64_t>(in);
        std::array<uint64_t, 4> words;
        for (uint64_t& w : words)
            w = binio::read_pod<uint64_t>(in);
        trainer_rng_.restore(words);
        const int n_actors = binio::read_pod<int32_t>(in);
        if (n_actors != cfg_.n_actors)
            throw ValidationError("checkpoint actor count mismatch");
        for (ActorState& actor : actors_) {
            for (uint64_t& w : words)
                w = binio::read_pod<uint64_t>(in);
            actor.rng.restore(words);
            for (int i = 0; i < kColorCount; ++i)
                actor.perm.map[i] = binio::read_pod<int8_t>(in);
            actor.episode_reward = binio::read_pod<double>(in);
            actor.board = binio::read_board(in);
        }
        load_net(in, net_, adam_);
    }

    void open_log() {
        const auto path = std::filesystem::path(cfg_.out_dir) / "trainlog.csv";
        const bool fresh = !std::filesystem::exists(path);
        log_.open(path, std::ios::app);
        if (!log_)
            throw ValidationError("cannot open train log: " + path.string());
        if (fresh)
            log_ << kTrainLogHeader << "\n";
    }

    void emit(const TrainRow& row) {
        rows_.push_back(row);
        if (log_.is_open()) {
            log_ << train_row_csv(row) << "\n";
            log_.flush();
        }
    }

    PpoConfig cfg_;
    std::map<int, LevelSpec> pack_;
    PolicyNet<float> net_;
    AdamState<float> adam_;
    Rng trainer_rng_;
    std::vector<ActorState> actors_;
    std::vector<EpisodeStat> ended_episodes_;
    double entropy_accum_ = 0;
    int64_t global_step_ = 0;
    int64_t update_index_ = 0;
    std::vector<TrainRow> rows_;
    std::ofstream log_;
};

// Reads the config snapshot and network out of a trainer checkpoint,
// skipping the trainer/actor state (evaluation needs only the policy).
inline std::pair<PpoConfig, PolicyNet<float>> load_checkpoint_net(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open checkpoint: " + path.string());
    if (binio::read_pod<uint32_t>(in) != kTrainerMagic)
        throw ValidationError("not a trainer checkpoint: " + path.string());
    if (binio::read_pod<uint32_t>(in) != kTrainerVersion)
        throw ValidationError("unsupported trainer checkpoint version");
    const PpoConfig cfg = parse_ppo_config(binio::read_string(in));
    binio::read_pod<int64_t>(in);  // global_step
    binio::read_pod<int64_t>(in);  // update_index
    for (int i = 0; i < 4; ++i)
        binio::read_pod<uint64_t>(in);  // trainer rng
    const int n_actors = binio::read_pod<int32_t>(in);
    for (int a = 0; a < n_actors; ++a) {
        for (int i = 0; i < 4; ++i)
            binio::read_pod<uint64_t>(in);  // actor rng
        for (int i = 0; i < kColorCount; ++i)
            binio::read_pod<int8_t>(in);  // permutation
        binio::read_pod<double>(in);      // episode reward
        binio::read_board(in);
    }
    PolicyNet<float> net;
    AdamState<float> adam;
    load_net(in, net, adam);
    return {cfg, std::move(net)};
}

}  // namespace m2rl
