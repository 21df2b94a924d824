#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "m2rl/ppo.hpp"

namespace m2rl {
namespace {

namespace fs = std::filesystem;

RolloutBuffer manual_buffer(int n_steps, int n_actors) {
    RolloutBuffer buffer;
    buffer.n_steps = n_steps;
    buffer.n_actors = n_actors;
    const int n = n_steps * n_actors;
    buffer.rewards = Vec<float>::Zero(n);
    buffer.value_old = Vec<float>::Zero(n);
    buffer.dones.assign(n, 0);
    buffer.bootstrap = Vec<float>::Zero(n_actors);
    return buffer;
}

TEST(Gae, LambdaZeroIsOneStepTd) {
    RolloutBuffer buffer = manual_buffer(5, 1);
    Rng rng(1);
    for (int t = 0; t < 5; ++t) {
        buffer.rewards[t] = static_cast<float>(rng.gaussian());
        buffer.value_old[t] = static_cast<float>(rng.gaussian());
    }
    buffer.dones[2] = 1;
    buffer.bootstrap[0] = 0.7f;
    compute_gae(buffer, 0.9, 0.0);
    for (int t = 0; t < 5; ++t) {
        const double next_v = t == 4 ? buffer.bootstrap[0] : buffer.value_old[t + 1];
        const double nonterminal = buffer.dones[t] ? 0.0 : 1.0;
        const double delta = buffer.rewards[t] + 0.9 * next_v * nonterminal - buffer.value_old[t];
        EXPECT_NEAR(buffer.advantages[t], delta, 1e-6);
        EXPECT_NEAR(buffer.returns[t], delta + buffer.value_old[t], 1e-6);
    }
}

TEST(Gae, HandComputedThreeStepEpisode) {
    // r = [1, 0.5, 2], V = [0.3, 0.1, 0.2], episode ends at t=2,
    // gamma = 0.9, lambda = 0.8:
    //   d2 = 2 - 0.2                = 1.8
    //   d1 = 0.5 + 0.9*0.2 - 0.1    = 0.58
    //   d0 = 1 + 0.9*0.1 - 0.3      = 0.79
    //   A2 = 1.8
    //   A1 = 0.58 + 0.72*1.8        = 1.876
    //   A0 = 0.79 + 0.72*1.876      = 2.14072
    RolloutBuffer buffer = manual_buffer(3, 1);
    buffer.rewards << 1.0f, 0.5f, 2.0f;
    buffer.value_old << 0.3f, 0.1f, 0.2f;
    buffer.dones = {0, 0, 1};
    buffer.bootstrap[0] = 123.0f;  // masked by the terminal flag
    compute_gae(buffer, 0.9, 0.8);
    EXPECT_NEAR(buffer.advantages[0], 2.14072, 1e-5);
    EXPECT_NEAR(buffer.advantages[1], 1.876, 1e-5);
    EXPECT_NEAR(buffer.advantages[2], 1.8, 1e-5);
    EXPECT_NEAR(buffer.returns[0], 2.44072, 1e-5);
    EXPECT_NEAR(buffer.returns[1], 1.976, 1e-5);
    EXPECT_NEAR(buffer.returns[2], 2.0, 1e-5);
}

TEST(Gae, ZeroRewardsZeroValuesGiveZeroAdvantages) {
    RolloutBuffer buffer = manual_buffer(6, 2);
    compute_gae(buffer, 0.99, 0.95);
    EXPECT_EQ(buffer.advantages.cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Gae, NormalizationCentersAndScales) {
    RolloutBuffer buffer = manual_buffer(64, 2);
    Rng rng(2);
    for (int i = 0; i < buffer.size(); ++i) {
        buffer.rewards[i] = static_cast<float>(rng.gaussian() * 2 + 0.5);
        buffer.value_old[i] = static_cast<float>(rng.gaussian());
    }
    compute_gae(buffer, 0.99, 0.95);
    normalize_advantages(buffer);
    const double mean = buffer.advantages.cast<double>().mean();
    const double var = (buffer.advantages.cast<double>().array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-4);
}

TEST(Shuffle, OrderIsAPermutation) {
    Rng rng(3);
    std::vector<int> order(257);
    std::iota(order.begin(), order.end(), 0);
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
        std::swap(order[i], order[rng.bounded(static_cast<uint64_t>(i) + 1)]);
    std::vector<bool> hit(order.size(), false);
    for (int idx : order) {
        ASSERT_GE(idx, 0);
        ASSERT_LT(idx, static_cast<int>(order.size()));
        ASSERT_FALSE(hit[idx]);
        hit[idx] = true;
    }
}

// ---------------------------------------------------------------- loss

const NetConfig kMini{.in_channels = 2,
                      .height = 4,
                      .width = 5,
                      .conv_channels = 3,
                      .fc_units = 4,
                      .actions = 6};

Mat<double> random_obs(int batch, const NetConfig& cfg, Rng& rng) {
    Mat<double> obs(batch, cfg.in_channels * cfg.height * cfg.width);
    for (int i = 0; i < obs.size(); ++i)
        obs.data()[i] = rng.uniform01() < 0.35 ? 1.0 : 0.0;
    return obs;
}

PolicyNet<double> random_net(const NetConfig& cfg, uint64_t seed) {
    PolicyNet<double> net = init_net<double>(cfg, seed);
    return net;
}

TEST(PpoLoss, RatioOneMakesClipEqualMeanAdvantage) {
    PolicyNet<double> net = random_net(kMini, 5);
    Rng rng(6);
    Minibatch<double> mb;
    mb.obs = random_obs(3, kMini, rng);
    mb.actions = {0, 2, 5};
    mb.advantages.resize(3);
    mb.advantages << 0.4, -1.1, 0.7;
    mb.returns = Vec<double>::Zero(3);

    // logp_old = freshly recomputed logp => ratio is exactly 1.
    ForwardCache<double> cache;
    forward(net, mb.obs, cache);
    mb.logp_old.resize(3);
    for (int b = 0; b < 3; ++b) {
        ActionDistribution<double> dist;
        dist.logits = cache.logits.row(b).transpose();
        mb.logp_old[b] = log_prob(dist, mb.actions[b]);
    }

    const LossComponents loss = ppo_loss(net, mb, 0.2, 0.5, 0.0, nullptr);
    EXPECT_DOUBLE_EQ(loss.clip, mb.advantages.mean());
}

TEST(PpoLoss, ZeroEntropyCoefficientDropsEntropyTerm) {
    PolicyNet<double> net = random_net(kMini, 7);
    Rng rng(8);
    Minibatch<double> mb;
    mb.obs = random_obs(2, kMini, rng);
    mb.actions = {1, 3};
    mb.logp_old.resize(2);
    mb.logp_old << -1.8, -1.9;
    mb.advantages.resize(2);
    mb.advantages << 1.0, -1.0;
    mb.returns.resize(2);
    mb.returns << 0.4, 0.2;

    const LossComponents loss = ppo_loss(net, mb, 0.2, 0.5, 0.0, nullptr);
    EXPECT_EQ(loss.total, -loss.clip + 0.5 * loss.value);
    EXPECT_GT(loss.entropy, 0.0);  // still reported, just not in the sum
}

TEST(PpoLoss, ClippedRatioContributesClippedValue) {
    // rho = 1.5 with A = +1 and clip 0.2 contributes 1.2, not 1.5.
    PolicyNet<double> net = random_net(kMini, 9);
    Rng rng(10);
    Minibatch<double> mb;
    mb.obs = random_obs(2, kMini, rng);
    mb.actions = {2, 4};
    mb.advantages.resize(2);
    mb.advantages << 1.0, 1.0;
    mb.returns = Vec<double>::Zero(2);

    ForwardCache<double> cache;
    forward(net, mb.obs, cache);
    mb.logp_old.resize(2);
    for (int b = 0; b < 2; ++b) {
        ActionDistribution<double> dist;
        dist.logits = cache.logits.row(b).transpose();
        mb.logp_old[b] = log_prob(dist, mb.actions[b]) - std::log(1.5);
    }

    const LossComponents loss = ppo_loss(net, mb, 0.2, 0.5, 0.0, nullptr);
    EXPECT_NEAR(loss.clip, 1.2, 1e-9);
}

TEST(PpoLoss, ExactEqualityOfSurrogatesAtRatioOne) {
    // With rho == 1 exactly, min(rho*A, clip(rho)*A) == rho*A bit for bit, so
    // clip equals the mean advantage even with clipping enabled vs disabled.
    PolicyNet<double> net = random_net(kMini, 11);
    Rng rng(12);
    Minibatch<double> mb;
    mb.obs = random_obs(4, kMini, rng);
    mb.actions = {0, 1, 2, 3};
    mb.advantages.resize(4);
    mb.advantages << 2.0, -3.0, 0.5, 1.5;
    mb.returns = Vec<double>::Zero(4);
    ForwardCache<double> cache;
    forward(net, mb.obs, cache);
    mb.logp_old.resize(4);
    for (int b = 0; b < 4; ++b) {
        ActionDistribution<double> dist;
        dist.logits = cache.logits.row(b).transpose();
        mb.logp_old[b] = log_prob(dist, mb.actions[b]);
    }
    const LossComponents tight = ppo_loss(net, mb, 0.2, 0.5, 0.0, nullptr);
    const LossComponents loose = ppo_loss(net, mb, 1e9, 0.5, 0.0, nullptr);
    EXPECT_EQ(tight.clip, loose.clip);
}

TEST(PpoLoss, FullPipelineGradientMatchesFiniteDifferences) {
    for (MaskMode mode : {MaskMode::None, MaskMode::Hard, MaskMode::SoftEpsilon}) {
        PolicyNet<double> net = random_net(kMini, 13);
        const PolicyNet<double> behavior = random_net(kMini, 14);  // off-policy ratios
        Rng rng(15);

        Minibatch<double> mb;
        mb.obs = random_obs(2, kMini, rng);
        mb.actions = {1, 4};
        mb.advantages.resize(2);
        mb.advantages << 1.3, -0.8;
        mb.returns.resize(2);
        mb.returns << 0.9, -0.3;
        mb.mode = mode;
        if (mode != MaskMode::None) {
            ActionMask mask;
            for (int a : {1, 2, 4})
                mask.set(a);
            mb.masks = {mask, mask};
        }
        ForwardCache<double> cache;
        forward(behavior, mb.obs, cache);
        mb.logp_old.resize(2);
        for (int b = 0; b < 2; ++b) {
            ActionDistribution<double> dist;
            dist.logits = cache.logits.row(b).transpose();
            dist.mode = mode;
            if (mode != MaskMode::None)
                dist.mask = mb.masks[b];
            mb.logp_old[b] = log_prob(dist, mb.actions[b]);
        }

        PolicyNet<double> grads = PolicyNet<double>::zeros(kMini);
        ppo_loss(net, mb, 0.2, 0.5, 0.01, &grads);

        const double h = 1e-5;
        auto params = net.tensors();
        auto gs = grads.tensors();
        const auto names = PolicyNet<double>::tensor_names();
        for (int t = 0; t < PolicyNet<double>::kTensorCount; ++t) {
            Mat<double>& param = *params[t];
            for (int i = 0; i < param.size(); ++i) {
                const double saved = param.data()[i];
                param.data()[i] = saved + h;
                const double up = ppo_loss(net, mb, 0.2, 0.5, 0.01, nullptr).total;
                param.data()[i] = saved - h;
                const double down = ppo_loss(net, mb, 0.2, 0.5, 0.01, nullptr).total;
                param.data()[i] = saved;
                const double fd = (up - down) / (2 * h);
                const double analytic = gs[t]->data()[i];
                const double tol = 1e-3 * std::max(std::abs(fd), std::abs(analytic)) + 1e-7;
                ASSERT_LE(std::abs(fd - analytic), tol)
                    << mask_mode_name(mode) << " " << names[t] << "[" << i << "]";
            }
        }
    }
}

// ---------------------------------------------------------------- trainer

LevelSpec tiny_level() {
    LevelSpec spec;
    spec.id = 100;
    spec.move_limit = 8;
    spec.refill_palette = {0, 1};
    for (int r = 2; r < 7; ++r)
        for (int c = 4; c < 9; ++c) {
            spec.cells[r][c].exists = true;
            spec.cells[r][c].random_color = true;
        }
    spec.collect_goals[0] = 12;
    return spec;
}

// Checkerboard level: no two same-color pieces are ever adjacent at start,
// and the palette order guarantees the first state has zero valid actions.
LevelSpec deadlock_level() {
    LevelSpec spec;
    spec.id = 101;
    spec.move_limit = 10;
    spec.refill_palette = {0, 1};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            spec.cells[r][c].exists = true;
            Piece p;
            p.kind = PieceKind::Basic;
            p.color = static_cast<int8_t>((r + c) % 2);
            spec.cells[r][c].piece = p;
        }
    spec.collect_goals[0] = 2;
    return spec;
}

PpoConfig tiny_config(const std::string& out_dir) {
    PpoConfig cfg;
    cfg.n_steps = 8;
    cfg.n_actors = 2;
    cfg.n_minibatches = 4;
    cfg.epochs_per_update = 2;
    cfg.total_steps = 32;  // two updates
    cfg.seed = 91;
    cfg.train_levels = {100};
    cfg.checkpoint_every = 1;
    cfg.out_dir = out_dir;
    return cfg;
}

std::map<int, LevelSpec> tiny_pack() {
    std::map<int, LevelSpec> pack;
    pack.emplace(100, tiny_level());
    pack.emplace(101, deadlock_level());
    return pack;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path(testing::TempDir()) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TEST(Trainer, SingleBatchBudgetMakesExactlyOneUpdate) {
    const fs::path dir = fresh_dir("m2rl_one_update");
    PpoConfig cfg = tiny_config(dir.string());
    cfg.total_steps = cfg.n_steps * cfg.n_actors;
    Trainer trainer(cfg, tiny_pack());
    trainer.train();
    EXPECT_EQ(trainer.rows().size(), 1u);
    EXPECT_EQ(trainer.rows()[0].global_step, cfg.total_steps);
}

TEST(Trainer, InitialEntropyIsNearUniform) {
    const fs::path dir = fresh_dir("m2rl_entropy");
    PpoConfig cfg = tiny_config(dir.string());
    cfg.total_steps = cfg.batch_size();
    Trainer trainer(cfg, tiny_pack());
    trainer.train();
    EXPECT_NEAR(trainer.rows()[0].entropy, std::log(117.0), 0.05);
}

TEST(Trainer, CollectIsDeterministicPerSeed) {
    const fs::path dir_a = fresh_dir("m2rl_det_a");
    const fs::path dir_b = fresh_dir("m2rl_det_b");
    PpoConfig cfg_a = tiny_config(dir_a.string());
    PpoConfig cfg_b = tiny_config(dir_b.string());
    Trainer a(cfg_a, tiny_pack());
    Trainer b(cfg_b, tiny_pack());
    const RolloutBuffer ba = a.collect_rollouts();
    const RolloutBuffer bb = b.collect_rollouts();
    EXPECT_EQ(ba.actions, bb.actions);
    EXPECT_EQ(ba.obs, bb.obs);
    EXPECT_EQ(ba.rewards, bb.rewards);
    EXPECT_EQ(ba.dones, bb.dones);
    EXPECT_EQ(ba.logp_old, bb.logp_old);
}

TEST(Trainer, TrainLogAndCheckpointAreByteIdenticalAcrossRuns) {
    // Identical config (including out_dir) run twice, artifacts snapshotted
    // between runs.
    const fs::path dir = fresh_dir("m2rl_bytes");
    {
        Trainer first(tiny_config(dir.string()), tiny_pack());
        first.train();
    }
    const std::string log_first = file_bytes(dir / "trainlog.csv");
    const std::string ckpt_first = file_bytes(dir / "ckpt_final.bin");
    ASSERT_FALSE(log_first.empty());
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        Trainer second(tiny_config(dir.string()), tiny_pack());
        second.train();
    }
    EXPECT_EQ(file_bytes(dir / "trainlog.csv"), log_first);
    EXPECT_TRUE(file_bytes(dir / "ckpt_final.bin") == ckpt_first);
}

TEST(Trainer, ResumeReproducesTheUninterruptedTail) {
    const fs::path dir = fresh_dir("m2rl_resume");
    PpoConfig cfg = tiny_config(dir.string());
    cfg.total_steps = 4 * cfg.batch_size();

    // Reference: one uninterrupted run.
    std::vector<std::string> full_rows;
    {
        Trainer full(cfg, tiny_pack());
        full.train();
        for (const TrainRow& row : full.rows())
            full_rows.push_back(train_row_csv(row));
    }
    ASSERT_EQ(full_rows.size(), 4u);
    const std::string full_log = file_bytes(dir / "trainlog.csv");
    const std::string full_ckpt = file_bytes(dir / "ckpt_final.bin");

    // Same config into the same directory, stopped after update 2, then
    // resumed from its own checkpoint.
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        Trainer part(cfg, tiny_pack());
        int stop_after = 2;
        part.train([&](const TrainRow&) { return --stop_after > 0; });
        ASSERT_EQ(part.rows().size(), 2u);
    }
    Trainer resumed = Trainer::resume(dir / "ckpt_2.bin", tiny_pack());
    resumed.train();
    ASSERT_EQ(resumed.rows().size(), 2u);
    EXPECT_EQ(train_row_csv(resumed.rows()[0]), full_rows[2]);
    EXPECT_EQ(train_row_csv(resumed.rows()[1]), full_rows[3]);
    // The appended log and the final checkpoint match the uninterrupted run.
    EXPECT_EQ(file_bytes(dir / "trainlog.csv"), full_log);
    EXPECT_TRUE(file_bytes(dir / "ckpt_final.bin") == full_ckpt);
}

TEST(Trainer, ResetAfterCapsEpisodeLength) {
    const fs::path dir = fresh_dir("m2rl_reset");
    PpoConfig cfg = tiny_config(dir.string());
    cfg.reset_after = 10;
    cfg.n_steps = 64;
    cfg.n_minibatches = 8;
    cfg.total_steps = 2 * cfg.batch_size();
    Trainer trainer(cfg, tiny_pack());
    trainer.train();
    for (const TrainRow& row : trainer.rows()) {
        EXPECT_GT(row.episodes, 0);
        EXPECT_LE(row.ep_len_max, 10);
    }
}

TEST(Trainer, HardMaskNeverExecutesInvalidActions) {
    const fs::path dir = fresh_dir("m2rl_hard");
    PpoConfig cfg = tiny_config(dir.string());
    cfg.mask_mode = MaskMode::Hard;
    Trainer trainer(cfg, tiny_pack());
    trainer.train();
    for (const TrainRow& row : trainer.rows())
        EXPECT_EQ(row.invalid_rate, 0.0);
}

TEST(Trainer, SoftMaskUsesSixteenChannels) {
    const fs::path dir = fresh_dir("m2rl_soft");
    PpoConfig cfg = tiny_config(dir.string());
    cfg.mask_mode = MaskMode::Soft;
    Trainer trainer(cfg, tiny_pack());
    EXPECT_EQ(trainer.net().cfg.in_channels, 16);
    const RolloutBuffer buffer = trainer.collect_rollouts();
    EXPECT_EQ(buffer.obs.cols(), 16 * kActionCount);
}

TEST(Trainer, StuckPolicyFillsBufferWithIdenticalPenalties) {
    // A dead board plus no reset: every action is invalid, the state never
    // changes, and the whole rollout is one repeated -0.5 transition.
    const fs::path dir = fresh_dir("m2rl_stuck");
    PpoConfig cfg = tiny_config(dir.string());
    cfg.train_levels = {101};
    Trainer trainer(cfg, tiny_pack());
    const RolloutBuffer buffer = trainer.collect_rollouts();
    for (int i = 0; i < buffer.size(); ++i) {
        EXPECT_EQ(buffer.rewards[i], -0.5f);
        EXPECT_EQ(buffer.valids[i], 0);
        EXPECT_EQ(buffer.dones[i], 0);
    }
    for (int t = 1; t < buffer.n_steps; ++t)
        EXPECT_EQ(buffer.obs.row(t * cfg.n_actors), buffer.obs.row(0));
}

TEST(Trainer, HardMaskOnDeadBoardRaisesMaskedAllActions) {
    const fs::path dir = fresh_dir("m2rl_masked_all");
    PpoConfig cfg = tiny_config(dir.string());
    cfg.train_levels = {101};
    cfg.mask_mode = MaskMode::Hard;
    Trainer trainer(cfg, tiny_pack());
    try {
        trainer.train();
        FAIL() << "expected MaskedAllActionsError";
    } catch (const MaskedAllActionsError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("level=101"), std::string::npos);
        EXPECT_NE(msg.find("update="), std::string::npos);
    }
    // The halt still leaves a log row and a final checkpoint behind.
    EXPECT_TRUE(fs::exists(dir / "ckpt_final.bin"));
    ASSERT_FALSE(trainer.rows().empty());
    EXPECT_EQ(trainer.rows().back().event, "masked_all_actions");
}

TEST(Trainer, ConfigRoundTripsThroughText) {
    PpoConfig cfg = tiny_config("somewhere");
    cfg.mask_mode = MaskMode::SoftEpsilon;
    cfg.color_shuffle = true;
    cfg.reset_after = 100;
    const PpoConfig parsed = parse_ppo_config(serialize_ppo_config(cfg));
    EXPECT_EQ(serialize_ppo_config(parsed), serialize_ppo_config(cfg));
}

}  // namespace
}  // namespace m2rl
