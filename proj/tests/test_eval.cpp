#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "m2rl/eval.hpp"
#include "m2rl/report.hpp"

namespace m2rl {
namespace {

namespace fs = std::filesystem;

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

TEST(WithoutReplacement, UniformClosedForm) {
    // V valid of A actions under a uniform policy: E[index] = (A+1)/(V+1).
    // V=58, A=117 gives E = 2.0, competence 0.5; V=1, A=2 gives E = 1.5.
    ActionDistribution<float> uniform;
    uniform.logits = Vec<float>::Zero(kActionCount);
    ActionMask valid;
    for (int i = 0; i < 58; ++i)
        valid.set(2 * i);

    Rng rng(17);
    int64_t sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        int action = -1;
        const int index = detail::first_valid_sample_index(uniform, valid, rng, &action);
        ASSERT_TRUE(valid.test(action));
        sum += index;
    }
    const double competence_hat = static_cast<double>(n) / static_cast<double>(sum);
    EXPECT_NEAR(competence_hat, 0.5, 0.01);
}

TEST(WithoutReplacement, TwoActionEnumeration) {
    // 1 valid of 2 uniform actions: index 1 or 2 with probability 1/2 each,
    // E[index] = 1.5, competence = 2/3.
    ActionDistribution<float> uniform;
    uniform.logits = Vec<float>::Zero(2);
    ActionMask valid;
    valid.set(1);
    Rng rng(18);
    int64_t sum = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i)
        sum += detail::first_valid_sample_index(uniform, valid, rng, nullptr);
    EXPECT_NEAR(static_cast<double>(sum) / n, 1.5, 0.01);
}

TEST(WithoutReplacement, AlwaysValidArgmaxGivesIndexOne) {
    ActionDistribution<float> peaked;
    peaked.logits = Vec<float>::Zero(kActionCount);
    peaked.logits[42] = 50.0f;  // argmax dominates every Gumbel draw
    ActionMask valid;
    valid.set(42);
    Rng rng(19);
    for (int i = 0; i < 2000; ++i)
        EXPECT_EQ(detail::first_valid_sample_index(peaked, valid, rng, nullptr), 1);
}

LevelSpec one_move_level() {
    LevelSpec spec;
    spec.id = 50;
    spec.move_limit = 5;
    spec.refill_palette = {1};
    spec.cells[4][5].exists = true;
    spec.cells[4][6].exists = true;
    Piece p;
    p.kind = PieceKind::Basic;
    p.color = 0;
    spec.cells[4][5].piece = p;
    spec.cells[4][6].piece = p;
    spec.collect_goals[0] = 2;
    return spec;
}

LevelSpec mini_level() {
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

TEST(Completion, TrivialOneMoveLevelAlwaysCompletes) {
    // One valid click clears both goals; even the random baseline finds it
    // well within the 2000-step cap, and 1 valid move <= limit 5.
    EvalConfig cfg;
    cfg.episodes_per_level = 50;
    cfg.seed = 3;
    const LevelEval eval = evaluate_level(nullptr, one_move_level(), cfg, false);
    EXPECT_EQ(eval.completion_rate, 1.0);
    for (int moves : eval.moves_completed)
        EXPECT_EQ(moves, 1);
    // Markov-chain oracle for the capped chase: 1 - (115/117)^2000.
    const double oracle = 1.0 - std::pow(115.0 / 117.0, 2000.0);
    EXPECT_NEAR(eval.completion_rate, oracle, 0.02);
}

TEST(Completion, ZeroMoveLimitCompletesNothing) {
    EvalConfig cfg;
    cfg.episodes_per_level = 30;
    cfg.seed = 4;
    const LevelEval eval = evaluate_level(nullptr, one_move_level(), cfg, false);
    EXPECT_EQ(completion_rate_at_limit(eval, 0), 0.0);
}

TEST(Completion, MonotoneInMoveLimit) {
    EvalConfig cfg;
    cfg.episodes_per_level = 60;
    cfg.seed = 5;
    const LevelEval eval = evaluate_level(nullptr, mini_level(), cfg, false);
    double previous = 0.0;
    for (int limit = 0; limit <= 40; ++limit) {
        const double rate = completion_rate_at_limit(eval, limit);
        EXPECT_GE(rate, previous);
        previous = rate;
    }
}

TEST(Competence, BaselineOnMiniLevelIsInUnitInterval) {
    int zero_valid = -1;
    const double c = competence(nullptr, mini_level(), 40, 6, &zero_valid);
    EXPECT_GT(c, 0.0);
    EXPECT_LE(c, 1.0);
    EXPECT_EQ(zero_valid, 0);  // the 5x5 two-color board always has a match
}

TEST(Competence, ShiftingAllLogitsChangesNothing) {
    // A constant added to every logit leaves the Gumbel ordering stream
    // untouched, so the whole evaluation is identical.
    NetConfig cfg;
    PolicyNet<float> net = init_net<float>(cfg, 33);
    const double base = competence(&net, mini_level(), 15, 7);
    net.actor_head_b.array() += 5.0f;
    const double shifted = competence(&net, mini_level(), 15, 7);
    EXPECT_EQ(base, shifted);
}

TEST(Competence, DeterministicPerSeed) {
    const double a = competence(nullptr, mini_level(), 25, 8);
    const double b = competence(nullptr, mini_level(), 25, 8);
    EXPECT_EQ(a, b);
}

TEST(Report, EvalArtifactsAreByteStable) {
    EvalConfig cfg;
    cfg.episodes_per_level = 20;
    cfg.seed = 9;
    const std::vector<LevelEval> evals = {evaluate_level(nullptr, one_move_level(), cfg, true),
                                          evaluate_level(nullptr, mini_level(), cfg, false)};
    const fs::path dir_a = fresh_dir("m2rl_eval_a");
    const fs::path dir_b = fresh_dir("m2rl_eval_b");
    write_eval_report(evals, dir_a);
    write_eval_report(evals, dir_b);
    EXPECT_EQ(file_bytes(dir_a / "eval_summary.csv"), file_bytes(dir_b / "eval_summary.csv"));
    EXPECT_EQ(file_bytes(dir_a / "moves_hist.csv"), file_bytes(dir_b / "moves_hist.csv"));

    const std::string summary = file_bytes(dir_a / "eval_summary.csv");
    EXPECT_NE(summary.find("level,seen,episodes,competence"), std::string::npos);
    EXPECT_NE(summary.find("\n50,1,"), std::string::npos);
    EXPECT_NE(summary.find("\n100,0,"), std::string::npos);
}

TEST(Report, MergeProducesOneColumnPerModelPlusHuman) {
    EvalConfig cfg;
    cfg.episodes_per_level = 10;
    cfg.seed = 11;
    const std::vector<LevelEval> evals = {evaluate_level(nullptr, one_move_level(), cfg, true),
                                          evaluate_level(nullptr, mini_level(), cfg, false)};
    const fs::path root = fresh_dir("m2rl_merge");
    write_eval_report(evals, root / "baseline");
    write_eval_report(evals, root / "modelA");
    write_eval_report(evals, root / "modelB");

    const fs::path human_csv = root / "human.csv";
    {
        std::ofstream out(human_csv);
        out << "level,attempts,completions\n50,200,150\n100,100,80\n";
    }
    const auto human = read_human_csv(human_csv);
    EXPECT_NEAR(human.at(50), 0.75, 1e-12);

    const fs::path out = root / "merged";
    merge_reports(root, out, &human, /*svg=*/true);

    const std::string completion = file_bytes(out / "completion.csv");
    std::istringstream lines(completion);
    std::string header;
    std::getline(lines, header);
    EXPECT_EQ(header, "level,baseline,modelA,modelB,human");
    int rows = 0;
    std::string line;
    while (std::getline(lines, line))
        rows += !line.empty();
    EXPECT_EQ(rows, 2);  // one per level
    EXPECT_TRUE(fs::exists(out / "competence.csv"));
    EXPECT_TRUE(fs::exists(out / "completion.svg"));

    // Regenerating produces identical bytes.
    merge_reports(root, out, &human, true);
    EXPECT_EQ(file_bytes(out / "completion.csv"), completion);
}

TEST(Report, DirectCompletionHeaderAccepted) {
    const fs::path dir = fresh_dir("m2rl_human2");
    const fs::path csv = dir / "h.csv";
    {
        std::ofstream out(csv);
        out << "level,completion\n1,0.5\n2,0.75\n";
    }
    const auto human = read_human_csv(csv);
    EXPECT_NEAR(human.at(2), 0.75, 1e-12);
}

TEST(Report, MalformedHumanCsvListsRows) {
    const fs::path dir = fresh_dir("m2rl_human3");
    const fs::path csv = dir / "h.csv";
    {
        std::ofstream out(csv);
        out << "level,attempts,completions\n1,200,150\nbroken-row\n3,0,5\n";
    }
    try {
        read_human_csv(csv);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("3"), std::string::npos);
        EXPECT_NE(msg.find("4"), std::string::npos);  // lines 3 and 4 are bad
    }
}

}  // namespace
}  // namespace m2rl
