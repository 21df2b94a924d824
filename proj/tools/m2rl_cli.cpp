// m2rl command line: train and evaluate match-2 play-testing agents, inspect
// and validate level files, and merge evaluation reports.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "m2rl/config.hpp"
#include "m2rl/eval.hpp"
#include "m2rl/level_io.hpp"
#include "m2rl/ppo.hpp"
#include "m2rl/report.hpp"

namespace fs = std::filesystem;
using namespace m2rl;

namespace {

// Default split of the bundled pack; used to flag seen/unseen in reports.
const std::vector<int> kDefaultTrainLevels = {1, 3, 5, 7, 9};

int run_train(const std::string& config_path, const std::string& resume_path,
              std::optional<uint64_t> seed, const std::string& out_dir) {
    std::optional<Trainer> trainer;
    if (!resume_path.empty()) {
        trainer.emplace(Trainer::resume(resume_path));
    } else {
        PpoConfig cfg = parse_ppo_config(read_text_file(config_path));
        if (seed)
            cfg.seed = *seed;
        if (!out_dir.empty())
            cfg.out_dir = out_dir;
        trainer.emplace(cfg, load_level_pack(cfg.levels_dir));
    }

    const auto start = std::chrono::steady_clock::now();
    trainer->train([&](const TrainRow& row) {
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
        // Wall-clock stays in console log lines; the CSV is byte-reproducible.
        std::printf("update %lld | step %lld | episodes %d | reward %s | entropy %.3f | "
                    "invalid %.3f | %.0f ms%s%s\n",
                    static_cast<long long>(row.update), static_cast<long long>(row.global_step),
                    row.episodes, row.episodes ? std::to_string(row.ep_reward_mean).c_str() : "-",
                    row.entropy, row.invalid_rate, ms, row.event.empty() ? "" : " | event=",
                    row.event.c_str());
        std::fflush(stdout);
        return true;
    });
    std::printf("done: %lld steps, log at %s\n",
                static_cast<long long>(trainer->global_step()),
                (fs::path(trainer->config().out_dir) / "trainlog.csv").string().c_str());
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& config_path,
             const std::string& levels_csv, std::optional<uint64_t> seed,
             const std::string& out_dir, bool baseline) {
    EvalConfig cfg;
    if (!config_path.empty())
        cfg = parse_eval_config(read_text_file(config_path));
    if (!levels_csv.empty())
        cfg.levels = detail::parse_int_list(levels_csv, "--levels");
    if (seed)
        cfg.seed = *seed;
    if (!out_dir.empty())
        cfg.out_dir = out_dir;

    std::optional<PolicyNet<float>> net;
    if (!baseline) {
        auto [train_cfg, loaded] = load_checkpoint_net(checkpoint);
        net.emplace(std::move(loaded));
    }

    const auto pack = load_level_pack(cfg.levels_dir);
    std::vector<LevelEval> evals;
    for (int level : cfg.levels) {
        if (!pack.count(level))
            throw ValidationError("level " + std::to_string(level) + " not in pack at " +
                                  cfg.levels_dir);
        const bool seen = std::find(kDefaultTrainLevels.begin(), kDefaultTrainLevels.end(),
                                    level) != kDefaultTrainLevels.end();
        evals.push_back(evaluate_level(net ? &*net : nullptr, pack.at(level), cfg, seen));
        const LevelEval& e = evals.back();
        std::printf("level %d | competence %.4f | completion %.4f (%d/%d) | zero-valid %d\n",
                    e.level_id, e.competence, e.completion_rate, e.completed_in_limit, e.episodes,
                    e.zero_valid_states);
        std::fflush(stdout);
    }
    write_eval_report(evals, cfg.out_dir);
    std::printf("report written to %s\n", cfg.out_dir.c_str());
    return 0;
}

int run_inspect(const std::string& level_path, uint64_t seed, const std::string& actions_file) {
    const LevelSpec spec = load_level_file(level_path);
    Board board = load_level(spec, seed);
    std::printf("level %d (moves %d, palette size %zu)\n", spec.id, spec.move_limit,
                spec.refill_palette.size());
    std::printf("%s", render_board(board).c_str());

    if (actions_file.empty())
        return 0;

    std::ifstream in(actions_file);
    if (!in)
        throw ValidationError("cannot open actions file: " + actions_file);
    std::string line;
    int step = 0;
    double total_reward = 0;
    int total_collected = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        int first, second;
        int action;
        if (ls >> first) {
            if (ls >> second)
                action = to_action(first, second);  // "row col"
            else
                action = first;  // plain index
        } else {
            throw ValidationError("bad action line: " + line);
        }
        if (action < 0 || action >= kActionCount)
            throw ValidationError("action out of range: " + line);
        if (terminal_state(board) != TerminalState::Running) {
            std::printf("board finished; remaining actions ignored\n");
            break;
        }
        const MoveResult result = apply_move(board, action);
        total_reward += result.reward;
        total_collected += result.collected;
        std::printf("step %d: action %d (r%d,c%d) %s collected=%d reward=%.6f%s\n", ++step,
                    action, action_row(action), action_col(action),
                    result.valid ? "valid" : "INVALID", result.collected, result.reward,
                    result.completed ? " COMPLETED" : "");
    }
    std::printf("%s", render_board(board).c_str());
    std::printf("total: steps=%d reward=%.6f collected=%d state=%s\n", step, total_reward,
                total_collected,
                terminal_state(board) == TerminalState::Completed    ? "completed"
                : terminal_state(board) == TerminalState::OutOfMoves ? "out-of-moves"
                                                                     : "running");
    return 0;
}

int run_validate(const std::string& dir) {
    bool all_ok = true;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw ValidationError("no .txt levels found in " + dir);
    std::map<int, std::string> ids;
    for (const auto& file : files) {
        try {
            const std::string text = read_text_file(file);
            const LevelSpec spec = parse_level(text);
            if (serialize_level(parse_level(serialize_level(spec))) != serialize_level(spec))
                throw ValidationError("round-trip is not stable");
            if (ids.count(spec.id))
                throw ValidationError("duplicate level id " + std::to_string(spec.id) +
                                      " (also in " + ids[spec.id] + ")");
            ids[spec.id] = file.filename().string();
            std::printf("%s: OK (id %d)\n", file.filename().string().c_str(), spec.id);
        } catch (const ValidationError& e) {
            std::printf("%s: FAIL %s\n", file.filename().string().c_str(), e.what());
            all_ok = false;
        }
    }
    return all_ok ? 0 : 1;
}

int run_report(const std::string& input_dir, const std::string& human_csv,
               const std::string& out_dir, bool svg) {
    std::optional<std::map<int, double>> human;
    if (!human_csv.empty())
        human = read_human_csv(human_csv);
    merge_reports(input_dir, out_dir.empty() ? fs::path(input_dir) / "merged" : fs::path(out_dir),
                  human ? &*human : nullptr, svg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"match-2 PPO play-testing toolkit"};
    app.require_subcommand(1);

    std::string config_path, resume_path, checkpoint, out_dir, levels_csv, human_csv;
    std::string level_path, actions_file, pack_dir, input_dir;
    std::optional<uint64_t> seed;
    uint64_t inspect_seed = 0;
    bool svg = false;

    CLI::App* train = app.add_subcommand("train", "train a PPO agent from a config file");
    train->add_option("--config", config_path, "training config file");
    train->add_option("--resume", resume_path, "resume from a trainer checkpoint");
    train->add_option("--seed", seed, "override the config seed");
    train->add_option("--out-dir", out_dir, "override the config output directory");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on levels");
    eval_cmd->add_option("--checkpoint", checkpoint, "trainer checkpoint")->required();
    eval_cmd->add_option("--config", config_path, "eval config file");
    eval_cmd->add_option("--levels", levels_csv, "comma-separated level ids");
    eval_cmd->add_option("--seed", seed, "override the eval seed");
    eval_cmd->add_option("--out-dir", out_dir, "report directory");

    CLI::App* baseline = app.add_subcommand("baseline", "evaluate the uniform random baseline");
    baseline->add_option("--config", config_path, "eval config file");
    baseline->add_option("--levels", levels_csv, "comma-separated level ids");
    baseline->add_option("--seed", seed, "override the eval seed");
    baseline->add_option("--out-dir", out_dir, "report directory");

    CLI::App* inspect = app.add_subcommand("inspect-level", "print a level and replay actions");
    inspect->add_option("level", level_path, "level file")->required();
    inspect->add_option("--seed", inspect_seed, "board seed");
    inspect->add_option("--actions-file", actions_file,
                        "replay actions (one index or 'row col' per line)");

    CLI::App* validate = app.add_subcommand("validate-pack", "validate every level in a directory");
    validate->add_option("dir", pack_dir, "level directory")->required();

    CLI::App* report = app.add_subcommand("report", "merge evaluation reports");
    report->add_option("input", input_dir, "directory of per-model eval outputs")->required();
    report->add_option("--human-csv", human_csv,
                       "optional human data (level,attempts,completions or level,completion)");
    report->add_option("--out-dir", out_dir, "merged output directory");
    report->add_flag("--svg", svg, "also write SVG charts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            if (config_path.empty() && resume_path.empty())
                throw ValidationError("train needs --config or --resume");
            return run_train(config_path, resume_path, seed, out_dir);
        }
        if (eval_cmd->parsed())
            return run_eval(checkpoint, config_path, levels_csv, seed, out_dir, false);
        if (baseline->parsed())
            return run_eval("", config_path, levels_csv, seed, out_dir, true);
        if (inspect->parsed())
            return run_inspect(level_path, inspect_seed, actions_file);
        if (validate->parsed())
            return run_validate(pack_dir);
        if (report->parsed())
            return run_report(input_dir, human_csv, out_dir, svg);
    } catch (const MaskedAllActionsError& e) {
        const std::string what = e.what();
        const auto newline = what.find('\n');
        std::fprintf(stderr, "error: masked-all-actions: %s\n",
                     what.substr(0, newline).c_str());
        if (newline != std::string::npos)
            std::fprintf(stderr, "%s\n", what.substr(newline + 1).c_str());
        return 2;
    } catch (const std::exception& e) {
        const std::string what = e.what();
        std::fprintf(stderr, "error: %s\n", what.substr(0, what.find('\n')).c_str());
        return 1;
    }
    return 0;
}
