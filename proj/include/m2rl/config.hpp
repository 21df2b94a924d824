#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "m2rl/error.hpp"
#include "m2rl/policy.hpp"

namespace m2rl {

// Declarative key=value config files ('#' starts a comment). Flags on the
// CLI override file values; everything that affects a run lives here so an
// experiment is reproducible from its config plus a seed.

struct PpoConfig {
    int n_steps = 256;
    int n_minibatches = 64;
    int n_actors = 8;
    int epochs_per_update = 4;
    double clip_range = 0.2;
    double value_coef = 0.5;
    double entropy_coef = 0.001;
    double discount = 0.99;
    double gae_lambda = 0.95;
    double learning_rate = 2.5e-4;
    bool color_shuffle = false;
    int reset_after = 0;  // total-step episode cap; 0 disables
    MaskMode mask_mode = MaskMode::None;
    int64_t total_steps = 100000;
    uint64_t seed = 0;
    std::vector<int> train_levels = {1, 3, 5, 7, 9};
    int checkpoint_every = 10;  // updates
    std::string levels_dir = "levels";
    std::string out_dir = "run";

    int batch_size() const { return n_steps * n_actors; }

    void validate() const {
        if (n_steps < 1 || n_actors < 1 || n_minibatches < 1)
            throw ValidationError("n_steps, n_actors and n_minibatches must be positive");
        if (batch_size() % n_minibatches != 0)
            throw ValidationError("n_steps*n_actors (" + std::to_string(batch_size()) +
                                  ") must be divisible by n_minibatches (" +
                                  std::to_string(n_minibatches) + ")");
        if (entropy_coef < 0)
            throw ValidationError("entropy_coef must be >= 0");
        if (epochs_per_update < 1)
            throw ValidationError("epochs_per_update must be >= 1");
        if (reset_after < 0)
            throw ValidationError("reset_after must be >= 0 (0 disables)");
        if (train_levels.empty())
            throw ValidationError("train_levels is empty");
    }
};

struct EvalConfig {
    std::vector<int> levels = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    int episodes_per_level = 200;
    uint64_t seed = 0;
    std::string levels_dir = "levels";
    std::string out_dir = "eval";
    // Post-training evaluation always shuffles colors, never applies a mask
    // at sampling time, and stops an episode after 2000 total steps.
    static constexpr int kMaxTotalSteps = 2000;
};

namespace detail {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

inline KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (kv.count(key))
            throw ValidationError("config repeats key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

inline std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
    std::vector<int> out;
    std::string token;
    std::istringstream in(value);
    while (std::getline(in, token, ',')) {
        token = trim(token);
        if (token.empty())
            continue;
        try {
            out.push_back(std::stoi(token));
        } catch (const std::exception&) {
            throw ValidationError("config key '" + key + "': bad integer '" + token + "'");
        }
    }
    return out;
}

inline MaskMode parse_mask_mode(const std::string& value) {
    if (value == "none")
        return MaskMode::None;
    if (value == "hard")
        return MaskMode::Hard;
    if (value == "soft")
        return MaskMode::Soft;
    if (value == "soft-epsilon")
        return MaskMode::SoftEpsilon;
    throw ValidationError("mask_mode must be none|hard|soft|soft-epsilon, got '" + value + "'");
}

inline bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1")
        return true;
    if (value == "false" || value == "0")
        return false;
    throw ValidationError("config key '" + key + "': expected true/false, got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
    std::istringstream in(value);
    T out;
    in >> out;
    if (in.fail() || !in.eof())
        throw ValidationError("config key '" + key + "': bad number '" + value + "'");
    return out;
}

inline std::string join_ints(const std::vector<int>& v) {
    std::ostringstream out;
    for (size_t i = 0; i < v.size(); ++i)
        out << (i ? "," : "") << v[i];
    return out.str();
}

}  // namespace detail

inline PpoConfig parse_ppo_config(const std::string& text) {
    PpoConfig cfg;
    for (const auto& [key, value] : detail::parse_key_values(text)) {
        if (key == "n_steps")
            cfg.n_steps = detail::parse_number<int>(value, key);
        else if (key == "n_minibatches")
            cfg.n_minibatches = detail::parse_number<int>(value, key);
        else if (key == "n_actors")
            cfg.n_actors = detail::parse_number<int>(value, key);
        else if (key == "epochs_per_update")
            cfg.epochs_per_update = detail::parse_number<int>(value, key);
        else if (key == "clip_range")
            cfg.clip_range = detail::parse_number<double>(value, key);
        else if (key == "value_coef")
            cfg.value_coef = detail::parse_number<double>(value, key);
        else if (key == "entropy_coef")
            cfg.entropy_coef = detail::parse_number<double>(value, key);
        else if (key == "discount")
            cfg.discount = detail::parse_number<double>(value, key);
        else if (key == "gae_lambda")
            cfg.gae_lambda = detail::parse_number<double>(value, key);
        else if (key == "learning_rate")
            cfg.learning_rate = detail::parse_number<double>(value, key);
        else if (key == "color_shuffle")
            cfg.color_shuffle = detail::parse_bool(value, key);
        else if (key == "reset_after")
            cfg.reset_after = value == "none" ? 0 : detail::parse_number<int>(value, key);
        else if (key == "mask_mode")
            cfg.mask_mode = detail::parse_mask_mode(value);
        else if (key == "total_steps")
            cfg.total_steps = detail::parse_number<int64_t>(value, key);
        else if (key == "seed")
            cfg.seed = detail::parse_number<uint64_t>(value, key);
        else if (key == "train_levels")
            cfg.train_levels = detail::parse_int_list(value, key);
        else if (key == "checkpoint_every")
            cfg.checkpoint_every = detail::parse_number<int>(value, key);
        else if (key == "levels_dir")
            cfg.levels_dir = value;
        else if (key == "out_dir")
            cfg.out_dir = value;
        else
            throw ValidationError("unknown training config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline std::string serialize_ppo_config(const PpoConfig& cfg) {
    std::ostringstream out;
    out << "n_steps = " << cfg.n_steps << "\n";
    out << "n_minibatches = " << cfg.n_minibatches << "\n";
    out << "n_actors = " << cfg.n_actors << "\n";
    out << "epochs_per_update = " << cfg.epochs_per_update << "\n";
    out << "clip_range = " << cfg.clip_range << "\n";
    out << "value_coef = " << cfg.value_coef << "\n";
    out << "entropy_coef = " << cfg.entropy_coef << "\n";
    out << "discount = " << cfg.discount << "\n";
    out << "gae_lambda = " << cfg.gae_lambda << "\n";
    out << "learning_rate = " << cfg.learning_rate << "\n";
    out << "color_shuffle = " << (cfg.color_shuffle ? "true" : "false") << "\n";
    out << "reset_after = " << cfg.reset_after << "\n";
    out << "mask_mode = " << mask_mode_name(cfg.mask_mode) << "\n";
    out << "total_steps = " << cfg.total_steps << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "train_levels = " << detail::join_ints(cfg.train_levels) << "\n";
    out << "checkpoint_every = " << cfg.checkpoint_every << "\n";
    out << "levels_dir = " << cfg.levels_dir << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    return out.str();
}

inline EvalConfig parse_eval_config(const std::string& text) {
    EvalConfig cfg;
    for (const auto& [key, value] : detail::parse_key_values(text)) {
        if (key == "levels")
            cfg.levels = detail::parse_int_list(value, key);
        else if (key == "episodes_per_level")
            cfg.episodes_per_level = detail::parse_number<int>(value, key);
        else if (key == "seed")
            cfg.seed = detail::parse_number<uint64_t>(value, key);
        else if (key == "levels_dir")
            cfg.levels_dir = value;
        else if (key == "out_dir")
            cfg.out_dir = value;
        else
            throw ValidationError("unknown eval config key '" + key + "'");
    }
    if (cfg.levels.empty())
        throw ValidationError("eval config: levels is empty");
    if (cfg.episodes_per_level < 1)
        throw ValidationError("eval config: episodes_per_level must be >= 1");
    return cfg;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace m2rl
