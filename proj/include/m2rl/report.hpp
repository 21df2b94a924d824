#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "m2rl/error.hpp"
#include "m2rl/eval.hpp"

namespace m2rl {

// Evaluation artifacts. One directory per evaluated model containing
//   eval_summary.csv : level,seen,episodes,competence,completion_rate,
//                      completed_in_limit,completed_any,zero_valid_states
//   moves_hist.csv   : level,valid_moves,completed_count,all_count
// The report command merges several such directories (directory name =
// series name) into completion.csv / competence.csv and optional SVG charts.

namespace detail {

inline std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace detail

inline void write_eval_report(const std::vector<LevelEval>& evals,
                              const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "eval_summary.csv", std::ios::binary);
        out << "level,seen,episodes,competence,completion_rate,completed_in_limit,"
               "completed_any,zero_valid_states\n";
        for (const LevelEval& e : evals)
            out << e.level_id << "," << (e.seen ? 1 : 0) << "," << e.episodes << ","
                << detail::fmt6(e.competence) << "," << detail::fmt6(e.completion_rate) << ","
                << e.completed_in_limit << "," << e.completed_any << "," << e.zero_valid_states
                << "\n";
    }
    {
        std::ofstream out(dir / "moves_hist.csv", std::ios::binary);
        out << "level,valid_moves,completed_count,all_count\n";
        for (const LevelEval& e : evals) {
            std::map<int, std::pair<int, int>> bins;
            for (int moves : e.moves_completed)
                bins[moves].first++;
            for (int moves : e.moves_all)
                bins[moves].second++;
            for (const auto& [moves, counts] : bins)
                out << e.level_id << "," << moves << "," << counts.first << "," << counts.second
                    << "\n";
        }
    }
}

// ---------------------------------------------------------------- merging

struct EvalSeries {
    std::string name;
    std::map<int, double> competence;
    std::map<int, double> completion;
    std::map<int, bool> seen;
};

inline EvalSeries read_eval_summary(const std::filesystem::path& file, const std::string& name) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open " + file.string());
    EvalSeries series;
    series.name = name;
    std::string line;
    std::getline(in, line);  // header
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ','))
            fields.push_back(field);
        if (fields.size() < 5)
            throw ValidationError(file.string() + " line " + std::to_string(line_no) +
                                  ": expected at least 5 columns");
        const int level = std::stoi(fields[0]);
        series.seen[level] = fields[1] == "1";
        series.competence[level] = std::stod(fields[3]);
        series.completion[level] = std::stod(fields[4]);
    }
    return series;
}

// Optional human data. Accepts either `level,attempts,completions` (rate is
// completions/attempts) or a direct `level,completion` file.
inline std::map<int, double> read_human_csv(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open human data csv: " + file.string());
    std::string header;
    std::getline(in, header);
    bool ratio_form;
    if (header == "level,attempts,completions")
        ratio_form = true;
    else if (header == "level,completion")
        ratio_form = false;
    else
        throw ValidationError("human csv header must be 'level,attempts,completions' or "
                              "'level,completion', got '" +
                              header + "'");
    std::map<int, double> rates;
    std::string line;
    int line_no = 1;
    std::vector<std::string> bad_rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string f0, f1, f2;
        const bool ok =
            ratio_form ? static_cast<bool>(std::getline(row, f0, ',') && std::getline(row, f1, ',') &&
                                           std::getline(row, f2))
                       : static_cast<bool>(std::getline(row, f0, ',') && std::getline(row, f1));
        if (!ok) {
            bad_rows.push_back(std::to_string(line_no));
            continue;
        }
        try {
            const int level = std::stoi(f0);
            if (ratio_form) {
                const double attempts = std::stod(f1);
                const double completions = std::stod(f2);
                if (attempts <= 0 || completions < 0 || completions > attempts)
                    throw std::invalid_argument("range");
                rates[level] = completions / attempts;
            } else {
                const double rate = std::stod(f1);
                if (rate < 0 || rate > 1)
                    throw std::invalid_argument("range");
                rates[level] = rate;
            }
        } catch (const std::exception&) {
            bad_rows.push_back(std::to_string(line_no));
        }
    }
    if (!bad_rows.empty()) {
        std::string joined;
        for (size_t i = 0; i < bad_rows.size(); ++i)
            joined += (i ? ", " : "") + bad_rows[i];
        throw ValidationError("human csv has malformed rows at lines: " + joined);
    }
    return rates;
}

inline void write_metric_csv(const std::filesystem::path& file,
                             const std::vector<EvalSeries>& series,
                             const std::map<int, double> EvalSeries::* metric,
                             const std::map<int, double>* human) {
    std::vector<int> levels;
    for (const EvalSeries& s : series)
        for (const auto& [level, value] : s.*metric)
            if (std::find(levels.begin(), levels.end(), level) == levels.end())
                levels.push_back(level);
    std::sort(levels.begin(), levels.end());

    std::ofstream out(file, std::ios::binary);
    out << "level";
    for (const EvalSeries& s : series)
        out << "," << s.name;
    if (human != nullptr)
        out << ",human";
    out << "\n";
    for (int level : levels) {
        out << level;
        for (const EvalSeries& s : series) {
            const auto it = (s.*metric).find(level);
            out << "," << (it != (s.*metric).end() ? detail::fmt6(it->second) : "");
        }
        if (human != nullptr) {
            const auto it = human->find(level);
            out << "," << (it != human->end() ? detail::fmt6(it->second) : "");
        }
        out << "\n";
    }
}

// Minimal grouped bar chart; one group per level, one bar per series.
inline void write_bar_svg(const std::filesystem::path& file,
                          const std::vector<EvalSeries>& series,
                          const std::map<int, double> EvalSeries::* metric,
                          const std::map<int, double>* human, const std::string& title) {
    std::vector<int> levels;
    for (const EvalSeries& s : series)
        for (const auto& [level, value] : s.*metric)
            if (std::find(levels.begin(), levels.end(), level) == levels.end())
                levels.push_back(level);
    std::sort(levels.begin(), levels.end());

    const int n_series = static_cast<int>(series.size()) + (human != nullptr ? 1 : 0);
    const int bar_w = 14;
    const int group_w = n_series * bar_w + 16;
    const int width = 70 + group_w * static_cast<int>(levels.size());
    const int height = 320;
    const int plot_h = 240;
    static const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                    "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};

    std::ofstream out(file, std::ios::binary);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "<text x=\"10\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
    out << "<line x1=\"50\" y1=\"" << 40 + plot_h << "\" x2=\"" << width - 10 << "\" y2=\""
        << 40 + plot_h << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = tick / 4.0;
        const int y = 40 + plot_h - static_cast<int>(v * plot_h);
        out << "<text x=\"14\" y=\"" << y + 4 << "\" font-size=\"10\">" << detail::fmt6(v).substr(0, 4)
            << "</text>\n";
        out << "<line x1=\"46\" y1=\"" << y << "\" x2=\"50\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
    }
    for (size_t li = 0; li < levels.size(); ++li) {
        const int level = levels[li];
        const int x0 = 60 + static_cast<int>(li) * group_w;
        auto bar = [&](int slot, double value, const char* color) {
            const int h = static_cast<int>(std::clamp(value, 0.0, 1.0) * plot_h);
            out << "<rect x=\"" << x0 + slot * bar_w << "\" y=\"" << 40 + plot_h - h
                << "\" width=\"" << bar_w - 2 << "\" height=\"" << h << "\" fill=\"" << color
                << "\"/>\n";
        };
        for (size_t si = 0; si < series.size(); ++si) {
            const auto it = (series[si].*metric).find(level);
            if (it != (series[si].*metric).end())
                bar(static_cast<int>(si), it->second, palette[si % 8]);
        }
        if (human != nullptr) {
            const auto it = human->find(level);
            if (it != human->end())
                bar(static_cast<int>(series.size()), it->second, "#999999");
        }
        out << "<text x=\"" << x0 << "\" y=\"" << 40 + plot_h + 16 << "\" font-size=\"10\">L"
            << level << "</text>\n";
    }
    int legend_y = 36;
    for (size_t si = 0; si < series.size(); ++si) {
        out << "<rect x=\"" << width - 150 << "\" y=\"" << legend_y << "\" width=\"10\" height=\"10\" fill=\""
            << palette[si % 8] << "\"/>\n";
        out << "<text x=\"" << width - 136 << "\" y=\"" << legend_y + 9 << "\" font-size=\"10\">"
            << series[si].name << "</text>\n";
        legend_y += 14;
    }
    if (human != nullptr) {
        out << "<rect x=\"" << width - 150 << "\" y=\"" << legend_y
            << "\" width=\"10\" height=\"10\" fill=\"#999999\"/>\n";
        out << "<text x=\"" << width - 136 << "\" y=\"" << legend_y + 9
            << "\" font-size=\"10\">human</text>\n";
    }
    out << "</svg>\n";
}

// Merges every <input_dir>/<name>/eval_summary.csv into combined per-metric
// CSVs (and SVGs when requested).
inline void merge_reports(const std::filesystem::path& input_dir,
                          const std::filesystem::path& out_dir,
                          const std::map<int, double>* human, bool svg) {
    std::vector<EvalSeries> series;
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(input_dir))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "eval_summary.csv"))
            dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs)
        series.push_back(read_eval_summary(dir / "eval_summary.csv", dir.filename().string()));
    if (series.empty())
        throw ValidationError("no eval_summary.csv found under " + input_dir.string());

    std::filesystem::create_directories(out_dir);
    write_metric_csv(out_dir / "completion.csv", series, &EvalSeries::completion, human);
    write_metric_csv(out_dir / "competence.csv", series, &EvalSeries::competence, nullptr);
    if (svg) {
        write_bar_svg(out_dir / "completion.svg", series, &EvalSeries::completion, human,
                      "Completion rate within move limit");
        write_bar_svg(out_dir / "competence.svg", series, &EvalSeries::competence, nullptr,
                      "Competence");
    }
}

}  // namespace m2rl
