#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "m2rl/engine.hpp"
#include "m2rl/error.hpp"

namespace m2rl {

// Level files are line-oriented text:
//
//   m2level v1
//   id 1
//   moves 20
//   palette 0 1 2
//   goal 0 24
//   shape
//   <9 rows of 13 chars: X existing, # non-existing>
//   pieces
//   <9 rows of 13 chars, see piece_char>
//   cover
//   <9 rows of 13 chars: . none, A/B/C blocker on top>  (section optional)
//
// serialize() emits the canonical form; parse(serialize(parse(f))) == parse(f).

inline char piece_char(const CellSpec& cs) {
    if (!cs.exists)
        return '#';
    if (cs.random_color)
        return '?';
    if (!cs.piece)
        return '.';
    switch (cs.piece->kind) {
        case PieceKind::Basic: return static_cast<char>('0' + cs.piece->color);
        case PieceKind::RocketH: return 'h';
        case PieceKind::RocketV: return 'v';
        case PieceKind::Bomb: return 'o';
        case PieceKind::Magic: return 'm';
        case PieceKind::BlockerA: return 'A';
        case PieceKind::BlockerB: return 'B';
        case PieceKind::BlockerC: return 'C';
    }
    return '.';
}

inline int goal_key_from_token(const std::string& token) {
    if (token.size() == 1) {
        const char ch = token[0];
        if (ch >= '0' && ch <= '5')
            return ch - '0';
        switch (ch) {
            case 'h': return 6;
            case 'v': return 7;
            case 'o': return 8;
            case 'm': return 9;
            case 'A': return 10;
            case 'B': return 11;
            case 'C': return 12;
            default: break;
        }
    }
    return -1;
}

inline std::string goal_token(int key) {
    static const char* tokens[kGoalKeyCount] = {"0", "1", "2", "3", "4", "5", "h",
                                                "v", "o", "m", "A", "B", "C"};
    return tokens[key];
}

namespace detail {

inline void set_piece_from_char(CellSpec& cs, char ch, const std::string& where) {
    cs.exists = true;
    Piece p;
    switch (ch) {
        case '.': return;
        case '?': cs.random_color = true; return;
        case 'h': p.kind = PieceKind::RocketH; break;
        case 'v': p.kind = PieceKind::RocketV; break;
        case 'o': p.kind = PieceKind::Bomb; break;
        case 'm': p.kind = PieceKind::Magic; break;
        case 'A': p.kind = PieceKind::BlockerA; break;
        case 'B': p.kind = PieceKind::BlockerB; break;
        case 'C': p.kind = PieceKind::BlockerC; break;
        default:
            if (ch >= '0' && ch <= '5') {
                p.kind = PieceKind::Basic;
                p.color = static_cast<int8_t>(ch - '0');
                break;
            }
            throw ValidationError(where + ": unknown piece char '" + std::string(1, ch) + "'");
    }
    cs.piece = p;
}

inline std::vector<std::string> read_grid(const std::vector<std::string>& lines, size_t& idx,
                                          const std::string& section) {
    std::vector<std::string> rows;
    for (int r = 0; r < kBoardHeight; ++r, ++idx) {
        if (idx >= lines.size())
            throw ValidationError("section '" + section + "': expected " +
                                  std::to_string(kBoardHeight) + " rows, got " + std::to_string(r));
        if (lines[idx].size() != static_cast<size_t>(kBoardWidth))
            throw ValidationError("section '" + section + "' row " + std::to_string(r) +
                                  ": expected " + std::to_string(kBoardWidth) + " chars, got " +
                                  std::to_string(lines[idx].size()));
        rows.push_back(lines[idx]);
    }
    return rows;
}

}  // namespace detail

inline LevelSpec parse_level(const std::string& text) {
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            lines.push_back(line);
        }
    }
    if (lines.empty() || lines[0] != "m2level v1")
        throw ValidationError("missing 'm2level v1' header");

    LevelSpec spec;
    bool have_id = false, have_moves = false, have_palette = false;
    std::vector<std::string> shape_rows, piece_rows, cover_rows;

    size_t idx = 1;
    while (idx < lines.size()) {
        const std::string& line = lines[idx];
        if (line.empty()) {
            ++idx;
            continue;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "id") {
            if (!(ls >> spec.id))
                throw ValidationError("bad 'id' line: " + line);
            have_id = true;
            ++idx;
        } else if (key == "moves") {
            if (!(ls >> spec.move_limit))
                throw ValidationError("bad 'moves' line: " + line);
            have_moves = true;
            ++idx;
        } else if (key == "palette") {
            int color;
            while (ls >> color)
                spec.refill_palette.push_back(color);
            if (spec.refill_palette.empty())
                throw ValidationError("bad 'palette' line: " + line);
            have_palette = true;
            ++idx;
        } else if (key == "goal") {
            std::string token;
            int count;
            if (!(ls >> token >> count))
                throw ValidationError("bad 'goal' line: " + line);
            const int goal = goal_key_from_token(token);
            if (goal < 0)
                throw ValidationError("unknown goal token '" + token + "'");
            spec.collect_goals[goal] += count;
            ++idx;
        } else if (key == "shape") {
            ++idx;
            shape_rows = detail::read_grid(lines, idx, "shape");
        } else if (key == "pieces") {
            ++idx;
            piece_rows = detail::read_grid(lines, idx, "pieces");
        } else if (key == "cover") {
            ++idx;
            cover_rows = detail::read_grid(lines, idx, "cover");
        } else {
            throw ValidationError("unknown level-file line: " + line);
        }
    }

    if (!have_id || !have_moves || !have_palette)
        throw ValidationError("level file missing id/moves/palette header");
    if (shape_rows.empty() || piece_rows.empty())
        throw ValidationError("level file missing shape/pieces section");

    for (int r = 0; r < kBoardHeight; ++r) {
        for (int c = 0; c < kBoardWidth; ++c) {
            const std::string where =
                "cell (" + std::to_string(r) + "," + std::to_string(c) + ")";
            const char shape_ch = shape_rows[r][c];
            const char piece_ch = piece_rows[r][c];
            CellSpec& cs = spec.cells[r][c];
            if (shape_ch == '#') {
                if (piece_ch != '#')
                    throw ValidationError(where + ": piece on non-existing cell");
                continue;
            }
            if (shape_ch != 'X')
                throw ValidationError(where + ": shape char must be X or #");
            if (piece_ch == '#')
                throw ValidationError(where + ": '#' piece char on existing cell");
            detail::set_piece_from_char(cs, piece_ch, where);
            if (!cover_rows.empty()) {
                const char cover_ch = cover_rows[r][c];
                if (cover_ch != '.' && cover_ch != '#') {
                    switch (cover_ch) {
                        case 'A': cs.cover = PieceKind::BlockerA; break;
                        case 'B': cs.cover = PieceKind::BlockerB; break;
                        case 'C': cs.cover = PieceKind::BlockerC; break;
                        default:
                            throw ValidationError(where + ": bad cover char '" +
                                                  std::string(1, cover_ch) + "'");
                    }
                }
            }
        }
    }

    validate_level(spec);
    return spec;
}

inline std::string serialize_level(const LevelSpec& spec) {
    std::ostringstream out;
    out << "m2level v1\n";
    out << "id " << spec.id << "\n";
    out << "moves " << spec.move_limit << "\n";
    out << "palette";
    for (int color : spec.refill_palette)
        out << " " << color;
    out << "\n";
    for (int key = 0; key < kGoalKeyCount; ++key)
        if (spec.collect_goals[key] > 0)
            out << "goal " << goal_token(key) << " " << spec.collect_goals[key] << "\n";

    out << "shape\n";
    for (int r = 0; r < kBoardHeight; ++r) {
        for (int c = 0; c < kBoardWidth; ++c)
            out << (spec.cells[r][c].exists ? 'X' : '#');
        out << "\n";
    }
    out << "pieces\n";
    for (int r = 0; r < kBoardHeight; ++r) {
        for (int c = 0; c < kBoardWidth; ++c)
            out << piece_char(spec.cells[r][c]);
        out << "\n";
    }
    bool any_cover = false;
    for (const auto& row : spec.cells)
        for (const auto& cs : row)
            any_cover |= cs.cover.has_value();
    if (any_cover) {
        out << "cover\n";
        for (int r = 0; r < kBoardHeight; ++r) {
            for (int c = 0; c < kBoardWidth; ++c) {
                const CellSpec& cs = spec.cells[r][c];
                if (!cs.exists)
                    out << '#';
                else if (!cs.cover)
                    out << '.';
                else if (*cs.cover == PieceKind::BlockerA)
                    out << 'A';
                else if (*cs.cover == PieceKind::BlockerB)
                    out << 'B';
                else
                    out << 'C';
            }
            out << "\n";
        }
    }
    return out.str();
}

inline LevelSpec load_level_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open level file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_level(buf.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path.filename().string() + ": " + e.what());
    }
}

// Loads every *.txt level in a directory, keyed by level id.
inline std::map<int, LevelSpec> load_level_pack(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ValidationError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::map<int, LevelSpec> pack;
    for (const auto& file : files) {
        LevelSpec spec = load_level_file(file);
        if (pack.count(spec.id))
            throw ValidationError(file.filename().string() + ": duplicate level id " +
                                  std::to_string(spec.id));
        pack.emplace(spec.id, std::move(spec));
    }
    if (pack.empty())
        throw ValidationError("no .txt levels found in " + dir.string());
    return pack;
}

// ASCII board view for the inspect subcommand and error dumps.
inline std::string render_board(const Board& board) {
    std::ostringstream out;
    out << "moves_left=" << board.moves_left << " steps=" << board.step_count << " goals:";
    for (int key = 0; key < kGoalKeyCount; ++key)
        if (board.goal_kinds[key])
            out << " " << goal_token(key) << "=" << board.goals_remaining[key];
    out << "\n";
    out << "   ";
    for (int c = 0; c < kBoardWidth; ++c)
        out << " " << std::to_string(c % 10) << " ";
    out << "\n";
    for (int r = 0; r < kBoardHeight; ++r) {
        out << r << "  ";
        for (int c = 0; c < kBoardWidth; ++c) {
            const Cell& cell = board.at(r, c);
            if (!cell.exists) {
                out << " # ";
                continue;
            }
            if (cell.count == 0) {
                out << " . ";
                continue;
            }
            const Piece& bottom = cell.pieces[0];
            char ch = '?';
            switch (bottom.kind) {
                case PieceKind::Basic: ch = static_cast<char>('0' + bottom.color); break;
                case PieceKind::RocketH: ch = 'h'; break;
                case PieceKind::RocketV: ch = 'v'; break;
                case PieceKind::Bomb: ch = 'o'; break;
                case PieceKind::Magic: ch = 'm'; break;
                case PieceKind::BlockerA: ch = 'A'; break;
                case PieceKind::BlockerB: ch = 'B'; break;
                case PieceKind::BlockerC: ch = 'C'; break;
            }
            out << (bottom.goal ? '*' : ' ') << ch;
            if (const Piece* top = cell.cover()) {
                char top_ch = top->kind == PieceKind::BlockerA   ? 'A'
                              : top->kind == PieceKind::BlockerB ? 'B'
                                                                 : 'C';
                out << top_ch;
            } else {
                out << ' ';
            }
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace m2rl
