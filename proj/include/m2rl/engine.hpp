#pragma once

#include <algorithm>
#include <array>
#include <bitset>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "m2rl/error.hpp"
#include "m2rl/rng.hpp"

namespace m2rl {

// Board geometry is fixed; smaller levels mark cells as non-existing.
constexpr int kBoardHeight = 9;
constexpr int kBoardWidth = 13;
constexpr int kActionCount = kBoardHeight * kBoardWidth;  // 117
constexpr int kColorCount = 6;

// Row-major action convention shared by the engine, encoder and policy.
constexpr int action_index(int row, int col) { return row * kBoardWidth + col; }
constexpr int action_row(int action) { return action / kBoardWidth; }
constexpr int action_col(int action) { return action % kBoardWidth; }

enum class PieceKind : uint8_t {
    Basic,
    RocketH,
    RocketV,
    Bomb,
    Magic,
    BlockerA,  // removed by one adjacent basic match
    BlockerB,  // removed only by power-piece effects
    BlockerC,  // two layers; each match or power hit removes one
};

constexpr bool is_clickable_kind(PieceKind k) {
    return k == PieceKind::Basic || k == PieceKind::RocketH || k == PieceKind::RocketV ||
           k == PieceKind::Bomb || k == PieceKind::Magic;
}

constexpr bool is_blocker_kind(PieceKind k) {
    return k == PieceKind::BlockerA || k == PieceKind::BlockerB || k == PieceKind::BlockerC;
}

constexpr bool is_power_kind(PieceKind k) {
    return k == PieceKind::RocketH || k == PieceKind::RocketV || k == PieceKind::Bomb ||
           k == PieceKind::Magic;
}

struct Piece {
    PieceKind kind = PieceKind::Basic;
    int8_t color = -1;  // 0..5 for Basic, -1 otherwise
    bool goal = false;
    uint8_t layers = 1;  // BlockerC starts at 2

    bool operator==(const Piece&) const = default;
};

// Goal bookkeeping key: one slot per basic color plus one per other kind.
// Basic goals are color-specific ("collect N pieces of color c").
constexpr int kGoalKeyCount = 13;

inline int goal_key(PieceKind kind, int color) {
    switch (kind) {
        case PieceKind::Basic: return color;
        case PieceKind::RocketH: return 6;
        case PieceKind::RocketV: return 7;
        case PieceKind::Bomb: return 8;
        case PieceKind::Magic: return 9;
        case PieceKind::BlockerA: return 10;
        case PieceKind::BlockerB: return 11;
        case PieceKind::BlockerC: return 12;
    }
    return -1;
}

inline int goal_key(const Piece& p) { return goal_key(p.kind, p.color); }

// A cell holds at most two pieces: a clickable piece, optionally covered by
// a non-clickable one (blocker on top). Index 0 is the bottom slot.
struct Cell {
    bool exists = false;
    uint8_t count = 0;
    std::array<Piece, 2> pieces{};

    bool operator==(const Cell&) const = default;

    const Piece* clickable() const {
        if (count == 0 || !is_clickable_kind(pieces[0].kind))
            return nullptr;
        return &pieces[0];
    }
    Piece* clickable() {
        if (count == 0 || !is_clickable_kind(pieces[0].kind))
            return nullptr;
        return &pieces[0];
    }
    const Piece* cover() const { return count == 2 ? &pieces[1] : nullptr; }
    bool empty() const { return count == 0; }

    void push(const Piece& p) { pieces[count++] = p; }

    // Insert at the bottom slot, keeping an existing cover on top.
    void push_bottom(const Piece& p) {
        if (count == 1)
            pieces[1] = pieces[0];
        pieces[0] = p;
        ++count;
    }

    void remove_slot(int slot) {
        if (slot == 0 && count == 2)
            pieces[0] = pieces[1];
        --count;
        pieces[count] = Piece{};  // keep == semantic after removals
    }
};

// Per-cell initial content in a level definition.
struct CellSpec {
    bool exists = false;
    bool random_color = false;       // '?' placeholder, colored at load
    std::optional<Piece> piece;      // fixed piece, if any
    std::optional<PieceKind> cover;  // blocker stacked on top, if any
};

struct LevelSpec {
    int id = 0;
    int move_limit = 0;
    std::array<std::array<CellSpec, kBoardWidth>, kBoardHeight> cells{};
    std::array<int, kGoalKeyCount> collect_goals{};
    std::vector<int> refill_palette;  // ordered as written; the refill stream
                                      // draws palette indices, which is what
                                      // makes color permutation a symmetry
};

struct Board {
    int level_id = 0;
    std::array<std::array<Cell, kBoardWidth>, kBoardHeight> cells{};
    int moves_left = 0;
    int64_t step_count = 0;  // all actions taken, valid and invalid
    std::array<int, kGoalKeyCount> goals_remaining{};
    std::array<bool, kGoalKeyCount> goal_kinds{};  // keys the level collects
    std::vector<int> refill_palette;
    Rng rng;  // placeholder + refill stream

    bool operator==(const Board&) const = default;

    Cell& at(int r, int c) { return cells[r][c]; }
    const Cell& at(int r, int c) const { return cells[r][c]; }

    int goals_total() const {
        int total = 0;
        for (int g : goals_remaining)
            total += g;
        return total;
    }
};

struct MoveResult {
    bool valid = false;
    int collected = 0;
    bool completed = false;
    double reward = 0.0;
};

// Outcome of resolving one click, before gravity and refill. Exposed so
// tests can check piece conservation at the resolution boundary.
struct ClickResult {
    std::vector<Piece> removed;
    std::optional<Piece> spawned;
    int collected = 0;
};

enum class TerminalState { Running, Completed, OutOfMoves };

using ActionMask = std::bitset<kActionCount>;

constexpr double kCollectionReward = 0.05;
constexpr double kCompletionReward = 1.0;
constexpr double kStepPenalty = -0.1;
constexpr double kInvalidPenalty = -0.5;

namespace detail {

inline bool in_bounds(int r, int c) {
    return r >= 0 && r < kBoardHeight && c >= 0 && c < kBoardWidth;
}

constexpr int kNeighborOffsets[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

}  // namespace detail

// ---------------------------------------------------------------- level loading

inline void validate_level(const LevelSpec& spec) {
    const std::string where = "level " + std::to_string(spec.id) + ": ";
    if (spec.move_limit < 1)
        throw ValidationError(where + "moveLimit must be >= 1");
    if (spec.refill_palette.empty())
        throw ValidationError(where + "refill palette is empty");
    std::array<bool, kColorCount> palette_seen{};
    for (int color : spec.refill_palette) {
        if (color < 0 || color >= kColorCount)
            throw ValidationError(where + "palette color out of range: " + std::to_string(color));
        if (palette_seen[color])
            throw ValidationError(where + "palette repeats color " + std::to_string(color));
        palette_seen[color] = true;
    }

    std::array<int, kGoalKeyCount> initial_counts{};
    bool any_placeholder = false;
    for (int r = 0; r < kBoardHeight; ++r) {
        for (int c = 0; c < kBoardWidth; ++c) {
            const CellSpec& cs = spec.cells[r][c];
            const std::string cell = "cell (" + std::to_string(r) + "," + std::to_string(c) + "): ";
            if (!cs.exists) {
                if (cs.piece || cs.random_color || cs.cover)
                    throw ValidationError(where + cell + "piece placed on non-existing cell");
                continue;
            }
            if (cs.random_color) {
                any_placeholder = true;
                if (cs.piece)
                    throw ValidationError(where + cell + "placeholder cannot also fix a piece");
            }
            if (cs.piece) {
                const Piece& p = *cs.piece;
                if (p.kind == PieceKind::Basic && (p.color < 0 || p.color >= kColorCount))
                    throw ValidationError(where + cell + "basic piece needs a color 0..5");
                if (p.kind != PieceKind::Basic && p.color != -1)
                    throw ValidationError(where + cell + "only basic pieces carry a color");
                initial_counts[goal_key(p)]++;
            }
            if (cs.cover) {
                if (!is_blocker_kind(*cs.cover))
                    throw ValidationError(where + cell + "cover piece must be a blocker");
                if (!cs.piece && !cs.random_color)
                    throw ValidationError(where + cell + "cover requires a piece underneath");
                if (cs.piece && !is_clickable_kind(cs.piece->kind))
                    throw ValidationError(where + cell + "covered piece must be clickable");
                initial_counts[goal_key(*cs.cover, -1)]++;
            }
        }
    }

    int goal_total = 0;
    for (int key = 0; key < kGoalKeyCount; ++key) {
        const int want = spec.collect_goals[key];
        if (want < 0)
            throw ValidationError(where + "goal count must be non-negative");
        if (want == 0)
            continue;
        goal_total += want;
        if (key < kColorCount) {
            const bool in_palette =
                std::find(spec.refill_palette.begin(), spec.refill_palette.end(), key) !=
                spec.refill_palette.end();
            if (initial_counts[key] == 0 && !in_palette)
                throw ValidationError(where + "goal color " + std::to_string(key) +
                                      " absent initially and not in refill palette");
        } else {
            // Non-basic pieces are never produced by refill.
            if (initial_counts[key] < want)
                throw ValidationError(where + "goal kind #" + std::to_string(key) + " needs " +
                                      std::to_string(want) + " pieces but level places " +
                                      std::to_string(initial_counts[key]));
        }
    }
    if (goal_total == 0)
        throw ValidationError(where + "level defines no collect goals");
    (void)any_placeholder;
}

inline Board load_level(const LevelSpec& spec, uint64_t seed) {
    validate_level(spec);

    Board board;
    board.level_id = spec.id;
    board.moves_left = spec.move_limit;
    board.goals_remaining = spec.collect_goals;
    board.refill_palette = spec.refill_palette;
    board.rng = Rng(seed);
    for (int key = 0; key < kGoalKeyCount; ++key)
        board.goal_kinds[key] = spec.collect_goals[key] > 0;

    auto flag_goal = [&](Piece p) {
        p.goal = board.goal_kinds[goal_key(p)];
        return p;
    };

    for (int r = 0; r < kBoardHeight; ++r) {
        for (int c = 0; c < kBoardWidth; ++c) {
            const CellSpec& cs = spec.cells[r][c];
            Cell& cell = board.at(r, c);
            cell.exists = cs.exists;
            if (!cs.exists)
                continue;
            if (cs.random_color) {
                Piece p;
                p.kind = PieceKind::Basic;
                p.color = static_cast<int8_t>(
                    spec.refill_palette[board.rng.bounded(spec.refill_palette.size())]);
                cell.push(flag_goal(p));
            } else if (cs.piece) {
                Piece p = *cs.piece;
                if (p.kind == PieceKind::BlockerC)
                    p.layers = 2;
                cell.push(flag_goal(p));
            }
            if (cs.cover) {
                Piece top;
                top.kind = *cs.cover;
                top.layers = (*cs.cover == PieceKind::BlockerC) ? 2 : 1;
                cell.push(flag_goal(top));
            }
        }
    }
    return board;
}

// ---------------------------------------------------------------- validity

inline bool is_valid_click(const Board& board, int r, int c) {
    const Cell& cell = board.at(r, c);
    if (!cell.exists)
        return false;
    const Piece* p = cell.clickable();
    if (p == nullptr)
        return false;
    if (is_power_kind(p->kind))
        return true;
    for (const auto& d : detail::kNeighborOffsets) {
        const int nr = r + d[0];
        const int nc = c + d[1];
        if (!detail::in_bounds(nr, nc))
            continue;
        const Cell& ncell = board.at(nr, nc);
        if (!ncell.exists)
            continue;
        const Piece* np = ncell.clickable();
        if (np != nullptr && np->kind == PieceKind::Basic && np->color == p->color)
            return true;
    }
    return false;
}

inline ActionMask valid_actions(const Board& board) {
    ActionMask mask;
    for (int r = 0; r < kBoardHeight; ++r)
        for (int c = 0; c < kBoardWidth; ++c)
            if (is_valid_click(board, r, c))
                mask.set(action_index(r, c));
    return mask;
}

inline TerminalState terminal_state(const Board& board) {
    if (board.goals_total() == 0)
        return TerminalState::Completed;
    if (board.moves_left == 0)
        return TerminalState::OutOfMoves;
    return TerminalState::Running;
}

// ---------------------------------------------------------------- resolution

namespace detail {

inline void tally_removed(Board& board, const Piece& piece, ClickResult& result) {
    result.removed.push_back(piece);
    if (piece.goal) {
        int& remaining = board.goals_remaining[goal_key(piece)];
        if (remaining > 0) {
            --remaining;
            ++result.collected;
        }
    }
}

// One match/power hit against a blocker piece. Returns true when the hit
// destroys it.
inline bool blocker_hit(Piece& blocker, bool from_power) {
    switch (blocker.kind) {
        case PieceKind::BlockerA: return true;
        case PieceKind::BlockerB: return from_power;
        case PieceKind::BlockerC:
            if (blocker.layers > 1) {
                --blocker.layers;
                return false;
            }
            return true;
        default: return false;
    }
}

// Rocket/bomb effect on one cell: removes the clickable piece (power pieces
// caught in the blast are removed, not detonated) and hits any blockers.
inline void power_hit_cell(Board& board, int r, int c, ClickResult& result) {
    Cell& cell = board.at(r, c);
    if (!cell.exists || cell.count == 0)
        return;
    if (cell.count == 2) {
        Piece& top = cell.pieces[1];
        if (blocker_hit(top, /*from_power=*/true)) {
            tally_removed(board, top, result);
            cell.remove_slot(1);
        }
    }
    Piece& bottom = cell.pieces[0];
    if (is_clickable_kind(bottom.kind) || blocker_hit(bottom, /*from_power=*/true)) {
        tally_removed(board, bottom, result);
        cell.remove_slot(0);
    }
}

// Match size 5-6 spawns a rocket (oriented by the group's bounding box,
// horizontal on ties), 7-8 a bomb, 9+ a magic piece.
inline PieceKind spawned_power_kind(int group_size, int bbox_width, int bbox_height) {
    if (group_size >= 9)
        return PieceKind::Magic;
    if (group_size >= 7)
        return PieceKind::Bomb;
    return bbox_height > bbox_width ? PieceKind::RocketV : PieceKind::RocketH;
}

inline void activate_power(Board& board, int r, int c, PieceKind kind, ClickResult& result) {
    // Remove the clicked power piece first. For rockets and bombs the blast
    // covers the clicked cell, so a cover sitting on it takes one power hit
    // through the area sweep like everything else.
    Cell& cell = board.at(r, c);
    tally_removed(board, cell.pieces[0], result);
    cell.remove_slot(0);

    switch (kind) {
        case PieceKind::RocketH:
            for (int cc = 0; cc < kBoardWidth; ++cc)
                power_hit_cell(board, r, cc, result);
            break;
        case PieceKind::RocketV:
            for (int rr = 0; rr < kBoardHeight; ++rr)
                power_hit_cell(board, rr, c, result);
            break;
        case PieceKind::Bomb:
            for (int rr = r - 1; rr <= r + 1; ++rr)
                for (int cc = c - 1; cc <= c + 1; ++cc)
                    if (in_bounds(rr, cc))
                        power_hit_cell(board, rr, cc, result);
            break;
        case PieceKind::Magic: {
            // Clears every basic of the most frequent color. Ties break on
            // the first tied piece in row-major order, which keeps Magic
            // equivariant under color permutation (a color-index tie-break
            // would not be). Purely color-targeted; blockers are untouched.
            std::array<int, kColorCount> counts{};
            for (int rr = 0; rr < kBoardHeight; ++rr)
                for (int cc = 0; cc < kBoardWidth; ++cc) {
                    const Piece* p = board.at(rr, cc).clickable();
                    if (p != nullptr && p->kind == PieceKind::Basic)
                        counts[p->color]++;
                }
            const int best = *std::max_element(counts.begin(), counts.end());
            if (best == 0)
                break;
            int target = -1;
            for (int rr = 0; rr < kBoardHeight && target < 0; ++rr)
                for (int cc = 0; cc < kBoardWidth && target < 0; ++cc) {
                    const Piece* p = board.at(rr, cc).clickable();
                    if (p != nullptr && p->kind == PieceKind::Basic && counts[p->color] == best)
                        target = p->color;
                }
            for (int rr = 0; rr < kBoardHeight; ++rr)
                for (int cc = 0; cc < kBoardWidth; ++cc) {
                    Cell& target_cell = board.at(rr, cc);
                    const Piece* p = target_cell.clickable();
                    if (p != nullptr && p->kind == PieceKind::Basic && p->color == target) {
                        tally_removed(board, *p, result);
                        target_cell.remove_slot(0);
                    }
                }
            break;
        }
        default: break;
    }
}

inline void resolve_basic_match(Board& board, int r, int c, ClickResult& result) {
    const int color = board.at(r, c).clickable()->color;

    // Connected same-color component over clickable basics.
    std::array<std::array<bool, kBoardWidth>, kBoardHeight> in_group{};
    std::vector<std::pair<int, int>> stack{{r, c}};
    std::vector<std::pair<int, int>> group;
    in_group[r][c] = true;
    while (!stack.empty()) {
        const auto [gr, gc] = stack.back();
        stack.pop_back();
        group.emplace_back(gr, gc);
        for (const auto& d : kNeighborOffsets) {
            const int nr = gr + d[0];
            const int nc = gc + d[1];
            if (!in_bounds(nr, nc) || in_group[nr][nc])
                continue;
            const Cell& ncell = board.at(nr, nc);
            if (!ncell.exists)
                continue;
            const Piece* np = ncell.clickable();
            if (np != nullptr && np->kind == PieceKind::Basic && np->color == color) {
                in_group[nr][nc] = true;
                stack.emplace_back(nr, nc);
            }
        }
    }

    int min_r = kBoardHeight, max_r = -1, min_c = kBoardWidth, max_c = -1;
    for (const auto& [gr, gc] : group) {
        min_r = std::min(min_r, gr);
        max_r = std::max(max_r, gr);
        min_c = std::min(min_c, gc);
        max_c = std::max(max_c, gc);
    }

    for (const auto& [gr, gc] : group) {
        Cell& cell = board.at(gr, gc);
        tally_removed(board, cell.pieces[0], result);
        cell.remove_slot(0);
    }

    const int group_size = static_cast<int>(group.size());
    if (group_size >= 5) {
        Piece spawn;
        spawn.kind = spawned_power_kind(group_size, max_c - min_c + 1, max_r - min_r + 1);
        spawn.goal = board.goal_kinds[goal_key(spawn)];
        board.at(r, c).push_bottom(spawn);
        result.spawned = spawn;
    }

    // Blockers take one hit per match: those orthogonally adjacent to the
    // group, plus covers that sat on top of a group member.
    std::array<std::array<bool, kBoardWidth>, kBoardHeight> hit{};
    auto hit_blockers_at = [&](int br, int bc) {
        if (!in_bounds(br, bc) || hit[br][bc] || in_group[br][bc])
            return;
        hit[br][bc] = true;
        Cell& cell = board.at(br, bc);
        for (int slot = cell.count - 1; slot >= 0; --slot) {
            Piece& p = cell.pieces[slot];
            if (is_blocker_kind(p.kind) && blocker_hit(p, /*from_power=*/false)) {
                tally_removed(board, p, result);
                cell.remove_slot(slot);
            }
        }
    };
    for (const auto& [gr, gc] : group) {
        // A cover left behind on a matched cell takes the hit as well.
        Cell& cell = board.at(gr, gc);
        for (int slot = cell.count - 1; slot >= 0; --slot) {
            Piece& p = cell.pieces[slot];
            if (is_blocker_kind(p.kind) && blocker_hit(p, /*from_power=*/false)) {
                tally_removed(board, p, result);
                cell.remove_slot(slot);
            }
        }
        for (const auto& d : kNeighborOffsets)
            hit_blockers_at(gr + d[0], gc + d[1]);
    }
}

}  // namespace detail

// Resolves a click: removes pieces, spawns power pieces, damages blockers
// and tallies goals. Gravity and refill are the caller's job.
// pre: is_valid_click(board, r, c)
inline ClickResult resolve_click(Board& board, int r, int c) {
    ClickResult result;
    const Piece* p = board.at(r, c).clickable();
    if (is_power_kind(p->kind)) {
        detail::activate_power(board, r, c, p->kind, result);
    } else {
        detail::resolve_basic_match(board, r, c, result);
    }
    return result;
}

// Pieces fall straight down within each column, through non-existing gaps;
// a covered stack falls as a unit.
inline void apply_gravity(Board& board) {
    for (int c = 0; c < kBoardWidth; ++c) {
        int write = kBoardHeight - 1;
        for (int r = kBoardHeight - 1; r >= 0; --r) {
            Cell& cell = board.at(r, c);
            if (!cell.exists || cell.count == 0)
                continue;
            while (write > r && !board.at(write, c).exists)
                --write;
            if (write != r) {
                Cell& dest = board.at(write, c);
                dest.count = cell.count;
                dest.pieces = cell.pieces;
                cell.count = 0;
                cell.pieces = {};
            }
            --write;
        }
    }
}

// Fills every empty existing cell with a basic piece drawn from the palette.
// Scan order (row-major) is part of the determinism contract.
inline void refill(Board& board) {
    for (int r = 0; r < kBoardHeight; ++r) {
        for (int c = 0; c < kBoardWidth; ++c) {
            Cell& cell = board.at(r, c);
            if (!cell.exists || cell.count != 0)
                continue;
            Piece p;
            p.kind = PieceKind::Basic;
            p.color = static_cast<int8_t>(
                board.refill_palette[board.rng.bounded(board.refill_palette.size())]);
            p.goal = board.goal_kinds[p.color];
            cell.push(p);
        }
    }
}

// One environment step. Invalid clicks cost -0.5 and leave the board
// untouched apart from the step counter; they do not consume a move.
inline MoveResult apply_move(Board& board, int action) {
    if (action < 0 || action >= kActionCount)
        throw std::out_of_range("action index " + std::to_string(action) + " out of range 0.." +
                                std::to_string(kActionCount - 1));
    if (terminal_state(board) != TerminalState::Running)
        throw std::logic_error("apply_move on a finished board");

    MoveResult result;
    ++board.step_count;
    const int r = action_row(action);
    const int c = action_col(action);
    if (!is_valid_click(board, r, c)) {
        result.valid = false;
        result.reward = kInvalidPenalty;
        return result;
    }

    const ClickResult click = resolve_click(board, r, c);
    --board.moves_left;
    apply_gravity(board);
    refill(board);

    result.valid = true;
    result.collected = click.collected;
    result.completed = board.goals_total() == 0;
    result.reward = kCollectionReward * click.collected +
                    (result.completed ? kCompletionReward : 0.0) + kStepPenalty;
    return result;
}

}  // namespace m2rl
