#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "m2rl/engine.hpp"
#include "m2rl/rng.hpp"

namespace m2rl {

// Channel layout of the board observation. 15 channels, plus the action
// mask as channel 15 when the soft mask is enabled.
enum ObsChannel : int {
    kChIsCell = 0,
    kChColor0 = 1,  // color c lives in channel 1 + c
    kChIsCollectGoal = 7,
    kChClickableTrue = 8,
    kChClickableFalse = 9,
    kChIdBasic = 10,
    kChIdRocketH = 11,
    kChIdRocketV = 12,
    kChIdBomb = 13,
    kChIdMagic = 14,
    kChActionMask = 15,
};

constexpr int kBaseChannels = 15;
constexpr int kSoftMaskChannels = 16;

constexpr int observation_channels(bool soft_mask) {
    return soft_mask ? kSoftMaskChannels : kBaseChannels;
}

struct Observation {
    int channels = kBaseChannels;
    std::vector<float> data;  // [channels][kBoardHeight][kBoardWidth]

    float& at(int ch, int r, int c) { return data[(ch * kBoardHeight + r) * kBoardWidth + c]; }
    float at(int ch, int r, int c) const { return data[(ch * kBoardHeight + r) * kBoardWidth + c]; }
};

// Bijection on the 6 colors. Identity by default (the no-shuffle case).
struct ColorPermutation {
    std::array<int8_t, kColorCount> map{0, 1, 2, 3, 4, 5};

    int operator()(int color) const { return map[color]; }
    bool operator==(const ColorPermutation&) const = default;

    bool is_identity() const {
        for (int i = 0; i < kColorCount; ++i)
            if (map[i] != i)
                return false;
        return true;
    }
};

// Range-checked action <-> (row, col) conversions; index = row*13 + col.
inline int to_action(int row, int col) {
    if (row < 0 || row >= kBoardHeight || col < 0 || col >= kBoardWidth)
        throw std::out_of_range("cell (" + std::to_string(row) + "," + std::to_string(col) +
                                ") outside the 9x13 board");
    return action_index(row, col);
}

inline std::pair<int, int> to_cell(int action) {
    if (action < 0 || action >= kActionCount)
        throw std::out_of_range("action " + std::to_string(action) + " outside 0..116");
    return {action_row(action), action_col(action)};
}

// Uniform over all 720 color permutations (Fisher-Yates).
inline ColorPermutation sample_permutation(Rng& rng) {
    ColorPermutation perm;
    for (int i = kColorCount - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.bounded(static_cast<uint64_t>(i) + 1));
        std::swap(perm.map[i], perm.map[j]);
    }
    return perm;
}

namespace detail {

inline int id_channel(PieceKind kind) {
    switch (kind) {
        case PieceKind::Basic: return kChIdBasic;
        case PieceKind::RocketH: return kChIdRocketH;
        case PieceKind::RocketV: return kChIdRocketV;
        case PieceKind::Bomb: return kChIdBomb;
        case PieceKind::Magic: return kChIdMagic;
        default: return -1;  // blockers have no id channel
    }
}

}  // namespace detail

// Pure function of (board, perm, soft_mask). A piece of color x is written
// into color channel perm(x). A covered stack contributes the clickable
// bottom piece to isClickableTrue and the blocker on top to isClickableFalse.
inline Observation encode(const Board& board, const ColorPermutation& perm, bool soft_mask) {
    Observation obs;
    obs.channels = observation_channels(soft_mask);
    obs.data.assign(static_cast<size_t>(obs.channels) * kActionCount, 0.0f);

    for (int r = 0; r < kBoardHeight; ++r) {
        for (int c = 0; c < kBoardWidth; ++c) {
            const Cell& cell = board.at(r, c);
            if (!cell.exists)
                continue;
            obs.at(kChIsCell, r, c) = 1.0f;
            for (int slot = 0; slot < cell.count; ++slot) {
                const Piece& p = cell.pieces[slot];
                const bool clickable = is_clickable_kind(p.kind);
                obs.at(clickable ? kChClickableTrue : kChClickableFalse, r, c) = 1.0f;
                if (p.goal)
                    obs.at(kChIsCollectGoal, r, c) = 1.0f;
                const int id_ch = detail::id_channel(p.kind);
                if (id_ch >= 0)
                    obs.at(id_ch, r, c) = 1.0f;
                if (p.kind == PieceKind::Basic)
                    obs.at(kChColor0 + perm(p.color), r, c) = 1.0f;
            }
        }
    }

    if (soft_mask) {
        const ActionMask mask = valid_actions(board);
        for (int a = 0; a < kActionCount; ++a)
            if (mask.test(a))
                obs.at(kChActionMask, action_row(a), action_col(a)) = 1.0f;
    }
    return obs;
}

}  // namespace m2rl
