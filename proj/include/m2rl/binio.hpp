#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "m2rl/engine.hpp"
#include "m2rl/error.hpp"

namespace m2rl::binio {

// Little-endian fixed-width primitives for checkpoint files. The format is
// only written/read by this code; we assume a little-endian host.

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in)
        throw ValidationError("unexpected end of binary stream");
    return value;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_pod<uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    const uint64_t n = read_pod<uint64_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in)
        throw ValidationError("unexpected end of binary stream");
    return s;
}

template <typename T>
void write_vec(std::ostream& out, const std::vector<T>& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    write_pod<uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_vec(std::istream& in) {
    static_assert(std::is_trivially_copyable_v<T>);
    const uint64_t n = read_pod<uint64_t>(in);
    std::vector<T> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in)
        throw ValidationError("unexpected end of binary stream");
    return v;
}

inline void write_board(std::ostream& out, const Board& board) {
    write_pod<int32_t>(out, board.level_id);
    write_pod<int32_t>(out, board.moves_left);
    write_pod<int64_t>(out, board.step_count);
    for (int g : board.goals_remaining)
        write_pod<int32_t>(out, g);
    for (bool k : board.goal_kinds)
        write_pod<uint8_t>(out, k ? 1 : 0);
    write_pod<uint32_t>(out, static_cast<uint32_t>(board.refill_palette.size()));
    for (int color : board.refill_palette)
        write_pod<int32_t>(out, color);
    for (uint64_t word : board.rng.save())
        write_pod<uint64_t>(out, word);
    for (int r = 0; r < kBoardHeight; ++r) {
        for (int c = 0; c < kBoardWidth; ++c) {
            const Cell& cell = board.at(r, c);
            write_pod<uint8_t>(out, cell.exists ? 1 : 0);
            write_pod<uint8_t>(out, cell.count);
            for (int slot = 0; slot < cell.count; ++slot) {
                const Piece& p = cell.pieces[slot];
                write_pod<uint8_t>(out, static_cast<uint8_t>(p.kind));
                write_pod<int8_t>(out, p.color);
                write_pod<uint8_t>(out, p.goal ? 1 : 0);
                write_pod<uint8_t>(out, p.layers);
            }
        }
    }
}

inline Board read_board(std::istream& in) {
    Board board;
    board.level_id = read_pod<int32_t>(in);
    board.moves_left = read_pod<int32_t>(in);
    board.step_count = read_pod<int64_t>(in);
    for (int& g : board.goals_remaining)
        g = read_pod<int32_t>(in);
    for (bool& k : board.goal_kinds)
        k = read_pod<uint8_t>(in) != 0;
    const uint32_t palette_size = read_pod<uint32_t>(in);
    board.refill_palette.resize(palette_size);
    for (int& color : board.refill_palette)
        color = read_pod<int32_t>(in);
    std::array<uint64_t, 4> rng_words;
    for (uint64_t& word : rng_words)
        word = read_pod<uint64_t>(in);
    board.rng.restore(rng_words);
    for (int r = 0; r < kBoardHeight; ++r) {
        for (int c = 0; c < kBoardWidth; ++c) {
            Cell& cell = board.at(r, c);
            cell.exists = read_pod<uint8_t>(in) != 0;
            const uint8_t count = read_pod<uint8_t>(in);
            for (int slot = 0; slot < count; ++slot) {
                Piece p;
                p.kind = static_cast<PieceKind>(read_pod<uint8_t>(in));
                p.color = read_pod<int8_t>(in);
                p.goal = read_pod<uint8_t>(in) != 0;
                p.layers = read_pod<uint8_t>(in);
                cell.push(p);
            }
        }
    }
    return board;
}

}  // namespace m2rl::binio
