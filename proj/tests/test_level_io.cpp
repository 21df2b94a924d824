#include <gtest/gtest.h>

#include <string>

#include "m2rl/level_io.hpp"

namespace m2rl {
namespace {

const char* kSample =
    "m2level v1\n"
    "id 42\n"
    "moves 15\n"
    "palette 0 2 4\n"
    "goal 0 12\n"
    "goal A 2\n"
    "shape\n"
    "#############\n"
    "#XXXXX#######\n"
    "#XXXXX#######\n"
    "#XXXXX#######\n"
    "#XXXXX#######\n"
    "#############\n"
    "#############\n"
    "#############\n"
    "#############\n"
    "pieces\n"
    "#############\n"
    "#00?24#######\n"
    "#?A?h2#######\n"
    "#024v0#######\n"
    "#0om?4#######\n"
    "#############\n"
    "#############\n"
    "#############\n"
    "#############\n"
    "cover\n"
    "#############\n"
    "#..A.B#######\n"
    "#.....#######\n"
    "#.A...#######\n"
    "#.....#######\n"
    "#############\n"
    "#############\n"
    "#############\n"
    "#############\n";

TEST(LevelIo, ParseSample) {
    const LevelSpec spec = parse_level(kSample);
    EXPECT_EQ(spec.id, 42);
    EXPECT_EQ(spec.move_limit, 15);
    EXPECT_EQ(spec.refill_palette, (std::vector<int>{0, 2, 4}));
    EXPECT_EQ(spec.collect_goals[0], 12);
    EXPECT_EQ(spec.collect_goals[10], 2);
    EXPECT_FALSE(spec.cells[0][0].exists);
    EXPECT_TRUE(spec.cells[1][1].exists);
    EXPECT_EQ(spec.cells[1][1].piece->color, 0);
    EXPECT_TRUE(spec.cells[2][1].random_color);
    EXPECT_EQ(spec.cells[2][2].piece->kind, PieceKind::BlockerA);
    EXPECT_EQ(spec.cells[2][4].piece->kind, PieceKind::RocketH);
    EXPECT_EQ(spec.cells[4][2].piece->kind, PieceKind::Bomb);
    EXPECT_EQ(spec.cells[4][3].piece->kind, PieceKind::Magic);
    EXPECT_EQ(spec.cells[1][3].cover, PieceKind::BlockerA);
    EXPECT_EQ(spec.cells[1][5].cover, PieceKind::BlockerB);
}

TEST(LevelIo, RoundTripIsIdentity) {
    const LevelSpec first = parse_level(kSample);
    const std::string canonical = serialize_level(first);
    const LevelSpec second = parse_level(canonical);
    // parse -> serialize -> parse is the identity on values...
    EXPECT_EQ(serialize_level(second), canonical);
    for (int r = 0; r < kBoardHeight; ++r)
        for (int c = 0; c < kBoardWidth; ++c) {
            EXPECT_EQ(first.cells[r][c].exists, second.cells[r][c].exists);
            EXPECT_EQ(first.cells[r][c].random_color, second.cells[r][c].random_color);
            EXPECT_EQ(first.cells[r][c].piece, second.cells[r][c].piece);
            EXPECT_EQ(first.cells[r][c].cover, second.cells[r][c].cover);
        }
    EXPECT_EQ(first.collect_goals, second.collect_goals);
    EXPECT_EQ(first.refill_palette, second.refill_palette);
    // ...and serializing a canonical file is byte-stable.
    EXPECT_EQ(serialize_level(parse_level(canonical)), canonical);
}

TEST(LevelIo, MissingHeaderRejected) {
    EXPECT_THROW(parse_level("id 1\n"), ValidationError);
}

TEST(LevelIo, BadPieceCharNamesCell) {
    std::string text = kSample;
    const size_t pos = text.find("#00?24#");
    text[pos + 1] = 'z';
    try {
        parse_level(text);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("(1,1)"), std::string::npos);
        EXPECT_NE(msg.find("'z'"), std::string::npos);
    }
}

TEST(LevelIo, WrongRowLengthRejected) {
    std::string text = kSample;
    const size_t pos = text.find("#XXXXX#######\n");
    text.insert(pos + 13, "#");  // row now 14 chars
    EXPECT_THROW(parse_level(text), ValidationError);
}

TEST(LevelIo, PieceOnNonExistingCellRejected) {
    std::string text = kSample;
    const size_t pos = text.find("pieces\n");
    text[pos + 7] = '3';  // (0,0) does not exist
    EXPECT_THROW(parse_level(text), ValidationError);
}

TEST(LevelIo, UnreachableGoalRejected) {
    std::string text = kSample;
    const size_t pos = text.find("goal 0 12");
    text.replace(pos, 9, "goal 5 12");  // color 5 never appears
    try {
        parse_level(text);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("color 5"), std::string::npos);
    }
}

TEST(LevelIo, LoadBundledPack) {
    const auto pack = load_level_pack(M2RL_LEVELS_DIR);
    // 11 campaign levels plus the mini training level.
    ASSERT_GE(pack.size(), 12u);
    for (int id = 1; id <= 11; ++id)
        ASSERT_TRUE(pack.count(id)) << "missing level " << id;
    ASSERT_TRUE(pack.count(100));  // mini

    // Every bundled level loads and starts with at least one valid action.
    for (const auto& [id, spec] : pack) {
        const Board board = load_level(spec, 7);
        EXPECT_GT(valid_actions(board).count(), 0u) << "level " << id;
    }
}

TEST(LevelIo, BundledPackIsCanonical) {
    namespace fs = std::filesystem;
    for (const auto& entry : fs::directory_iterator(M2RL_LEVELS_DIR)) {
        if (entry.path().extension() != ".txt")
            continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        EXPECT_EQ(serialize_level(parse_level(buf.str())), buf.str())
            << entry.path().filename();
    }
}

TEST(LevelIo, RenderShowsGoalsAndPieces) {
    const LevelSpec spec = parse_level(kSample);
    const Board board = load_level(spec, 3);
    const std::string render = render_board(board);
    EXPECT_NE(render.find("moves_left=15"), std::string::npos);
    EXPECT_NE(render.find("0=12"), std::string::npos);
    EXPECT_NE(render.find("A=2"), std::string::npos);
}

}  // namespace
}  // namespace m2rl
