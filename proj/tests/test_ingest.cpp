#include <gtest/gtest.h>

#include <cmath>

#include "rallypose/error.hpp"
#include "rallypose/ingest.hpp"
#include "rallypose/random.hpp"
#include "rallypose/textio.hpp"
#include "support.hpp"

using namespace rallypose;

namespace {

std::string kp_record(std::int64_t frame, std::int64_t player, std::size_t joints) {
    std::string s = "{\"frame\":" + std::to_string(frame) + ",\"player_id\":" + std::to_string(player) + ",\"kp\":[";
    for (std::size_t j = 0; j < joints; ++j) {
        s += (j ? "," : "") + std::string("[") + std::to_string(10 + j) + ",20,0.9]";
    }
    return s + "]}";
}

} // namespace

TEST(Detections, ParsesFields) {
    const auto d = parse_detections("{\"frame\":0,\"bbox\":[10,20,50,90],\"score\":0.98}\n");
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0], (Detection{0, {10, 20, 50, 90}, 0.98}));
}

TEST(Detections, RejectsInvertedBox) {
    try {
        parse_detections("{\"frame\":0,\"bbox\":[50,20,10,90],\"score\":0.5}\n");
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "bbox");
    }
}

TEST(Detections, EmptyFile) {
    EXPECT_TRUE(parse_detections("").empty());
}

TEST(Detections, MalformedLineReportsLine) {
    try {
        parse_detections("{\"frame\":0,\"bbox\":[1,2,3,4],\"score\":0.5}\n{\"frame\":1,\"bbox\":[1,2,3]}\n");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Detections, RejectsScoreOutOfRange) {
    EXPECT_THROW(parse_detections("{\"frame\":0,\"bbox\":[1,2,3,4],\"score\":1.5}\n"), ValidationError);
}

TEST(Keypoints, ParsesSeventeenTriples) {
    const auto k = parse_keypoints(kp_record(3, 1, 17) + "\n");
    ASSERT_EQ(k.size(), 1u);
    EXPECT_EQ(k[0].frame, 3);
    EXPECT_EQ(k[0].player_id, 1);
    EXPECT_EQ(k[0].keypoints[16].x, 26.0);
    EXPECT_EQ(k[0].keypoints[16].visibility, 0.9);
}

TEST(Keypoints, CoordinatesSnapToGrid) {
    const auto k = parse_keypoints(
        "{\"frame\":0,\"player_id\":0,\"kp\":[" + [] {
            std::string s;
            for (int j = 0; j < 17; ++j) {
                s += std::string(j ? "," : "") + "[100.1,0.0004,1]";
            }
            return s;
        }() + "]}\n");
    EXPECT_EQ(k[0].keypoints[0].x, 102502.0 / 1024.0);
    EXPECT_EQ(k[0].keypoints[0].y, 0.0);
    EXPECT_EQ(snap_coordinate(snap_coordinate(123.456)), snap_coordinate(123.456));
    EXPECT_LE(std::abs(snap_coordinate(123.456) - 123.456), 0.5 / 1024.0);
}

TEST(Keypoints, RejectsSixteenTriples) {
    try {
        parse_keypoints(kp_record(0, 0, 16) + "\n");
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("expected 17 keypoints"), std::string::npos);
    }
}

TEST(Keypoints, SameFrameDifferentPlayers) {
    const auto k = parse_keypoints(kp_record(4, 0, 17) + "\n" + kp_record(4, 1, 17) + "\n");
    EXPECT_EQ(k.size(), 2u);
}

TEST(Annotations, ParsesRow) {
    for (const char* text : {"1,305,0\n", "rally_id,frame,player_id\n1,305,0\n"}) {
        const auto a = parse_annotations(text);
        ASSERT_EQ(a.size(), 1u);
        EXPECT_EQ(a[0], (ShotAnnotation{305, 0, 1}));
    }
}

TEST(Annotations, RejectsDuplicate) {
    EXPECT_THROW(parse_annotations("1,305,0\n1,305,0\n"), ValidationError);
}

TEST(Annotations, SortsByFrame) {
    const auto a = parse_annotations("rally_id,frame,player_id\n1,400,1\n1,100,0\n2,250,1\n");
    ASSERT_EQ(a.size(), 3u);
    EXPECT_EQ(a[0].frame, 100);
    EXPECT_EQ(a[1].frame, 250);
    EXPECT_EQ(a[2].frame, 400);
}

TEST(Corners, RequiresFourBoxesInsideFrame) {
    const std::string ok = "{\"width\":1280,\"height\":720,\"boxes\":[[0,0,10,10],[100,0,110,10],[0,100,10,110],"
                           "[100,100,110,110]]}";
    EXPECT_EQ(parse_corners(ok).boxes[3], (BBox{100, 100, 110, 110}));
    EXPECT_THROW(parse_corners("{\"width\":1280,\"height\":720,\"boxes\":[[0,0,10,10]]}"), ValidationError);
    EXPECT_THROW(parse_corners("{\"width\":100,\"height\":100,\"boxes\":[[0,0,10,10],[100,0,110,10],[0,50,10,60],"
                               "[50,50,60,60]]}"),
                 ValidationError);
}

TEST(RoundTrip, RandomDetectionsAndKeypoints) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto rng = make_rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1000.0);
        std::vector<Detection> dets;
        std::vector<KeypointFrame> kps;
        for (std::int64_t f = 0; f < 30; ++f) {
            const double x = u(rng), y = u(rng);
            dets.push_back({f, {x, y, x + 1 + u(rng), y + 1 + u(rng)}, u(rng) / 1000.0});
            kps.push_back(testutil::random_pose(rng, f, static_cast<std::int64_t>(seed % 3)));
        }
        const auto dtext = format_detections(dets);
        EXPECT_EQ(parse_detections(dtext), dets);
        EXPECT_EQ(format_detections(parse_detections(dtext)), dtext);
        const auto ktext = format_keypoints(kps);
        EXPECT_EQ(parse_keypoints(ktext), kps);
        EXPECT_EQ(format_keypoints(parse_keypoints(ktext)), ktext);
    }
}

TEST(RoundTrip, AnnotationsAndCornersThroughFiles) {
    testutil::TempDir dir("ingest");
    const std::vector<ShotAnnotation> ann{{100, 0, 1}, {150, 1, 1}, {900, 0, 2}};
    write_text_file(dir / "a.csv", format_annotations(ann));
    EXPECT_EQ(read_annotations(dir / "a.csv"), ann);
    EXPECT_EQ(format_annotations(read_annotations(dir / "a.csv")), read_text_file(dir / "a.csv"));

    CornerBoxSet c{1280, 720, {BBox{10, 10, 30, 30}, BBox{1200, 10, 1220, 30}, BBox{1200, 600, 1220, 620},
                               BBox{10, 600, 30, 620}}};
    write_text_file(dir / "c.json", format_corners(c));
    EXPECT_EQ(read_corners(dir / "c.json"), c);
    EXPECT_EQ(format_corners(read_corners(dir / "c.json")), read_text_file(dir / "c.json"));
}
