#include "helpers.hpp"

#include "shapepose/annotations.hpp"
#include "shapepose/error.hpp"
#include "shapepose/image.hpp"

#include <fstream>

using namespace shapepose;

TEST_SUITE("imagedata") {

TEST_CASE("luminance endpoints and monotonicity") {
  CHECK(luminance(0, 0, 0) == doctest::Approx(0).epsilon(1e-6));
  CHECK(luminance(255, 255, 255) == doctest::Approx(1).epsilon(1e-6));
  for (int v = 0; v < 255; ++v) {
    CHECK(luminance(v + 1, 0, 0) > luminance(v, 0, 0));
    CHECK(luminance(0, v + 1, 0) > luminance(0, v, 0));
    CHECK(luminance(0, 0, v + 1) > luminance(0, 0, v));
  }
}

TEST_CASE("natural ordering of file names") {
  CHECK(natural_less("f2.png", "f10.png"));
  CHECK_FALSE(natural_less("f10.png", "f2.png"));
  CHECK(natural_less("a.png", "b.png"));
  CHECK(natural_less("frame_009", "frame_10"));
}

TEST_CASE("png round trip and natural frame order") {
  TempDir dir;
  Image a(6, 5), b(6, 5);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 5; ++x) {
      a(y, x) = (y * 5 + x) / 29.0;
      b(y, x) = 1.0 - a(y, x);
    }
  write_png(dir / "f10.png", b);
  write_png(dir / "f2.png", a);
  std::ofstream(dir / "notes.txt") << "x";

  const Image back = read_png(dir / "f2.png");
  REQUIRE(back.rows() == 6);
  REQUIRE(back.cols() == 5);
  CHECK((back - a).abs().maxCoeff() <= 0.5 / 255 + 1e-12);

  const FrameSequence seq = load_frames(dir.path);
  REQUIRE(seq.size() == 2);
  CHECK(seq.names[0] == "f2.png");
  CHECK(seq.names[1] == "f10.png");
  CHECK(seq.width() == 5);
  CHECK(seq.height() == 6);
}

TEST_CASE("missing inputs") {
  TempDir dir;
  CHECK_THROWS_KIND(read_png(dir / "absent.png"), ErrorKind::NotFound);
  CHECK_THROWS_KIND(load_frames(dir / "absent"), ErrorKind::NotFound);
  CHECK_THROWS_KIND(parse_annotations(dir / "absent.json"), ErrorKind::NotFound);
}

TEST_CASE("annotation json round trip") {
  const std::string text = R"({"part_count": 2, "sequences": [{"dir": "seq", "annotations": [
      {"frame": 0, "keypoints": [[1.5, 2], [3, 4.25]], "radii": [2, 3]},
      {"frame": 3, "keypoints": [[5, 6], [7, 8]]}]}]})";
  const AnnotationSet a = parse_annotations_json(text);
  REQUIRE(a.sequences.size() == 1);
  const auto& anns = a.sequences[0].annotations;
  REQUIRE(anns.size() == 2);
  CHECK(anns[0].keypoints[1].y() == 4.25);
  REQUIRE(anns[0].radii.has_value());
  CHECK((*anns[0].radii)[1] == 3);
  CHECK_FALSE(anns[1].radii.has_value());
  CHECK(anns[1].frame_index == 3);
  CHECK(parse_annotations_json(serialize_annotations(a)) == a);
}

TEST_CASE("malformed annotations") {
  CHECK_THROWS_KIND(parse_annotations_json("{"), ErrorKind::ParseError);
  CHECK_THROWS_KIND(parse_annotations_json(R"({"part_count": 2, "sequences": [{"dir": "s", "annotations": [
      {"frame": 0, "keypoints": [[1, 2]]}]}]})"),
                    ErrorKind::ArityError);
}

TEST_CASE("bounds validation") {
  Annotation a;
  a.keypoints = {{0, 1}, {9, 2}};
  CHECK_NOTHROW(validate_bounds(a, 10, 10));
  a.keypoints[1].x() = 9.01;
  CHECK_THROWS_KIND(validate_bounds(a, 10, 10), ErrorKind::BoundsError);
  a.keypoints[1].x() = 5;
  a.radii = std::vector<double>{1, 0};
  CHECK_THROWS_KIND(validate_bounds(a, 10, 10), ErrorKind::BoundsError);
}

TEST_CASE("dataset loading resolves relative frame dirs") {
  TempDir dir;
  std::filesystem::create_directories(dir / "seq");
  write_png(dir / "seq" / "f0.png", Image::Constant(8, 8, 0.5));
  write_png(dir / "seq" / "f1.png", Image::Constant(8, 8, 0.5));
  std::ofstream(dir / "ann.json") << R"({"part_count": 1, "sequences": [{"dir": "seq", "annotations": [
      {"frame": 1, "keypoints": [[3, 4]]}]}]})";
  const Dataset d = load_dataset(dir / "ann.json");
  REQUIRE(d.sequences.size() == 1);
  CHECK(d.sequences[0].frames.size() == 2);
  CHECK(d.annotation_count() == 1);
}

}  // TEST_SUITE
