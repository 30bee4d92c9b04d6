#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "swrc/io.hpp"

using namespace swrc;

TEST_SUITE("io") {

TEST_CASE("nine-digit text round trips to float precision") {
  for (double v : {0.0, 1.0, -2.5e-7, 6.906754778648554, 1.0 / 3.0}) {
    CHECK(std::stod(format_g9(v)) == doctest::Approx(v).epsilon(1e-8));
  }
  CHECK(format_g9(0.5) == "0.5");
}

TEST_CASE("snapshot binary layout and round trip") {
  Snapshot f;
  f.nx = 3;
  f.ny = 2;
  f.frame_index = 7;
  f.step = 99;
  f.sx = {0.0f, 1.0f, -1.0f, 0.25f, 1e-6f, -0.5f};
  std::ostringstream os;
  write_snapshot(os, f);
  const std::string bytes = os.str();
  REQUIRE(bytes.size() == 16 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "SPNX");
  CHECK(bytes.substr(4, 4) == std::string("\x03\x00\x00\x00", 4));
  CHECK(bytes.substr(8, 4) == std::string("\x02\x00\x00\x00", 4));
  CHECK(bytes.substr(12, 4) == std::string("\x07\x00\x00\x00", 4));
  CHECK(bytes.substr(20, 4) == std::string("\x00\x00\x80\x3f", 4));  // 1.0f

  std::istringstream is(bytes);
  const auto g = read_snapshot(is);
  CHECK(g.nx == 3);
  CHECK(g.ny == 2);
  CHECK(g.frame_index == 7);
  CHECK(g.sx == f.sx);

  std::istringstream bad("SPNY" + bytes.substr(4));
  CHECK_THROWS_AS(read_snapshot(bad), FormatError);
  std::istringstream cut(bytes.substr(0, 30));
  CHECK_THROWS_AS(read_snapshot(cut), FormatError);
  f.sx.pop_back();
  CHECK_THROWS_AS(write_snapshot(os, f), FormatError);
}

TEST_CASE("diverging colour map") {
  std::vector<double> v(100, 0.0);
  v[0] = 1.0;
  v[1] = -1.0;
  v[2] = 0.5;
  v[3] = 100.0;  // above the 99th percentile: saturates
  const auto img = render_diverging(v, 10, 10);
  CHECK(percentile_abs(v) == doctest::Approx(1.0));
  CHECK(img.pixel(0, 0) == std::array<std::uint8_t, 3>{255, 0, 0});
  CHECK(img.pixel(1, 0) == std::array<std::uint8_t, 3>{0, 0, 255});
  CHECK(img.pixel(2, 0) == std::array<std::uint8_t, 3>{255, 128, 128});
  CHECK(img.pixel(3, 0) == std::array<std::uint8_t, 3>{255, 0, 0});
  CHECK(img.pixel(5, 5) == std::array<std::uint8_t, 3>{255, 255, 255});

  const auto blank = render_diverging(std::vector<double>(4, 0.0), 2, 2);
  for (auto b : blank.rgb) CHECK(b == 255);

  v[4] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(render_diverging(v, 10, 10), FormatError);
  v[4] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(render_diverging(v, 10, 10), FormatError);
  CHECK_THROWS_AS(render_diverging(v, 5, 5), FormatError);
}

TEST_CASE("ppm round trip") {
  const CellRect region{30, 30, 160, 160};
  ElectrodeSet layout;
  layout.positions = {{30, 30}, {189, 189}, {100, 40}};
  ReadoutModel m;
  m.w_out = Eigen::RowVector3d(2.0, -3.0, 0.5);
  const auto img = render_weight_map(m, layout, region);
  std::ostringstream os;
  write_ppm(os, img);
  CHECK(os.str().rfind("P6\n160 160\n255\n", 0) == 0);
  CHECK(os.str().size() == 15 + 160 * 160 * 3);
  std::istringstream is(os.str());
  const auto back = read_ppm(is);
  CHECK(back.width == 160);
  CHECK(back.rgb == img.rgb);
  CHECK(img.pixel(0, 0)[1] < 255);      // positive: red
  CHECK(img.pixel(159, 159)[2] == 255);  // negative: blue
  CHECK(img.pixel(70, 10)[0] == 255);

  layout.positions[2] = {0, 0};
  CHECK_THROWS_AS(render_weight_map(m, layout, region), FormatError);
  std::istringstream p3("P3\n1 1\n255\n");
  CHECK_THROWS_AS(read_ppm(p3), FormatError);
}

TEST_CASE("weights and electrodes csv round trip") {
  ElectrodeSet layout;
  layout.positions = {{53, 53}, {107, 53}};
  ReadoutModel m;
  m.w_out = Eigen::RowVector2d(0.125, -7.5e-3);
  std::stringstream ws;
  write_weights_csv(ws, m, layout);
  CHECK(ws.str() == "electrode,ix,iy,weight\n0,53,53,0.125\n1,107,53,-0.0075\n");
  const auto t = read_weights_csv(ws);
  CHECK(t.cells == layout.positions);
  CHECK(t.weights == std::vector<double>{0.125, -7.5e-3});

  std::stringstream es;
  write_electrodes_csv(es, layout);
  CHECK(read_electrodes_csv(es).positions == layout.positions);

  std::istringstream bad("ix,iy\n1,2,3\n");
  CHECK_THROWS_AS(read_electrodes_csv(bad), FormatError);
  std::istringstream nan("electrode,ix,iy,weight\n0,1,2,abc\n");
  CHECK_THROWS_AS(read_weights_csv(nan), FormatError);
}

TEST_CASE("features csv round trip") {
  FeatureMatrix fm;
  fm.values = Eigen::MatrixXd::Random(2, 5);
  fm.electrode_ids = {4, 9};
  fm.step_labels = {Waveform::kSin, Waveform::kSin, Waveform::kSquare, Waveform::kSquare, Waveform::kSin};
  fm.warmup_mask = {true, false, true, false, true};
  std::stringstream ss;
  write_features_csv(ss, fm);
  const auto back = read_features_csv(ss);
  CHECK(back.electrode_ids == fm.electrode_ids);
  CHECK(back.step_labels == fm.step_labels);
  CHECK(back.warmup_mask == fm.warmup_mask);
  CHECK(back.step_offset == std::vector<int>{0, 1, 0, 1, 0});
  CHECK((back.values - fm.values).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("csv line splitting keeps empty fields") {
  CHECK(split_csv_line("a,,b\r") == std::vector<std::string>{"a", "", "b"});
}

}
