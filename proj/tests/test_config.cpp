#include <doctest.h>

#include <set>

#include "swrc/config.hpp"

using namespace swrc;

TEST_SUITE("config") {

TEST_CASE("empty text gives the paper-profile defaults") {
  const auto c = parse_config_text("");
  CHECK(c.profile == Profile::kPaper);
  CHECK(c.grid.nx == 220);
  CHECK(c.grid.cell_size == doctest::Approx(10e-9));
  CHECK(c.integrator.substeps == 25);
  CHECK(c.schedule.n_train_sections == 15);
  CHECK(c.schedule.n_test_sections == 8);
  CHECK(c.schedule.section_len == 1280);
  CHECK(c.window_steps() == 40);
  CHECK(c.window_steps(2.2e9) == 45);
  CHECK(c.test_frequencies.size() == 13);
  CHECK(c.test_frequencies.front() == doctest::Approx(2.2e9));
  CHECK(c.test_frequencies.back() == doctest::Approx(2.8e9));
}

TEST_CASE("fast profile and precedence") {
  CHECK(parse_config_text("[experiment]\nprofile = fast\n").grid.nx == 110);
  ConfigOverrides o;
  o.profile = Profile::kPaper;
  o.seed = 42;
  o.threads = 2;
  o.out_dir = "elsewhere";
  const auto c = parse_config_text("[experiment]\nprofile = fast\nseed = 7\nthreads = 1\n", o);
  CHECK(c.profile == Profile::kPaper);
  CHECK(c.grid.nx == 220);
  CHECK(c.seed == 42u);
  CHECK(c.threads == 2);
  CHECK(c.out_dir == "elsewhere");
  // file keys override profile defaults
  CHECK(parse_config_text("[experiment]\nprofile = fast\n[geometry]\nnx = 120\n").grid.nx == 120);
}

TEST_CASE("values carry their key's unit") {
  const auto c = parse_config_text(
      "[geometry]\ncell_size_nm = 20\nnx = 110\nny = 110\n"
      "[material]\nms_kA_per_m = 100\nh_bias_x_A_per_m = 500  # in-plane\n"
      "[integrator]\nsubsteps = 5\n"
      "[schedule]\nt0_ns = 0.01\nfrequency_GHz = 2.5\n"
      "[experiment]\ntest_frequencies_GHz = 2.4, 2.5\n");
  CHECK(c.grid.cell_size == doctest::Approx(20e-9));
  CHECK(c.material.ms == doctest::Approx(100e3));
  CHECK(c.material.h_bias_x == doctest::Approx(500.0));
  CHECK(c.schedule.t0 == doctest::Approx(1e-11));
  CHECK(c.test_frequencies == std::vector<double>{2.4e9, 2.5e9});
}

TEST_CASE("unit errors") {
  CHECK_THROWS_AS(parse_config_text("[geometry]\ncell_size = 10\n"), UnitError);
  CHECK_THROWS_AS(parse_config_text("[geometry]\ncell_size_um = 0.01\n"), UnitError);
  CHECK_THROWS_AS(parse_config_text("[geometry]\ncell_size_nm = 10nm\n"), UnitError);
  CHECK_THROWS_AS(parse_config_text("[schedule]\nfrequency_GHz = 2.5 GHz\n"), UnitError);
}

TEST_CASE("syntax errors report line and column") {
  try {
    parse_config_text("[geometry]\nnx = 220\n  ny 220\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
  }
  try {
    parse_config_text("\n[geometry\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_config_text("nx = 220\n"), SyntaxError);
  CHECK_THROWS_AS(parse_config_text("[geometry]\nnx =\n"), SyntaxError);
  CHECK_THROWS_AS(parse_config_text("[geometry]\nn-x = 3\n"), SyntaxError);
}

TEST_CASE("validation errors") {
  CHECK_THROWS_AS(parse_config_text("[schedule]\nn_train_sections = -1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("[schedule]\nn_test_sections = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("[experiment]\nrepeats = two\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("[experiment]\ncompartments = 0, 10\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("[experiment]\nprofile = slow\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("[experiment]\narrangement = hex\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[extra]\nx = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("[geometry]\nnx = 10\nny = 10\n"), ValidationError);
  try {
    parse_config_text("[geometry]\n\nwidth = 3\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  try {
    parse_config_text("[geometry]\nnx = 220\nnx = 220\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
}

TEST_CASE("stability is checked against the macro step") {
  CHECK_THROWS_AS(parse_config_text("[integrator]\nsubsteps = 1\n"), StabilityError);
  CHECK_NOTHROW(parse_config_text("[geometry]\ncell_size_nm = 20\nnx = 110\nny = 110\n[integrator]\nsubsteps = 5\n"));
  CHECK_THROWS_AS(parse_config_text("[schedule]\nt0_ns = 0.1\n"), StabilityError);
}

TEST_CASE("resolved text parses back to the same config") {
  auto c = parse_config_text("[experiment]\nprofile = fast\nseed = 9\nn_o_list = 4, 9\n"
                             "test_frequencies_GHz = 2.2:2.8:0.1\n[readout]\namplitude = peak\n");
  CHECK(c.test_frequencies.size() == 7);
  const auto text = resolved_text(c);
  const auto back = parse_config_text(text);
  CHECK(resolved_text(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(back.readout.mode == AmplitudeMode::kTrailingPeak);
  CHECK(back.n_o_list == std::vector<int>{4, 9});
  c.seed = 10;
  CHECK(config_hash(c) != config_hash(back));
  CHECK(config_hash(c).size() == 16);
}

TEST_CASE("derived seeds are distinct per stream and index") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(1, s, i));
  }
  CHECK(seen.size() == 300);
  CHECK(derive_seed(1, 1, 0) == derive_seed(1, 1, 0));
  CHECK(derive_seed(1, 1, 0) != derive_seed(2, 1, 0));
}

TEST_CASE("version") { CHECK(version_string().rfind("swrc ", 0) == 0); }

}
