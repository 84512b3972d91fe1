#include "bilearn/errors.hpp"
#include "bilearn/harness.hpp"
#include "bilearn/image_io.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace bilearn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bilearn-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LearnRow row(const std::string& image, const std::string& reg, double ssim, double psnr, double cost) {
  LearnRow r;
  r.image = image;
  r.regulariser = reg;
  r.ssim = ssim;
  r.psnr = psnr;
  r.value = cost;
  r.noise_var = 10.0;
  return r;
}

}  // namespace

TEST_CASE("PGM encoding is byte exact") {
  ImageGrid img(2, 2);
  img.values << 0.0, 85.0 / 255, 170.0 / 255, 1.0;
  const std::string bytes = encode_pgm(img);
  CHECK(bytes == std::string("P5\n2 2\n255\n") + std::string("\x00\x55\xaa\xff", 4));
  CHECK(decode_pgm(bytes).values == img.values);
}

TEST_CASE("PGM round trip and clamping") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> U(0, 255);
  ImageGrid img(13, 7);
  for (auto& v : img.values) v = U(rng) / 255.0;
  CHECK(decode_pgm(encode_pgm(img)).values == img.values);
  ImageGrid out(2, 2);
  out.values << -0.3, 1.7, 0.0, 1.0;
  CHECK(decode_pgm(encode_pgm(out)).values == Eigen::Vector4d(0.0, 1.0, 0.0, 1.0));
  // Comments and other maxvals are accepted on input.
  const ImageGrid c = decode_pgm(std::string("P5 # note\n2 2\n# more\n15\n") + std::string("\x00\x0f\x0f\x00", 4));
  CHECK(c.values == Eigen::Vector4d(0.0, 1.0, 1.0, 0.0));
}

TEST_CASE("malformed PGM reports the byte offset") {
  try {
    decode_pgm("P6\n2 2\n255\n....");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 0);
  }
  try {
    decode_pgm("P5\n2 x\n255\n....");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 5);
  }
  CHECK_THROWS_AS(decode_pgm("P5\n2 2\n255\n.."), ParseError);
  CHECK_THROWS_AS(decode_pgm("P5\n2 2\n300\n...."), ParseError);
}

TEST_CASE("F64 round trip is exact") {
  ImageGrid img(3, 2);
  img.values << 1.0 / 3.0, -2.0, 1e-300, 0.5, 7.25, -0.0;
  const ImageGrid back = decode_f64(encode_f64(img));
  CHECK(back.width == 3);
  CHECK(back.values == img.values);
  CHECK_THROWS_AS(decode_f64("F64\n3 2\nabc"), ParseError);
}

TEST_CASE("prepare_square resizes the shortest edge and keeps the top-left square") {
  ImageGrid img(20, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) img(x, y) = x < 10 ? 0.25 : 0.75;
  const ImageGrid sq = prepare_square(img, 8);
  CHECK(sq.width == 8);
  CHECK(sq.height == 8);
  for (double v : sq.values) CHECK(v == doctest::Approx(0.25));
  const ImageGrid same = resize_bilinear(img, 20, 10);
  CHECK(same.values == img.values);
}

TEST_CASE("config grammar") {
  const ExperimentConfig c = parse_config(
      "# experiment\n"
      "regularisers = tv, ictv   # two\n"
      "costs = l22, huber-tv-grad\n"
      "noise_levels = 2, 20\n"
      "mode = batch\n"
      "seed = 99\n"
      "synthetic_count = 3\n"
      "deterministic = true\n"
      "scaling = pixel\n"
      "bfgs.rho = 1e-4\n");
  REQUIRE(c.regularisers.size() == 2);
  CHECK(c.regularisers[1].label == "ictv");
  CHECK(c.regularisers[1].kind == RegulariserKind::ICTV);
  CHECK(c.costs.size() == 2);
  CHECK(c.noise_levels == std::vector<double>{2.0, 20.0});
  CHECK(c.mode == LearnMode::Batch);
  CHECK(c.seed == 99);
  CHECK(c.synthetic_count == 3);
  CHECK(c.deterministic);
  CHECK(c.learn.base.scaling == DomainScaling::Pixel);
  CHECK(c.learn.bfgs.rho == 1e-4);

  try {
    parse_config("seed = 1\n\nbogus = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("seed 1"), ConfigError);
  CHECK_THROWS_AS(parse_config("noise_levels = 1, x"), ConfigError);
  CHECK_THROWS_AS(parse_config("regularisers = tv, tgv3"), ConfigError);

  ExperimentConfig empty;
  empty.regularisers.clear();
  CHECK_THROWS_AS(empty.validate(), ConfigError);
}

TEST_CASE("regulariser lists alias engines under unique labels") {
  const auto r = parse_regulariser_list("tv, tv, mine:tgv2");
  REQUIRE(r.size() == 3);
  CHECK(r[0].label == "tv");
  CHECK(r[1].label == "tv#2");
  CHECK(r[1].kind == RegulariserKind::TV);
  CHECK(r[2].label == "mine");
  CHECK(r[2].kind == RegulariserKind::TGV2);
}

TEST_CASE("noise seeds differ per cell and are stable") {
  CHECK(noise_seed(1, 0, 0) != noise_seed(1, 0, 1));
  CHECK(noise_seed(1, 0, 1) != noise_seed(1, 1, 0));
  CHECK(noise_seed(1, 2, 3) != noise_seed(2, 2, 3));
  CHECK(noise_seed(7, 1, 4) == noise_seed(7, 1, 4));
}

TEST_CASE("learn CSV round trip") {
  LearnRow r = row("img00", "tgv2", 0.9, std::numeric_limits<double>::infinity(), 0.25);
  r.alpha = 1.0 / 3.0;
  r.beta = 1e-5;
  r.outer_iters = 7;
  r.wall_time_s = 1.5;
  r.converged = true;
  r.denoised_path = "denoised/x.f64";
  std::stringstream ss;
  write_learn_csv(ss, {r}, false);
  const auto back = read_learn_csv(ss);
  REQUIRE(back.size() == 1);
  CHECK(back[0].alpha == r.alpha);
  CHECK(std::isinf(back[0].psnr));
  CHECK(back[0].kind == RegulariserKind::TGV2);
  CHECK(back[0].denoised_path == r.denoised_path);
  std::stringstream det;
  write_learn_csv(det, {r}, true);
  CHECK(det.str().find(",1.5,") == std::string::npos);
  std::stringstream bad("nope\n");
  CHECK_THROWS_AS(read_learn_csv(bad), ParseError);
}

TEST_CASE("ordering strings group by significance") {
  auto test = [](const char* a, const char* b, int dir, bool sig) {
    PairTest t;
    t.criterion = Criterion::SSIM;
    t.a = a;
    t.b = b;
    t.result.direction = dir;
    t.result.significant = sig;
    return t;
  };
  const std::vector<std::string> labels{"tv", "tgv2", "ictv"};
  const std::vector<double> means{0.1, 0.2, 0.3};
  CHECK(ordering_string(labels, means,
                        {test("tv", "tgv2", -1, true), test("tv", "ictv", -1, true), test("tgv2", "ictv", -1, true)},
                        Criterion::SSIM) == "ictv > tgv2 > tv");
  CHECK(ordering_string(labels, means,
                        {test("tv", "tgv2", -1, true), test("tv", "ictv", -1, true), test("tgv2", "ictv", -1, false)},
                        Criterion::SSIM) == "ictv, tgv2 > tv");
  CHECK(ordering_string(labels, means, {}, Criterion::SSIM) == "ictv, tgv2, tv");
}

TEST_CASE("summaries, best counts and t-tests") {
  const std::vector<RegulariserEntry> regs{{"tv", RegulariserKind::TV}, {"tgv2", RegulariserKind::TGV2}};
  std::vector<LearnRow> rows;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "img0" + std::to_string(i);
    rows.push_back(row(id, "tv", 0.8 + 0.01 * i, 30.0 + i, 1.0 + i));
    rows.push_back(row(id, "tgv2", 0.85 + 0.01 * i + 0.001 * (i % 2), 31.0 + i, i == 0 ? 1.0 : 0.5 + i));
  }
  const auto tables = summarise(rows, regs);
  REQUIRE(tables.size() == 1);
  const ComparisonTable& t = tables[0];
  CHECK(t.rows.size() == 4);
  for (int c = 0; c < 3; ++c) CHECK(t.summaries[c][0].best + t.summaries[c][1].best == 4);
  CHECK(t.summaries[0][1].best == 4);
  CHECK(t.summaries[0][0].mean == doctest::Approx(0.815));
  CHECK(t.summaries[0][0].median == doctest::Approx(0.815));
  CHECK(t.summaries[1][0].stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  // Image 0 ties on cost; the lexicographically smaller label wins and the tie is recorded.
  CHECK(t.rows[0].best_cost == "tgv2");
  CHECK(t.rows[0].tie_cost);
  CHECK(t.tests.size() == 3);
  CHECK(t.ordering[1] == "tgv2 > tv");
}

TEST_CASE("single regulariser gives a degenerate table") {
  const std::vector<RegulariserEntry> regs{{"tv", RegulariserKind::TV}};
  std::vector<LearnRow> rows{row("a", "tv", 0.9, 30, 1), row("b", "tv", 0.8, 29, 2)};
  const auto t = summarise(rows, regs).at(0);
  CHECK(t.tests.empty());
  CHECK(t.ordering[0] == "tv");
  CHECK(t.summaries[0][0].best == 2);
}

TEST_CASE("single TV run emits one complete row and reruns are byte identical") {
  const fs::path dir = scratch_dir("learn");
  ExperimentConfig cfg;
  cfg.regularisers = parse_regulariser_list("tv");
  cfg.synthetic_count = 1;
  cfg.synthetic_size = 32;
  cfg.noise_levels = {20.0};
  cfg.output_dir = dir / "a";
  cfg.deterministic = true;
  const auto rows = run_learn(cfg);
  REQUIRE(rows.size() == 1);
  const LearnRow& r = rows[0];
  CHECK(r.alpha > 0.0);
  CHECK(r.outer_iters > 0);
  CHECK(r.psnr > r.noisy_psnr);
  CHECK(r.ssim > 0.0);
  const fs::path csv = cfg.output_dir / "learn_l22_var20_individual.csv";
  const std::string first = slurp(csv);
  std::stringstream ss(first);
  CHECK(read_learn_csv(ss).size() == 1);
  CHECK(rescore_max_deviation(rows, cfg) <= 1e-9);

  cfg.output_dir = dir / "b";
  run_learn(cfg);
  CHECK(slurp(cfg.output_dir / "learn_l22_var20_individual.csv") == first);
  fs::remove_all(dir);
}

TEST_CASE("aliased regulariser entries give zero t statistics and tie grouping") {
  const fs::path dir = scratch_dir("alias");
  ExperimentConfig cfg;
  cfg.regularisers = parse_regulariser_list("tv, tv");
  cfg.synthetic_count = 3;
  cfg.synthetic_size = 16;
  cfg.output_dir = dir;
  const CompareResult res = run_compare(cfg);
  REQUIRE(res.tables.size() == 1);
  const ComparisonTable& t = res.tables[0];
  for (const PairTest& p : t.tests) {
    CHECK(p.result.t == 0.0);
    CHECK_FALSE(p.result.significant);
  }
  for (int c = 0; c < 3; ++c) {
    CHECK(t.ordering[c] == "tv, tv#2");
    CHECK(t.summaries[c][0].best == 3);
  }
  for (const auto& r : t.rows) CHECK(r.tie_ssim);
  CHECK(fs::exists(dir / "compare_l22_var10.csv"));
  CHECK(fs::exists(dir / "ttest_l22_var10.csv"));
  CHECK(fs::exists(dir / "best_l22_var10.csv"));
  fs::remove_all(dir);
}
