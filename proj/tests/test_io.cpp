#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ugatit/checkpoint.hpp"
#include "ugatit/config.hpp"
#include "ugatit/dataset.hpp"
#include "ugatit/image_io.hpp"
#include "ugatit/losses.hpp"

using namespace ugatit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ugatit_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

ImageU8 test_image(int w, int h, int channels) {
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.channels = channels;
  img.pixels.resize(img.expected_size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = std::uint8_t((i * 37 + 11) % 256);
  return img;
}

NetConfig tiny_cfg() {
  NetConfig cfg;
  cfg.img_size = 8;
  cfg.ch = 4;
  cfg.n_res = 1;
  cfg.n_downsample = 1;
  return cfg;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("png roundtrip is lossless for RGB and gray") {
  TempDir dir;
  for (int channels : {3, 1}) {
    auto img = test_image(13, 7, channels);
    const auto p = (dir.path / "img.png").string();
    write_png(p, img);
    auto back = read_image(p);
    CHECK(back.width == 13);
    CHECK(back.height == 7);
    CHECK(back.channels == channels);
    CHECK(back.pixels == img.pixels);
  }
}

TEST_CASE("ppm roundtrip is lossless") {
  TempDir dir;
  auto img = test_image(5, 9, 3);
  const auto p = (dir.path / "img.ppm").string();
  write_ppm(p, img);
  auto back = read_image(p);
  CHECK(back.channels == 3);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("malformed images are rejected") {
  TempDir dir;
  const auto p = (dir.path / "bad.png").string();
  std::ofstream(p, std::ios::binary) << "not an image at all";
  CHECK_THROWS_AS(read_image(p), std::runtime_error);
  CHECK_THROWS_AS(read_image((dir.path / "missing.png").string()), std::runtime_error);
}

TEST_CASE("pixel mapping endpoints and midpoint") {
  ImageU8 img;
  img.width = 3;
  img.height = 1;
  img.channels = 1;
  img.pixels = {0, 128, 255};
  auto f = to_unit_range(img);
  CHECK(f[0] == doctest::Approx(-1.0));
  CHECK(f[1] == doctest::Approx(128.0 / 127.5 - 1.0));  // ~0.00392
  CHECK(f[1] == doctest::Approx(0.00392).epsilon(1e-3));
  CHECK(f[2] == doctest::Approx(255.0 / 127.5 - 1.0));
  CHECK(f[2] == doctest::Approx(1.0).epsilon(1e-2));
  auto back = from_unit_range(f, 1, 1, 3);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("from_unit_range clamps out-of-range values") {
  auto img = from_unit_range({-2.0f, 2.0f}, 1, 1, 2);
  CHECK(img.pixels[0] == 0);
  CHECK(img.pixels[1] == 255);
}

TEST_CASE("load_image_dir orders lexicographically and normalizes") {
  TempDir dir;
  ImageU8 white = test_image(4, 4, 3);
  std::fill(white.pixels.begin(), white.pixels.end(), std::uint8_t(255));
  ImageU8 black = white;
  std::fill(black.pixels.begin(), black.pixels.end(), std::uint8_t(0));
  write_png((dir.path / "b_white.png").string(), white);
  write_png((dir.path / "a_black.png").string(), black);
  auto ds = load_image_dir(dir.path.string(), 4);
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].name == "a_black.png");
  CHECK(ds[1].name == "b_white.png");
  for (float v : ds[0].pixels) CHECK(v == doctest::Approx(-1.0));
  for (float v : ds[1].pixels) CHECK(v == doctest::Approx(1.0));
  auto again = load_image_dir(dir.path.string(), 4);
  CHECK(again[0].pixels == ds[0].pixels);
}

TEST_CASE("load_image_dir resizes and rejects non-RGB") {
  TempDir dir;
  write_png((dir.path / "big.png").string(), test_image(8, 8, 3));
  auto ds = load_image_dir(dir.path.string(), 4);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].pixels.size() == 3u * 4 * 4);
  write_png((dir.path / "gray.png").string(), test_image(4, 4, 1));
  CHECK_THROWS_AS(load_image_dir(dir.path.string(), 4), std::runtime_error);
}

TEST_CASE("checkpoint save/load/save is byte-identical") {
  TempDir dir;
  TrainSession<float> session(tiny_cfg(), LossWeights{}, OptimizerConfig{},
                              TrainSchedule{10, 5}, 3);
  Rng rng(4);
  auto img = [&] {
    auto x = make_tensor<float>({1, 3, 8, 8});
    for (auto& v : x->data) v = std::tanh(float(rng.normal()));
    return x;
  };
  session.train_step(img(), img());

  const auto p1 = dir.path / "a.ugit";
  const auto p2 = dir.path / "b.ugit";
  save_checkpoint(p1.string(), collect_checkpoint(session));

  auto data = load_checkpoint(p1.string());
  TrainSession<float> restored(data.cfg, LossWeights{}, OptimizerConfig{},
                               TrainSchedule{10, 5}, 999);
  restore_checkpoint(restored, data);
  save_checkpoint(p2.string(), collect_checkpoint(restored));
  CHECK(file_bytes(p1) == file_bytes(p2));
  CHECK(restored.iteration() == session.iteration());
}

TEST_CASE("checkpoint detects corruption and bad headers") {
  TempDir dir;
  TrainSession<float> session(tiny_cfg(), LossWeights{}, OptimizerConfig{},
                              TrainSchedule{10, 5}, 3);
  const auto p = dir.path / "c.ugit";
  save_checkpoint(p.string(), collect_checkpoint(session));

  auto bytes = file_bytes(p);
  auto corrupted = bytes;
  corrupted[bytes.size() / 2] ^= 0x40;
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(corrupted) /* payload flip */,
                       doctest::Contains("CRC"), std::runtime_error);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(bad_magic), doctest::Contains("magic"),
                       std::runtime_error);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 9);
  CHECK_THROWS_AS(deserialize_checkpoint(truncated), std::runtime_error);
}

TEST_CASE("resuming for zero iterations replays identical losses") {
  TrainSession<float> session(tiny_cfg(), LossWeights{}, OptimizerConfig{},
                              TrainSchedule{100, 50}, 5);
  Rng rng(6);
  auto mk = [&] {
    auto x = make_tensor<float>({1, 3, 8, 8});
    for (auto& v : x->data) v = std::tanh(float(rng.normal()));
    return x;
  };
  auto a = mk(), b = mk();
  for (int i = 0; i < 3; ++i) session.train_step(a, b);

  auto data = collect_checkpoint(session);
  auto before = session.train_step(a, b);

  TrainSession<float> resumed(data.cfg, LossWeights{}, OptimizerConfig{},
                              TrainSchedule{100, 50}, 5);
  restore_checkpoint(resumed, data);
  auto after = resumed.train_step(a, b);
  CHECK(after.total_g == before.total_g);
  CHECK(after.total_d == before.total_d);
  CHECK(after.cycle == before.cycle);
  CHECK(after.cam_g == before.cam_g);
}

TEST_CASE("checkpoint rejects mismatched and unknown records") {
  TrainSession<float> session(tiny_cfg(), LossWeights{}, OptimizerConfig{},
                              TrainSchedule{10, 5}, 3);
  auto data = collect_checkpoint(session);
  auto extra = data;
  extra.records.push_back({"bogus/record", {1}, {0.0f}});
  TrainSession<float> target(tiny_cfg(), LossWeights{}, OptimizerConfig{},
                             TrainSchedule{10, 5}, 3);
  CHECK_THROWS_WITH_AS(restore_checkpoint(target, extra),
                       doctest::Contains("unexpected"), std::runtime_error);
  auto missing = data;
  missing.records.pop_back();
  CHECK_THROWS_AS(restore_checkpoint(target, missing), std::runtime_error);
}

TEST_CASE("config parsing covers every key and rejects typos") {
  const std::string text =
      "# comment line\n"
      "data_a = /tmp/a\n"
      "data_b=/tmp/b\n"
      "out_dir = run1   # trailing comment\n"
      "img_size = 16\n"
      "ch = 8\n"
      "n_res = 2\n"
      "n_downsample = 2\n"
      "light_mode = true\n"
      "use_cam = false\n"
      "lambda_adv = 1\n"
      "lambda_cycle = 10\n"
      "lambda_identity = 10\n"
      "lambda_cam = 1000\n"
      "lr = 0.0001\n"
      "weight_decay = 0.0001\n"
      "iters = 2000\n"
      "decay_start = 1000\n"
      "seed = 42\n"
      "sample_every = 500\n"
      "checkpoint_every = 250\n"
      "kid_subset = 32\n"
      "kid_repeats = 10\n";
  auto cfg = parse_run_config(text);
  CHECK(cfg.data_a == "/tmp/a");
  CHECK(cfg.data_b == "/tmp/b");
  CHECK(cfg.out_dir == "run1");
  CHECK(cfg.net.img_size == 16);
  CHECK(cfg.net.ch == 8);
  CHECK(cfg.net.light_mode);
  CHECK_FALSE(cfg.net.use_cam);
  CHECK(cfg.weights.lambda_cam == 1000.0);
  CHECK(cfg.lr == 0.0001);
  CHECK(cfg.iters == 2000);
  CHECK(cfg.seed == 42);
  CHECK(cfg.sample_every == 500);
  CHECK(cfg.kid_subset == 32);

  CHECK_THROWS_WITH_AS(parse_run_config("imgsize = 16\n"),
                       doctest::Contains("unknown key"), std::runtime_error);
  CHECK_THROWS_AS(parse_run_config("img_size sixteen\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_run_config("img_size = sixteen\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_run_config("img_size = 15\n"), std::invalid_argument);
}

TEST_CASE("config defaults match the published recipe") {
  auto cfg = parse_run_config("");
  CHECK(cfg.weights.lambda_adv == 1.0);
  CHECK(cfg.weights.lambda_cycle == 10.0);
  CHECK(cfg.weights.lambda_identity == 10.0);
  CHECK(cfg.weights.lambda_cam == 1000.0);
  CHECK(cfg.lr == 1e-4);
  CHECK(cfg.weight_decay == 1e-4);
}
