#include "ugatit/runner.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ugatit/augment.hpp"
#include "ugatit/checkpoint.hpp"
#include "ugatit/dataset.hpp"
#include "ugatit/image_io.hpp"

namespace ugatit {

namespace {

namespace fs = std::filesystem;

// fixed stream for the default KID extractor so scores are comparable
// across runs
constexpr std::uint64_t kExtractorSeed = 0x1D5EEDULL;

Var<float> batched(const Var<float>& chw) {
  auto out = make_tensor<float>({1, chw->shape[0], chw->shape[1], chw->shape[2]});
  out->data = chw->data;
  return out;
}

void write_image_tensor(const std::string& path, const Var<float>& t) {
  // [1,C,H,W] or [C,H,W] in [-1,1]
  const int off = t->shape.size() == 4 ? 1 : 0;
  const int c = t->shape[off], h = t->shape[off + 1], w = t->shape[off + 2];
  write_png(path, from_unit_range(t->data, c, h, w));
}

void require_same_cfg(const NetConfig& a, const NetConfig& b) {
  if (a.img_size != b.img_size || a.ch != b.ch || a.n_res != b.n_res ||
      a.n_downsample != b.n_downsample || a.light_mode != b.light_mode ||
      a.use_cam != b.use_cam)
    throw std::runtime_error("checkpoint network configuration does not match");
}

}  // namespace

void run_training(const RunConfig& cfg, const std::string& resume_path) {
  if (cfg.data_a.empty() || cfg.data_b.empty())
    throw std::runtime_error("train: data_a and data_b directories are required");
  auto domain_a = load_image_dir(cfg.data_a, cfg.net.img_size);
  auto domain_b = load_image_dir(cfg.data_b, cfg.net.img_size);
  if (domain_a.empty() || domain_b.empty())
    throw std::runtime_error("train: both domains need at least one image");

  fs::create_directories(cfg.out_dir);
  fs::create_directories(fs::path(cfg.out_dir) / "samples");

  TrainSession<float> session(cfg.net, cfg.weights, cfg.optimizer(), cfg.schedule(),
                              cfg.seed);
  const bool resuming = !resume_path.empty();
  if (resuming) {
    auto data = load_checkpoint(resume_path);
    require_same_cfg(data.cfg, cfg.net);
    restore_checkpoint(session, data);
  }

  const std::string log_path = (fs::path(cfg.out_dir) / "loss_log.tsv").string();
  std::ofstream log(log_path, resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("train: cannot open " + log_path);
  if (!resuming) log << loss_log_header(cfg.net.use_cam) << "\n";

  const std::string ckpt_path = (fs::path(cfg.out_dir) / "checkpoint.ugit").string();
  while (session.iteration() < cfg.iters) {
    const std::uint64_t iter = session.iteration();
    Rng rng = iteration_rng(cfg.seed, iter);
    const auto& img_a = domain_a[rng.uniform_int(domain_a.size())];
    const auto& img_b = domain_b[rng.uniform_int(domain_b.size())];
    auto a = augment_sample(image_to_tensor<float>(img_a, cfg.net.img_size, false), rng);
    auto b = augment_sample(image_to_tensor<float>(img_b, cfg.net.img_size, false), rng);
    auto ba = batched(a), bb = batched(b);

    const LossBundle bundle = session.train_step(ba, bb);
    const std::uint64_t done = session.iteration();
    log << format_loss_line(done, bundle, cfg.net.use_cam) << "\n";
    log.flush();

    if (cfg.sample_every && done % cfg.sample_every == 0) {
      auto fake_b = generator_forward(session.gen_ab(), ba).image;
      auto fake_a = generator_forward(session.gen_ba(), bb).image;
      const auto dir = fs::path(cfg.out_dir) / "samples";
      const std::string tag = std::to_string(done);
      write_image_tensor((dir / (tag + "_a.png")).string(), ba);
      write_image_tensor((dir / (tag + "_a2b.png")).string(), fake_b);
      write_image_tensor((dir / (tag + "_b.png")).string(), bb);
      write_image_tensor((dir / (tag + "_b2a.png")).string(), fake_a);
    }
    if (cfg.checkpoint_every && done % cfg.checkpoint_every == 0)
      save_checkpoint(ckpt_path, collect_checkpoint(session));
  }
  save_checkpoint(ckpt_path, collect_checkpoint(session));
}

void run_translate(const std::string& ckpt_path, const std::string& in_dir,
                   const std::string& out_dir, bool a_to_b, bool heatmaps) {
  auto data = load_checkpoint(ckpt_path);
  TrainSession<float> session(data.cfg, LossWeights{}, OptimizerConfig{},
                              TrainSchedule{}, 0);
  restore_checkpoint(session, data);

  auto images = load_image_dir(in_dir, data.cfg.img_size);
  fs::create_directories(out_dir);
  auto& gen = a_to_b ? session.gen_ab() : session.gen_ba();
  for (const auto& img : images) {
    auto x = image_to_tensor<float>(img, data.cfg.img_size, true);
    auto out = generator_forward(gen, x);
    const std::string stem = fs::path(img.name).stem().string();
    write_image_tensor((fs::path(out_dir) / (stem + "_fake.png")).string(), out.image);
    if (heatmaps) {
      const int h = out.heatmap->shape[2], w = out.heatmap->shape[3];
      // heatmap is already in [0,1]; map to [-1,1] for the shared writer
      std::vector<float> gray(out.heatmap->data.size());
      for (std::size_t i = 0; i < gray.size(); ++i)
        gray[i] = 2.0f * out.heatmap->data[i] - 1.0f;
      write_png((fs::path(out_dir) / (stem + "_heatmap.png")).string(),
                from_unit_range(gray, 1, h, w));
    }
  }
}

KidReport run_evaluate(const std::string& real_dir, const std::string& fake_dir,
                       int subset, int repeats, std::uint64_t seed) {
  // infer the working resolution from the first real image
  int size = 0;
  {
    namespace fs = std::filesystem;
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(real_dir))
      if (e.is_regular_file()) names.push_back(e.path().string());
    if (names.empty()) throw std::runtime_error("evaluate: empty directory " + real_dir);
    std::sort(names.begin(), names.end());
    auto first = read_image(names.front());
    size = std::min(first.width, first.height);
    size -= size % 4;
    if (size < 4) throw std::runtime_error("evaluate: images too small");
  }

  auto to_rows = [&](const std::string& dir) {
    std::vector<std::vector<double>> rows;
    for (const auto& img : load_image_dir(dir, size))
      rows.emplace_back(img.pixels.begin(), img.pixels.end());
    return rows;
  };
  auto real_rows = to_rows(real_dir);
  auto fake_rows = to_rows(fake_dir);

  PyramidProjectionExtractor extractor(size, kExtractorSeed);
  auto real_set = feature_extract(real_rows, size, extractor);
  auto fake_set = feature_extract(fake_rows, size, extractor);

  if (subset <= 0)
    subset = default_kid_subset(std::min(real_set.size(), fake_set.size()));
  return kid_score(real_set, fake_set, subset, repeats, seed);
}

}  // namespace ugatit
