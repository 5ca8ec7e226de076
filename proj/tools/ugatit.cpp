#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "ugatit/checkpoint.hpp"
#include "ugatit/gradcheck_suite.hpp"
#include "ugatit/losses.hpp"
#include "ugatit/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"unsupervised image-to-image translation"};
  app.require_subcommand(1);

  std::string config_path, resume_path;
  auto* train = app.add_subcommand("train", "train a model pair");
  train->add_option("--config", config_path, "run configuration file")->required();
  train->add_option("--resume", resume_path, "checkpoint to resume from");

  std::string ckpt_path, in_dir, out_dir, direction = "a2b";
  bool heatmaps = false;
  auto* translate = app.add_subcommand("translate", "translate a directory of images");
  translate->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  translate->add_option("--in", in_dir, "input image directory")->required();
  translate->add_option("--out", out_dir, "output directory")->required();
  translate->add_option("--direction", direction, "a2b or b2a")
      ->check(CLI::IsMember({"a2b", "b2a"}));
  translate->add_flag("--heatmaps", heatmaps, "also write attention heatmaps");

  std::string real_dir, fake_dir;
  int subset = 0, repeats = 10;
  std::uint64_t eval_seed = 0;
  auto* evaluate = app.add_subcommand("evaluate", "KID between two image directories");
  evaluate->add_option("--real", real_dir, "real image directory")->required();
  evaluate->add_option("--fake", fake_dir, "generated image directory")->required();
  evaluate->add_option("--subset", subset, "subset size (default min(100, available))");
  evaluate->add_option("--repeats", repeats, "number of subset resamples");
  evaluate->add_option("--seed", eval_seed, "subsampling seed");

  int gc_size = 16, gc_ch = 8;
  double gc_tol = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--size", gc_size, "image size");
  gradcheck->add_option("--ch", gc_ch, "base channel width");
  gradcheck->add_option("--tol", gc_tol, "relative error tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ugatit::run_training(ugatit::load_run_config(config_path), resume_path);
    } else if (*translate) {
      ugatit::run_translate(ckpt_path, in_dir, out_dir, direction == "a2b", heatmaps);
    } else if (*evaluate) {
      auto report = ugatit::run_evaluate(real_dir, fake_dir, subset, repeats, eval_seed);
      std::printf("%s\n", report.summary_line().c_str());
      std::printf("mean_x100=%.10g\nstd_x100=%.10g\nsubset_size=%d\nn_subsets=%d\n",
                  report.mean_x100, report.std_x100, report.subset_size,
                  report.n_subsets);
    } else if (*gradcheck) {
      auto outcome = ugatit::run_gradcheck_suite(gc_size, gc_ch, gc_tol, 32, true);
      std::printf("gradcheck: worst total_g rel %.3g, worst total_d rel %.3g (tol %g)\n",
                  outcome.worst_g, outcome.worst_d, gc_tol);
      if (!outcome.passed) {
        std::fprintf(stderr, "gradcheck: tolerance violated\n");
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
