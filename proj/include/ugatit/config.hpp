#pragma once

#include <cstdint>
#include <string>

#include "ugatit/losses.hpp"
#include "ugatit/networks.hpp"
#include "ugatit/optimizer.hpp"
#include "ugatit/trainer.hpp"

namespace ugatit {

// Flat key=value run configuration; unknown keys are parse errors.
struct RunConfig {
  std::string data_a;
  std::string data_b;
  std::string out_dir = "out";

  NetConfig net;                 // img_size, ch, n_res, n_downsample, light_mode, use_cam
  LossWeights weights;           // lambda_adv/cycle/identity/cam
  double lr = 1e-4;
  double weight_decay = 1e-4;

  std::uint64_t iters = 2000;
  std::uint64_t decay_start = 1000;
  std::uint64_t seed = 0;
  std::uint64_t sample_every = 1000;
  std::uint64_t checkpoint_every = 1000;

  int kid_subset = 0;  // 0: min(100, available)
  int kid_repeats = 10;

  OptimizerConfig optimizer() const {
    OptimizerConfig oc;
    oc.lr = lr;
    oc.weight_decay = weight_decay;
    return oc;
  }
  TrainSchedule schedule() const { return {iters, decay_start}; }
};

// Parses `key=value` lines; '#' starts a comment, blank lines ignored.
// Throws std::runtime_error on unknown keys or malformed values.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace ugatit
