#pragma once

#include <cstdint>
#include <string>

#include "ugatit/config.hpp"
#include "ugatit/kid.hpp"

namespace ugatit {

// Full training loop: loads both domains, streams the loss log, writes
// periodic checkpoints and sample translations under cfg.out_dir.
void run_training(const RunConfig& cfg, const std::string& resume_path = "");

// One output image per input (and optionally its attention heatmap),
// written as PNG with a _fake / _heatmap suffix.
void run_translate(const std::string& ckpt_path, const std::string& in_dir,
                   const std::string& out_dir, bool a_to_b, bool heatmaps);

// KID between two image directories; subset 0 means min(100, available).
KidReport run_evaluate(const std::string& real_dir, const std::string& fake_dir,
                       int subset, int repeats, std::uint64_t seed);

}  // namespace ugatit
