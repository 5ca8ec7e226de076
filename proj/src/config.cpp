#include "ugatit/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ugatit {

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw std::runtime_error("config: " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad("bad boolean for " + key + ": " + v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    bad("bad integer for " + key + ": " + v);
  }
}

int parse_int(const std::string& key, const std::string& v) {
  const auto u = parse_u64(key, v);
  if (u > 1u << 20) bad("value out of range for " + key + ": " + v);
  return static_cast<int>(u);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    bad("bad number for " + key + ": " + v);
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      bad("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "data_a") cfg.data_a = val;
    else if (key == "data_b") cfg.data_b = val;
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "img_size") cfg.net.img_size = parse_int(key, val);
    else if (key == "ch") cfg.net.ch = parse_int(key, val);
    else if (key == "n_res") cfg.net.n_res = parse_int(key, val);
    else if (key == "n_downsample") cfg.net.n_downsample = parse_int(key, val);
    else if (key == "light_mode") cfg.net.light_mode = parse_bool(key, val);
    else if (key == "use_cam") cfg.net.use_cam = parse_bool(key, val);
    else if (key == "lambda_adv") cfg.weights.lambda_adv = parse_double(key, val);
    else if (key == "lambda_cycle") cfg.weights.lambda_cycle = parse_double(key, val);
    else if (key == "lambda_identity") cfg.weights.lambda_identity = parse_double(key, val);
    else if (key == "lambda_cam") cfg.weights.lambda_cam = parse_double(key, val);
    else if (key == "lr") cfg.lr = parse_double(key, val);
    else if (key == "weight_decay") cfg.weight_decay = parse_double(key, val);
    else if (key == "iters") cfg.iters = parse_u64(key, val);
    else if (key == "decay_start") cfg.decay_start = parse_u64(key, val);
    else if (key == "seed") cfg.seed = parse_u64(key, val);
    else if (key == "sample_every") cfg.sample_every = parse_u64(key, val);
    else if (key == "checkpoint_every") cfg.checkpoint_every = parse_u64(key, val);
    else if (key == "kid_subset") cfg.kid_subset = parse_int(key, val);
    else if (key == "kid_repeats") cfg.kid_repeats = parse_int(key, val);
    else bad("unknown key: " + key);
  }
  cfg.net.validate();
  cfg.weights.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace ugatit
