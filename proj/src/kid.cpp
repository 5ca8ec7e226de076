#include "ugatit/kid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "ugatit/rng.hpp"

namespace ugatit {

double poly_kernel(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("poly_kernel: dimension mismatch");
  const double d = static_cast<double>(x.size());
  const double dot = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
  const double base = dot / d + 1.0;
  return base * base * base;
}

double mmd2_unbiased(const FeatureSet& x, const FeatureSet& y) {
  const std::size_t m = x.size(), n = y.size();
  if (m < 2 || n < 2)
    throw std::invalid_argument("mmd2_unbiased: need at least two samples per set");

  double xx = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) xx += poly_kernel(x.rows[i], x.rows[j]);
  xx = 2.0 * xx / (static_cast<double>(m) * (m - 1));

  double yy = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) yy += poly_kernel(y.rows[i], y.rows[j]);
  yy = 2.0 * yy / (static_cast<double>(n) * (n - 1));

  // summed in sorted order so swap(x, y) is bit-identical
  std::vector<double> cross;
  cross.reserve(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cross.push_back(poly_kernel(x.rows[i], y.rows[j]));
  std::sort(cross.begin(), cross.end());
  double xy = 0.0;
  for (double v : cross) xy += v;
  xy = 2.0 * xy / (static_cast<double>(m) * n);

  return xx + yy - xy;
}

namespace {

// first `count` entries of a seeded without-replacement draw
std::vector<std::size_t> sample_indices(std::size_t total, std::size_t count, Rng& rng) {
  std::vector<std::size_t> pool(total);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_int(total - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

FeatureSet subset_of(const FeatureSet& s, const std::vector<std::size_t>& idx) {
  FeatureSet out;
  out.dim = s.dim;
  out.rows.reserve(idx.size());
  for (std::size_t i : idx) out.rows.push_back(s.rows[i]);
  return out;
}

}  // namespace

std::string KidReport::summary_line() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "KID x100: %.4f +/- %.4f (subset=%d, n=%d)",
                mean_x100, std_x100, subset_size, n_subsets);
  return buf;
}

KidReport kid_score(const FeatureSet& real, const FeatureSet& fake,
                    int subset_size, int n_subsets, std::uint64_t seed) {
  if (subset_size < 2 || n_subsets < 1)
    throw std::invalid_argument("kid_score: need subset_size >= 2 and n_subsets >= 1");
  if (real.size() < static_cast<std::size_t>(subset_size) ||
      fake.size() < static_cast<std::size_t>(subset_size))
    throw std::invalid_argument("kid_score: insufficient samples for the subset size");

  KidReport report;
  report.subset_size = subset_size;
  report.n_subsets = n_subsets;
  Rng rng(seed);
  for (int s = 0; s < n_subsets; ++s) {
    auto xi = sample_indices(real.size(), subset_size, rng);
    auto yi = sample_indices(fake.size(), subset_size, rng);
    report.estimates.push_back(mmd2_unbiased(subset_of(real, xi), subset_of(fake, yi)));
  }
  const double mean =
      std::accumulate(report.estimates.begin(), report.estimates.end(), 0.0) /
      report.estimates.size();
  double var = 0.0;
  for (double e : report.estimates) var += (e - mean) * (e - mean);
  var /= report.estimates.size();
  report.mean_x100 = 100.0 * mean;
  report.std_x100 = 100.0 * std::sqrt(var);
  return report;
}

namespace {

std::vector<double> avg_pool2x(const std::vector<double>& img, int c, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  std::vector<double> out(static_cast<std::size_t>(c) * oh * ow);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const std::size_t base = (static_cast<std::size_t>(ch) * h + 2 * y) * w + 2 * x;
        out[(static_cast<std::size_t>(ch) * oh + y) * ow + x] =
            0.25 * (img[base] + img[base + 1] + img[base + w] + img[base + w + 1]);
      }
  return out;
}

}  // namespace

PyramidProjectionExtractor::PyramidProjectionExtractor(int img_size,
                                                       std::uint64_t seed,
                                                       int out_dim)
    : img_size_(img_size), out_dim_(out_dim) {
  if (img_size < 4 || img_size % 4 != 0)
    throw std::invalid_argument("extractor: img_size must be a multiple of 4");
  const int s = img_size / 4;
  in_dim_ = 3 * s * s;
  proj_.resize(static_cast<std::size_t>(out_dim_) * in_dim_);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim_));
  for (double& v : proj_) v = rng.normal() * scale;
}

std::vector<double> PyramidProjectionExtractor::project(const std::vector<double>& img,
                                                        int h, int w) const {
  if (h != img_size_ || w != img_size_ ||
      img.size() != static_cast<std::size_t>(3) * h * w)
    throw std::invalid_argument("extractor: image size mismatch");
  auto p = avg_pool2x(img, 3, h, w);
  p = avg_pool2x(p, 3, h / 2, w / 2);
  std::vector<double> out(out_dim_);
  for (int o = 0; o < out_dim_; ++o) {
    const double* row = proj_.data() + static_cast<std::size_t>(o) * in_dim_;
    out[o] = std::inner_product(p.begin(), p.end(), row, 0.0);
  }
  return out;
}

std::vector<double> PyramidProjectionExtractor::extract(const std::vector<double>& img,
                                                        int h, int w) const {
  auto out = project(img, h, w);
  for (double& v : out) v = std::max(0.0, v);
  return out;
}

FeatureSet feature_extract(const std::vector<std::vector<double>>& images,
                           int img_size, const FeatureExtractor& extractor) {
  FeatureSet set;
  set.dim = extractor.dim();
  set.rows.reserve(images.size());
  for (const auto& img : images)
    set.rows.push_back(extractor.extract(img, img_size, img_size));
  return set;
}

}  // namespace ugatit
