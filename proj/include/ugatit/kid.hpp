#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ugatit {

// One feature vector per image, row-major [m x d].
struct FeatureSet {
  std::vector<std::vector<double>> rows;
  int dim = 0;

  std::size_t size() const { return rows.size(); }
};

// Cubic polynomial kernel k(x,y) = (x.y/d + 1)^3.
double poly_kernel(const std::vector<double>& x, const std::vector<double>& y);

// Unbiased squared-MMD estimator; may be negative. Requires m,n >= 2.
double mmd2_unbiased(const FeatureSet& x, const FeatureSet& y);

struct KidReport {
  std::vector<double> estimates;  // per-subset MMD^2
  double mean_x100 = 0;
  double std_x100 = 0;
  int subset_size = 0;
  int n_subsets = 0;

  std::string summary_line() const;
};

// n_subsets without-replacement subsamples of each set, mmd2 per pair.
KidReport kid_score(const FeatureSet& real, const FeatureSet& fake,
                    int subset_size, int n_subsets, std::uint64_t seed);

inline int default_kid_subset(std::size_t available) {
  return static_cast<int>(available < 100 ? available : 100);
}

// Pluggable image-to-vector map; images are [3,H,W] in [-1,1].
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> extract(const std::vector<double>& img, int h,
                                      int w) const = 0;
};

// Default: two rounds of 2x average pooling, flatten, fixed seeded
// Gaussian projection to out_dim, then ReLU.
class PyramidProjectionExtractor : public FeatureExtractor {
 public:
  PyramidProjectionExtractor(int img_size, std::uint64_t seed, int out_dim = 64);

  int dim() const override { return out_dim_; }
  std::vector<double> extract(const std::vector<double>& img, int h,
                              int w) const override;
  // pre-activation response; linear in the image
  std::vector<double> project(const std::vector<double>& img, int h, int w) const;

 private:
  int img_size_;
  int out_dim_;
  int in_dim_;
  std::vector<double> proj_;  // [out_dim x in_dim]
};

FeatureSet feature_extract(const std::vector<std::vector<double>>& images,
                           int img_size, const FeatureExtractor& extractor);

}  // namespace ugatit
