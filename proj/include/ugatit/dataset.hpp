#pragma once

#include <string>
#include <vector>

#include "ugatit/tensor.hpp"

namespace ugatit {

struct DatasetImage {
  std::string name;           // file name without directory
  std::vector<float> pixels;  // [3, s, s] planes in [-1, 1]
};

// Loads every PNG/PPM in the directory in lexicographic name order,
// nearest-resized to img_size x img_size. Non-RGB images are errors.
std::vector<DatasetImage> load_image_dir(const std::string& dir, int img_size);

// [3,s,s] tensor (or [1,3,s,s] batch of one) from a dataset entry.
template <typename S>
Var<S> image_to_tensor(const DatasetImage& img, int img_size, bool batched) {
  auto t = batched ? make_tensor<S>({1, 3, img_size, img_size})
                   : make_tensor<S>({3, img_size, img_size});
  for (std::size_t i = 0; i < t->data.size(); ++i)
    t->data[i] = static_cast<S>(img.pixels[i]);
  return t;
}

}  // namespace ugatit
