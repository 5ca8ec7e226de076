#include "ugatit/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "ugatit/image_io.hpp"

namespace ugatit {

namespace {

bool has_image_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

// nearest resize on interleaved 8-bit pixels
ImageU8 resize_image(const ImageU8& img, int size) {
  if (img.width == size && img.height == size) return img;
  ImageU8 out;
  out.width = size;
  out.height = size;
  out.channels = img.channels;
  out.pixels.resize(out.expected_size());
  for (int y = 0; y < size; ++y) {
    const int sy = std::min(img.height - 1, y * img.height / size);
    for (int x = 0; x < size; ++x) {
      const int sx = std::min(img.width - 1, x * img.width / size);
      for (int c = 0; c < img.channels; ++c)
        out.pixels[(static_cast<std::size_t>(y) * size + x) * img.channels + c] =
            img.pixels[(static_cast<std::size_t>(sy) * img.width + sx) * img.channels + c];
    }
  }
  return out;
}

}  // namespace

std::vector<DatasetImage> load_image_dir(const std::string& dir, int img_size) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw std::runtime_error("load_image_dir: not a directory: " + dir);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && has_image_extension(entry.path()))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });

  std::vector<DatasetImage> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    auto img = read_image(f.string());
    if (img.channels != 3)
      throw std::runtime_error("load_image_dir: non-RGB image: " + f.string());
    img = resize_image(img, img_size);
    DatasetImage d;
    d.name = f.filename().string();
    d.pixels = to_unit_range(img);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace ugatit
