#include "sats/image_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "sats/error.hpp"

namespace fs = std::filesystem;

namespace sats {
namespace {

struct PngImage {
  png_image image;
  PngImage() {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

std::vector<std::uint8_t> read_png(const fs::path& path, png_uint_32 want_format, int& width,
                                   int& height) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + png.image.message);
  }
  const png_uint_32 file_format = png.image.format;
  if (file_format & PNG_FORMAT_FLAG_LINEAR) {
    throw ValidationError(path.string() + ": 16-bit PNGs are not supported");
  }
  const bool file_color = (file_format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool want_color = (want_format & PNG_FORMAT_FLAG_COLOR) != 0;
  if (file_color != want_color || (file_format & PNG_FORMAT_FLAG_ALPHA)) {
    throw ValidationError(path.string() + (want_color ? ": expected an 8-bit RGB PNG"
                                                      : ": expected an 8-bit single-channel PNG"));
  }
  png.image.format = want_format;
  width = static_cast<int>(png.image.width);
  height = static_cast<int>(png.image.height);
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, buf.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG " + path.string() + ": " + png.image.message);
  }
  return buf;
}

void write_png(const fs::path& path, png_uint_32 format, int width, int height,
               const std::uint8_t* data) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(width);
  png.image.height = static_cast<png_uint_32>(height);
  png.image.format = format;
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, data, 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + png.image.message);
  }
}

}  // namespace

RgbImage read_rgb_png(const fs::path& path) {
  int w = 0, h = 0;
  auto buf = read_png(path, PNG_FORMAT_RGB, w, h);
  RgbImage img(w, h);
  std::copy(buf.begin(), buf.end(), img.bytes().begin());
  return img;
}

LabelMap read_gray_png(const fs::path& path) {
  int w = 0, h = 0;
  auto buf = read_png(path, PNG_FORMAT_GRAY, w, h);
  LabelMap map(w, h);
  std::copy(buf.begin(), buf.end(), map.values().begin());
  return map;
}

void write_rgb_png(const RgbImage& img, const fs::path& path) {
  write_png(path, PNG_FORMAT_RGB, img.width(), img.height(), img.bytes().data());
}

void write_gray_png(const Plane<std::uint8_t>& plane, const fs::path& path) {
  write_png(path, PNG_FORMAT_GRAY, plane.width(), plane.height(), plane.values().data());
}

void write_mask_png(const BinaryMask& mask, const fs::path& path) {
  Plane<std::uint8_t> vis(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) vis[i] = mask[i] ? 255 : 0;
  write_gray_png(vis, path);
}

LabeledImage load_labeled_image(const fs::path& image_path, const std::optional<fs::path>& label_path,
                                const ClassSpace& cs) {
  RgbImage px = read_rgb_png(image_path);
  if (!label_path) return LabeledImage(std::move(px));
  LabelMap label = read_gray_png(*label_path);
  if (!label.same_size(px.width(), px.height())) {
    std::ostringstream os;
    os << "label " << label_path->string() << " is " << label.width() << "x" << label.height()
       << " but image is " << px.width() << "x" << px.height();
    throw ValidationError(os.str());
  }
  try {
    check_label_values(label, cs);
  } catch (const ValidationError& e) {
    throw ValidationError(label_path->string() + ": " + e.what());
  }
  return LabeledImage(std::move(px), std::move(label));
}

void save_labeled_image(const LabeledImage& img, const fs::path& image_path, const fs::path& label_path) {
  write_rgb_png(img.pixels, image_path);
  write_gray_png(img.label, label_path);
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "labels", ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  std::ofstream manifest(root / "dataset.txt");
  if (!manifest) throw IoError("cannot write " + (root / "dataset.txt").string());
  manifest << "# domain=" << to_string(ds.domain) << "\n";
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const auto& name = ds.names.at(i);
    save_labeled_image(ds.items[i], root / "images" / (name + ".png"), root / "labels" / (name + ".png"));
    manifest << name << "\n";
  }
  if (!manifest.flush()) throw IoError("write failed for " + (root / "dataset.txt").string());
}

Dataset load_dataset(const fs::path& root, const ClassSpace& cs) {
  std::ifstream manifest(root / "dataset.txt");
  if (!manifest) throw IoError("missing manifest " + (root / "dataset.txt").string());
  Dataset ds;
  ds.class_space = cs;
  std::string line;
  while (std::getline(manifest, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("domain=");
      if (pos != std::string::npos) ds.domain = domain_tag_from_string(line.substr(pos + 7));
      continue;
    }
    const fs::path label = root / "labels" / (line + ".png");
    std::optional<fs::path> label_path;
    if (fs::exists(label)) label_path = label;
    ds.push_back(line, load_labeled_image(root / "images" / (line + ".png"), label_path, cs));
  }
  return ds;
}

}  // namespace sats
