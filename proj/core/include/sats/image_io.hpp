#pragma once

#include <filesystem>
#include <optional>

#include "sats/dataset.hpp"

namespace sats {

/// Reads a 24-bit RGB PNG and an optional 8-bit grayscale label PNG.
/// A missing label path yields an all-ignore label map.
LabeledImage load_labeled_image(const std::filesystem::path& image_path,
                                const std::optional<std::filesystem::path>& label_path,
                                const ClassSpace& cs);

void save_labeled_image(const LabeledImage& img, const std::filesystem::path& image_path,
                        const std::filesystem::path& label_path);

RgbImage read_rgb_png(const std::filesystem::path& path);
LabelMap read_gray_png(const std::filesystem::path& path);
void write_rgb_png(const RgbImage& img, const std::filesystem::path& path);
void write_gray_png(const Plane<std::uint8_t>& plane, const std::filesystem::path& path);
void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path);

/// Directory layout: <root>/{images,labels}/<name>.png plus dataset.txt
/// listing names one per line. The first line of dataset.txt is a
/// `# domain=<tag>` header.
void save_dataset(const Dataset& ds, const std::filesystem::path& root);
Dataset load_dataset(const std::filesystem::path& root, const ClassSpace& cs);

}  // namespace sats
