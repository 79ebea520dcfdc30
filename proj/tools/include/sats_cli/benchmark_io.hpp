#pragma once

#include <filesystem>
#include <functional>

#include "sats/synthbench.hpp"

namespace sats::cli {

/// On-disk benchmark: <root>/{source,target_train,target_val}/ in the dataset
/// layout plus <root>/benchmark.txt recording the class space.
void save_benchmark(const Benchmark& bench, const std::filesystem::path& root);
Benchmark load_benchmark(const std::filesystem::path& root);

/// Detected-unknown label maps: <root>/labels/<name>.png for every target image.
void save_label_maps(const Dataset& maps, const std::filesystem::path& root);
/// Pairs label maps under `root` with the images of `target` by name.
Dataset load_label_maps(const Dataset& target, const std::filesystem::path& root);

/// Runs `fill` on a sibling temporary directory, then renames it over `dest`.
/// On failure the temporary directory is removed and `dest` is untouched.
void write_atomically(const std::filesystem::path& dest, const std::function<void(const std::filesystem::path&)>& fill);

}  // namespace sats::cli
