#include "sats_cli/benchmark_io.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

#include "sats/error.hpp"
#include "sats/image_io.hpp"
#include "sats_cli/config.hpp"

namespace fs = std::filesystem;

namespace sats::cli {
namespace {

constexpr const char* kSplits[] = {"source", "target_train", "target_val"};

int read_int(const std::map<std::string, std::string>& kv, const std::string& key, const fs::path& file) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError(file.string() + ": missing '" + key + "'");
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ValidationError(file.string() + ": bad value for '" + key + "'");
  }
}

}  // namespace

void save_benchmark(const Benchmark& bench, const fs::path& root) {
  fs::create_directories(root);
  const ClassSpace& cs = bench.source.class_space;
  std::ofstream meta(root / "benchmark.txt");
  if (!meta) throw IoError("cannot write " + (root / "benchmark.txt").string());
  meta << "num_known = " << cs.num_known << "\nnum_private = " << cs.num_private << "\nhead_classes = ";
  for (std::size_t i = 0; i < cs.head_classes.size(); ++i) meta << (i ? "," : "") << cs.head_classes[i];
  meta << "\n";
  if (!meta) throw IoError("cannot write " + (root / "benchmark.txt").string());
  save_dataset(bench.source, root / kSplits[0]);
  save_dataset(bench.target_train, root / kSplits[1]);
  save_dataset(bench.target_val, root / kSplits[2]);
}

Benchmark load_benchmark(const fs::path& root) {
  const fs::path meta_path = root / "benchmark.txt";
  std::ifstream in(meta_path);
  if (!in) throw ValidationError("not a benchmark directory (no benchmark.txt): " + root.string());
  std::stringstream text;
  text << in.rdbuf();
  const auto kv = parse_key_values(text.str(), meta_path.string());
  ClassSpace cs;
  cs.num_known = read_int(kv, "num_known", meta_path);
  cs.num_private = read_int(kv, "num_private", meta_path);
  if (const auto it = kv.find("head_classes"); it != kv.end()) {
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) cs.head_classes.push_back(std::stoi(item));
    }
  }
  cs.validate(true);
  Benchmark b{load_dataset(root / kSplits[0], cs), load_dataset(root / kSplits[1], cs),
              load_dataset(root / kSplits[2], cs)};
  return b;
}

void save_label_maps(const Dataset& maps, const fs::path& root) {
  fs::create_directories(root / "labels");
  std::ofstream list(root / "dataset.txt");
  list << "# domain=" << to_string(maps.domain) << "\n";
  for (std::size_t i = 0; i < maps.size(); ++i) {
    write_gray_png(maps.items[i].label, root / "labels" / (maps.names[i] + ".png"));
    list << maps.names[i] << "\n";
  }
  if (!list) throw IoError("cannot write " + (root / "dataset.txt").string());
}

Dataset load_label_maps(const Dataset& target, const fs::path& root) {
  if (!fs::is_directory(root / "labels")) {
    throw ValidationError("detected-unknown directory has no labels/: " + root.string());
  }
  Dataset out;
  out.domain = DomainTag::target;
  out.class_space = target.class_space;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const fs::path p = root / "labels" / (target.names[i] + ".png");
    if (!fs::exists(p)) throw ValidationError("missing detected-unknown map: " + p.string());
    LabelMap label = read_gray_png(p);
    check_label_values(label, target.class_space);
    if (!label.same_size(target.items[i].label)) throw ValidationError("size mismatch: " + p.string());
    out.push_back(target.names[i], LabeledImage(target.items[i].pixels, std::move(label)));
  }
  return out;
}

void write_atomically(const fs::path& dest, const std::function<void(const fs::path&)>& fill) {
  const fs::path parent = dest.has_parent_path() ? dest.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const fs::path tmp = parent / (dest.filename().string() + ".tmp-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  try {
    fs::create_directories(tmp);
    fill(tmp);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
  fs::remove_all(dest);
  fs::rename(tmp, dest);
}

}  // namespace sats::cli
