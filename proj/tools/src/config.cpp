#include "sats_cli/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "sats/error.hpp"

namespace sats::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ValidationError("config: '" + key + "' expects " + expected + ", got '" + value + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

int to_int32(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < INT32_MIN || x > INT32_MAX) bad_value(key, v, "a 32-bit integer");
  return static_cast<int>(x);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    bad_value(key, v, "a number");
  }
  if (used != v.size()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::array<double, 3> to_triple(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 3) bad_value(key, v, "three comma-separated numbers");
  return {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

void ExperimentConfig::validate() const {
  bench.validate();
  stage.validate();
}

std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (!out.emplace(key, value).second) throw ValidationError(where + ": duplicate key '" + key + "'");
  }
  return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& v) {
  auto& b = cfg.bench;
  auto& s = cfg.stage;
  if (key == "seed") {
    const long long x = to_int(key, v);
    if (x < 0) bad_value(key, v, "a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(x);
  } else if (key == "image_size") {
    b.image_size = to_int32(key, v);
  } else if (key == "num_known") {
    b.num_known = to_int32(key, v);
  } else if (key == "num_private") {
    b.num_private = to_int32(key, v);
  } else if (key == "train_count") {
    b.train_count = to_int32(key, v);
  } else if (key == "val_count") {
    b.val_count = to_int32(key, v);
  } else if (key == "hue_overlap") {
    b.hue_overlap = to_double(key, v);
  } else if (key == "shift_gain") {
    b.shift.gain = to_triple(key, v);
  } else if (key == "shift_bias") {
    b.shift.bias = to_triple(key, v);
  } else if (key == "noise_std") {
    b.shift.noise_std = to_double(key, v);
  } else if (key == "iterations") {
    s.iterations = to_int32(key, v);
  } else if (key == "batch_size") {
    s.batch_size = to_int32(key, v);
  } else if (key == "pretrain_steps") {
    s.pretrain_steps = to_int32(key, v);
  } else if (key == "crop_size") {
    s.crop_size = to_int32(key, v);
  } else if (key == "tau1") {
    s.pseudo.tau1 = to_double(key, v);
  } else if (key == "tau2") {
    s.pseudo.tau2 = to_double(key, v);
  } else if (key == "alpha") {
    s.ema_alpha = to_double(key, v);
  } else if (key == "gamma") {
    s.virtual_unknown.gamma = to_double(key, v);
  } else if (key == "min_vertices") {
    s.virtual_unknown.min_vertices = to_int32(key, v);
  } else if (key == "max_vertices") {
    s.virtual_unknown.max_vertices = to_int32(key, v);
  } else if (key == "polygons_per_image") {
    s.virtual_unknown.polygons_per_image = to_int32(key, v);
  } else if (key == "lr_backbone") {
    s.optimizer.lr_backbone = to_double(key, v);
  } else if (key == "lr_head") {
    s.optimizer.lr_head = to_double(key, v);
  } else if (key == "weight_decay") {
    s.optimizer.weight_decay = to_double(key, v);
  } else if (key == "warmup_iterations") {
    s.warmup_iterations = to_int32(key, v);
  } else if (key == "hidden1") {
    s.network.hidden1 = to_int32(key, v);
  } else if (key == "hidden2") {
    s.network.hidden2 = to_int32(key, v);
  } else if (key == "features") {
    s.network.features = to_int32(key, v);
  } else if (key == "stage2_from_detector") {
    s.stage2_from_detector = to_bool(key, v);
  } else if (key == "head_classes") {
    s.head_classes.clear();
    for (const auto& part : split_list(v)) s.head_classes.push_back(to_int32(key, part));
  } else {
    throw ValidationError("config: unknown key '" + key + "'");
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config file not found: " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  ExperimentConfig cfg;
  for (const auto& [k, v] : parse_key_values(text.str(), path.string())) apply_setting(cfg, k, v);
  return cfg;
}

std::string to_text(const ExperimentConfig& cfg) {
  const auto& b = cfg.bench;
  const auto& s = cfg.stage;
  auto triple = [](const std::array<double, 3>& t) { return fmt(t[0]) + "," + fmt(t[1]) + "," + fmt(t[2]); };
  std::ostringstream os;
  os << "seed = " << cfg.seed << "\n"
     << "image_size = " << b.image_size << "\n"
     << "num_known = " << b.num_known << "\n"
     << "num_private = " << b.num_private << "\n"
     << "train_count = " << b.train_count << "\n"
     << "val_count = " << b.val_count << "\n"
     << "hue_overlap = " << fmt(b.hue_overlap) << "\n"
     << "shift_gain = " << triple(b.shift.gain) << "\n"
     << "shift_bias = " << triple(b.shift.bias) << "\n"
     << "noise_std = " << fmt(b.shift.noise_std) << "\n"
     << "iterations = " << s.iterations << "\n"
     << "batch_size = " << s.batch_size << "\n"
     << "pretrain_steps = " << s.pretrain_steps << "\n"
     << "crop_size = " << s.crop_size << "\n"
     << "tau1 = " << fmt(s.pseudo.tau1) << "\n"
     << "tau2 = " << fmt(s.pseudo.tau2) << "\n"
     << "alpha = " << fmt(s.ema_alpha) << "\n"
     << "gamma = " << fmt(s.virtual_unknown.gamma) << "\n"
     << "min_vertices = " << s.virtual_unknown.min_vertices << "\n"
     << "max_vertices = " << s.virtual_unknown.max_vertices << "\n"
     << "polygons_per_image = " << s.virtual_unknown.polygons_per_image << "\n"
     << "lr_backbone = " << fmt(s.optimizer.lr_backbone) << "\n"
     << "lr_head = " << fmt(s.optimizer.lr_head) << "\n"
     << "weight_decay = " << fmt(s.optimizer.weight_decay) << "\n"
     << "warmup_iterations = " << s.warmup_iterations << "\n"
     << "hidden1 = " << s.network.hidden1 << "\n"
     << "hidden2 = " << s.network.hidden2 << "\n"
     << "features = " << s.network.features << "\n"
     << "stage2_from_detector = " << (s.stage2_from_detector ? "true" : "false") << "\n"
     << "head_classes = ";
  for (std::size_t i = 0; i < s.head_classes.size(); ++i) os << (i ? "," : "") << s.head_classes[i];
  os << "\n";
  return os.str();
}

}  // namespace sats::cli
