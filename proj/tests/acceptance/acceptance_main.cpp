// Acceptance checks. Usage: sats_acceptance <criterion 1-8> [--sats PATH] [--work DIR]
// Prints one "criterion N: PASS|FAIL ..." line and exits 0 only on PASS.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "sats/augment.hpp"
#include "sats/experiment.hpp"
#include "sats/metrics.hpp"
#include "sats/polygon.hpp"
#include "sats/pseudolabel.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace sats;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string unmet;  // first requirement that did not hold

  void require(bool ok, const std::string& what) {
    if (!ok && pass) unmet = what;
    pass = pass && ok;
  }
};

struct Args {
  int criterion = 0;
  std::string sats_bin;
  fs::path work = fs::temp_directory_path() / "sats-acceptance";
};

// ---- 1: H-Score arithmetic on reference scores

// Two-class (one known + unknown) confusion matrix whose IoUs are exactly
// common = c/10000 and private = p/10000.
ConfusionMatrix matrix_for(std::uint64_t c, std::uint64_t p) {
  ConfusionMatrix cm(2);
  const std::uint64_t off = (10000 - c) * (10000 - p);
  cm.at(0, 0) = c * (10000 - p);
  cm.at(1, 1) = p * (10000 - c);
  cm.at(0, 1) = off / 2;
  cm.at(1, 0) = off - off / 2;
  return cm;
}

void criterion1(Outcome& o) {
  ClassSpace cs;
  cs.num_known = 1;
  cs.num_private = 1;
  struct Row {
    const char* name;
    std::uint64_t common, priv;
    double h;
  };
  for (const Row& row : {Row{"SATS", 7357, 6093, 66.66}, Row{"BUS", 7247, 5542, 62.81}}) {
    const MetricsReport r = compute_report(matrix_for(row.common, row.priv), cs);
    o.detail << row.name << " common " << 100 * r.common_miou << " private " << 100 * r.private_iou << " H "
             << 100 * r.h_score << "; ";
    o.require(std::abs(100 * r.common_miou - row.common / 100.0) < 1e-9, std::string(row.name) + " common");
    o.require(std::abs(100 * r.private_iou - row.priv / 100.0) < 1e-9, std::string(row.name) + " private");
    o.require(std::abs(100 * r.h_score - row.h) <= 0.01, std::string(row.name) + " H-Score");
  }
}

// ---- 2: rasterization vs brute force

void criterion2(Outcome& o) {
  Rng rng(20240611);
  int degenerate = 0, mismatched = 0;
  for (int i = 0; i < 1000; ++i) {
    const int w = uniform_int(rng, 1, 64), h = uniform_int(rng, 1, 64);
    const bool degen = i % 10 == 0;
    degenerate += degen;
    const Polygon poly = testing::random_polygon(rng, -8, std::max(w, h) + 8, degen);
    const BinaryMask m = rasterize_polygon(poly, w, h);
    const auto expect = oracle::brute_force_mask(poly, w, h);
    const auto got = m.plane().values();
    if (!std::equal(got.begin(), got.end(), expect.begin(), expect.end())) ++mismatched;
  }
  o.detail << "1000 polygons, " << degenerate << " degenerate, " << mismatched << " mismatches";
  o.require(degenerate >= 50, "at least 50 degenerate cases");
  o.require(mismatched == 0, "pixel-exact agreement");
}

// ---- 3: gradient check

void criterion3(Outcome& o) {
  constexpr double kEps = 1e-4, kTol = 1e-4;
  for (bool expanded : {false, true}) {
    for (bool weighted : {false, true}) {
      if (weighted && !expanded) continue;  // target loss always uses the K+1 head
      const NetworkParams params = testing::random_network(31 + expanded, 3, expanded, NetworkShape{});
      Rng rng(41 + expanded + 2 * weighted);
      const RgbImage img = testing::random_rgb(rng, 8, 8);
      const LabelMap lbl = testing::random_labels(rng, 8, 8, params.num_classes(), 0.1);
      const double q = 0.6;
      auto loss = [&](const NetworkParams& p) {
        return weighted ? weighted_target_loss_and_grad(p, img, lbl, q).loss : supervised_loss_and_grad(p, img, lbl).loss;
      };
      const LossAndGrad lg =
          weighted ? weighted_target_loss_and_grad(params, img, lbl, q) : supervised_loss_and_grad(params, img, lbl);
      // 20 indices from every tensor, so head and all conv layers are covered.
      std::vector<std::size_t> picks;
      std::size_t offset = 0;
      for (const auto& t : params.tensors()) {
        for (int k = 0; k < 20; ++k) picks.push_back(offset + uniform_int(rng, 0, static_cast<int>(t.size()) - 1));
        offset += t.size();
      }
      std::sort(picks.begin(), picks.end());
      picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
      double worst = 0.0;
      for (std::size_t i : picks) {
        const double num = oracle::central_difference(params, i, kEps, loss);
        worst = std::max(worst, oracle::relative_error(lg.grads.flat(i), num));
      }
      o.detail << (expanded ? "K+1" : "K") << (weighted ? " weighted" : " supervised") << ": " << picks.size()
               << " params, worst rel err " << worst << "; ";
      o.require(picks.size() >= 100, "at least 100 parameters");
      o.require(worst < kTol, "relative error below 1e-4");
    }
  }
}

// ---- 4: per-pixel rules vs direct oracles

ClassSpace space4() {
  ClassSpace cs;
  cs.num_known = 4;
  cs.num_private = 2;
  cs.head_classes = {0, 2};
  return cs;
}

void criterion4(Outcome& o) {
  constexpr int kCases = 1000;
  const ClassSpace cs = space4();
  const int unk = cs.unknown_index();
  Rng rng(777);
  std::map<std::string, int> failures, cases;
  auto check = [&](const std::string& eq, bool ok) {
    ++cases[eq];
    if (!ok) ++failures[eq];
  };

  for (int i = 0; i < kCases; ++i) {
    const int w = uniform_int(rng, 1, 12), h = uniform_int(rng, 1, 12);
    const ProbMap p = testing::random_probs(rng, w, h, cs.num_outputs(), uniform_real(rng, 0.2, 6.0));

    // Open-set pseudo label: known-channel max against tau1.
    const double tau1 = i % 10 == 0 ? 1.0 : uniform_real(rng, 0.0, 1.0);
    const LabelMap open = open_set_pseudo_label(p, cs, tau1);
    bool ok = true;
    for (std::size_t j = 0; j < p.num_pixels(); ++j) {
      const auto px = p.pixel(j);
      int best = 0;
      for (int c = 1; c < cs.num_known; ++c) best = px[c] > px[best] ? c : best;
      const int expect = px[best] >= tau1 ? best : unk;
      ok &= open[j] == expect;
    }
    check("open-set pseudo label", ok);

    // Confidence weight: strict inequality over all H*W pixels.
    const double tau2 = i % 7 == 0 ? *std::max_element(p.values().begin(), p.values().end()) : uniform_real(rng, 0.3, 1.0);
    std::size_t above = 0;
    for (std::size_t j = 0; j < p.num_pixels(); ++j) {
      const auto px = p.pixel(j);
      above += *std::max_element(px.begin(), px.end()) > tau2;
    }
    check("confidence weight", confidence_weight(p, tau2) == static_cast<double>(above) / (w * h));

    // EMA for alpha in {0, 0.999, 1}.
    if (i < 100) {
      const NetworkParams t = testing::random_network(1000 + i, 2, true, {2, 2, 2});
      const NetworkParams s = testing::random_network(5000 + i, 2, true, {2, 2, 2});
      const NetworkParams a0 = ema_update(t, s, 0.0), a1 = ema_update(t, s, 1.0), am = ema_update(t, s, 0.999);
      bool e = a0 == s && a1 == t;
      for (std::size_t k = 0; k < t.parameter_count(); ++k) e &= am.flat(k) == 0.999 * t.flat(k) + (1 - 0.999) * s.flat(k);
      for (int r = 0; r < 10; ++r) check("EMA", e);
    }

    // Virtual-unknown composition.
    LabeledImage src(testing::random_rgb(rng, w, h), testing::random_labels(rng, w, h, cs.num_known, 0.1));
    const int mode = i % 3;
    const BinaryMask m = mode == 0 ? BinaryMask(w, h) : mode == 1 ? BinaryMask(w, h, true) : testing::random_mask(rng, w, h);
    const Rgb color{static_cast<std::uint8_t>(uniform_int(rng, 0, 255)), 0, static_cast<std::uint8_t>(i % 256)};
    const LabeledImage vu = compose_virtual_unknown(src, m, color, cs);
    ok = mode != 0 || vu == src;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool in = m(x, y);
        ok &= vu.pixels.pixel(x, y) == (in ? color : src.pixels.pixel(x, y));
        ok &= vu.label(x, y) == (in ? unk : src.label(x, y));
      }
    }
    check("virtual unknown", ok);

    // Unknown mask extraction.
    const LabelMap pred = testing::random_labels(rng, w, h, cs.num_outputs());
    const BinaryMask um = extract_unknown_mask(pred, cs);
    ok = true;
    for (std::size_t j = 0; j < pred.size(); ++j) ok &= um[j] == (pred[j] == unk);
    check("unknown mask", ok);

    // Unknown mixup.
    const RgbImage tgt = testing::random_rgb(rng, w, h);
    const BinaryMask mm = mode == 0 ? BinaryMask(w, h) : mode == 1 ? BinaryMask(w, h, true) : testing::random_mask(rng, w, h);
    const LabeledImage mix = unknown_mixup(src, tgt, mm, cs);
    ok = mode != 0 || mix == src;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool in = mm(x, y);
        ok &= mix.pixels.pixel(x, y) == (in ? tgt.pixel(x, y) : src.pixels.pixel(x, y));
        ok &= mix.label(x, y) == (in ? unk : src.label(x, y));
      }
    }
    check("unknown mixup", ok);

    // Hard-unknown refinement, three branches.
    const LabelMap det = testing::random_labels(rng, w, h, cs.num_outputs());
    const LabelMap pseudo = testing::random_labels(rng, w, h, cs.num_outputs());
    const BinaryMask ref = refine_hard_unknown_mask(det, pseudo, cs);
    ok = true;
    for (std::size_t j = 0; j < det.size(); ++j) {
      bool expect;
      if (det[j] == unk) {
        expect = true;
      } else if (pseudo[j] == unk && (det[j] == 0 || det[j] == 2)) {
        expect = true;
      } else {
        expect = false;
      }
      ok &= ref[j] == expect;
    }
    check("hard-unknown refinement", ok);
  }

  for (const auto& [eq, n] : cases) {
    o.detail << eq << " " << n - failures[eq] << "/" << n << "; ";
    o.require(n >= kCases, eq + " case count");
    o.require(failures[eq] == 0, eq);
  }
}

// ---- 5: head-expansion invariance

void criterion5(Outcome& o) {
  Rng rng(55);
  int differing = 0;
  for (int n = 0; n < 100; ++n) {
    const int known = uniform_int(rng, 2, 6);
    const NetworkParams p = testing::random_network(9000 + n, known, false, NetworkShape{4, 6, 5});
    const RgbImage img = testing::random_rgb(rng, uniform_int(rng, 1, 16), uniform_int(rng, 1, 16));
    const Logits before = forward_logits(p, img);
    const Logits after = forward_logits(expand_head(p, 100 + n), img);
    bool same = after.channels == known + 1;
    for (int c = 0; c < known; ++c) {
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) same &= before.at(c, x, y) == after.at(c, x, y);
      }
    }
    differing += !same;
  }
  o.detail << "100 nets, " << differing << " with changed known logits";
  o.require(differing == 0, "known logits bit-identical");
}

// ---- 6: directional ablation

void criterion6(Outcome& o, const Args& args) {
  AblationConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  const AblationResult res = run_ablation(cfg, [](const std::string& msg) { std::cerr << msg << "\n"; });
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  fs::create_directories(args.work);
  std::ofstream(args.work / "ablation.csv") << ablation_csv(res);
  std::cerr << ablation_csv(res);

  const auto a = res.mean('A'), b = res.mean('B'), c = res.mean('C'), d = res.mean('D');
  double with_unknown = 0.0;
  bool any_val_unknown = true;
  for (const auto& s : res.seeds) {
    with_unknown += s.detector.images_with_unknown / res.seeds.size();
    any_val_unknown &= s.detector.val_unknown_fraction > 0.0;
  }
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "H A %.2f B %.2f C %.2f D %.2f; private A %.2f C %.2f D %.2f; detector images-with-unknown %.0f%%; "
                "%.1f min",
                100 * a.h_score, 100 * b.h_score, 100 * c.h_score, 100 * d.h_score, 100 * a.private_iou,
                100 * c.private_iou, 100 * d.private_iou, 100 * with_unknown, minutes);
  o.detail << buf;
  o.require(d.private_iou > a.private_iou, "(a) D private IoU above A");
  o.require(d.h_score - a.h_score >= 0.05, "(a) D H-Score at least 5 points above A");
  o.require(c.h_score >= b.h_score, "(b) C H-Score not below B");
  o.require(d.private_iou >= c.private_iou, "(c) D private IoU not below C");
  o.require(with_unknown >= 0.8, "detector marks unknowns in >= 80% of target images");
  o.require(any_val_unknown, "detector predicts some unknown pixels on target_val");
  o.require(minutes < 90.0, "runtime under 90 minutes");
}

// ---- 7: CLI determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Drops the trailing wall-clock column of training logs.
std::string without_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

void criterion7(Outcome& o, const Args& args) {
  if (args.sats_bin.empty()) {
    o.require(false, "--sats binary path");
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> steps = {
      "gen-data --out {R}/data",
      "train stage1 --data {R}/data --out {R}/s1",
      "train baseline --data {R}/data --out {R}/base",
      "infer-unk --data {R}/data --detector {R}/s1/model.ckpt --out {R}/unk",
      "train stage2 --data {R}/data --unk-dir {R}/unk --out {R}/s2",
      "eval --data {R}/data --checkpoint {R}/s2/model.ckpt --out {R}/eval",
      "sweep-tau1 --data {R}/data --values 0.3,0.5 --out {R}/sweep",
  };
  for (const char* run : {"run1", "run2"}) {
    const fs::path root = args.work / "determinism" / run;
    fs::remove_all(root);
    fs::create_directories(root);
    for (std::string step : steps) {
      for (auto pos = step.find("{R}"); pos != std::string::npos; pos = step.find("{R}")) step.replace(pos, 3, root.string());
      const std::string cmd = args.sats_bin + " --seed 7 --iterations 100 " + step + " > /dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      o.require(rc == 0, "command succeeded: " + step);
    }
  }
  const fs::path r1 = args.work / "determinism" / "run1", r2 = args.work / "determinism" / "run2";
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(r1)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(entry.path(), r1);
    std::string a = slurp(entry.path()), b = slurp(r2 / rel);
    if (rel.filename() == "train_log.csv") a = without_timing(a), b = without_timing(b);
    if (a != b || !fs::exists(r2 / rel)) {
      ++differing;
      o.require(false, "identical " + rel.string());
    }
  }
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  o.detail << files << " files compared across two runs, " << differing << " differ; " << minutes << " min";
  o.require(files > 100, "outputs were produced");
}

// ---- 8: refinement monotonicity on a trained run

void criterion8(Outcome& o) {
  BenchConfig bc;
  bc.train_count = 40;
  bc.val_count = 4;
  bc.seed = 8;
  const Benchmark bench = generate_benchmark(bc);
  StageConfig sc;
  sc.iterations = 150;
  sc.pretrain_steps = 50;
  sc.seed = 8;
  const NetworkParams det = run_stage1(sc, bench.source, bench.target_train);
  const Dataset detected = infer_unknowns(det, bench.target_train);
  const ClassSpace cs = bench.source.class_space;

  int phase_b = 0, violations = 0, mismatched_phase_a = 0, grown = 0;
  TrainHooks hooks;
  hooks.on_mixup_mask = [&](const MixupMaskEvent& e) {
    // Phase-A mask recomputed from the detector output at the same crop.
    const int s = e.used_mask.width();
    const LabelMap crop_det = crop(detected.items[e.target_index].label, e.crop_x, e.crop_y, s, s);
    const BinaryMask phase_a = extract_unknown_mask(crop_det, cs);
    if (!(phase_a == e.detector_mask)) ++mismatched_phase_a;
    if (!e.hard_unknown_phase) return;
    ++phase_b;
    if (!e.used_mask.contains(phase_a)) ++violations;
    if (e.used_mask.count() > phase_a.count()) ++grown;
  };
  run_stage2(sc, bench.source, bench.target_train, detected, hooks);
  o.detail << phase_b << " Phase-B masks, " << violations << " not supersets, " << grown
           << " strictly larger, " << mismatched_phase_a << " Phase-A mismatches";
  o.require(phase_b >= 100, "at least 100 Phase-B masks");
  o.require(violations == 0, "every Phase-B mask contains its Phase-A mask");
  o.require(mismatched_phase_a == 0, "logged Phase-A masks match the detector output");
}

}  // namespace

int main(int argc, char** argv) {
  Args args;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--sats" && i + 1 < argc) {
      args.sats_bin = argv[++i];
    } else if (a == "--work" && i + 1 < argc) {
      args.work = argv[++i];
    } else {
      args.criterion = std::atoi(a.c_str());
    }
  }
  if (args.criterion < 1 || args.criterion > 8) {
    std::cerr << "usage: sats_acceptance <1-8> [--sats PATH] [--work DIR]\n";
    return 2;
  }
  Outcome o;
  try {
    switch (args.criterion) {
      case 1: criterion1(o); break;
      case 2: criterion2(o); break;
      case 3: criterion3(o); break;
      case 4: criterion4(o); break;
      case 5: criterion5(o); break;
      case 6: criterion6(o, args); break;
      case 7: criterion7(o, args); break;
      case 8: criterion8(o); break;
    }
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  std::cout << "criterion " << args.criterion << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail.str();
  if (!o.pass) std::cout << " | unmet: " << o.unmet;
  std::cout << "\n";
  return o.pass ? 0 : 1;
}
