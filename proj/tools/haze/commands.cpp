#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "haze/image_io.hpp"
#include "haze/metrics.hpp"
#include "haze/resize.hpp"
#include "haze/spectral.hpp"
#include "haze/synth.hpp"
#include "haze/training.hpp"

namespace fs = std::filesystem;

namespace haze::cli {

namespace {

sr::SrConfig sr_cfg_from(const RunConfig& cfg) {
  sr::SrConfig sc;
  sc.scale = cfg.geti("scale");
  sc.channels = cfg.geti("sr_channels");
  sc.num_hfab = cfg.geti("num_hfab");
  sc.lambda = cfg.getd("lambda");
  sc.hr_h = sc.hr_w = cfg.geti("hr_size");
  sc.ca_reduction = cfg.geti("ca_reduction");
  sc.hf_per_block = cfg.getb("hf_per_block");
  sc.validate();
  return sc;
}

gaze::GazeConfig gz_cfg_from(const RunConfig& cfg) {
  gaze::GazeConfig gc;
  gc.img_h = gc.img_w = cfg.geti("hr_size");
  gc.patch_frac = cfg.getd("patch_frac");
  gc.lambda = cfg.getd("lambda");
  gc.hidden = cfg.geti("gaze_hidden");
  gc.backbone_channels.clear();
  std::istringstream ss(cfg.gets("gaze_backbone"));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    gc.backbone_channels.push_back(std::stoi(tok));
  }
  gc.validate();
  return gc;
}

train::TrainConfig train_cfg_from(const RunConfig& cfg) {
  train::TrainConfig tc;
  tc.alpha = cfg.getd("alpha");
  tc.lambda = cfg.getd("lambda");
  tc.learning_rate = cfg.getd("lr");
  tc.batch_size = cfg.geti("batch");
  tc.epochs = cfg.geti("epochs");
  tc.phase_period = cfg.geti("phase_period");
  tc.seed = static_cast<std::uint64_t>(cfg.geti64("seed"));
  tc.joint = cfg.getb("joint");
  tc.validate();
  return tc;
}

std::string require_path(const RunConfig& cfg, const std::string& key, const std::string& hint) {
  std::string p = cfg.gets(key);
  if (p.empty()) throw UsageError("--" + key + " is required; " + hint);
  return p;
}

data::Dataset load_dataset_checked(const RunConfig& cfg) {
  std::string dir = require_path(cfg, "data", "point it at a generate output directory");
  if (!fs::exists(dir + "/manifest.csv"))
    throw UsageError("no dataset at '" + dir + "'; create one with: haze generate --out " + dir);
  return data::load_dataset(dir);
}

data::Checkpoint load_ckpt_checked(const std::string& path, std::uint64_t expect_digest) {
  if (!fs::exists(path))
    throw UsageError("no checkpoint at '" + path + "'; produce one with the pretrain/train commands");
  data::Checkpoint ckpt = data::load_checkpoint(path);
  if (ckpt.config_digest != expect_digest)
    throw UsageError("checkpoint '" + path +
                     "' was produced with a different model configuration; pass the same "
                     "scale/size/width flags that trained it");
  return ckpt;
}

void write_text(const std::string& path, const std::string& text) {
  data::write_file(path, text.data(), text.size());
}

std::string pretrain_metrics_csv(const std::vector<double>& losses) {
  std::ostringstream out;
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.10g\n", i, losses[i]);
    out << buf;
  }
  return out.str();
}

int run_pretrain(const RunConfig& cfg, train::Module which) {
  data::Dataset ds = load_dataset_checked(cfg);
  auto [train_split, val_split] =
      data::split_by_id(ds, cfg.getd("val_frac"), static_cast<std::uint64_t>(cfg.geti64("seed")));
  train::TrainConfig tc = train_cfg_from(cfg);
  train::TrainState st =
      train::make_state(sr_cfg_from(cfg), gz_cfg_from(cfg), tc.seed);
  train::PretrainResult res = train::pretrain(which, st, train_split, tc);
  std::string out = require_path(cfg, "out", "give the checkpoint file to write");
  data::save_checkpoint(out, res.ckpt);
  std::string metrics_path = cfg.gets("metrics_out");
  if (metrics_path.empty()) metrics_path = out + ".metrics.csv";
  write_text(metrics_path, pretrain_metrics_csv(res.loss_history));
  std::printf("pretrained %s: %d epochs, final loss %.6g\n",
              which == train::Module::kSr ? "sr" : "gaze", tc.epochs,
              res.loss_history.back());
  std::printf("checkpoint: %s\nmetrics: %s\n", out.c_str(), metrics_path.c_str());
  return 0;
}

gaze::Landmarks parse_landmarks(const std::string& text) {
  if (text.empty()) return data::canonical_landmarks();
  std::vector<double> vals;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) vals.push_back(std::stod(tok));
  if (vals.size() != 10)
    throw ParameterError("landmarks: expected 10 comma-separated values, got " +
                         std::to_string(vals.size()));
  gaze::Landmarks lm;
  lm.left_eye = {vals[0], vals[1]};
  lm.right_eye = {vals[2], vals[3]};
  lm.nose = {vals[4], vals[5]};
  lm.mouth_left = {vals[6], vals[7]};
  lm.mouth_right = {vals[8], vals[9]};
  lm.validate();
  return lm;
}

void draw_arrow(Tensor& img, double x0, double y0, double dx, double dy, double length) {
  int H = img.shape()[1], W = img.shape()[2];
  std::size_t hw = static_cast<std::size_t>(H) * W;
  double norm = std::hypot(dx, dy);
  if (norm < 1e-9) norm = 1.0;
  dx /= norm;
  dy /= norm;
  auto& px = img.data_mut();
  int steps = static_cast<int>(std::ceil(length * 2));
  for (int t = 0; t <= steps; ++t) {
    int x = static_cast<int>(std::lround(x0 + dx * length * t / steps));
    int y = static_cast<int>(std::lround(y0 + dy * length * t / steps));
    if (x < 0 || y < 0 || x >= W || y >= H) continue;
    std::size_t i = static_cast<std::size_t>(y) * W + x;
    px[i] = 1.0;
    px[hw + i] = 0.0;
    px[2 * hw + i] = 0.0;
  }
}

}  // namespace

int cmd_generate(const RunConfig& cfg) {
  std::string out = require_path(cfg, "out", "give the dataset directory to create");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create directory '" + out + "': " + ec.message());
  int n = cfg.geti("n");
  int hr = cfg.geti("hr_size");
  int scale = cfg.geti("scale");
  auto seed = static_cast<std::uint64_t>(cfg.geti64("seed"));
  data::Dataset ds = data::make_dataset(n, hr, hr, scale, seed);
  std::vector<data::ManifestRow> rows;
  char name[64];
  for (const auto& s : ds.samples) {
    data::ManifestRow r;
    r.id = s.id;
    r.gaze_theta = s.gaze.theta;
    r.gaze_phi = s.gaze.phi;
    std::snprintf(name, sizeof(name), "hr_%04d.ppm", s.id);
    r.hr_path = name;
    std::snprintf(name, sizeof(name), "lr_%04d.ppm", s.id);
    r.lr_path = name;
    data::save_ppm(out + "/" + r.hr_path, s.hr);
    data::save_ppm(out + "/" + r.lr_path, s.lr);
    rows.push_back(std::move(r));
  }
  data::write_manifest(out + "/manifest.csv", rows);
  std::printf("generated %d samples (hr %dx%d, scale %d) in %s\n", n, hr, hr, scale, out.c_str());
  return 0;
}

int cmd_extract_hf(const RunConfig& cfg) {
  std::string input = require_path(cfg, "input", "give the PPM image to filter");
  std::string out = require_path(cfg, "out", "give the output PPM path");
  double lambda = cfg.getd("lambda");
  Tensor img = data::load_ppm(input);
  Tensor hf = spectral::hf_extract(img, lambda);

  std::string raw_path = cfg.gets("raw_out");
  if (!raw_path.empty()) {
    std::vector<std::uint8_t> raw;
    raw.insert(raw.end(), {'H', 'Z', 'R', 'W'});
    std::uint32_t dims[3] = {static_cast<std::uint32_t>(hf.shape()[0]),
                             static_cast<std::uint32_t>(hf.shape()[1]),
                             static_cast<std::uint32_t>(hf.shape()[2])};
    raw.resize(4 + sizeof(dims) + hf.data().size() * sizeof(double));
    std::memcpy(raw.data() + 4, dims, sizeof(dims));
    std::memcpy(raw.data() + 4 + sizeof(dims), hf.data().data(),
                hf.data().size() * sizeof(double));
    data::write_file(raw_path, raw.data(), raw.size());
  }

  // min-max rescale for visualization; a flat response stays black
  double lo = hf.data()[0], hi = hf.data()[0];
  for (double v : hf.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> vis(hf.data().size(), 0.0);
  if (hi - lo > 1e-9)
    for (std::size_t i = 0; i < vis.size(); ++i) vis[i] = (hf.data()[i] - lo) / (hi - lo);
  data::save_ppm(out, Tensor::from_data(hf.shape(), std::move(vis)));
  std::printf("extracted high-frequency map (lambda %.3g) to %s\n", lambda, out.c_str());
  return 0;
}

int cmd_pretrain_sr(const RunConfig& cfg) { return run_pretrain(cfg, train::Module::kSr); }

int cmd_pretrain_gaze(const RunConfig& cfg) { return run_pretrain(cfg, train::Module::kGaze); }

int cmd_train(const RunConfig& cfg) {
  data::Dataset ds = load_dataset_checked(cfg);
  auto seed = static_cast<std::uint64_t>(cfg.geti64("seed"));
  auto [train_split, val_split] = data::split_by_id(ds, cfg.getd("val_frac"), seed);
  train::TrainConfig tc = train_cfg_from(cfg);
  train::TrainState st = train::make_state(sr_cfg_from(cfg), gz_cfg_from(cfg), tc.seed);
  std::uint64_t digest = train::model_digest(st.sr_cfg, st.gz_cfg);

  std::string resume = cfg.gets("resume");
  if (!resume.empty()) {
    data::Checkpoint ckpt = load_ckpt_checked(resume, digest);
    train::load_params(st.sr_params.params(), ckpt);
    train::load_params(st.gz_params.params(), ckpt);
    st.epoch = ckpt.epoch;
  } else {
    std::string sr_path = require_path(
        cfg, "sr_ckpt", "pretrain one with: haze pretrain-sr --data ... --out sr.ckpt");
    std::string gz_path = require_path(
        cfg, "gaze_ckpt", "pretrain one with: haze pretrain-gaze --data ... --out gaze.ckpt");
    train::load_params(st.sr_params.params(), load_ckpt_checked(sr_path, digest));
    train::load_params(st.gz_params.params(), load_ckpt_checked(gz_path, digest));
  }

  auto history = train::alternate_train(st, train_split, val_split, tc);
  std::string out = require_path(cfg, "out", "give the checkpoint file to write");
  data::save_checkpoint(out, train::state_checkpoint(st, history.back().phase, tc.seed));
  std::string metrics_path = cfg.gets("metrics_out");
  if (metrics_path.empty()) metrics_path = out + ".metrics.csv";
  write_text(metrics_path, train::metrics_csv(history));
  std::printf("trained %d alternating epochs; validation angular error %.4f deg\n", tc.epochs,
              history.back().angular_error_deg);
  std::printf("checkpoint: %s\nmetrics: %s\n", out.c_str(), metrics_path.c_str());
  return 0;
}

namespace {

train::EvalReport sweep_run(const RunConfig& cfg, const data::Dataset& train_split,
                            const data::Dataset& val_split, double lambda, double alpha) {
  RunConfig local = cfg;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", lambda);
  local.set("lambda", buf);
  train::TrainConfig tc = train_cfg_from(local);
  tc.alpha = alpha;
  train::TrainState st = train::make_state(sr_cfg_from(local), gz_cfg_from(local), tc.seed);
  train::TrainConfig pre = tc;
  pre.epochs = cfg.geti("sweep_pretrain_epochs");
  train::pretrain(train::Module::kSr, st, train_split, pre);
  train::pretrain(train::Module::kGaze, st, train_split, pre);
  train::TrainConfig alt = tc;
  alt.epochs = cfg.geti("sweep_epochs");
  train::alternate_train(st, train_split, val_split, alt);
  return train::evaluate(st, cfg.gets("split") == "train" ? train_split : val_split);
}

}  // namespace

int cmd_eval(const RunConfig& cfg) {
  data::Dataset ds = load_dataset_checked(cfg);
  auto seed = static_cast<std::uint64_t>(cfg.geti64("seed"));
  auto [train_split, val_split] = data::split_by_id(ds, cfg.getd("val_frac"), seed);
  std::string split = cfg.gets("split");
  if (split != "val" && split != "train")
    throw ParameterError("split must be 'val' or 'train', got '" + split + "'");
  const data::Dataset& eval_split = split == "train" ? train_split : val_split;

  if (cfg.getb("sweep")) {
    std::ostringstream table;
    table << "param,value,psnr_db,ssim,angular_error_deg,n\n";
    char buf[160];
    for (double lam : {0.2, 0.4, 0.5}) {
      train::EvalReport r = sweep_run(cfg, train_split, val_split, lam, cfg.getd("alpha"));
      std::snprintf(buf, sizeof(buf), "lambda,%.3g,%.6f,%.6f,%.6f,%d\n", lam, r.psnr_db, r.ssim,
                    r.angular_error_deg, r.n);
      table << buf;
    }
    for (double alpha : {0.0, 0.1, 1.0}) {
      train::EvalReport r = sweep_run(cfg, train_split, val_split, cfg.getd("lambda"), alpha);
      std::snprintf(buf, sizeof(buf), "alpha,%.3g,%.6f,%.6f,%.6f,%d\n", alpha, r.psnr_db, r.ssim,
                    r.angular_error_deg, r.n);
      table << buf;
    }
    std::string text = table.str();
    std::fputs(text.c_str(), stdout);
    std::string report = cfg.gets("report");
    if (!report.empty()) write_text(report, text);
    return 0;
  }

  std::string ckpt_path = require_path(cfg, "ckpt", "train one with: haze train ... --out model.ckpt");
  train::TrainState st = train::make_state(sr_cfg_from(cfg), gz_cfg_from(cfg), seed);
  data::Checkpoint ckpt =
      load_ckpt_checked(ckpt_path, train::model_digest(st.sr_cfg, st.gz_cfg));
  train::load_params(st.sr_params.params(), ckpt);
  train::load_params(st.gz_params.params(), ckpt);
  train::EvalReport rep = train::evaluate(st, eval_split);
  std::printf("psnr_db=%.6f ssim=%.6f angular_error_deg=%.6f n=%d\n", rep.psnr_db, rep.ssim,
              rep.angular_error_deg, rep.n);
  std::string report = cfg.gets("report");
  if (!report.empty()) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "psnr_db,ssim,angular_error_deg,n\n%.6f,%.6f,%.6f,%d\n",
                  rep.psnr_db, rep.ssim, rep.angular_error_deg, rep.n);
    write_text(report, buf);
  }
  return 0;
}

int cmd_infer(const RunConfig& cfg) {
  std::string ckpt_path = require_path(cfg, "ckpt", "train one with: haze train ... --out model.ckpt");
  std::string input = require_path(cfg, "input", "give the LR PPM image");
  std::string out = require_path(cfg, "out", "give the SR PPM path to write");
  auto seed = static_cast<std::uint64_t>(cfg.geti64("seed"));
  train::TrainState st = train::make_state(sr_cfg_from(cfg), gz_cfg_from(cfg), seed);
  data::Checkpoint ckpt =
      load_ckpt_checked(ckpt_path, train::model_digest(st.sr_cfg, st.gz_cfg));
  train::load_params(st.sr_params.params(), ckpt);
  train::load_params(st.gz_params.params(), ckpt);

  Tensor lr = data::load_ppm(input);
  Tensor sr_img = sr::sr_forward(lr, st.sr_params, st.sr_cfg, true);
  data::save_ppm(out, sr_img);

  gaze::Landmarks lm = parse_landmarks(cfg.gets("landmarks"));
  gaze::GazeAngles pred = gaze::gaze_forward(sr_img, lm, st.gz_params, st.gz_cfg);
  std::printf("theta_rad=%.6f phi_rad=%.6f theta_deg=%.3f phi_deg=%.3f\n", pred.theta, pred.phi,
              pred.theta * 180.0 / 3.14159265358979323846,
              pred.phi * 180.0 / 3.14159265358979323846);

  std::string overlay_path = cfg.gets("overlay");
  if (!overlay_path.empty()) {
    Tensor overlay = sr_img.clone_detached();
    int H = overlay.shape()[1], W = overlay.shape()[2];
    double mx = 0.5 * (lm.left_eye.x + lm.right_eye.x) * (W - 1);
    double my = 0.5 * (lm.left_eye.y + lm.right_eye.y) * (H - 1);
    auto v = gaze::angles_to_vector(pred);
    draw_arrow(overlay, mx, my, -v[0], -v[1], 0.35 * H);
    data::save_ppm(overlay_path, overlay);
  }
  std::printf("sr image: %s\n", out.c_str());
  return 0;
}

}  // namespace haze::cli
