#include "haze/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "haze/metrics.hpp"
#include "haze/rng.hpp"

namespace haze::train {

void TrainConfig::validate() const {
  if (alpha < 0.0) throw ParameterError("train: alpha must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("train: lambda must be in [0,1]");
  if (batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
  if (epochs < 1) throw ParameterError("train: epochs must be >= 1");
  if (phase_period < 1) throw ParameterError("train: phase_period must be >= 1");
  if (!(learning_rate > 0.0)) throw ParameterError("train: learning_rate must be > 0");
}

void AdamState::init_for(const ParamList& params) {
  m.clear();
  v.clear();
  step = 0;
  for (const auto& [name, t] : params) {
    m.emplace_back(t.data().size(), 0.0);
    v.emplace_back(t.data().size(), 0.0);
  }
}

void adam_step(ParamList& params, AdamState& state, double lr) {
  if (!state.initialized()) state.init_for(params);
  if (state.m.size() != params.size())
    throw UsageError("adam_step: optimizer state does not match the parameter list");
  ++state.step;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params[i].second;
    if (state.m[i].size() != t.data().size())
      throw UsageError("adam_step: state shape mismatch for " + params[i].first);
    const std::vector<double>& g = t.grad();
    std::vector<double>& pm = state.m[i];
    std::vector<double>& pv = state.v[i];
    std::vector<double>& pd = t.data_mut();
    for (std::size_t j = 0; j < pd.size(); ++j) {
      pm[j] = state.beta1 * pm[j] + (1.0 - state.beta1) * g[j];
      pv[j] = state.beta2 * pv[j] + (1.0 - state.beta2) * g[j] * g[j];
      pd[j] -= lr * (pm[j] / bc1) / (std::sqrt(pv[j] / bc2) + state.eps);
    }
  }
}

Tensor sr_loss(const std::vector<Tensor>& sr_out, const std::vector<Tensor>& hr) {
  if (sr_out.empty() || sr_out.size() != hr.size())
    throw DimensionError("sr_loss: batch sizes differ or are empty");
  Tensor acc;
  for (std::size_t i = 0; i < sr_out.size(); ++i) {
    if (sr_out[i].shape() != hr[i].shape())
      throw DimensionError("sr_loss: item " + std::to_string(i) + " shapes differ");
    Tensor term = sum(abs(sub(sr_out[i], hr[i])));
    acc = i == 0 ? term : add(acc, term);
  }
  return scale(acc, 1.0 / static_cast<double>(sr_out.size()));
}

Tensor gaze_loss(const std::vector<Tensor>& pred, const std::vector<gaze::GazeAngles>& gt) {
  if (pred.empty() || pred.size() != gt.size())
    throw DimensionError("gaze_loss: batch sizes differ or are empty");
  Tensor acc;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != 2)
      throw DimensionError("gaze_loss: prediction " + std::to_string(i) + " is not a [2] tensor");
    Tensor target = Tensor::from_data({2}, {gt[i].theta, gt[i].phi});
    Tensor d = sub(pred[i], target);
    Tensor term = sum(mul(d, d));
    acc = i == 0 ? term : add(acc, term);
  }
  return scale(acc, 1.0 / static_cast<double>(pred.size()));
}

double gaze_loss(const std::vector<gaze::GazeAngles>& pred,
                 const std::vector<gaze::GazeAngles>& gt) {
  if (pred.empty() || pred.size() != gt.size())
    throw DimensionError("gaze_loss: batch sizes differ or are empty");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double dt = pred[i].theta - gt[i].theta;
    double dp = pred[i].phi - gt[i].phi;
    acc += dt * dt + dp * dp;
  }
  return acc / static_cast<double>(pred.size());
}

Tensor total_loss(const Tensor& l_sr, const Tensor& l_ge, double alpha) {
  return add(l_sr, scale(l_ge, alpha));
}

TrainState make_state(const sr::SrConfig& sr_cfg, const gaze::GazeConfig& gz_cfg,
                      std::uint64_t seed) {
  TrainState st;
  st.sr_cfg = sr_cfg;
  st.gz_cfg = gz_cfg;
  st.sr_params = sr::init_sr(sr_cfg, seed);
  st.gz_params = gaze::init_gaze(gz_cfg, Rng::mix(seed, 0x6a7eull));
  return st;
}

void set_requires_grad(ParamList params, bool on) {
  for (auto& [name, t] : params) t.set_requires_grad(on);
}

namespace {

void zero_grads(ParamList params) {
  for (auto& [name, t] : params) t.zero_grad();
}

void check_finite(double loss, const char* what) {
  if (!std::isfinite(loss))
    throw NumericalError(std::string(what) + " is non-finite (" + std::to_string(loss) + ")");
}

struct ForwardBatch {
  std::vector<Tensor> sr_out;
  std::vector<Tensor> hr;
  std::vector<Tensor> gaze_pred;
  std::vector<gaze::GazeAngles> gt;
};

ForwardBatch forward_sr(TrainState& st, const std::vector<const data::FaceSample*>& batch) {
  ForwardBatch fb;
  for (const data::FaceSample* s : batch) {
    fb.sr_out.push_back(sr::sr_forward(s->lr, st.sr_params, st.sr_cfg));
    fb.hr.push_back(s->hr);
  }
  return fb;
}

void forward_gaze_on_sr(TrainState& st, const std::vector<const data::FaceSample*>& batch,
                        ForwardBatch& fb) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    fb.gaze_pred.push_back(
        gaze::gaze_forward_raw(fb.sr_out[i], batch[i]->landmarks, st.gz_params, st.gz_cfg));
    fb.gt.push_back(batch[i]->gaze);
  }
}

double l1_value(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].data().size(); ++j)
      acc += std::fabs(a[i].data()[j] - b[i].data()[j]);
  return acc / static_cast<double>(a.size());
}

std::vector<std::vector<const data::FaceSample*>> make_batches(const data::Dataset& ds,
                                                               int batch_size, Rng& rng) {
  std::vector<int> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::vector<const data::FaceSample*>> batches;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    std::vector<const data::FaceSample*> b;
    for (std::size_t i = at; i < std::min(order.size(), at + batch_size); ++i)
      b.push_back(&ds.samples[order[i]]);
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace

StepLosses train_phase1(TrainState& st, const std::vector<const data::FaceSample*>& batch,
                        const TrainConfig& cfg) {
  if (batch.empty()) throw UsageError("train_phase1: empty batch");
  ParamList sr_list = st.sr_params.params();
  ParamList gz_list = st.gz_params.params();
  set_requires_grad(sr_list, true);
  set_requires_grad(gz_list, false);  // gradients flow through, updates do not

  ForwardBatch fb = forward_sr(st, batch);
  forward_gaze_on_sr(st, batch, fb);
  Tensor l_sr = sr_loss(fb.sr_out, fb.hr);
  Tensor l_ge = gaze_loss(fb.gaze_pred, fb.gt);
  Tensor total = total_loss(l_sr, l_ge, cfg.alpha);
  check_finite(total.value(), "phase-1 loss");

  zero_grads(sr_list);
  backward(total);
  adam_step(sr_list, st.sr_opt, cfg.learning_rate);
  set_requires_grad(gz_list, true);
  return {l_sr.value(), l_ge.value()};
}

StepLosses train_phase2(TrainState& st, const std::vector<const data::FaceSample*>& batch,
                        const TrainConfig& cfg) {
  if (batch.empty()) throw UsageError("train_phase2: empty batch");
  ParamList sr_list = st.sr_params.params();
  ParamList gz_list = st.gz_params.params();
  set_requires_grad(sr_list, false);  // SR module frozen
  set_requires_grad(gz_list, true);

  ForwardBatch fb = forward_sr(st, batch);
  forward_gaze_on_sr(st, batch, fb);
  Tensor l_ge = gaze_loss(fb.gaze_pred, fb.gt);
  check_finite(l_ge.value(), "phase-2 loss");

  zero_grads(gz_list);
  backward(l_ge);
  adam_step(gz_list, st.gz_opt, cfg.learning_rate);
  set_requires_grad(sr_list, true);
  return {l1_value(fb.sr_out, fb.hr), l_ge.value()};
}

StepLosses train_joint(TrainState& st, const std::vector<const data::FaceSample*>& batch,
                       const TrainConfig& cfg) {
  if (batch.empty()) throw UsageError("train_joint: empty batch");
  ParamList sr_list = st.sr_params.params();
  ParamList gz_list = st.gz_params.params();
  set_requires_grad(sr_list, true);
  set_requires_grad(gz_list, true);

  ForwardBatch fb = forward_sr(st, batch);
  forward_gaze_on_sr(st, batch, fb);
  Tensor l_sr = sr_loss(fb.sr_out, fb.hr);
  Tensor l_ge = gaze_loss(fb.gaze_pred, fb.gt);
  Tensor total = total_loss(l_sr, l_ge, cfg.alpha);
  check_finite(total.value(), "joint loss");

  zero_grads(sr_list);
  zero_grads(gz_list);
  backward(total);
  adam_step(sr_list, st.sr_opt, cfg.learning_rate);
  adam_step(gz_list, st.gz_opt, cfg.learning_rate);
  return {l_sr.value(), l_ge.value()};
}

EvalReport evaluate(TrainState& st, const data::Dataset& ds) {
  if (ds.empty()) throw UsageError("evaluate: empty dataset");
  ParamList sr_list = st.sr_params.params();
  ParamList gz_list = st.gz_params.params();
  set_requires_grad(sr_list, false);
  set_requires_grad(gz_list, false);
  EvalReport rep;
  double psnr_acc = 0.0, ssim_acc = 0.0, ang_acc = 0.0;
  for (const auto& s : ds.samples) {
    Tensor out = sr::sr_forward(s.lr, st.sr_params, st.sr_cfg, true);
    psnr_acc += metrics::psnr(out, s.hr, 1.0);
    ssim_acc += metrics::ssim(out, s.hr);
    gaze::GazeAngles pred = gaze::gaze_forward(out, s.landmarks, st.gz_params, st.gz_cfg);
    ang_acc += metrics::angular_error_deg(pred, s.gaze);
  }
  set_requires_grad(sr_list, true);
  set_requires_grad(gz_list, true);
  rep.n = static_cast<int>(ds.size());
  rep.psnr_db = psnr_acc / rep.n;
  rep.ssim = ssim_acc / rep.n;
  rep.angular_error_deg = ang_acc / rep.n;
  return rep;
}

PretrainResult pretrain(Module which, TrainState& st, const data::Dataset& ds,
                        const TrainConfig& cfg) {
  cfg.validate();
  if (ds.empty()) throw UsageError("pretrain: dataset is empty");
  ParamList sr_list = st.sr_params.params();
  ParamList gz_list = st.gz_params.params();
  PretrainResult res;
  for (int e = 0; e < cfg.epochs; ++e) {
    Rng shuffle_rng(Rng::mix(cfg.seed, 1000 + static_cast<std::uint64_t>(st.epoch)));
    auto batches = make_batches(ds, cfg.batch_size, shuffle_rng);
    double epoch_loss = 0.0;
    for (auto& batch : batches) {
      if (which == Module::kSr) {
        set_requires_grad(gz_list, false);
        ForwardBatch fb = forward_sr(st, batch);
        Tensor l = sr_loss(fb.sr_out, fb.hr);
        check_finite(l.value(), "sr pretrain loss");
        zero_grads(sr_list);
        backward(l);
        adam_step(sr_list, st.sr_opt, cfg.learning_rate);
        set_requires_grad(gz_list, true);
        epoch_loss += l.value();
      } else {
        set_requires_grad(sr_list, false);
        std::vector<Tensor> preds;
        std::vector<gaze::GazeAngles> gts;
        for (const data::FaceSample* s : batch) {
          preds.push_back(gaze::gaze_forward_raw(s->hr, s->landmarks, st.gz_params, st.gz_cfg));
          gts.push_back(s->gaze);
        }
        Tensor l = gaze_loss(preds, gts);
        check_finite(l.value(), "gaze pretrain loss");
        zero_grads(gz_list);
        backward(l);
        adam_step(gz_list, st.gz_opt, cfg.learning_rate);
        set_requires_grad(sr_list, true);
        epoch_loss += l.value();
      }
    }
    res.loss_history.push_back(epoch_loss / static_cast<double>(batches.size()));
    ++st.epoch;
  }
  res.ckpt.epoch = st.epoch;
  res.ckpt.phase = 0;
  res.ckpt.seed = cfg.seed;
  res.ckpt.config_digest = model_digest(st.sr_cfg, st.gz_cfg);
  for (auto& [name, t] : which == Module::kSr ? sr_list : gz_list)
    res.ckpt.add(name, t.clone_detached());
  return res;
}

std::vector<EpochMetrics> alternate_train(TrainState& st, const data::Dataset& train_ds,
                                          const data::Dataset& val_ds, const TrainConfig& cfg) {
  cfg.validate();
  if (train_ds.empty()) throw UsageError("alternate_train: training dataset is empty");
  const data::Dataset& eval_ds = val_ds.empty() ? train_ds : val_ds;
  std::vector<EpochMetrics> history;
  for (int e = 0; e < cfg.epochs; ++e) {
    int phase = cfg.joint ? 0 : ((e / cfg.phase_period) % 2 == 0 ? 1 : 2);
    Rng shuffle_rng(Rng::mix(cfg.seed, 1000 + static_cast<std::uint64_t>(st.epoch)));
    auto batches = make_batches(train_ds, cfg.batch_size, shuffle_rng);
    double lsr_acc = 0.0, lge_acc = 0.0;
    for (auto& batch : batches) {
      StepLosses sl = phase == 1   ? train_phase1(st, batch, cfg)
                      : phase == 2 ? train_phase2(st, batch, cfg)
                                   : train_joint(st, batch, cfg);
      lsr_acc += sl.l_sr;
      lge_acc += sl.l_ge;
    }
    EvalReport rep = evaluate(st, eval_ds);
    EpochMetrics em;
    em.epoch = st.epoch;
    em.phase = phase;
    em.l_sr = lsr_acc / static_cast<double>(batches.size());
    em.l_ge = lge_acc / static_cast<double>(batches.size());
    em.psnr_db = rep.psnr_db;
    em.ssim = rep.ssim;
    em.angular_error_deg = rep.angular_error_deg;
    history.push_back(em);
    ++st.epoch;
  }
  return history;
}

std::string metrics_csv(const std::vector<EpochMetrics>& history) {
  std::ostringstream out;
  out << "epoch,phase,l_sr,l_ge,psnr,ssim,angular_error_deg\n";
  char buf[192];
  for (const auto& em : history) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<long long>(em.epoch), em.phase, em.l_sr, em.l_ge, em.psnr_db,
                  em.ssim, em.angular_error_deg);
    out << buf;
  }
  return out.str();
}

std::uint64_t model_digest(const sr::SrConfig& sr_cfg, const gaze::GazeConfig& gz_cfg) {
  std::ostringstream s;
  s << "scale=" << sr_cfg.scale << ";hr=" << sr_cfg.hr_h << "x" << sr_cfg.hr_w
    << ";F=" << sr_cfg.channels << ";hfab=" << sr_cfg.num_hfab << ";car=" << sr_cfg.ca_reduction
    << ";hfpb=" << sr_cfg.hf_per_block << ";lambda=" << sr_cfg.lambda << ";gz=" << gz_cfg.img_h
    << "x" << gz_cfg.img_w << ";pf=" << gz_cfg.patch_frac << ";hidden=" << gz_cfg.hidden
    << ";bb=";
  for (std::size_t i = 0; i < gz_cfg.backbone_channels.size(); ++i)
    s << (i ? "," : "") << gz_cfg.backbone_channels[i];
  return data::fnv1a64(s.str());
}

data::Checkpoint state_checkpoint(TrainState& st, int phase, std::uint64_t seed) {
  data::Checkpoint ckpt;
  ckpt.epoch = st.epoch;
  ckpt.phase = phase;
  ckpt.seed = seed;
  ckpt.config_digest = model_digest(st.sr_cfg, st.gz_cfg);
  for (auto& [name, t] : st.sr_params.params()) ckpt.add(name, t.clone_detached());
  for (auto& [name, t] : st.gz_params.params()) ckpt.add(name, t.clone_detached());
  return ckpt;
}

void load_params(ParamList params, const data::Checkpoint& ckpt) {
  for (auto& [name, t] : params) {
    const Tensor* src = ckpt.find(name);
    if (!src) throw UsageError("checkpoint is missing tensor '" + name + "'");
    if (src->shape() != t.shape())
      throw DimensionError("checkpoint tensor '" + name + "' has shape " +
                           shape_str(src->shape()) + ", model expects " + shape_str(t.shape()));
    t.data_mut() = src->data();
    t.zero_grad();
  }
}

}  // namespace haze::train
