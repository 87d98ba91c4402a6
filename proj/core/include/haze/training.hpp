#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "haze/checkpoint.hpp"
#include "haze/gaze_net.hpp"
#include "haze/sr_net.hpp"
#include "haze/synth.hpp"
#include "haze/tensor.hpp"

namespace haze::train {

struct TrainConfig {
  double alpha = 0.1;
  double lambda = 0.2;
  double learning_rate = 1e-3;
  int batch_size = 8;
  int epochs = 40;
  int phase_period = 1;  // epochs per phase before alternating
  std::uint64_t seed = 0;
  bool joint = false;    // update both modules each step instead of freezing

  void validate() const;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m, v;

  void init_for(const ParamList& params);
  bool initialized() const { return !m.empty(); }
};

// Standard Adam with bias correction; parameters with empty grads are
// treated as zero-gradient.
void adam_step(ParamList& params, AdamState& state, double lr);

// (1/N) * sum_i |sr_out_i - hr_i|_1
Tensor sr_loss(const std::vector<Tensor>& sr_out, const std::vector<Tensor>& hr);
// (1/N) * sum_i ((dtheta_i)^2 + (dphi_i)^2); pred are raw [2] head outputs
Tensor gaze_loss(const std::vector<Tensor>& pred, const std::vector<gaze::GazeAngles>& gt);
double gaze_loss(const std::vector<gaze::GazeAngles>& pred,
                 const std::vector<gaze::GazeAngles>& gt);
// l_sr + alpha * l_ge
Tensor total_loss(const Tensor& l_sr, const Tensor& l_ge, double alpha);

struct TrainState {
  sr::SrConfig sr_cfg;
  gaze::GazeConfig gz_cfg;
  sr::SrParams sr_params;
  gaze::GazeParams gz_params;
  AdamState sr_opt, gz_opt;
  std::int64_t epoch = 0;
};

TrainState make_state(const sr::SrConfig& sr_cfg, const gaze::GazeConfig& gz_cfg,
                      std::uint64_t seed);

struct StepLosses {
  double l_sr = 0.0;
  double l_ge = 0.0;
};

// Phase 1: LR -> SR -> gaze, total loss, updates the SR module only; the
// gaze module stays byte-identical. Phase 2: gaze loss on gaze(sr(lr)),
// updates the gaze module only. Joint updates both under the total loss.
StepLosses train_phase1(TrainState& st, const std::vector<const data::FaceSample*>& batch,
                        const TrainConfig& cfg);
StepLosses train_phase2(TrainState& st, const std::vector<const data::FaceSample*>& batch,
                        const TrainConfig& cfg);
StepLosses train_joint(TrainState& st, const std::vector<const data::FaceSample*>& batch,
                       const TrainConfig& cfg);

struct EpochMetrics {
  std::int64_t epoch = 0;
  int phase = 0;
  double l_sr = 0.0;
  double l_ge = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double angular_error_deg = 0.0;
};

std::string metrics_csv(const std::vector<EpochMetrics>& history);

struct EvalReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double angular_error_deg = 0.0;
  int n = 0;
};

// Inference-mode pass over a dataset: clamped SR outputs, PSNR/SSIM against
// HR, angular error of gaze(sr(lr)).
EvalReport evaluate(TrainState& st, const data::Dataset& ds);

enum class Module { kSr, kGaze };

struct PretrainResult {
  data::Checkpoint ckpt;
  std::vector<double> loss_history;  // one entry per epoch
};

// SR pretraining minimizes the L1 loss alone; gaze pretraining minimizes the
// gaze MSE on HR images.
PretrainResult pretrain(Module which, TrainState& st, const data::Dataset& ds,
                        const TrainConfig& cfg);

// Alternates phases per cfg.phase_period and reports one metrics record per
// epoch, evaluated on the held-out split.
std::vector<EpochMetrics> alternate_train(TrainState& st, const data::Dataset& train_ds,
                                          const data::Dataset& val_ds, const TrainConfig& cfg);

// Checkpoint glue
std::uint64_t model_digest(const sr::SrConfig& sr_cfg, const gaze::GazeConfig& gz_cfg);
data::Checkpoint state_checkpoint(TrainState& st, int phase, std::uint64_t seed);
void load_params(ParamList params, const data::Checkpoint& ckpt);  // by name, strict
void set_requires_grad(ParamList params, bool on);

}  // namespace haze::train
