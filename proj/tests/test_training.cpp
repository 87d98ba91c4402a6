#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "haze/training.hpp"

using namespace haze;
using namespace haze::train;

namespace {

sr::SrConfig tiny_sr() {
  sr::SrConfig cfg;
  cfg.scale = 2;
  cfg.channels = 8;
  cfg.num_hfab = 1;
  cfg.hr_h = cfg.hr_w = 16;
  cfg.ca_reduction = 4;
  return cfg;
}

gaze::GazeConfig tiny_gaze() {
  gaze::GazeConfig cfg;
  cfg.img_h = cfg.img_w = 16;
  cfg.backbone_channels = {4, 8};
  cfg.hidden = 16;
  return cfg;
}

TrainConfig tiny_cfg() {
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 2;
  cfg.seed = 5;
  return cfg;
}

data::Dataset tiny_data(int n, std::uint64_t seed = 33) {
  return data::make_dataset(n, 16, 16, 2, seed);
}

std::vector<std::vector<double>> snapshot(ParamList params) {
  std::vector<std::vector<double>> out;
  for (auto& [name, t] : params) out.push_back(t.data());
  return out;
}

bool bytes_equal(const std::vector<std::vector<double>>& snap, ParamList params) {
  if (snap.size() != params.size()) return false;
  for (std::size_t i = 0; i < snap.size(); ++i) {
    const auto& now = params[i].second.data();
    if (now.size() != snap[i].size()) return false;
    if (std::memcmp(now.data(), snap[i].data(), now.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

std::vector<const data::FaceSample*> whole_batch(const data::Dataset& ds) {
  std::vector<const data::FaceSample*> b;
  for (const auto& s : ds.samples) b.push_back(&s);
  return b;
}

}  // namespace

TEST_CASE("sr_loss definition") {
  Tensor a = Tensor::full({1, 1, 1}, 0.25);
  Tensor b = Tensor::full({1, 1, 1}, 0.75);
  CHECK(sr_loss({a}, {a}).value() == 0.0);
  CHECK(sr_loss({a}, {b}).value() == doctest::Approx(0.5));

  Rng rng(1);
  std::vector<Tensor> xs, ys;
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) {
    xs.push_back(Tensor::uniform({2, 3, 3}, rng, 0, 1));
    ys.push_back(Tensor::uniform({2, 3, 3}, rng, 0, 1));
    for (std::size_t j = 0; j < xs[i].data().size(); ++j)
      expect += std::fabs(xs[i].data()[j] - ys[i].data()[j]);
  }
  CHECK(sr_loss(xs, ys).value() == doctest::Approx(expect / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(sr_loss({a}, {Tensor::zeros({1, 2, 2})}), DimensionError);
}

TEST_CASE("gaze_loss definition") {
  Tensor p = Tensor::from_data({2}, {0.3, 0.4});
  CHECK(gaze_loss({p}, {gaze::GazeAngles{0.3, 0.4}}).value() == 0.0);
  CHECK(gaze_loss({p}, {gaze::GazeAngles{0.0, 0.0}}).value() == doctest::Approx(0.25));

  Rng rng(2);
  std::vector<Tensor> preds;
  std::vector<gaze::GazeAngles> gts;
  double expect = 0.0;
  for (int i = 0; i < 4; ++i) {
    double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    gaze::GazeAngles gt{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    preds.push_back(Tensor::from_data({2}, {a, b}));
    gts.push_back(gt);
    expect += (a - gt.theta) * (a - gt.theta) + (b - gt.phi) * (b - gt.phi);
  }
  CHECK(gaze_loss(preds, gts).value() == doctest::Approx(expect / 4.0).epsilon(1e-12));

  std::vector<gaze::GazeAngles> as{{0.1, 0.2}}, bs{{0.4, 0.6}};
  CHECK(gaze_loss(as, bs) == doctest::Approx(0.09 + 0.16));
}

TEST_CASE("total_loss arithmetic") {
  Tensor lsr = Tensor::scalar(1.0);
  Tensor lge = Tensor::scalar(2.0);
  CHECK(total_loss(lsr, lge, 0.1).value() == 1.2);  // exact in doubles
  CHECK(total_loss(lsr, lge, 0.0).value() == 1.0);
  CHECK(total_loss(lsr, lge, 1.0).value() == 3.0);
}

TEST_CASE("total_loss argmin is invariant to constant shifts of l_ge") {
  // affine in each argument: adding c to l_ge shifts every candidate equally
  std::vector<double> candidates{0.8, 1.7, 0.4, 2.2};
  double alpha = 0.37, lge = 1.3, shift = 5.0;
  std::size_t best = 0, best_shifted = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    auto val = [&](std::size_t k, double c) {
      return total_loss(Tensor::scalar(candidates[k]), Tensor::scalar(lge + c), alpha).value();
    };
    if (val(i, 0.0) < val(best, 0.0)) best = i;
    if (val(i, shift) < val(best_shifted, shift)) best_shifted = i;
  }
  CHECK(best == best_shifted);
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  Tensor w = Tensor::from_data({3}, {1.0, -2.0, 3.0}, true);
  ParamList params{{"w", w}};
  AdamState state;
  w.zero_grad();
  adam_step(params, state, 0.1);
  CHECK(w.data() == std::vector<double>{1.0, -2.0, 3.0});
  CHECK(state.step == 1);
}

TEST_CASE("adam first step matches the closed form") {
  Tensor w = Tensor::from_data({2}, {0.5, -0.5}, true);
  ParamList params{{"w", w}};
  AdamState state;
  w.zero_grad();
  backward(sum(mul(w, w)));  // grad = 2w = (1, -1)
  adam_step(params, state, 0.01);
  // first Adam step: p -= lr * g / (|g| + eps)
  CHECK(w.data()[0] == doctest::Approx(0.5 - 0.01 * 1.0 / (1.0 + 1e-8)).epsilon(1e-14));
  CHECK(w.data()[1] == doctest::Approx(-0.5 + 0.01 * 1.0 / (1.0 + 1e-8)).epsilon(1e-14));
}

TEST_CASE("adam descends a quadratic bowl") {
  Rng rng(3);
  Tensor x = Tensor::uniform({8}, rng, -2.0, 2.0, true);
  ParamList params{{"x", x}};
  AdamState state;
  for (int step = 0; step < 2000; ++step) {
    x.zero_grad();
    backward(sum(mul(x, x)));
    adam_step(params, state, 0.05);
  }
  for (double v : x.data()) CHECK(std::fabs(v) < 1e-3);
}

TEST_CASE("pretrain overfits a single sample and is deterministic") {
  data::Dataset one = tiny_data(1);
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 60;
  cfg.batch_size = 1;
  cfg.learning_rate = 2e-3;

  TrainState a = make_state(tiny_sr(), tiny_gaze(), 9);
  PretrainResult ra = pretrain(Module::kSr, a, one, cfg);
  CHECK(ra.loss_history.size() == static_cast<std::size_t>(cfg.epochs));
  CHECK(ra.loss_history.back() < ra.loss_history.front());

  TrainState b = make_state(tiny_sr(), tiny_gaze(), 9);
  PretrainResult rb = pretrain(Module::kSr, b, one, cfg);
  CHECK(ra.loss_history.back() == rb.loss_history.back());

  TrainState g = make_state(tiny_sr(), tiny_gaze(), 9);
  PretrainResult rg = pretrain(Module::kGaze, g, one, cfg);
  CHECK(rg.loss_history.back() < rg.loss_history.front());

  CHECK_THROWS_AS(pretrain(Module::kSr, a, data::Dataset{}, cfg), UsageError);
}

TEST_CASE("phase 1 freezes the gaze module and moves the SR module") {
  data::Dataset ds = tiny_data(4);
  TrainConfig cfg = tiny_cfg();
  TrainState st = make_state(tiny_sr(), tiny_gaze(), 17);
  auto gaze_before = snapshot(st.gz_params.params());
  auto sr_before = snapshot(st.sr_params.params());
  for (int i = 0; i < 10; ++i) train_phase1(st, whole_batch(ds), cfg);
  CHECK(bytes_equal(gaze_before, st.gz_params.params()));
  CHECK_FALSE(bytes_equal(sr_before, st.sr_params.params()));
}

TEST_CASE("phase 2 freezes the SR module and moves the gaze module") {
  data::Dataset ds = tiny_data(4);
  TrainConfig cfg = tiny_cfg();
  TrainState st = make_state(tiny_sr(), tiny_gaze(), 19);
  auto sr_before = snapshot(st.sr_params.params());
  auto gaze_before = snapshot(st.gz_params.params());
  for (int i = 0; i < 10; ++i) train_phase2(st, whole_batch(ds), cfg);
  CHECK(bytes_equal(sr_before, st.sr_params.params()));
  CHECK_FALSE(bytes_equal(gaze_before, st.gz_params.params()));
}

TEST_CASE("phase 1 with alpha 0 equals an SR-only L1 step") {
  data::Dataset ds = tiny_data(4);
  TrainConfig cfg = tiny_cfg();
  cfg.alpha = 0.0;

  TrainState a = make_state(tiny_sr(), tiny_gaze(), 23);
  TrainState b = make_state(tiny_sr(), tiny_gaze(), 23);
  auto batch = whole_batch(ds);
  train_phase1(a, batch, cfg);

  // plain SR step on the same batch with the same fresh optimizer
  ParamList sr_list = b.sr_params.params();
  std::vector<Tensor> outs, hrs;
  for (const auto* s : batch) {
    outs.push_back(sr::sr_forward(s->lr, b.sr_params, b.sr_cfg));
    hrs.push_back(s->hr);
  }
  Tensor loss = sr_loss(outs, hrs);
  for (auto& [name, t] : sr_list) t.zero_grad();
  backward(loss);
  adam_step(sr_list, b.sr_opt, cfg.learning_rate);

  ParamList pa = a.sr_params.params(), pb = b.sr_params.params();
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t j = 0; j < pa[i].second.data().size(); ++j)
      CHECK(std::fabs(pa[i].second.data()[j] - pb[i].second.data()[j]) < 1e-12);
}

TEST_CASE("phase 1 gradient flows through the gaze module when alpha > 0") {
  data::Dataset ds = tiny_data(4);
  TrainConfig with_ge = tiny_cfg();
  with_ge.alpha = 0.5;
  TrainConfig without = tiny_cfg();
  without.alpha = 0.0;

  TrainState a = make_state(tiny_sr(), tiny_gaze(), 29);
  TrainState b = make_state(tiny_sr(), tiny_gaze(), 29);
  train_phase1(a, whole_batch(ds), with_ge);
  train_phase1(b, whole_batch(ds), without);
  CHECK_FALSE(bytes_equal(snapshot(a.sr_params.params()), b.sr_params.params()));
}

TEST_CASE("phase 2 reads the SR output, not the HR image") {
  data::Dataset ds = tiny_data(4);
  TrainConfig cfg = tiny_cfg();

  TrainState a = make_state(tiny_sr(), tiny_gaze(), 31);
  TrainState b = make_state(tiny_sr(), tiny_gaze(), 31);

  data::Dataset mangled = ds;
  Rng rng(99);
  for (auto& s : mangled.samples)
    s.hr = Tensor::uniform(s.hr.shape(), rng, 0.0, 1.0);  // lr untouched

  train_phase2(a, whole_batch(ds), cfg);
  train_phase2(b, whole_batch(mangled), cfg);
  // identical updates: the HR image does not enter the phase-2 loss path
  CHECK(bytes_equal(snapshot(a.gz_params.params()), b.gz_params.params()));

  TrainState c = make_state(tiny_sr(), tiny_gaze(), 31);
  data::Dataset lr_mangled = ds;
  for (auto& s : lr_mangled.samples) s.lr = Tensor::uniform(s.lr.shape(), rng, 0.0, 1.0);
  train_phase2(c, whole_batch(lr_mangled), cfg);
  CHECK_FALSE(bytes_equal(snapshot(a.gz_params.params()), c.gz_params.params()));
}

TEST_CASE("alternating schedule and metrics history") {
  data::Dataset ds = tiny_data(6);
  auto [train_split, val_split] = data::split_by_id(ds, 0.34, 5);
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 4;
  TrainState st = make_state(tiny_sr(), tiny_gaze(), 37);
  auto history = alternate_train(st, train_split, val_split, cfg);
  REQUIRE(history.size() == 4);
  CHECK(history[0].phase == 1);
  CHECK(history[1].phase == 2);
  CHECK(history[2].phase == 1);
  CHECK(history[3].phase == 2);
  for (const auto& em : history) {
    CHECK(std::isfinite(em.l_sr));
    CHECK(std::isfinite(em.l_ge));
    CHECK(std::isfinite(em.angular_error_deg));
  }

  cfg.phase_period = 2;
  TrainState st2 = make_state(tiny_sr(), tiny_gaze(), 37);
  auto h2 = alternate_train(st2, train_split, val_split, cfg);
  CHECK(h2[0].phase == 1);
  CHECK(h2[1].phase == 1);
  CHECK(h2[2].phase == 2);
  CHECK(h2[3].phase == 2);
}

TEST_CASE("metrics history replay is deterministic") {
  data::Dataset ds = tiny_data(6);
  auto [train_split, val_split] = data::split_by_id(ds, 0.34, 5);
  TrainConfig cfg = tiny_cfg();
  cfg.epochs = 3;
  TrainState a = make_state(tiny_sr(), tiny_gaze(), 41);
  TrainState b = make_state(tiny_sr(), tiny_gaze(), 41);
  auto ha = alternate_train(a, train_split, val_split, cfg);
  auto hb = alternate_train(b, train_split, val_split, cfg);
  CHECK(metrics_csv(ha) == metrics_csv(hb));
}

TEST_CASE("joint mode updates both modules") {
  data::Dataset ds = tiny_data(4);
  TrainConfig cfg = tiny_cfg();
  cfg.joint = true;
  TrainState st = make_state(tiny_sr(), tiny_gaze(), 43);
  auto sr_before = snapshot(st.sr_params.params());
  auto gz_before = snapshot(st.gz_params.params());
  train_joint(st, whole_batch(ds), cfg);
  CHECK_FALSE(bytes_equal(sr_before, st.sr_params.params()));
  CHECK_FALSE(bytes_equal(gz_before, st.gz_params.params()));
}

TEST_CASE("checkpoint save/load restores the exact parameters") {
  TrainState st = make_state(tiny_sr(), tiny_gaze(), 47);
  st.epoch = 12;
  data::Checkpoint ckpt = state_checkpoint(st, 2, 47);
  CHECK(ckpt.epoch == 12);
  CHECK(ckpt.phase == 2);

  TrainState other = make_state(tiny_sr(), tiny_gaze(), 48);
  load_params(other.sr_params.params(), ckpt);
  load_params(other.gz_params.params(), ckpt);
  CHECK(bytes_equal(snapshot(st.sr_params.params()), other.sr_params.params()));
  CHECK(bytes_equal(snapshot(st.gz_params.params()), other.gz_params.params()));

  data::Checkpoint empty;
  CHECK_THROWS_AS(load_params(other.sr_params.params(), empty), UsageError);
}

TEST_CASE("model digest separates configurations") {
  std::uint64_t a = model_digest(tiny_sr(), tiny_gaze());
  sr::SrConfig changed = tiny_sr();
  changed.channels = 12;
  CHECK(a != model_digest(changed, tiny_gaze()));
  CHECK(a == model_digest(tiny_sr(), tiny_gaze()));
}
