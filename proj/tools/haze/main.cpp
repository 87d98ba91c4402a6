#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "haze/errors.hpp"

namespace {

using haze::cli::RunConfig;

struct PendingFlags {
  std::string config_file;
  std::map<std::string, std::string> values;  // flag overrides, applied last
};

// register --<key> flags for the listed config keys on a subcommand;
// boolean keys become presence flags with a --no-<key> negation
void add_config_flags(CLI::App* cmd, PendingFlags& pending, const std::vector<std::string>& keys) {
  cmd->add_option("--config", pending.config_file, "flat key = value config file");
  for (const auto& spec : RunConfig::known_keys()) {
    bool wanted = false;
    for (const auto& k : keys) wanted = wanted || k == spec.name;
    if (!wanted) continue;
    std::string name = spec.name;
    if (spec.type == haze::cli::KeyType::kBool) {
      cmd->add_flag_function(
          "--" + name + ",!--no-" + name,
          [&pending, name](std::int64_t count) { pending.values[name] = count > 0 ? "true" : "false"; },
          spec.help);
    } else {
      cmd->add_option_function<std::string>(
          "--" + name, [&pending, name](const std::string& v) { pending.values[name] = v; },
          spec.help);
    }
  }
}

RunConfig merge(const PendingFlags& pending) {
  RunConfig cfg = RunConfig::defaults();
  if (!pending.config_file.empty()) cfg.load_file(pending.config_file);
  for (const auto& [k, v] : pending.values) cfg.set(k, v);
  return cfg;
}

const std::vector<std::string> kModelKeys = {
    "scale", "hr_size", "lambda", "sr_channels", "num_hfab", "ca_reduction",
    "hf_per_block", "patch_frac", "gaze_hidden", "gaze_backbone"};

std::vector<std::string> with_model(std::vector<std::string> keys) {
  keys.insert(keys.end(), kModelKeys.begin(), kModelKeys.end());
  return keys;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"high-frequency attentive super-resolved gaze estimation"};
  app.require_subcommand(1);

  PendingFlags pending;
  int rc = 0;
  std::function<int(const RunConfig&)> action;

  auto hook = [&](CLI::App* cmd, std::function<int(const RunConfig&)> fn) {
    cmd->callback([&action, fn]() { action = fn; });
  };

  auto* generate = app.add_subcommand("generate", "render a synthetic dataset with known gaze");
  add_config_flags(generate, pending, {"out", "n", "seed", "scale", "hr_size"});
  hook(generate, haze::cli::cmd_generate);

  auto* extract = app.add_subcommand("extract-hf", "high-frequency filter an image");
  add_config_flags(extract, pending, {"input", "out", "lambda", "raw_out"});
  hook(extract, haze::cli::cmd_extract_hf);

  auto* pre_sr = app.add_subcommand("pretrain-sr", "pretrain the SR module on L1 loss");
  add_config_flags(pre_sr, pending,
                   with_model({"data", "out", "metrics_out", "epochs", "batch", "lr", "seed",
                               "val_frac"}));
  hook(pre_sr, haze::cli::cmd_pretrain_sr);

  auto* pre_gz = app.add_subcommand("pretrain-gaze", "pretrain the gaze module on HR images");
  add_config_flags(pre_gz, pending,
                   with_model({"data", "out", "metrics_out", "epochs", "batch", "lr", "seed",
                               "val_frac"}));
  hook(pre_gz, haze::cli::cmd_pretrain_gaze);

  auto* train = app.add_subcommand("train", "alternating two-phase end-to-end training");
  add_config_flags(train, pending,
                   with_model({"data", "out", "metrics_out", "sr_ckpt", "gaze_ckpt", "resume",
                               "epochs", "batch", "lr", "seed", "alpha", "phase_period", "joint",
                               "val_frac"}));
  hook(train, haze::cli::cmd_train);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or run the ablation sweep");
  add_config_flags(eval, pending,
                   with_model({"data", "ckpt", "split", "report", "seed", "val_frac", "sweep",
                               "sweep_epochs", "sweep_pretrain_epochs", "alpha", "epochs", "batch",
                               "lr", "phase_period", "joint"}));
  hook(eval, haze::cli::cmd_eval);

  auto* infer = app.add_subcommand("infer", "super-resolve an LR image and estimate its gaze");
  add_config_flags(infer, pending,
                   with_model({"ckpt", "input", "out", "overlay", "landmarks", "seed"}));
  hook(infer, haze::cli::cmd_infer);

  try {
    app.parse(argc, argv);
    rc = action(merge(pending));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits cleanly
  } catch (const haze::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const haze::ParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const haze::DimensionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const haze::FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const haze::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const haze::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
