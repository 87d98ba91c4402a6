#include "haze/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace haze::cli {

const std::vector<KeySpec>& RunConfig::known_keys() {
  static const std::vector<KeySpec> keys = {
      {"scale", KeyType::kInt, "4", "super-resolution factor, one of 2/3/4"},
      {"hr_size", KeyType::kInt, "32", "square HR image side"},
      {"lambda", KeyType::kDouble, "0.2", "spectral masking point in [0,1]"},
      {"alpha", KeyType::kDouble, "0.1", "gaze-loss weight in the total loss"},
      {"seed", KeyType::kInt, "1", "master seed for generation and training"},
      {"n", KeyType::kInt, "64", "number of samples to generate"},
      {"epochs", KeyType::kInt, "40", "training epochs"},
      {"batch", KeyType::kInt, "8", "batch size"},
      {"lr", KeyType::kDouble, "0.001", "Adam learning rate"},
      {"phase_period", KeyType::kInt, "1", "epochs per phase before alternating"},
      {"joint", KeyType::kBool, "false", "train both modules without freezing"},
      {"sr_channels", KeyType::kInt, "16", "SR feature width F"},
      {"num_hfab", KeyType::kInt, "2", "HFAB count in the SR trunk"},
      {"ca_reduction", KeyType::kInt, "4", "channel-attention squeeze ratio"},
      {"hf_per_block", KeyType::kBool, "true", "run the HF extractor inside every HFAB"},
      {"patch_frac", KeyType::kDouble, "0.25", "eye patch side as a fraction of image height"},
      {"gaze_hidden", KeyType::kInt, "64", "gaze FC head width"},
      {"gaze_backbone", KeyType::kString, "8,16,32", "gaze backbone channels per stride-2 stage"},
      {"val_frac", KeyType::kDouble, "0.25", "identity fraction held out for validation"},
      {"split", KeyType::kString, "val", "evaluation split: val or train"},
      {"sweep", KeyType::kBool, "false", "run the lambda/alpha ablation grid"},
      {"sweep_epochs", KeyType::kInt, "6", "alternating epochs per sweep setting"},
      {"sweep_pretrain_epochs", KeyType::kInt, "8", "pretraining epochs per sweep setting"},
      {"data", KeyType::kString, "", "dataset directory (generate output)"},
      {"out", KeyType::kString, "", "output path (directory, checkpoint or image)"},
      {"metrics_out", KeyType::kString, "", "metrics table path (default alongside out)"},
      {"ckpt", KeyType::kString, "", "checkpoint path to evaluate or infer from"},
      {"sr_ckpt", KeyType::kString, "", "pretrained SR checkpoint"},
      {"gaze_ckpt", KeyType::kString, "", "pretrained gaze checkpoint"},
      {"resume", KeyType::kString, "", "combined checkpoint to continue training from"},
      {"input", KeyType::kString, "", "input image path"},
      {"raw_out", KeyType::kString, "", "raw f64 dump path for extract-hf"},
      {"overlay", KeyType::kString, "", "gaze-arrow overlay image path"},
      {"landmarks", KeyType::kString, "", "10 comma-separated normalized coordinates"},
      {"report", KeyType::kString, "", "evaluation report CSV path"},
  };
  return keys;
}

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  for (const auto& k : known_keys()) cfg.values_[k.name] = k.default_value;
  return cfg;
}

bool RunConfig::is_known(const std::string& key) const {
  for (const auto& k : known_keys())
    if (k.name == key) return true;
  return false;
}

const KeySpec& RunConfig::spec_for(const std::string& key) const {
  for (const auto& k : known_keys())
    if (k.name == key) return k;
  throw ParameterError("unknown configuration key '" + key + "'");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec& spec = spec_for(key);
  const char* c = value.c_str();
  char* end = nullptr;
  switch (spec.type) {
    case KeyType::kInt:
      std::strtoll(c, &end, 10);
      if (end == c || *end != '\0')
        throw ParameterError("key '" + key + "' expects an integer, got '" + value + "'");
      break;
    case KeyType::kDouble:
      std::strtod(c, &end);
      if (end == c || *end != '\0')
        throw ParameterError("key '" + key + "' expects a number, got '" + value + "'");
      break;
    case KeyType::kBool:
      if (value != "true" && value != "false" && value != "1" && value != "0")
        throw ParameterError("key '" + key + "' expects true/false, got '" + value + "'");
      break;
    case KeyType::kString:
      break;
  }
  values_[key] = value;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(lineno) + " is not 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    set(key, value);  // rejects unknown keys by name
  }
}

int RunConfig::geti(const std::string& key) const {
  return static_cast<int>(geti64(key));
}

std::int64_t RunConfig::geti64(const std::string& key) const {
  const KeySpec& spec = spec_for(key);
  if (spec.type != KeyType::kInt) throw ParameterError("key '" + key + "' is not an integer");
  return std::strtoll(values_.at(key).c_str(), nullptr, 10);
}

double RunConfig::getd(const std::string& key) const {
  const KeySpec& spec = spec_for(key);
  if (spec.type != KeyType::kDouble && spec.type != KeyType::kInt)
    throw ParameterError("key '" + key + "' is not numeric");
  return std::strtod(values_.at(key).c_str(), nullptr);
}

std::string RunConfig::gets(const std::string& key) const {
  spec_for(key);
  return values_.at(key);
}

bool RunConfig::getb(const std::string& key) const {
  const KeySpec& spec = spec_for(key);
  if (spec.type != KeyType::kBool) throw ParameterError("key '" + key + "' is not a boolean");
  const std::string& v = values_.at(key);
  return v == "true" || v == "1";
}

}  // namespace haze::cli
