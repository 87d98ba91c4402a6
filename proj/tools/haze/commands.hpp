#pragma once

#include <string>

#include "haze/config.hpp"

namespace haze::cli {

int cmd_generate(const RunConfig& cfg);
int cmd_extract_hf(const RunConfig& cfg);
int cmd_pretrain_sr(const RunConfig& cfg);
int cmd_pretrain_gaze(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_infer(const RunConfig& cfg);

}  // namespace haze::cli
