#pragma once

#include "run_config.hpp"

namespace skolr::cli {

/// Each returns the process exit code; failures surface as skolr::Error.
int cmd_generate(const RunConfig& cfg);
int cmd_train(RunConfig cfg);
int cmd_forecast(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_analyze(const RunConfig& cfg);
int cmd_gridsearch(RunConfig cfg);

}  // namespace skolr::cli
