#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace fcdiff::config {

// Line-oriented key=value file, '#' comments; command-line --set overrides
// win. Unknown keys are rejected so typos fail loudly.
struct Config {
    int schedule_T = 1000;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    int steps = 2000;
    int batch_size = 8;
    double lr = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 1;
    int num_images = 512;
    int image_size = 32;
    int sampler_steps = 50;
    double sampler_eta = 0.0;
    bool shuffle_shared_channels = false;

    void set(const std::string& key, const std::string& value);
    void load_file(const std::string& path);
    std::string resolved() const;  // full key=value dump for run logs
};

}  // namespace fcdiff::config
