#include "fcdiff/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fcdiff/tensor.hpp"

namespace fcdiff::config {

namespace {

int to_int(const std::string& v) {
    size_t pos = 0;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("bad integer '" + v + "'");
    return r;
}

double to_double(const std::string& v) {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("bad number '" + v + "'");
    return r;
}

bool to_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw std::invalid_argument("bad boolean '" + v + "'");
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
    if (key == "schedule_T") schedule_T = to_int(value);
    else if (key == "beta_min") beta_min = to_double(value);
    else if (key == "beta_max") beta_max = to_double(value);
    else if (key == "steps") steps = to_int(value);
    else if (key == "batch_size") batch_size = to_int(value);
    else if (key == "lr") lr = to_double(value);
    else if (key == "adam_beta1") adam_beta1 = to_double(value);
    else if (key == "adam_beta2") adam_beta2 = to_double(value);
    else if (key == "adam_eps") adam_eps = to_double(value);
    else if (key == "seed") seed = (uint64_t)std::stoull(value);
    else if (key == "num_images") num_images = to_int(value);
    else if (key == "image_size") image_size = to_int(value);
    else if (key == "sampler_steps") sampler_steps = to_int(value);
    else if (key == "sampler_eta") sampler_eta = to_double(value);
    else if (key == "shuffle_shared_channels") shuffle_shared_channels = to_bool(value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

void Config::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = line.find_last_not_of(" \t\r");
        line = line.substr(a, b - a + 1);
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto strip = [](std::string& s) {
            size_t x = s.find_first_not_of(" \t");
            size_t y = s.find_last_not_of(" \t");
            s = (x == std::string::npos) ? "" : s.substr(x, y - x + 1);
        };
        strip(key);
        strip(val);
        set(key, val);
    }
}

std::string Config::resolved() const {
    std::ostringstream o;
    o << "schedule_T=" << schedule_T << "\n"
      << "beta_min=" << beta_min << "\n"
      << "beta_max=" << beta_max << "\n"
      << "steps=" << steps << "\n"
      << "batch_size=" << batch_size << "\n"
      << "lr=" << lr << "\n"
      << "adam_beta1=" << adam_beta1 << "\n"
      << "adam_beta2=" << adam_beta2 << "\n"
      << "adam_eps=" << adam_eps << "\n"
      << "seed=" << seed << "\n"
      << "num_images=" << num_images << "\n"
      << "image_size=" << image_size << "\n"
      << "sampler_steps=" << sampler_steps << "\n"
      << "sampler_eta=" << sampler_eta << "\n"
      << "shuffle_shared_channels=" << (shuffle_shared_channels ? 1 : 0) << "\n";
    return o.str();
}

}  // namespace fcdiff::config
