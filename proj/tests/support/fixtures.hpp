#pragma once

#include "impulse/config.hpp"

#include <string>
#include <vector>

namespace fixture {

inline std::string config_path(const std::string& name) {
    return std::string(IMPULSE_CONFIG_DIR) + "/" + name;
}

inline impulse::Config load(const std::string& name) { return impulse::load_config(config_path(name)); }

// The solver test matrix: finite and infinite activity, n = 1 and n = 2.
inline std::vector<std::string> matrix() {
    return {"matrix/m1_benchmark.json",     "matrix/m2_drift_diffusion.json",
            "matrix/m3_two_atoms.json",     "matrix/m4_tempered.json",
            "matrix/m5_exponential_state_jump.json", "matrix/m6_2d_atoms.json",
            "matrix/m7_2d_tempered.json"};
}

// Scratch directory under the build tree, emptied on creation.
std::string scratch_dir(const std::string& name);

}  // namespace fixture
