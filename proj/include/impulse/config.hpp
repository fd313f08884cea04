#pragma once

#include "impulse/grid.hpp"
#include "impulse/model.hpp"
#include "impulse/simulate.hpp"
#include "impulse/solver.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace impulse {

/// Unreadable or malformed configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridSpec {
    Vec lo, hi;
    std::vector<int> nodes;
    double core_margin = 0.0;  // collar width in state units
};

/// Builds the grid; `scale` multiplies the cell count per axis (2 = h/2).
Grid make_grid(const GridSpec& spec, double scale = 1.0);

struct SimulateSettings {
    SimulationOptions options;
    std::size_t paths = 1000;
    Vec x0;
};

struct DiagnosticsSettings {
    double lipschitz_tol = 0.1;
    bool lipschitz_exact = true;          // declared constants are exact
    std::vector<double> holder_alphas{0.25, 0.5, 0.75};
    double holder_margin = 0.0;           // <= 0: 4 h
    double residual_factor = 10.0;        // residual <= factor tol_outer max(1, |f|)
    double smooth_fit_max = 1.0;
    double second_derivative_max = 100.0;
    double placement_factor = 3.0;        // tol_jump = factor h C_u
    bool refinement = false;              // also solve at h/2 and compare
    int validation_samples = 10000;
    double validation_tolerance = 0.05;
    std::uint64_t validation_seed = 0;
};

struct Config {
    ModelSpec model;
    GridSpec grid;
    SolverParams solver;
    SimulateSettings simulate;
    DiagnosticsSettings diagnostics;
    std::string source;       // raw text
    std::uint64_t hash = 0;   // FNV-1a of the raw text
};

Config parse_config(const std::string& text);
/// Throws ConfigError when the file is missing or invalid.
Config load_config(const std::string& path);

std::uint64_t fnv1a(const std::string& text);

}  // namespace impulse
