#include "fixtures.hpp"

#include <filesystem>

namespace fixture {

std::string scratch_dir(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path p = fs::path(IMPULSE_SCRATCH_DIR) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

}  // namespace fixture
