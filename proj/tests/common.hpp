#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "windlq/coefficients.hpp"
#include "windlq/control.hpp"
#include "windlq/design.hpp"
#include "windlq/turbine.hpp"

namespace testing {

inline const windlq::CoefficientSurface& surface() {
    static const windlq::CoefficientSurface s = windlq::default_surface();
    return s;
}

inline const windlq::TurbineParameters& params() {
    static const windlq::TurbineParameters p = windlq::default_parameters();
    return p;
}

inline const windlq::PowerSpeedTable& table() {
    static const windlq::PowerSpeedTable t = windlq::generate_power_speed_table(params(), surface());
    return t;
}

// Default two-region design at rated power, synthesized once per process.
inline const windlq::ControllerDesign& design() {
    static const windlq::ControllerDesign d = windlq::design_controller(
        params(), surface(), table(), params().p_rated, windlq::default_weights(windlq::Region::Two),
        windlq::default_weights(windlq::Region::Three));
    return d;
}

// Fresh directory under the system temp dir, unique per call.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("windlq_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
