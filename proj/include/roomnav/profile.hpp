#pragma once

#include <optional>
#include <string>
#include <vector>

namespace roomnav {

/// Scalar stand-in for a platform's low-level motion module.
struct EmbodimentProfile {
    std::string id;
    double v_max = 1.0;         // m/s
    double omega_max = 2.0;     // rad/s
    double radius = 0.30;       // m
    double sensor_range = 6.0;  // m
};

inline EmbodimentProfile wheeled_profile() { return {"wheeled", 1.0, 2.0, 0.30, 6.0}; }
inline EmbodimentProfile quadruped_profile() { return {"quadruped", 1.2, 2.5, 0.35, 6.0}; }
inline EmbodimentProfile humanoid_profile() { return {"humanoid", 0.6, 1.5, 0.30, 6.0}; }

inline std::vector<EmbodimentProfile> preset_profiles() {
    return {wheeled_profile(), quadruped_profile(), humanoid_profile()};
}

inline std::optional<EmbodimentProfile> find_preset(const std::string& id) {
    for (auto& p : preset_profiles())
        if (p.id == id) return p;
    return std::nullopt;
}

}  // namespace roomnav
